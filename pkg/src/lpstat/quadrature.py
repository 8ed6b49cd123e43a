"""Quadrature rules on the unit interval."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = ["gauss_unit", "gauss_unit_cosine", "composite_gauss"]


@lru_cache(maxsize=32)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def gauss_unit(n: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on (0, 1)."""
    x, w = _leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


def gauss_unit_cosine(n: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre in ``theta`` after ``u = (1 - cos theta) / 2``.

    The Jacobian ``sin(theta) / 2`` cancels integrable ``u^{-1/2}`` and
    ``(1-u)^{-1/2}`` endpoint growth, as in quantile functions of
    heavy-tailed laws.  Returned weights already include the Jacobian.
    """
    x, w = _leggauss(n)
    theta = (x + 1.0) * np.pi / 2.0
    u = (1.0 - np.cos(theta)) / 2.0
    return u, w * np.pi / 2.0 * np.sin(theta) / 2.0


@lru_cache(maxsize=32)
def _composite(panels: int, order: int):
    x, w = _leggauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    h = np.diff(edges)
    u = (edges[:-1, None] + h[:, None] * (x[None, :] + 1.0) / 2.0).ravel()
    wt = (h[:, None] * w[None, :] / 2.0).ravel()
    u.setflags(write=False)
    wt.setflags(write=False)
    return u, wt


def composite_gauss(panels: int = 64, order: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss rule on uniform panels; 64 x 8 = 512 nodes by default."""
    return _composite(panels, order)
