"""Rules that pick the significant coefficients of an LP expansion.

All rules return a boolean mask shaped like the coefficient array.
"""

from __future__ import annotations

import numpy as np

from .errors import DataError

__all__ = ["RULES", "select", "select_aic", "select_threshold"]

RULES = ("threshold", "aic", "bic", "all", "none")


def select_threshold(coeffs, n, z: float = 1.96) -> np.ndarray:
    """Keep coefficients with ``|sqrt(n) * c| >= z`` (asymptotic N(0, 1) null)."""
    c = np.asarray(coeffs, dtype=float)
    if n is None:
        raise DataError("threshold selection needs the sample size n")
    return np.abs(np.sqrt(n) * c) >= z


def _penalized(coeffs, n, penalty):
    c = np.asarray(coeffs, dtype=float)
    if n is None:
        raise DataError("penalised selection needs the sample size n")
    flat = c.ravel() ** 2
    order = np.argsort(-flat, kind="stable")
    gain = np.cumsum(n * flat[order] - penalty)
    mask = np.zeros(flat.size, dtype=bool)
    if gain.size and gain.max() > 0:
        k = int(np.argmax(gain)) + 1
        mask[order[:k]] = True
    return mask.reshape(c.shape)


def select_aic(coeffs, n) -> np.ndarray:
    """Rank coefficients by size and keep the top ``k`` maximising
    ``n * sum(c^2) - 2k``; the empty model wins ties."""
    return _penalized(coeffs, n, 2.0)


def select(coeffs, rule: str = "threshold", n=None, z: float = 1.96) -> np.ndarray:
    """Dispatch on a rule name from :data:`RULES`."""
    c = np.asarray(coeffs, dtype=float)
    if rule == "threshold":
        return select_threshold(c, n, z)
    if rule == "aic":
        return select_aic(c, n)
    if rule == "bic":
        if n is None:
            raise DataError("penalised selection needs the sample size n")
        return _penalized(c, n, float(np.log(n)))
    if rule == "all":
        return np.ones(c.shape, dtype=bool)
    if rule == "none":
        return np.zeros(c.shape, dtype=bool)
    raise DataError(f"unknown selection rule {rule!r}; expected one of {RULES}")
