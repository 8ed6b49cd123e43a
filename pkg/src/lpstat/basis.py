"""Orthonormal LP score functions and shifted Legendre polynomials.

For a finite distribution the scores ``T_j`` are orthonormal polynomials
in the standardised mid-distribution ``T_1 = (Fmid - 1/2) / sd(Fmid)``
under the distribution's own masses.  For a continuous law they reduce
to shifted orthonormal Legendre polynomials of ``F(x)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .dist import DiscreteDist
from .errors import DataError

__all__ = [
    "BasisTruncationWarning",
    "ScoreBasis",
    "LegendreBasis",
    "build_scores",
    "legendre",
    "legendre_matrix",
    "DEFAULT_M",
]

DEFAULT_M = 4
DEPENDENCE_TOL = 1e-9


class BasisTruncationWarning(UserWarning):
    """A power of ``T_1`` was numerically dependent on its predecessors."""


@dataclass(frozen=True, eq=False)
class ScoreBasis:
    """Score functions ``T_1..T_m`` tabulated on the atoms of `dist`.

    Attributes
    ----------
    dist : DiscreteDist
    table : ndarray, shape (m, k)
        ``table[j-1, i] = T_j(atoms[i])``.
    requested : int
        The ``m`` asked for before clipping to ``k - 1``.
    clipped : bool
        True when ``requested > k - 1``.
    truncated : bool
        True when a dependent power stopped the construction early.
    """

    dist: DiscreteDist
    table: np.ndarray
    requested: int
    clipped: bool = False
    truncated: bool = False
    warnings: tuple = field(default=())

    @property
    def m(self) -> int:
        return self.table.shape[0]

    def evaluate(self, x) -> np.ndarray:
        """Scores at arbitrary points, shape ``(m, len(x))``.

        Off the atoms the score takes the value of the largest atom not
        exceeding `x` (the first atom below the support), i.e. ``T_j(Q(F(x)))``.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.clip(np.searchsorted(self.dist.atoms, x, side="right") - 1, 0, self.dist.k - 1)
        return self.table[:, idx]

    def unit(self, u, j: int | None = None) -> np.ndarray:
        """Unit scores ``S_j(u) = T_j(Q(u))``.

        Piecewise constant in `u`; at a jump point ``u = F(x_i)`` the value
        of the cell to the right is returned.  With `j` given, returns the
        single function ``S_j``; otherwise an ``(m, len(u))`` array.
        """
        u = np.asarray(u, dtype=float)
        if np.any((u < 0) | (u > 1)):
            raise DataError("unit score argument must lie in [0, 1]")
        idx = np.minimum(np.searchsorted(self.dist.cumulative, u, side="right"), self.dist.k - 1)
        if j is None:
            return self.table[:, idx]
        if not 1 <= j <= self.m:
            raise DataError(f"score index {j} outside 1..{self.m}")
        return self.table[j - 1, idx]

    def cells(self) -> tuple[np.ndarray, np.ndarray]:
        """Left and right ends of the ``u`` cells on which ``S_j`` is constant."""
        right = self.dist.cumulative.copy()
        left = right - self.dist.masses
        left[0] = 0.0
        right[-1] = 1.0
        return left, right

    def gram(self) -> np.ndarray:
        """Mass-weighted Gram matrix of ``(1, T_1, ..., T_m)``."""
        full = np.vstack([np.ones(self.dist.k), self.table])
        return (full * self.dist.masses) @ full.T


def _orthonormalize(v, basis, p):
    # two passes of modified Gram-Schmidt
    for _ in range(2):
        for q in basis:
            v = v - np.dot(p, v * q) * q
    return v


def build_scores(d: DiscreteDist, m: int = DEFAULT_M) -> ScoreBasis:
    """Construct the LP score functions of a finite distribution.

    ``T_j`` for ``j >= 2`` comes from orthonormalising ``T_1 * T_{j-1}``
    against ``1, T_1, ..., T_{j-1}``.  This spans the same space as the
    raw powers ``T_1^j`` but is far better conditioned.  Each function is
    signed so that its value at the largest atom is positive.

    Parameters
    ----------
    d : DiscreteDist
        Must have at least two atoms.
    m : int
        Requested number of score functions; clipped to ``k - 1``.
    """
    if d.k < 2:
        raise DataError("degenerate distribution: a single atom has no scores")
    if m < 1:
        raise DataError("need at least one score function")
    p = d.masses
    t1 = (d.mid - 0.5) / np.sqrt(d.midvar())
    m_eff = min(m, d.k - 1)
    basis = [np.ones(d.k)]
    notes = []
    truncated = False
    v = t1
    for j in range(1, m_eff + 1):
        if j > 1:
            v = t1 * basis[-1]
        scale = np.sqrt(np.dot(p, v * v))
        r = _orthonormalize(v, basis, p)
        norm = np.sqrt(np.dot(p, r * r))
        if norm <= DEPENDENCE_TOL * max(scale, 1.0):
            msg = f"score T_{j} numerically dependent; basis truncated at m={j - 1}"
            warnings.warn(msg, BasisTruncationWarning, stacklevel=2)
            notes.append(msg)
            truncated = True
            break
        r = r / norm
        nz = np.flatnonzero(np.abs(r) > 1e-12)
        if nz.size and r[nz[-1]] < 0:
            r = -r
        basis.append(r)
    table = np.array(basis[1:])
    table.setflags(write=False)
    return ScoreBasis(
        dist=d,
        table=table,
        requested=m,
        clipped=m > d.k - 1,
        truncated=truncated,
        warnings=tuple(notes),
    )


def legendre_matrix(m: int, u) -> np.ndarray:
    """Shifted orthonormal Legendre ``Leg_1..Leg_m`` at `u`, shape ``(m, len(u))``.

    Uses the three-term recurrence of the standard Legendre polynomials
    on ``2u - 1`` followed by the ``sqrt(2j + 1)`` normalisation.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    x = 2.0 * u - 1.0
    out = np.empty((m, u.size))
    p_prev, p_cur = np.ones_like(x), x
    for j in range(1, m + 1):
        if j > 1:
            p_prev, p_cur = p_cur, ((2 * j - 1) * x * p_cur - (j - 1) * p_prev) / j
        out[j - 1] = np.sqrt(2 * j + 1) * p_cur
    return out


def legendre(j: int, u):
    """Shifted orthonormal Legendre polynomial of degree `j` on [0, 1]."""
    if j < 0:
        raise DataError("Legendre degree must be nonnegative")
    u_arr = np.asarray(u, dtype=float)
    if j == 0:
        out = np.ones_like(u_arr)
    else:
        out = legendre_matrix(j, u_arr.ravel())[-1].reshape(u_arr.shape)
    return out if out.ndim else float(out)


@lru_cache(maxsize=None)
def _legendre_coefficients(j: int) -> tuple[Fraction, ...]:
    """Exact monomial coefficients of ``P_j(2u - 1)`` (without the sqrt factor)."""
    # P_j(2u-1) = sum_k (-1)^(j+k) C(j,k) C(j+k,k) u^k
    from math import comb

    return tuple(Fraction((-1) ** (j + k) * comb(j, k) * comb(j + k, k)) for k in range(j + 1))


@dataclass(frozen=True)
class LegendreBasis:
    """Shifted orthonormal Legendre polynomials up to degree `m`.

    ``coefficients[j]`` are the exact rational monomial coefficients of
    ``Leg_j(u) / sqrt(2j + 1)``.
    """

    m: int

    @property
    def coefficients(self) -> tuple[tuple[Fraction, ...], ...]:
        return tuple(_legendre_coefficients(j) for j in range(self.m + 1))

    def inner(self, j: int, l: int) -> float:
        """``integral_0^1 Leg_j Leg_l du`` by exact rational arithmetic."""
        a, b = _legendre_coefficients(j), _legendre_coefficients(l)
        s = sum(ca * cb / (ia + ib + 1) for ia, ca in enumerate(a) for ib, cb in enumerate(b))
        return float(s) * float(np.sqrt((2 * j + 1) * (2 * l + 1)))

    def __call__(self, u) -> np.ndarray:
        """Values of ``Leg_0..Leg_m`` at `u`, shape ``(m + 1, len(u))``."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        return np.vstack([np.ones_like(u), legendre_matrix(self.m, u)]) if self.m else np.ones((1, u.size))
