"""Finite probability laws, mid-distributions and contingency tables.

Every sample is discrete, so a single finite-atom representation serves
raw data, fitted discrete models and the margins of two-way tables.
Continuous laws only enter the package through analytic baselines
(see :mod:`lpstat.skew`) and quadrature (see :mod:`lpstat.moments`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DataError

__all__ = [
    "DiscreteDist",
    "ContingencyTable",
    "JointDist",
    "empirical_dist",
    "table_margins",
]

PROB_ATOL = 1e-12


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DiscreteDist:
    """Finite distribution with strictly increasing atoms.

    Atoms carrying zero mass are dropped on construction.

    Parameters
    ----------
    atoms : array_like
        Support points, strictly increasing.
    masses : array_like
        Probabilities of the atoms; must sum to one within ``1e-12``.
    """

    atoms: np.ndarray
    masses: np.ndarray
    cumulative: np.ndarray = field(init=False)
    mid: np.ndarray = field(init=False)

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float).ravel()
        masses = np.asarray(self.masses, dtype=float).ravel()
        if atoms.shape != masses.shape:
            raise DataError("atoms and masses differ in length")
        if atoms.size == 0:
            raise DataError("empty input")
        if not (np.all(np.isfinite(atoms)) and np.all(np.isfinite(masses))):
            raise DataError("atoms and masses must be finite")
        if np.any(masses < 0):
            raise DataError("negative probability mass")
        keep = masses > 0
        atoms, masses = atoms[keep], masses[keep]
        if atoms.size == 0:
            raise DataError("distribution has no positive mass")
        if np.any(np.diff(atoms) <= 0):
            raise DataError("atoms must be strictly increasing")
        total = masses.sum()
        if abs(total - 1.0) > PROB_ATOL:
            raise DataError(f"masses sum to {total!r}, not 1")
        cumulative = np.cumsum(masses)
        object.__setattr__(self, "atoms", _frozen(atoms))
        object.__setattr__(self, "masses", _frozen(masses))
        object.__setattr__(self, "cumulative", _frozen(cumulative))
        object.__setattr__(self, "mid", _frozen(cumulative - 0.5 * masses))

    @classmethod
    def from_weights(cls, atoms, weights) -> "DiscreteDist":
        """Build from nonnegative weights (counts), normalising them."""
        weights = np.asarray(weights, dtype=float)
        total = weights.sum()
        if not total > 0:
            raise DataError("weights must have a positive sum")
        return cls(atoms, weights / total)

    @property
    def k(self) -> int:
        """Number of atoms."""
        return self.atoms.size

    @property
    def mean(self) -> float:
        return float(np.dot(self.masses, self.atoms))

    @property
    def var(self) -> float:
        return float(np.dot(self.masses, (self.atoms - self.mean) ** 2))

    def index_of(self, x) -> np.ndarray:
        """Atom index of each value in `x`; raises if a value is not an atom."""
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.atoms, x)
        idx_c = np.minimum(idx, self.k - 1)
        bad = self.atoms[idx_c] != x
        if np.any(bad):
            raise DataError(f"value {np.asarray(x)[bad].ravel()[0]!r} is not an atom")
        return idx_c

    def cdf(self, x):
        """Right-continuous distribution function ``F(x) = P(X <= x)``."""
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.atoms, x, side="right")
        out = np.where(idx > 0, self.cumulative[np.maximum(idx - 1, 0)], 0.0)
        return out if out.ndim else float(out)

    def pmf(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.minimum(np.searchsorted(self.atoms, x), self.k - 1)
        out = np.where(self.atoms[idx] == x, self.masses[idx], 0.0)
        return out if out.ndim else float(out)

    def midcdf(self, x):
        """Mid-distribution ``F(x) - p(x)/2``; equals ``F(x)`` off the atoms."""
        out = np.asarray(self.cdf(x)) - 0.5 * np.asarray(self.pmf(x))
        return out if out.ndim else float(out)

    def quantile(self, u):
        """Left-continuous inverse: the smallest atom with ``F(x) >= u``.

        Raises
        ------
        DataError
            If any `u` lies outside the open interval (0, 1).
        """
        u = np.asarray(u, dtype=float)
        if np.any((u <= 0) | (u >= 1)) or np.any(~np.isfinite(u)):
            raise DataError("quantile level must lie in (0, 1)")
        idx = np.minimum(np.searchsorted(self.cumulative, u, side="left"), self.k - 1)
        out = self.atoms[idx]
        return out if out.ndim else float(out)

    def midvar(self) -> float:
        """Variance of the mid-distribution transform, ``(1 - sum p^3) / 12``."""
        return float((1.0 - np.sum(self.masses**3)) / 12.0)

    def relabel(self, func) -> "DiscreteDist":
        """Apply a strictly increasing map to the atoms."""
        return DiscreteDist(func(self.atoms), self.masses)

    def __repr__(self):
        return f"DiscreteDist(k={self.k}, mean={self.mean:.6g}, var={self.var:.6g})"


def empirical_dist(values, return_inverse: bool = False):
    """Empirical distribution of a sample; ties collapse into single atoms.

    Parameters
    ----------
    values : array_like
        Finite observations.
    return_inverse : bool
        Also return, for each observation, the index of its atom.
    """
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise DataError("empty input")
    if not np.all(np.isfinite(x)):
        raise DataError("sample contains non-finite values")
    atoms, inverse, counts = np.unique(x, return_inverse=True, return_counts=True)
    dist = DiscreteDist(atoms, counts / x.size)
    if return_inverse:
        return dist, inverse.ravel()
    return dist


@dataclass(frozen=True, eq=False)
class ContingencyTable:
    """Two-way table of counts or joint probabilities.

    Use :meth:`from_array`, which decides between counts and
    probabilities: entries summing to at most ``1 + 1e-9`` are taken as
    probabilities (and ``n`` stays unknown unless supplied).
    """

    probs: np.ndarray
    n: int | None = None
    counts: np.ndarray | None = None
    row_labels: tuple = ()
    col_labels: tuple = ()

    @classmethod
    def from_array(
        cls,
        table,
        row_labels: Sequence[str] | None = None,
        col_labels: Sequence[str] | None = None,
        n: int | None = None,
    ) -> "ContingencyTable":
        arr = np.asarray(table, dtype=float)
        if arr.ndim != 2 or arr.size == 0:
            raise DataError("contingency table must be a non-empty 2-D array")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise DataError("table entries must be finite and nonnegative")
        I, J = arr.shape
        row_labels = tuple(row_labels) if row_labels is not None else tuple(str(i) for i in range(I))
        col_labels = tuple(col_labels) if col_labels is not None else tuple(str(j) for j in range(J))
        if len(row_labels) != I or len(col_labels) != J:
            raise DataError("label count does not match table shape")
        for i in np.flatnonzero(arr.sum(axis=1) <= 0):
            raise DataError(f"row category {row_labels[i]!r} is empty")
        for j in np.flatnonzero(arr.sum(axis=0) <= 0):
            raise DataError(f"column category {col_labels[j]!r} is empty")
        total = arr.sum()
        counts = None
        if total > 1 + 1e-9:
            counts = _frozen(arr)
            n = int(round(total)) if n is None else n
        probs = _frozen(arr / total)
        return cls(probs=probs, n=n, counts=counts, row_labels=row_labels, col_labels=col_labels)

    @property
    def shape(self):
        return self.probs.shape

    def transpose(self) -> "ContingencyTable":
        return ContingencyTable(
            probs=_frozen(self.probs.T),
            n=self.n,
            counts=None if self.counts is None else _frozen(self.counts.T),
            row_labels=self.col_labels,
            col_labels=self.row_labels,
        )


def table_margins(t: ContingencyTable) -> tuple[DiscreteDist, DiscreteDist]:
    """Row and column margins with atoms at category codes ``0..I-1``, ``0..J-1``."""
    I, J = t.shape
    rows = t.probs.sum(axis=1)
    cols = t.probs.sum(axis=0)
    return (
        DiscreteDist(np.arange(I), rows / rows.sum()),
        DiscreteDist(np.arange(J), cols / cols.sum()),
    )


@dataclass(frozen=True, eq=False)
class JointDist:
    """Finite bivariate law stored as weighted support points.

    A table contributes one point per positive cell; a paired sample
    contributes one point per observation with weight ``1/n``.  Both
    margins are :class:`DiscreteDist` objects and ``xi``/``yi`` index
    into their atoms.
    """

    x: DiscreteDist
    y: DiscreteDist
    xi: np.ndarray
    yi: np.ndarray
    w: np.ndarray
    n: int | None = None

    @classmethod
    def from_table(cls, t: ContingencyTable) -> "JointDist":
        x, y = table_margins(t)
        I, J = np.nonzero(t.probs > 0)
        return cls(x, y, I, J, t.probs[I, J], t.n)

    @classmethod
    def from_samples(cls, x, y) -> "JointDist":
        x = np.asarray(x, dtype=float).ravel()
        y = np.asarray(y, dtype=float).ravel()
        if x.size != y.size:
            raise DataError("paired samples differ in length")
        dx, ix = empirical_dist(x, return_inverse=True)
        dy, iy = empirical_dist(y, return_inverse=True)
        return cls(dx, dy, ix, iy, np.full(x.size, 1.0 / x.size), x.size)

    @classmethod
    def from_probabilities(cls, probs, n=None) -> "JointDist":
        """Joint law on category codes from an ``I x J`` probability matrix."""
        return cls.from_table(ContingencyTable.from_array(probs, n=n))

    def dense(self) -> np.ndarray:
        """Joint probability matrix over (x atoms, y atoms)."""
        out = np.zeros((self.x.k, self.y.k))
        np.add.at(out, (self.xi, self.yi), self.w)
        return out

    def swap(self) -> "JointDist":
        return JointDist(self.y, self.x, self.yi, self.xi, self.w, self.n)

    @property
    def cov(self) -> float:
        xs = self.x.atoms[self.xi] - self.x.mean
        ys = self.y.atoms[self.yi] - self.y.mean
        return float(np.sum(self.w * xs * ys))
