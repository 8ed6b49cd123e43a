"""LP moments, LP comoments and the identities built on them."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .basis import DEFAULT_M, ScoreBasis, build_scores, legendre_matrix
from .dist import ContingencyTable, DiscreteDist, JointDist, empirical_dist
from .errors import DataError
from .quadrature import gauss_unit_cosine
from .selection import select

__all__ = [
    "LPMomentVector",
    "LPComomentMatrix",
    "lp_moments",
    "population_lp_moments",
    "truncated_discrete",
    "STANDARD_LAWS",
    "standard_lp_moments",
    "lp1_order_stat",
    "as_joint",
    "lp_comoments",
    "spearman_lp11",
    "variance_decomposition",
    "covariance_decomposition",
    "gini_correlations",
    "dagostino",
    "is_short_tailed",
]


@dataclass(frozen=True, eq=False)
class LPMomentVector:
    """``coeffs[j-1] = LP(j; X) = E[X T_j(X)]`` together with mean and variance."""

    coeffs: np.ndarray
    mean: float
    var: float
    n: int | None = None

    @property
    def m(self) -> int:
        return self.coeffs.size

    def to_dict(self) -> dict:
        return {
            "coeffs": self.coeffs.tolist(),
            "mean": self.mean,
            "var": self.var,
            "n": self.n,
        }


def lp_moments(d: DiscreteDist, b: ScoreBasis | None = None, m: int = DEFAULT_M, n=None) -> LPMomentVector:
    """LP moments of a finite distribution.

    Parameters
    ----------
    d : DiscreteDist
    b : ScoreBasis, optional
        Scores of `d`; built with `m` functions when omitted.
    m : int
        Number of moments (at most the basis size).
    """
    if b is None:
        b = build_scores(d, m)
    elif b.dist is not d:
        raise DataError("score basis was not built on this distribution")
    m = min(m, b.m)
    coeffs = b.table[:m] @ (d.masses * d.atoms)
    return LPMomentVector(coeffs=coeffs, mean=d.mean, var=d.var, n=n)


def population_lp_moments(ppf, m: int = 6, nodes: int = 256) -> np.ndarray:
    """``integral_0^1 Q(u) Leg_j(u) du`` for a continuous law with quantile `ppf`."""
    u, w = gauss_unit_cosine(nodes)
    q = np.asarray(ppf(u), dtype=float)
    return legendre_matrix(m, u) @ (w * q)


def truncated_discrete(frozen, tail: float = 1e-12, limit: int = 1_000_000) -> DiscreteDist:
    """Finite version of a scipy discrete law, cut where ``F >= 1 - tail``."""
    lo = int(frozen.support()[0])
    hi = lo
    cum = 0.0
    while cum < 1.0 - tail:
        hi += 256
        if hi - lo > limit:
            raise DataError("support too long to truncate")
        cum = float(frozen.cdf(hi))
    k = np.arange(lo, hi + 1)
    p = frozen.pmf(k)
    cut = int(np.searchsorted(np.cumsum(p), 1.0 - tail)) + 1
    k, p = k[:cut], p[:cut]
    return DiscreteDist.from_weights(k, p)


def _standard_laws():
    from scipy import stats

    return {
        "uniform_0_1": stats.uniform(),
        "normal_0_1": stats.norm(),
        "t_2": stats.t(2),
        "chi2_4": stats.chi2(4),
        "poisson_2": stats.poisson(2),
        "geometric_0.2": stats.geom(0.2),
    }


STANDARD_LAWS = ("uniform_0_1", "normal_0_1", "t_2", "chi2_4", "poisson_2", "geometric_0.2")


def standard_lp_moments(name: str, m: int = 6) -> np.ndarray:
    """Population LP moments of a named law from :data:`STANDARD_LAWS`.

    Discrete laws are summed exactly after truncation at mass ``1 - 1e-12``;
    continuous ones use :func:`population_lp_moments`.
    """
    laws = _standard_laws()
    if name not in laws:
        raise DataError(f"unknown law {name!r}; available: {list(STANDARD_LAWS)}")
    law = laws[name]
    if hasattr(law.dist, "pmf"):
        return lp_moments(truncated_discrete(law), m=m).coeffs
    return population_lp_moments(law.ppf, m=m)


def lp1_order_stat(sample) -> float:
    """First sample LP moment as a linear combination of order statistics.

    Only valid for tie-free samples; use :func:`lp_moments` otherwise.
    """
    x = np.sort(np.asarray(sample, dtype=float).ravel())
    n = x.size
    if n < 2:
        raise DataError("need at least two observations")
    if np.any(np.diff(x) == 0):
        raise DataError("sample has ties; use lp_moments(empirical_dist(sample))")
    i = np.arange(1, n + 1)
    return float(2.0 * np.sqrt(3.0) / (n * np.sqrt(n * n - 1.0)) * np.sum(x * (i - (n + 1) / 2.0)))


@dataclass(frozen=True, eq=False)
class LPComomentMatrix:
    """LP comoments ``LP[j, k; X, Y] = E[T_j(X) T_k(Y)]``.

    Attributes
    ----------
    entries : ndarray, shape (m1, m2)
    zero_col : ndarray, shape (m1,)
        Zero-order comoments ``LP[j, 0] = E[Y T_j(X)]``.
    zero_row : ndarray, shape (m2,)
        Zero-order comoments ``LP[0, k] = E[X T_k(Y)]``.
    significance : ndarray of bool or None
        ``|sqrt(n) LP[j, k]| >= z``; None when `n` is unknown.
    """

    entries: np.ndarray
    zero_col: np.ndarray
    zero_row: np.ndarray
    x_basis: ScoreBasis
    y_basis: ScoreBasis
    joint: JointDist
    n: int | None = None
    significance: np.ndarray | None = None
    z: float = 1.96

    @property
    def shape(self):
        return self.entries.shape

    def select(self, rule: str = "threshold", n=None) -> np.ndarray:
        """Selection mask over the entries; see :func:`lpstat.selection.select`."""
        return select(self.entries, rule, self.n if n is None else n, self.z)

    def to_dict(self) -> dict:
        return {
            "entries": self.entries.tolist(),
            "significance": None if self.significance is None else self.significance.tolist(),
            "zero_col": self.zero_col.tolist(),
            "zero_row": self.zero_row.tolist(),
            "n": self.n,
            "m": list(self.shape),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def csv_rows(self):
        """Rows ``(j, k, value, significant)`` including zero-order entries."""
        sig = self.significance
        for j in range(self.shape[0]):
            for k in range(self.shape[1]):
                flag = "" if sig is None else int(sig[j, k])
                yield (j + 1, k + 1, float(self.entries[j, k]), flag)
        for j, v in enumerate(self.zero_col, 1):
            yield (j, 0, float(v), "")
        for k, v in enumerate(self.zero_row, 1):
            yield (0, k, float(v), "")


def as_joint(data, y=None) -> JointDist:
    """Coerce a table, joint law, matrix or paired sample to :class:`JointDist`.

    A 2-D array without `y` is read as a contingency table, never as
    paired columns.
    """
    if isinstance(data, JointDist):
        return data
    if isinstance(data, ContingencyTable):
        return JointDist.from_table(data)
    if y is not None:
        return JointDist.from_samples(data, y)
    if np.ndim(data) == 2:
        # a bare matrix is a table of counts or joint probabilities
        return JointDist.from_table(ContingencyTable.from_array(data))
    raise DataError("expected a table, JointDist, or paired samples x, y")


def lp_comoments(data, y=None, m=DEFAULT_M, z: float = 1.96) -> LPComomentMatrix:
    """LP comoment matrix of a table or of paired observations.

    Parameters
    ----------
    data : ContingencyTable, JointDist or array_like
        Joint data; with `y` given, `data` is the x sample.
    m : int or (int, int)
        Number of scores per margin, each clipped to ``k - 1``.
    z : float
        Cutoff of the per-entry significance flag.
    """
    joint = as_joint(data, y)
    m1, m2 = (m, m) if np.ndim(m) == 0 else m
    bx = build_scores(joint.x, int(m1))
    by = build_scores(joint.y, int(m2))
    tx = bx.table[:, joint.xi]
    ty = by.table[:, joint.yi]
    w = joint.w
    entries = (tx * w) @ ty.T
    zero_col = tx @ (w * joint.y.atoms[joint.yi])
    zero_row = ty @ (w * joint.x.atoms[joint.xi])
    sig = None if joint.n is None else np.abs(np.sqrt(joint.n) * entries) >= z
    return LPComomentMatrix(
        entries=entries,
        zero_col=zero_col,
        zero_row=zero_row,
        x_basis=bx,
        y_basis=by,
        joint=joint,
        n=joint.n,
        significance=sig,
        z=z,
    )


def spearman_lp11(data, y=None) -> float:
    """``LP[1, 1]``: Spearman correlation with the mid-rank tie correction built in."""
    return float(lp_comoments(data, y, m=1).entries[0, 0])


def variance_decomposition(d: DiscreteDist, b: ScoreBasis | None = None) -> tuple[float, float]:
    """``(Var X, sum_j LP(j)^2)``; equal when `b` is the full basis."""
    if b is None:
        b = build_scores(d, d.k - 1)
    mom = lp_moments(d, b, m=b.m)
    return d.var, float(np.sum(mom.coeffs**2))


def covariance_decomposition(data, y=None) -> tuple[float, float]:
    """``(Cov(X, Y), sum_jk LP(j;X) LP(k;Y) LP[j,k])`` using full bases."""
    joint = as_joint(data, y)
    cm = lp_comoments(joint, m=(joint.x.k - 1, joint.y.k - 1))
    ax = lp_moments(joint.x, cm.x_basis, m=cm.x_basis.m).coeffs
    ay = lp_moments(joint.y, cm.y_basis, m=cm.y_basis.m).coeffs
    return joint.cov, float(ax @ cm.entries @ ay)


def gini_correlations(data, y=None, j: int = 1) -> tuple[float, float]:
    """Generalised Gini correlations ``(RGINI(j; Y|X), RGINI(j; X|Y))``.

    ``RGINI(j; Y|X) = E[Y T_j(X)] / E[Y T_j(Y)]`` and symmetrically.

    Raises
    ------
    DataError
        When either denominator vanishes.
    """
    if j < 1:
        raise DataError("Gini order must be at least 1")
    joint = as_joint(data, y)
    cm = lp_comoments(joint, m=j)
    if cm.x_basis.m < j or cm.y_basis.m < j:
        raise DataError(f"Gini undefined at order {j}: too few distinct values")
    den_y = lp_moments(joint.y, cm.y_basis, m=j).coeffs[j - 1]
    den_x = lp_moments(joint.x, cm.x_basis, m=j).coeffs[j - 1]
    if abs(den_y) < 1e-12 or abs(den_x) < 1e-12:
        raise DataError(f"Gini undefined at order {j}")
    return float(cm.zero_col[j - 1] / den_y), float(cm.zero_row[j - 1] / den_x)


def _lp1_ratio(sample) -> float:
    x = np.asarray(sample, dtype=float).ravel()
    if x.size < 3:
        raise DataError("need at least three observations")
    sd = x.std()
    if not sd > 0:
        raise DataError("constant sample")
    d = empirical_dist(x)
    return float(lp_moments(d, m=1).coeffs[0] / sd)


def dagostino(sample) -> float:
    """``Cor(X, F(X)) = LP(1; X) / sd(X)``; about ``sqrt(3/pi) = 0.977`` for normal data."""
    return _lp1_ratio(sample)


def is_short_tailed(sample, cutoff: float = 0.95) -> bool:
    """True when ``|LP(1; Z)|^2 > cutoff`` for the standardised sample ``Z``."""
    return _lp1_ratio(sample) ** 2 > cutoff
