"""Comparison densities, LP skew densities and the LP goodness-of-fit statistic.

A baseline law ``G`` is corrected by a comparison density ``d(u)`` on the
unit interval, ``f(x) = g(x) d(G(x))``.  The coefficients of ``d`` in the
score basis of ``G`` are the goodness-of-fit components
``LP[j; G, F] = E_F[T_j(X; G)]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ._maxent import fit_maxent
from .basis import DEFAULT_M, ScoreBasis, build_scores, legendre_matrix
from .dist import DiscreteDist
from .errors import DataError
from .moments import truncated_discrete
from .quadrature import composite_gauss
from .selection import select, select_aic

__all__ = [
    "Baseline",
    "ComparisonDensity",
    "gof_components",
    "select_aic",
    "gof_statistic",
    "gof_pvalue",
    "fit_exponential",
    "fit_comparison_density",
    "lp_skew_density",
]

KINDS = ("normal", "exponential", "gamma", "poisson", "discrete")


@dataclass(frozen=True, eq=False)
class Baseline:
    """Reference law ``G`` of a comparison density.

    Build with the named constructors or :meth:`fit`.  Continuous kinds
    wrap a frozen scipy distribution; ``poisson`` and ``discrete`` are
    finite laws whose scores come from :func:`build_scores`.
    """

    kind: str
    params: dict
    dist: DiscreteDist | None = None
    _frozen: object = field(default=None, repr=False)

    @classmethod
    def normal(cls, mu: float = 0.0, sigma: float = 1.0) -> "Baseline":
        if not sigma > 0:
            raise DataError("baseline has zero variance")
        return cls("normal", {"mu": float(mu), "sigma": float(sigma)}, None, stats.norm(mu, sigma))

    @classmethod
    def exponential(cls, mean: float) -> "Baseline":
        if not mean > 0:
            raise DataError("baseline has zero variance")
        return cls("exponential", {"mean": float(mean)}, None, stats.expon(scale=mean))

    @classmethod
    def gamma(cls, shape: float, rate: float) -> "Baseline":
        if not (shape > 0 and rate > 0):
            raise DataError("gamma baseline needs positive shape and rate")
        return cls("gamma", {"shape": float(shape), "rate": float(rate)}, None, stats.gamma(shape, scale=1.0 / rate))

    @classmethod
    def poisson(cls, lam: float, upto: int | None = None) -> "Baseline":
        """Poisson law truncated where its tail mass drops below 1e-12.

        `upto` extends the support so that every observed count is an atom.
        """
        if not lam > 0:
            raise DataError("baseline has zero variance")
        frozen = stats.poisson(lam)
        d = truncated_discrete(frozen)
        if upto is not None and upto > d.atoms[-1]:
            k = np.arange(0, int(upto) + 1)
            d = DiscreteDist.from_weights(k, frozen.pmf(k))
        return cls("poisson", {"lam": float(lam)}, d, frozen)

    @classmethod
    def discrete(cls, d: DiscreteDist) -> "Baseline":
        if d.k < 2:
            raise DataError("baseline has zero variance")
        return cls("discrete", {"k": d.k}, d, None)

    @classmethod
    def fit(cls, kind: str, data) -> "Baseline":
        """Method-of-moments fit of a named baseline to a sample."""
        x = np.asarray(data, dtype=float).ravel()
        if x.size == 0:
            raise DataError("empty input")
        mean, sd = float(x.mean()), float(x.std(ddof=1)) if x.size > 1 else 0.0
        if kind == "normal":
            return cls.normal(mean, sd)
        if kind == "exponential":
            return cls.exponential(mean)
        if kind == "gamma":
            if not sd > 0:
                raise DataError("baseline has zero variance")
            return cls.gamma(mean**2 / sd**2, mean / sd**2)
        if kind == "poisson":
            return cls.poisson(mean, upto=int(x.max()))
        raise DataError(f"cannot fit baseline kind {kind!r}; expected one of {KINDS[:4]}")

    @property
    def is_discrete(self) -> bool:
        return self.dist is not None

    def cdf(self, x):
        if self.is_discrete:
            return self.dist.cdf(x)
        return self._frozen.cdf(x)

    def ppf(self, u):
        if self.is_discrete:
            return self.dist.quantile(u)
        return self._frozen.ppf(u)

    def pdf(self, x):
        """Density for continuous kinds, mass for discrete ones."""
        if self.is_discrete:
            return self.dist.pmf(x)
        return self._frozen.pdf(x)

    def check_support(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise DataError("data contain non-finite values")
        if self.is_discrete:
            self.dist.index_of(x)
        elif self.kind in ("exponential", "gamma") and np.any(x < 0):
            raise DataError(f"negative value {x[x < 0].min()!r} outside the {self.kind} baseline support")
        return x

    def basis(self, m: int) -> ScoreBasis:
        """Score basis of a discrete baseline."""
        if not self.is_discrete:
            raise DataError("continuous baselines use Legendre scores")
        return build_scores(self.dist, m)

    def scores(self, x, m: int = DEFAULT_M) -> np.ndarray:
        """``T_j(x; G)`` for ``j = 1..m``, shape ``(m, len(x))``."""
        x = np.atleast_1d(self.check_support(x))
        if self.is_discrete:
            b = self.basis(m)
            return b.table[:, self.dist.index_of(x)]
        return legendre_matrix(m, self._frozen.cdf(x))

    def unit_scores(self, u, m: int = DEFAULT_M) -> np.ndarray:
        """``S_j(u; G)``, shape ``(m, len(u))``."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if self.is_discrete:
            return self.basis(m).unit(u)
        return legendre_matrix(m, u)

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}


def _weights(data, g: Baseline):
    if isinstance(data, DiscreteDist):
        return data.atoms, data.masses
    x = np.asarray(data, dtype=float).ravel()
    if x.size == 0:
        raise DataError("empty input")
    return x, np.full(x.size, 1.0 / x.size)


def gof_components(data, g: Baseline, m: int = DEFAULT_M) -> np.ndarray:
    """Goodness-of-fit components ``LP[j; G, F] = E_F[T_j(X; G)]``, ``j = 1..m``.

    Parameters
    ----------
    data : array_like or DiscreteDist
        Sample from ``F``, or a finite law ``F`` itself.
    g : Baseline
    m : int
        Clipped to ``k - 1`` for discrete baselines.

    Raises
    ------
    DataError
        For observations outside the baseline support.
    """
    x, w = _weights(data, g)
    return g.scores(x, m) @ w


def gof_statistic(coeffs, selected=None) -> float:
    """``integral d^2 - 1``: sum of squared components.

    With `selected` (a boolean mask) this is the smooth statistic,
    otherwise the raw one over all supplied components.
    """
    c = np.asarray(coeffs, dtype=float)
    if selected is not None:
        c = c[np.asarray(selected, dtype=bool)]
    return float(np.sum(c**2))


def gof_pvalue(statistic: float, n: int, df: int) -> float:
    """Upper tail of ``chi^2_df`` at ``n * statistic``.

    Exact asymptotically for the raw statistic; optimistic after selection.
    """
    if df == 0:
        return 1.0
    return float(stats.chi2.sf(n * statistic, df))


@dataclass(frozen=True, eq=False)
class ComparisonDensity:
    """Estimated comparison density ``d(u; G, F)``.

    Attributes
    ----------
    baseline : Baseline
    form : {"l2", "exp"}
    coeffs : ndarray
        All ``m`` components ``LP[j; G, F]``.
    selected : ndarray of bool
    theta : ndarray or None
        Exponential-form parameters on the selected scores.
    K : float
        Log normaliser of the exponential form.
    norm : float
        Integral of the clipped L2 form; 1 when no clipping occurred.
    """

    baseline: Baseline
    form: str
    coeffs: np.ndarray
    selected: np.ndarray
    n: int | None = None
    rule: str | None = None
    theta: np.ndarray | None = None
    K: float = 0.0
    norm: float = 1.0

    @property
    def m(self) -> int:
        return self.coeffs.size

    def _unit_scores(self, u):
        return self.baseline.unit_scores(u, self.m)[self.selected]

    def raw(self, u) -> np.ndarray:
        """Unclipped L2 expansion ``1 + sum_sel c_j S_j(u)``."""
        return 1.0 + self.coeffs[self.selected] @ self._unit_scores(u)

    def __call__(self, u) -> np.ndarray:
        """Valid density on (0, 1): clipped and renormalised (L2) or exponential."""
        if self.form == "exp":
            return np.exp(self.theta @ self._unit_scores(u) - self.K)
        return np.maximum(self.raw(u), 0.0) / self.norm

    def at_data_scale(self, x) -> np.ndarray:
        """``d(G(x))`` evaluated through the scores ``T_j(x; G)``."""
        t = self.baseline.scores(x, self.m)[self.selected]
        if self.form == "exp":
            return np.exp(self.theta @ t - self.K)
        return np.maximum(1.0 + self.coeffs[self.selected] @ t, 0.0) / self.norm

    def cdf_u(self, u) -> np.ndarray:
        """``D(u) = integral_0^u d(w) dw``, the CDF of ``G(X)`` under the model."""
        u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        if self.baseline.is_discrete:
            b = self.baseline.basis(self.m)
            left, right = b.cells()
            dens = self.at_data_scale(self.baseline.dist.atoms)
            width = np.clip(u[..., None] - left, 0.0, right - left)
            return width @ dens
        if self.form == "l2":
            return _positive_part_cumulative(np.where(self.selected, self.coeffs, 0.0), u) / self.norm
        t, w = np.polynomial.legendre.leggauss(64)
        t, w = (t + 1) / 2, w / 2
        flat = u.ravel()
        vals = self(np.outer(flat, t).ravel()).reshape(flat.size, t.size)
        return (flat * (vals @ w)).reshape(u.shape)

    def cdf(self, x) -> np.ndarray:
        """Model CDF on the data scale, ``D(G(x))``."""
        return self.cdf_u(self.baseline.cdf(x))

    def ppf(self, q, iters: int = 60) -> np.ndarray:
        """Model quantile ``G^{-1}(D^{-1}(q))`` by bisection on ``D``."""
        q = np.asarray(q, dtype=float)
        lo, hi = np.zeros_like(q), np.ones_like(q)
        for _ in range(iters):
            mid = (lo + hi) / 2
            below = self.cdf_u(mid) < q
            lo, hi = np.where(below, mid, lo), np.where(below, hi, mid)
        u = np.clip((lo + hi) / 2, 1e-15, 1 - 1e-15)
        return self.baseline.ppf(u)

    @property
    def clipped_mass(self) -> float:
        """Negative mass removed by clipping the L2 form."""
        return float(self.norm - 1.0)

    def statistic(self, smooth: bool = True) -> float:
        return gof_statistic(self.coeffs, self.selected if smooth else None)

    def to_dict(self) -> dict:
        stat = self.statistic(True)
        df = int(self.selected.sum())
        out = {
            "baseline": self.baseline.to_dict(),
            "form": self.form,
            "coeffs": self.coeffs.tolist(),
            "selected": [int(j) + 1 for j in np.flatnonzero(self.selected)],
            "rule": self.rule,
            "statistic": stat,
            "raw_statistic": self.statistic(False),
            "n": self.n,
            "pvalue_df": None if self.n is None else gof_pvalue(stat, self.n, df),
            "df": df,
        }
        if self.form == "exp":
            out["theta"] = self.theta.tolist()
            out["K"] = self.K
        return out


def _base_measure(g: Baseline, m: int):
    """Support scores and weights used to normalise ``d`` on (0, 1)."""
    if g.is_discrete:
        b = g.basis(m)
        return b.table, g.dist.masses
    u, w = composite_gauss()
    return legendre_matrix(m, u), np.asarray(w)


def _positive_part_cumulative(coeffs, u) -> np.ndarray:
    """Exact ``integral_0^u max(1 + sum c_j Leg_j(w), 0) dw`` for a polynomial d."""
    leg = np.concatenate([[1.0], coeffs * np.sqrt(2 * np.arange(1, coeffs.size + 1) + 1)])
    anti = np.polynomial.legendre.legint(leg, lbnd=-1.0)
    roots = np.polynomial.legendre.legroots(leg) if leg.size > 1 else np.array([])
    roots = np.sort(roots[np.isreal(roots)].real)
    edges = np.concatenate([[-1.0], roots[(roots > -1) & (roots < 1)], [1.0]])
    x = 2.0 * np.asarray(u, dtype=float) - 1.0
    out = np.zeros_like(x)
    for a, b in zip(edges[:-1], edges[1:]):
        if np.polynomial.legendre.legval((a + b) / 2, leg) <= 0:
            continue
        top = np.clip(x, a, b)
        out += np.polynomial.legendre.legval(top, anti) - np.polynomial.legendre.legval(a, anti)
    return out / 2.0


def _positive_part_integral(coeffs) -> float:
    return float(_positive_part_cumulative(coeffs, 1.0))


def _l2_norm(g: Baseline, coeffs, selected) -> float:
    S, w = _base_measure(g, coeffs.size)
    d = 1.0 + coeffs[selected] @ S[selected]
    if g.is_discrete:
        return 1.0 if np.all(d >= 0) else float(w @ np.maximum(d, 0.0))
    # continuous d is a polynomial: integrate its positive part between real roots
    return _positive_part_integral(np.where(selected, coeffs, 0.0))


def fit_exponential(target, g: Baseline, selected=None):
    """Exponential comparison density matching the target components.

    Finds ``theta`` with ``E[S_j] = target_j`` for selected ``j`` under
    ``d(u) = exp(sum theta_j S_j(u) - K)``.  ``K`` is an exact sum for
    discrete baselines and a 512-node composite Gauss rule otherwise.

    Returns
    -------
    theta : ndarray
        Parameters on the selected scores.
    K : float

    Raises
    ------
    NumericalError
        When Newton's method fails within 200 iterations.
    """
    target = np.asarray(target, dtype=float)
    sel = np.ones(target.size, bool) if selected is None else np.asarray(selected, bool)
    S, w = _base_measure(g, target.size)
    if S.shape[0] < target.size:
        raise DataError(f"baseline supports only {S.shape[0]} components")
    theta, K, _ = fit_maxent(S[sel].T, w, target[sel])
    return theta, K


def fit_comparison_density(
    data,
    g: Baseline,
    m: int = DEFAULT_M,
    rule: str = "aic",
    form: str = "l2",
    n: int | None = None,
) -> ComparisonDensity:
    """Estimate ``d(u; G, F)`` from data.

    Parameters
    ----------
    data : array_like or DiscreteDist
    g : Baseline
    m : int
        Number of candidate components.
    rule : str
        Selection rule; see :func:`lpstat.selection.select`.
    form : {"l2", "exp"}
    n : int, optional
        Sample size when `data` is a DiscreteDist.
    """
    if form not in ("l2", "exp"):
        raise DataError(f"unknown form {form!r}; expected 'l2' or 'exp'")
    coeffs = gof_components(data, g, m)
    if n is None and not isinstance(data, DiscreteDist):
        n = int(np.asarray(data).size)
    sel = select(coeffs, rule, n)
    if form == "exp":
        theta, K = fit_exponential(coeffs, g, sel)
        return ComparisonDensity(g, "exp", coeffs, sel, n, rule, theta, K)
    return ComparisonDensity(g, "l2", coeffs, sel, n, rule, norm=_l2_norm(g, coeffs, sel))


def lp_skew_density(cd: ComparisonDensity, x) -> np.ndarray:
    """LP skew density ``g(x) d(G(x))`` (mass function for discrete baselines)."""
    x = np.asarray(x, dtype=float)
    out = cd.baseline.pdf(x) * cd.at_data_scale(np.atleast_1d(x)).reshape(x.shape)
    return out if out.ndim else float(out)
