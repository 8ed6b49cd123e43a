"""Copula-based nonparametric regression: conditional mean, density and quantiles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import DEFAULT_M
from .errors import DataError, NumericalError
from .moments import LPComomentMatrix, lp_comoments
from .selection import select
from .skew import Baseline, ComparisonDensity, fit_comparison_density

__all__ = [
    "ConditionalModel",
    "ConditionalDensity",
    "fit_conditional",
    "conditional_mean",
    "conditional_density",
    "conditional_quantile",
    "sample_conditional",
]

ENVELOPE_GRID = 1024


@dataclass(frozen=True, eq=False)
class ConditionalModel:
    """Everything needed to describe ``Y`` given ``X = x``.

    Attributes
    ----------
    comoments : LPComomentMatrix
    mean_coeffs : ndarray
        ``LP(j, 0)`` for all ``j``; only the `mean_selected` ones enter
        the conditional mean.
    mean_selected : ndarray of bool
    slice_selected : ndarray of bool, shape (m1, m2)
        Comoments entering the conditional comparison density.
    marginal : ComparisonDensity or None
        Smooth model of ``Y`` for continuous data; None when ``Y`` is
        treated as discrete (its empirical masses are used directly).
    """

    comoments: LPComomentMatrix
    mean_coeffs: np.ndarray
    mean_selected: np.ndarray
    slice_selected: np.ndarray
    rule: str
    marginal: ComparisonDensity | None = None

    @property
    def y_mean(self) -> float:
        return self.comoments.y_basis.dist.mean

    @property
    def discrete_y(self) -> bool:
        return self.marginal is None

    def to_dict(self) -> dict:
        return {
            "rule": self.rule,
            "intercept": self.y_mean,
            "mean_coeffs": self.mean_coeffs.tolist(),
            "mean_selected": [int(j) + 1 for j in np.flatnonzero(self.mean_selected)],
            "slice_selected": [[int(j) + 1, int(k) + 1] for j, k in zip(*np.nonzero(self.slice_selected))],
            "marginal": None if self.marginal is None else self.marginal.to_dict(),
        }


def _mean_selection(cm: LPComomentMatrix, rule: str) -> np.ndarray:
    # standardise LP(j, 0) by the sample sd of Y T_j(X)
    j = cm.joint
    prod = cm.x_basis.table[:, j.xi] * j.y.atoms[j.yi]
    var = (prod**2) @ j.w - (prod @ j.w) ** 2
    sd = np.sqrt(np.maximum(var, 1e-300))
    return select(cm.zero_col / sd, rule, cm.n)


def fit_conditional(
    x,
    y=None,
    m=DEFAULT_M,
    rule: str = "threshold",
    y_model: str = "auto",
    marginal_m: int = DEFAULT_M,
) -> ConditionalModel:
    """Fit the conditional model of ``Y`` on ``X``.

    Parameters
    ----------
    x, y : array_like, or a table / joint law as `x` alone
    m : int or (int, int)
    rule : str
        Selection rule for both the mean coefficients and the slice comoments.
    y_model : {"auto", "discrete", "skew"}
        ``"skew"`` smooths the marginal of ``Y`` by an LP skew density
        against a fitted normal; ``"auto"`` does so for samples with more
        than 20 distinct ``y`` values.
    """
    cm = x if isinstance(x, LPComomentMatrix) else lp_comoments(x, y, m=m)
    if cm.n is None and rule not in ("all", "none"):
        rule = "all"
    mean_sel = _mean_selection(cm, rule)
    slice_sel = cm.select(rule)
    dy = cm.y_basis.dist
    if y_model not in ("auto", "discrete", "skew"):
        raise DataError(f"unknown y_model {y_model!r}")
    smooth = y_model == "skew" or (y_model == "auto" and cm.joint.n is not None and dy.k > 20 and cm.joint.w.size == cm.n)
    marginal = None
    if smooth:
        ys = dy.atoms[cm.joint.yi]
        marginal = fit_comparison_density(ys, Baseline.fit("normal", ys), m=marginal_m, rule="aic")
    return ConditionalModel(cm, cm.zero_col.copy(), mean_sel, slice_sel, rule, marginal)


def conditional_mean(model: ConditionalModel, x) -> np.ndarray:
    """``E[Y] + sum_sel LP(j, 0) T_j(x; X)``."""
    t = model.comoments.x_basis.evaluate(x)
    out = model.y_mean + (model.mean_coeffs * model.mean_selected) @ t
    return out if np.ndim(x) else float(out[0])


@dataclass(frozen=True, eq=False)
class ConditionalDensity:
    """Conditional density of ``Y`` at one value of ``X``.

    The conditional comparison density ``d(v | x)`` is piecewise constant
    on the cells of the empirical ``Y`` margin, clipped at 0 and
    renormalised by exact cell sums.
    """

    model: ConditionalModel
    coeffs: np.ndarray
    cell_values: np.ndarray

    @property
    def cells(self):
        return self.model.comoments.y_basis.cells()

    def comparison(self, v) -> np.ndarray:
        """``d(v | x)`` on (0, 1)."""
        v = np.atleast_1d(np.asarray(v, float))
        b = self.model.comoments.y_basis
        idx = np.minimum(np.searchsorted(b.dist.cumulative, v, side="right"), b.dist.k - 1)
        return self.cell_values[idx]

    def cdf_v(self, t) -> np.ndarray:
        """``integral_0^t d(w | x) dw``, piecewise linear."""
        left, right = self.cells
        t = np.asarray(t, float)
        return np.clip(t[..., None] - left, 0.0, right - left) @ self.cell_values

    def pmf(self) -> np.ndarray:
        """Conditional masses on the atoms of the empirical ``Y`` margin."""
        return self.model.comoments.y_basis.dist.masses * self.cell_values

    def pdf(self, y) -> np.ndarray:
        """Density ``f(y) d(F(y) | x)`` using the smooth marginal of ``Y``."""
        marg = self.model.marginal
        if marg is None:
            raise DataError("discrete Y: use pmf() for conditional masses")
        y = np.asarray(y, float)
        f = marg.baseline.pdf(y) * marg.at_data_scale(np.atleast_1d(y)).reshape(y.shape)
        return f * self.comparison(marg.cdf(y)).reshape(y.shape)

    @property
    def lpinfor(self) -> float:
        return float(np.sum(self.coeffs**2))


def _slice_coeffs(model: ConditionalModel, x) -> np.ndarray:
    cm = model.comoments
    A = np.where(model.slice_selected, cm.entries, 0.0)
    return cm.x_basis.evaluate(np.atleast_1d(float(x)))[:, 0] @ A


def _slice_from_coeffs(model: ConditionalModel, c) -> ConditionalDensity:
    by = model.comoments.y_basis
    d = np.maximum(1.0 + c @ by.table, 0.0)
    total = by.dist.masses @ d
    if not total > 0:
        raise NumericalError("conditional comparison density vanishes after clipping")
    return ConditionalDensity(model, c, d / total)


def conditional_density(model: ConditionalModel, x=None, u=None) -> ConditionalDensity:
    """Conditional density of ``Y`` given ``X = x`` or ``X = Q(u; X)``."""
    if (x is None) == (u is None):
        raise DataError("give exactly one of x or u")
    if u is not None:
        x = model.comoments.x_basis.dist.quantile(u)
    return _slice_from_coeffs(model, _slice_coeffs(model, x))


def _invert_cells(cd: ConditionalDensity, v) -> np.ndarray:
    left, right = cd.cells
    cum = np.concatenate([[0.0], np.cumsum(cd.cell_values * (right - left))])
    v = np.asarray(v, float)
    i = np.clip(np.searchsorted(cum, v, side="left") - 1, 0, cd.cell_values.size - 1)
    # skip cells with zero density so the inverse lands on positive mass
    dens = cd.cell_values[i]
    frac = np.where(dens > 0, (v - cum[i]) / np.where(dens > 0, dens, 1.0), 0.0)
    return np.clip(left[i] + frac, 0.0, 1.0)


def _to_y(model: ConditionalModel, t) -> np.ndarray:
    t = np.clip(np.asarray(t, float), 1e-12, 1 - 1e-12)
    if model.marginal is not None:
        return model.marginal.ppf(t)
    return model.comoments.y_basis.dist.quantile(t)


def sample_conditional(model: ConditionalModel, x=None, u=None, size: int = 100_000, seed=None) -> np.ndarray:
    """Accept-reject draws from ``d(. | x)`` on (0, 1).

    Proposals are uniform; the envelope is the larger of the maximum over
    a 1024-point grid and the maximum cell value, so narrow cells that the
    grid misses are still bounded.
    """
    cd = conditional_density(model, x=x, u=u)
    rng = np.random.default_rng(seed)
    grid = (np.arange(ENVELOPE_GRID) + 0.5) / ENVELOPE_GRID
    M = max(cd.comparison(grid).max(), cd.cell_values.max())
    out, need = [], size
    while need > 0:
        w = rng.uniform(size=max(2 * need, 1024))
        keep = w[rng.uniform(size=w.size) * M <= cd.comparison(w)][:need]
        out.append(keep)
        need -= keep.size
    return np.concatenate(out)


def conditional_quantile(
    model: ConditionalModel,
    v,
    x=None,
    u=None,
    path: str = "invert",
    seed: int | None = None,
    draws: int = 100_000,
) -> np.ndarray:
    """Conditional quantiles ``Q(v; Y | X = x)``.

    Parameters
    ----------
    v : array_like
        Levels in (0, 1).
    x, u : float
        Conditioning value, or its rank ``u`` (``x = Q(u; X)``).
    path : {"invert", "sample"}
        ``"invert"`` solves ``integral_0^t d(w | x) dw = v`` exactly over
        the piecewise-constant cells; ``"sample"`` takes empirical
        quantiles of :func:`sample_conditional` draws.  Both then map
        through the quantile function of ``Y``.
    seed : int, optional
        Seed of the sampling path.
    """
    v = np.asarray(v, float)
    if np.any((v <= 0) | (v >= 1)):
        raise DataError("quantile level must lie in (0, 1)")
    if path == "invert":
        return _to_y(model, _invert_cells(conditional_density(model, x=x, u=u), v))
    if path != "sample":
        raise DataError(f"unknown path {path!r}; expected 'invert' or 'sample'")
    draws_u = sample_conditional(model, x=x, u=u, size=draws, seed=seed)
    return _to_y(model, np.quantile(draws_u, v))
