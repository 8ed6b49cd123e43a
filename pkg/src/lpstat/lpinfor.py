"""LPINFOR dependence measure, chi-square divergence and permutation p-values."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

from .basis import DEFAULT_M
from .dist import ContingencyTable, JointDist
from .errors import DataError
from .moments import LPComomentMatrix, as_joint, lp_comoments

__all__ = [
    "LPInforResult",
    "ConditionalLPInfor",
    "lpinfor",
    "lpinfor_from_entries",
    "gaussian_lpinfor",
    "chidiv",
    "chi_square_test",
    "table_to_pairs",
    "permutation_pvalue",
    "asymptotic_pvalue",
    "conditional_lpinfor",
    "default_threads",
]

# replicates per independently seeded block of the permutation null
BLOCK = 256


@dataclass(frozen=True, eq=False)
class LPInforResult:
    """Raw and smooth LPINFOR.

    Attributes
    ----------
    raw : float
        Sum of all squared comoments.
    smooth : float
        Sum over the selected entries.
    linearity : float or None
        ``LP[1,1]^2 / smooth`` when ``LP[1,1]`` is selected.
    pvalue : float or None
        Permutation p-value of the raw statistic, with its `seed` and `B`.
    """

    raw: float
    smooth: float
    df_raw: int
    df_smooth: int
    selected: np.ndarray
    rule: str | None
    linearity: float | None = None
    pvalue: float | None = None
    seed: int | None = None
    B: int | None = None
    comoments: LPComomentMatrix | None = None

    def to_dict(self) -> dict:
        out = {
            "raw": self.raw,
            "smooth": self.smooth,
            "df": self.df_smooth,
            "df_raw": self.df_raw,
            "linearity": self.linearity,
            "rule": self.rule,
            "selected": [[int(j) + 1, int(k) + 1] for j, k in zip(*np.nonzero(self.selected))],
            "pvalue": self.pvalue,
            "seed": self.seed,
            "B": self.B,
        }
        if self.comoments is not None:
            out["comoments"] = self.comoments.to_dict()
        return out


def lpinfor_from_entries(entries, selected=None, rule=None, comoments=None) -> LPInforResult:
    """LPINFOR of a given comoment matrix and selection mask."""
    A = np.asarray(entries, dtype=float)
    mask = np.ones(A.shape, bool) if selected is None else np.asarray(selected, bool)
    raw = float(np.sum(A**2))
    smooth = float(np.sum(A[mask] ** 2))
    lin = float(A[0, 0] ** 2 / smooth) if mask[0, 0] and smooth > 0 else None
    return LPInforResult(raw, smooth, A.size, int(mask.sum()), mask, rule, lin, comoments=comoments)


def lpinfor(
    data,
    y=None,
    m=DEFAULT_M,
    selection="threshold",
    perm: int | None = None,
    seed: int | None = None,
    threads: int | None = None,
) -> LPInforResult:
    """LPINFOR of a table, joint law, comoment matrix or paired sample.

    Parameters
    ----------
    m : int or (int, int)
        Scores per margin; ``"full"`` uses ``k - 1`` on each margin.
    selection : str or boolean mask
        Rule name or explicit mask; falls back to ``"all"`` when the
        sample size is unknown.
    perm : int, optional
        Number of permutations for a p-value of the raw statistic.
    """
    if isinstance(data, LPComomentMatrix):
        cm = data
    else:
        joint = as_joint(data, y)
        if isinstance(m, str) and m == "full":
            m = (joint.x.k - 1, joint.y.k - 1)
        cm = lp_comoments(joint, m=m)
    if isinstance(selection, str):
        rule = selection if cm.n is not None or selection in ("all", "none") else "all"
        mask = cm.select(rule)
    else:
        rule, mask = "mask", np.asarray(selection, bool)
    res = lpinfor_from_entries(cm.entries, mask, rule, cm)
    if perm is None:
        return res
    if cm.n is None:
        raise DataError("permutation p-value needs counts or a paired sample")
    p, used = permutation_pvalue(cm.joint, statistic="lpinfor", B=perm, seed=seed, m=cm.shape, threads=threads)
    return replace(res, pvalue=p, seed=used, B=perm)


def gaussian_lpinfor(rho: float, m: int | None = None) -> float:
    """``rho^2 / (1 - rho^2)``, or its Hermite partial sum ``sum_{j<=m} rho^(2j)``."""
    rho = float(rho)
    if not abs(rho) < 1:
        raise DataError("|rho| must be below 1")
    if m is None:
        return rho**2 / (1 - rho**2)
    return float(sum(rho ** (2 * j) for j in range(1, m + 1)))


def _table(t) -> ContingencyTable:
    return t if isinstance(t, ContingencyTable) else ContingencyTable.from_array(t)


def chidiv(t) -> float:
    """Chi-square divergence ``sum (p_ij - p_i p_j)^2 / (p_i p_j) = chi^2 / n``."""
    P = _table(t).probs
    E = np.outer(P.sum(1), P.sum(0))
    return float(np.sum((P - E) ** 2 / E))


def chi_square_test(t) -> tuple[float, int, float]:
    """Classical Pearson test: ``(chi^2, df, p-value)``; needs counts."""
    t = _table(t)
    if t.n is None:
        raise DataError("chi-square test needs counts")
    stat = t.n * chidiv(t)
    df = (t.shape[0] - 1) * (t.shape[1] - 1)
    return float(stat), df, float(stats.chi2.sf(stat, df))


def table_to_pairs(t) -> tuple[np.ndarray, np.ndarray]:
    """Expand a count table into paired category codes."""
    t = _table(t)
    if t.counts is None:
        raise DataError("table of probabilities cannot be expanded into observations")
    c = np.rint(t.counts).astype(int)
    if np.any(np.abs(c - t.counts) > 1e-9):
        raise DataError("table counts must be integers")
    I, J = np.indices(c.shape)
    return np.repeat(I.ravel(), c.ravel()).astype(float), np.repeat(J.ravel(), c.ravel()).astype(float)


def default_threads() -> int:
    env = os.environ.get("LPSTAT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DataError(f"LPSTAT_THREADS must be an integer, got {env!r}") from None
    return 1


def _pairs(data, y):
    if isinstance(data, (ContingencyTable, JointDist)) and y is None:
        if isinstance(data, JointDist):
            if data.n is None:
                raise DataError("joint law without a sample size cannot be permuted")
            if data.w.size == data.n:
                return data
            counts = np.rint(data.w * data.n)
            if np.any(np.abs(counts - data.w * data.n) > 1e-6):
                raise DataError("joint law weights are not counts")
            xi = np.repeat(data.xi, counts.astype(int))
            yi = np.repeat(data.yi, counts.astype(int))
            return JointDist(data.x, data.y, xi, yi, np.full(xi.size, 1.0 / xi.size), xi.size)
        x, yy = table_to_pairs(data)
        return JointDist.from_samples(x, yy)
    return JointDist.from_samples(data, y)


def _statistic(kind, joint: JointDist, m):
    """Return ``f(yi_perm) -> value`` for a permutation of the y codes."""
    n = joint.xi.size
    if callable(kind):
        xs = joint.x.atoms[joint.xi]
        ys = joint.y.atoms
        return lambda yi: kind(xs, ys[yi])
    if kind in ("pearson", "spearman"):
        if kind == "spearman":
            xs, ys = joint.x.mid[joint.xi], joint.y.mid
        else:
            xs, ys = joint.x.atoms[joint.xi], joint.y.atoms
        xc = (xs - xs.mean()) / xs.std()
        yc = (ys - ys[joint.yi].mean()) / ys[joint.yi].std()
        return lambda yi: abs(float(xc @ yc[yi]) / n)
    cm = lp_comoments(joint, m=m)
    tx = cm.x_basis.table[:, joint.xi] / n
    ty = cm.y_basis.table
    if kind == "lpinfor":
        return lambda yi: float(np.sum((tx @ ty[:, yi].T) ** 2))
    if isinstance(kind, tuple) and kind[0] == "entry":
        j, k = kind[1] - 1, kind[2] - 1
        if not (0 <= j < cm.shape[0] and 0 <= k < cm.shape[1]):
            raise DataError(f"entry ({kind[1]}, {kind[2]}) outside the {cm.shape} comoment matrix")
        return lambda yi: abs(float(tx[j] @ ty[k, yi]))
    raise DataError(f"unknown statistic {kind!r}")


def permutation_pvalue(
    data,
    y=None,
    statistic="lpinfor",
    B: int = 999,
    seed: int | None = None,
    m=DEFAULT_M,
    threads: int | None = None,
) -> tuple[float, int]:
    """Permutation p-value ``(1 + #{T* >= T}) / (B + 1)`` of an independence statistic.

    Parameters
    ----------
    data, y
        Paired sample, count table or joint law with counts.
    statistic : {"lpinfor", "pearson", "spearman"}, ("entry", j, k) or callable
        Larger values are more extreme; ``("entry", j, k)`` is ``|LP[j, k]|``.
    B : int
        Number of permutations, at least 99.
    seed : int, optional
        Drawn from fresh entropy when omitted; always returned.
    threads : int, optional
        Worker threads; defaults to ``LPSTAT_THREADS`` or 1.  Block ``i`` of
        256 replicates always uses the stream ``SeedSequence(seed, spawn_key=(i,))``,
        so the result does not depend on the thread count.

    Returns
    -------
    pvalue : float
    seed : int
    """
    if B < 99:
        raise DataError("need at least 99 permutations")
    joint = _pairs(data, y)
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % (2**63))
    f = _statistic(statistic, joint, m)
    n = joint.xi.size
    base = np.arange(n)
    observed = f(joint.yi)
    # compare on a relative tolerance so exact ties with the observed value count
    cut = observed - 1e-12 * max(1.0, abs(observed))

    def block(i):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(i,))))
        size = min(BLOCK, B - i * BLOCK)
        hits = 0
        for _ in range(size):
            hits += f(joint.yi[rng.permutation(base)]) >= cut
        return hits

    nblocks = -(-B // BLOCK)
    threads = threads or default_threads()
    if threads > 1 and nblocks > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            hits = sum(ex.map(block, range(nblocks)))
    else:
        hits = sum(block(i) for i in range(nblocks))
    return (1 + hits) / (B + 1), seed


def asymptotic_pvalue(entry: float, n: int) -> float:
    """Two-sided normal p-value of a single comoment, ``sqrt(n) LP[j,k] ~ N(0, 1)``."""
    return float(2 * stats.norm.sf(np.sqrt(n) * abs(entry)))


@dataclass(frozen=True, eq=False)
class ConditionalLPInfor:
    """Conditional LPINFOR curve ``LPINFOR(Y | X = Q(u; X))`` and its components.

    ``components[i, k-1] = LP[k; Y | X = Q(u_i; X)]``; ``curve`` is their
    squared sum.  ``mixture`` integrates the curve against ``F_X`` exactly
    (over the atoms) and equals ``total``.
    """

    u: np.ndarray
    components: np.ndarray
    curve: np.ndarray
    mixture: float
    total: float


def conditional_lpinfor(data, u=None, y=None, m=DEFAULT_M, selection="all") -> ConditionalLPInfor:
    """Conditional LPINFOR over a grid of `u` (default: the X mid-distribution values)."""
    cm = data if isinstance(data, LPComomentMatrix) else lp_comoments(data, y, m=m)
    if isinstance(selection, str):
        mask = cm.select(selection if cm.n is not None or selection in ("all", "none") else "all")
    else:
        mask = np.asarray(selection, bool)
    A = np.where(mask, cm.entries, 0.0)
    bx = cm.x_basis
    u = bx.dist.mid if u is None else np.atleast_1d(np.asarray(u, float))
    comps = bx.unit(u).T @ A
    at_atoms = bx.table.T @ A
    mixture = float(bx.dist.masses @ np.sum(at_atoms**2, axis=1))
    return ConditionalLPInfor(u, comps, np.sum(comps**2, axis=1), mixture, float(np.sum(A**2)))
