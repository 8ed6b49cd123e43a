"""Simulation harness: dependence power study, tail-alternative GOF power, timing.

Pattern formulas (only silhouettes are available for some of them):

* linear ``y = x``, quadratic ``y = x^2``, W-shaped ``y = 2 ||x| - 1/2|``,
  all with ``x ~ U[-1, 1]``;
* sine ``y = sin(4 pi x)`` with ``x ~ U[0, 1]``;
* circle ``(cos t, sin t)`` with radial noise;
* Lissajous ``(sin(3t + pi/2), sin(2t))`` with componentwise noise,
  ``t ~ U[0, 2 pi]``.

Noise regimes, added to ``y`` unless noted above:

* E1 ``N(0, sigma)``, ``sigma`` in [0, 3];
* E2 ``(1 - eta) N(0, 1) + eta N(1, 3)`` (second argument an sd), ``eta`` in [0, 0.4];
* E3 ``(1 - eta) N(0, 1) + eta N(mu, 1)``, ``mu`` uniform on ``{-40, -20, 20, 40}``;
* E4 Cauchy with scale in [0, 2].
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from .errors import DataError
from .lpinfor import default_threads
from .moments import lp_comoments
from .skew import Baseline, gof_components, gof_statistic

__all__ = [
    "PATTERNS",
    "NOISES",
    "MID_NOISE",
    "METHODS",
    "TABLE3_WINNERS",
    "Scenario",
    "PowerResult",
    "generate_scenario",
    "scenario_grid",
    "power_study",
    "directional_check",
    "tail_alternative_study",
    "timing_bench",
]

PATTERNS = ("linear", "quadratic", "lissajous", "w_shaped", "sine", "circle")
NOISES = {"E1": (0.0, 3.0), "E2": (0.0, 0.4), "E3": (0.0, 0.4), "E4": (0.0, 2.0)}
MID_NOISE = {"E1": 1.0, "E2": 0.2, "E3": 0.2, "E4": 1.0}
METHODS = ("lpinfor", "pearson", "spearman")
LEVERAGE = np.array([-40.0, -20.0, 20.0, 40.0])

# winners of the power comparison; entries naming methods outside this
# harness (distance correlation, MIC) are kept for reference only
TABLE3_WINNERS = {
    **{(p, "E1"): w for p, w in zip(PATTERNS, ("pearson", "lpinfor", "lpinfor", "dcor", "dcor", "lpinfor"))},
    **{
        (p, e): w
        for e in ("E2", "E3", "E4")
        for p, w in zip(PATTERNS, ("spearman", "lpinfor", "lpinfor", "lpinfor", "mic", "lpinfor"))
    },
}


@dataclass(frozen=True)
class Scenario:
    """One cell of the power study.

    ``null=True`` shuffles ``y`` after generation, giving an independent
    pair with the same margins.
    """

    pattern: str
    noise: str = "E1"
    level: float = 1.0
    n: int = 300
    seed: int = 0
    null: bool = False

    def __post_init__(self):
        if self.pattern not in PATTERNS:
            raise DataError(f"unknown pattern {self.pattern!r}; expected one of {', '.join(PATTERNS)}")
        if self.noise not in NOISES:
            raise DataError(f"unknown noise regime {self.noise!r}")
        lo, hi = NOISES[self.noise]
        if not lo <= self.level <= hi:
            raise DataError(f"{self.noise} level must lie in [{lo}, {hi}]")
        if self.n < 5:
            raise DataError("n must be at least 5")

    @property
    def key(self) -> tuple[int, ...]:
        # content-derived stream key: results do not depend on grid order
        return (
            PATTERNS.index(self.pattern),
            list(NOISES).index(self.noise),
            int(round(self.level * 1e6)),
            self.n,
            int(self.null),
        )


def _noise(rng, regime: str, level: float, size: int) -> np.ndarray:
    if regime == "E1":
        return level * rng.standard_normal(size)
    if regime == "E4":
        return level * rng.standard_cauchy(size)
    base = rng.standard_normal(size)
    hit = rng.uniform(size=size) < level
    if regime == "E2":
        return np.where(hit, 1.0 + 3.0 * base, base)
    return np.where(hit, base + rng.choice(LEVERAGE, size=size), base)


def generate_scenario(sc: Scenario, rng=None) -> tuple[np.ndarray, np.ndarray]:
    """Draw one paired sample ``(x, y)`` from `sc`."""
    rng = np.random.default_rng(sc.seed if rng is None else rng)
    n = sc.n
    if sc.pattern == "circle":
        t = rng.uniform(0, 2 * np.pi, n)
        r = 1.0 + _noise(rng, sc.noise, sc.level, n)
        x, y = r * np.cos(t), r * np.sin(t)
    elif sc.pattern == "lissajous":
        t = rng.uniform(0, 2 * np.pi, n)
        x = np.sin(3 * t + np.pi / 2) + _noise(rng, sc.noise, sc.level, n)
        y = np.sin(2 * t) + _noise(rng, sc.noise, sc.level, n)
    else:
        if sc.pattern == "sine":
            x = rng.uniform(0, 1, n)
            f = np.sin(4 * np.pi * x)
        else:
            x = rng.uniform(-1, 1, n)
            f = {"linear": x, "quadratic": x**2, "w_shaped": 2 * np.abs(np.abs(x) - 0.5)}[sc.pattern]
        y = f + _noise(rng, sc.noise, sc.level, n)
    if sc.null:
        y = rng.permutation(y)
    return x, y


def scenario_grid(patterns=PATTERNS, noises=tuple(NOISES), levels=None, n: int = 300, null: bool = False):
    """Cartesian grid of scenarios; `levels` maps regime -> sequence (default: mid-noise)."""
    levels = levels or {e: (MID_NOISE[e],) for e in NOISES}
    return [Scenario(p, e, float(lv), n, null=null) for p in patterns for e in noises for lv in levels[e]]


def _pearson(x, y):
    return abs(float(np.corrcoef(x, y)[0, 1]))


def _spearman(x, y):
    return abs(float(np.corrcoef(stats.rankdata(x), stats.rankdata(y))[0, 1]))


def _lpinfor_raw(x, y, m=4):
    return float(np.sum(lp_comoments(x, y, m=m).entries ** 2))


STATISTICS = {"lpinfor": _lpinfor_raw, "pearson": _pearson, "spearman": _spearman}


def _nan_safe(f, x, y):
    v = f(x, y)
    # constant samples have no correlation; count as no evidence
    return 0.0 if not np.isfinite(v) else v


@dataclass(frozen=True)
class PowerResult:
    scenario: Scenario
    method: str
    cutoff: float
    power: float
    rejections: int
    replications: tuple[int, int]

    def row(self) -> dict:
        sc = asdict(self.scenario)
        return {
            "pattern": sc["pattern"],
            "noise": sc["noise"],
            "noise_level": sc["level"],
            "n": sc["n"],
            "null": sc["null"],
            "method": self.method,
            "cutoff": self.cutoff,
            "power": self.power,
            "rejections": self.rejections,
            "B0": self.replications[0],
            "B1": self.replications[1],
        }


def _replicate_stats(sc: Scenario, phase: int, B: int, seed: int, methods, m: int, threads: int) -> np.ndarray:
    """Statistics of `B` replicates; replicate ``r`` uses its own stream."""

    def one(r):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(*sc.key, phase, r)))
        x, y = generate_scenario(sc, rng)
        if phase == 0:
            y = rng.permutation(y)
        out = []
        for meth in methods:
            f = STATISTICS[meth]
            out.append(_nan_safe(f, x, y) if meth != "lpinfor" else f(x, y, m))
        return out

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return np.array(list(ex.map(one, range(B))))
    return np.array([one(r) for r in range(B)])


def power_study(
    scenarios,
    methods=METHODS,
    B0: int = 250,
    B1: int = 200,
    seed: int = 0,
    m: int = 4,
    threads: int | None = None,
) -> list[PowerResult]:
    """Null-calibrated power of each method on each scenario.

    The null replicates draw from the scenario and shuffle ``y``; the
    cutoff is their 95th percentile, and power is the fraction of
    alternative replicates strictly above it.
    """
    if B0 < 50 or B1 < 50:
        raise DataError("B0 and B1 must be at least 50")
    methods = tuple(methods)
    for meth in methods:
        if meth not in STATISTICS:
            raise DataError(f"unknown method {meth!r}; expected one of {', '.join(STATISTICS)}")
    threads = threads or default_threads()
    out = []
    for sc in scenarios:
        null = _replicate_stats(sc, 0, B0, seed, methods, m, threads)
        alt = _replicate_stats(sc, 1, B1, seed, methods, m, threads)
        for i, meth in enumerate(methods):
            cut = float(np.quantile(null[:, i], 0.95))
            hits = int(np.sum(alt[:, i] > cut))
            out.append(PowerResult(sc, meth, cut, hits / B1, hits, (B0, B1)))
    return out


def _one_sided_z(k1: int, k2: int, n: int) -> float:
    """z for ``H1: p2 > p1`` from two binomial counts of size `n`."""
    pbar = (k1 + k2) / (2 * n)
    se = math.sqrt(pbar * (1 - pbar) * 2 / n)
    if se == 0:
        return 0.0
    return (k2 - k1) / n / se


def directional_check(results, alpha: float = 0.05) -> list[dict]:
    """For cells whose reference winner is LPINFOR: is either correlation
    baseline significantly more powerful (one-sided two-proportion z-test)?"""
    crit = stats.norm.isf(alpha)
    by_cell = {}
    for r in results:
        by_cell.setdefault(r.scenario, {})[r.method] = r
    rows = []
    for sc, res in by_cell.items():
        if sc.null or TABLE3_WINNERS.get((sc.pattern, sc.noise)) != "lpinfor" or "lpinfor" not in res:
            continue
        lp = res["lpinfor"]
        for base in ("pearson", "spearman"):
            if base not in res:
                continue
            z = _one_sided_z(lp.rejections, res[base].rejections, lp.replications[1])
            rows.append(
                {
                    "pattern": sc.pattern,
                    "noise": sc.noise,
                    "noise_level": sc.level,
                    "baseline": base,
                    "power_lpinfor": lp.power,
                    "power_baseline": res[base].power,
                    "z": z,
                    "baseline_better": bool(z > crit),
                }
            )
    return rows


def _mixture(rng, n: int, pi: float, mu: float) -> np.ndarray:
    # (1 - pi) N(0, 1) + pi N(mu, 1): pi is the contaminated fraction
    return rng.standard_normal(n) + mu * (rng.uniform(size=n) < pi)


def tail_alternative_study(
    pis=(0.01, 0.02, 0.05, 0.09),
    mus=(0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5),
    n: int = 1000,
    B: int = 200,
    B0: int = 500,
    m: int = 4,
    seed: int = 0,
) -> list[dict]:
    """Power of the raw LP GOF statistic against ``H0: F = Phi`` under
    contamination ``(1 - pi) Phi + pi Phi(. - mu)``.

    One null cutoff (95th percentile over `B0` samples) is shared by all
    cells.
    """
    if not all(0 < p < 1 for p in pis) or min(mus) < 0:
        raise DataError("need pi in (0, 1) and mu >= 0")
    g = Baseline.normal()
    stat = lambda x: gof_statistic(gof_components(x, g, m))
    rng0 = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
    null = np.array([stat(rng0.standard_normal(n)) for _ in range(B0)])
    cut = float(np.quantile(null, 0.95))
    rows = []
    for i, pi in enumerate(pis):
        for j, mu in enumerate(mus):
            rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1, i, j)))
            alt = np.array([stat(_mixture(rng, n, pi, mu)) for _ in range(B)])
            rows.append({"pi": pi, "mu": mu, "n": n, "power": float(np.mean(alt > cut)), "cutoff": cut})
    return rows


def timing_bench(ns=(100, 500, 1000, 2500, 5000, 10_000), repeats: int = 20, seed: int = 0, m: int = 4) -> list[dict]:
    """Wall-clock time of the LPINFOR statistic on independent uniform pairs.

    ``ratio`` is the median time relative to the first ``n``.
    """
    ns = list(ns)
    if ns != sorted(ns):
        raise DataError("n grid must be ascending")
    rows = []
    for n in ns:
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(n,)))
        times, values = [], []
        for _ in range(repeats):
            x, y = rng.uniform(size=n), rng.uniform(size=n)
            t0 = time.perf_counter()
            values.append(_lpinfor_raw(x, y, m))
            times.append(time.perf_counter() - t0)
        times = np.array(times)
        rows.append(
            {
                "n": n,
                "mean": float(times.mean()),
                "sd": float(times.std(ddof=1)) if repeats > 1 else 0.0,
                "median": float(np.median(times)),
                "statistic": values,
            }
        )
    for r in rows:
        r["ratio"] = r["median"] / rows[0]["median"]
    return rows
