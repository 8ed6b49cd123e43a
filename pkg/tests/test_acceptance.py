"""Acceptance criteria, one test each.

Every test records a ``PASS``/``FAIL`` line per criterion (plus one line
per sub-check) that is printed in the terminal summary.  Tolerances are
fixed here and never adjusted to make a check pass.
"""

import os
import time

import numpy as np
import pytest

from lpstat import ContingencyTable, DiscreteDist, JointDist, load_dataset, lp_comoments, lp_moments
from lpstat.basis import build_scores
from lpstat.copula import two_by_two_identities
from lpstat.correspondence import correspondence_analysis
from lpstat.io import read_columns
from lpstat.lpinfor import (
    chi_square_test,
    chidiv,
    conditional_lpinfor,
    gaussian_lpinfor,
    lpinfor,
    permutation_pvalue,
)
from lpstat.moments import STANDARD_LAWS, covariance_decomposition, spearman_lp11, standard_lp_moments
from lpstat.regress import fit_conditional
from lpstat.sim import METHODS, TABLE3_WINNERS, directional_check, power_study, scenario_grid, timing_bench
from lpstat.skew import Baseline, fit_comparison_density, gof_components, gof_statistic

from conftest import ACCEPTANCE_LINES

FISHER_LP = np.array(
    [
        [0.423, 0.024, 0.039, -0.009],
        [0.115, 0.157, 0.001, -0.021],
        [-0.050, 0.086, 0.017, -0.033],
    ]
)
FISHER_SV = np.array([0.446, 0.173, 0.029])
FISHER_ROW = np.array([[-0.400, -0.441, 0.034, 0.703], [-0.165, -0.088, 0.245, -0.134]])
FISHER_COL = np.array([[-0.544, -0.233, -0.042, 0.589, 1.094], [-0.174, -0.048, 0.208, -0.104, -0.286]])
RIPLEY_LP = np.array(
    [
        [-0.908, -0.010, 0.011, 0.035],
        [0.032, 0.716, -0.071, 0.028],
        [0.064, 0.015, -0.590, 0.117],
        [-0.046, -0.085, -0.060, 0.425],
    ]
)


class Report:
    def __init__(self, number: int, title: str):
        self.number, self.title = number, title
        self.checks = []

    def check(self, name: str, ok: bool, detail: str):
        self.checks.append((name, bool(ok), detail))

    def info(self, name: str, detail: str):
        self.checks.append((name, None, detail))

    def finish(self):
        ok = all(c[1] is not False for c in self.checks)
        lines = [f"criterion {self.number:>2} {'PASS' if ok else 'FAIL'}  {self.title}"]
        for name, good, detail in self.checks:
            tag = "info" if good is None else ("ok" if good else "FAIL")
            lines.append(f"    [{tag:>4}] {name}: {detail}")
        ACCEPTANCE_LINES.extend(lines)
        print("\n".join(lines))
        failed = [c[0] for c in self.checks if c[1] is False]
        assert not failed, f"criterion {self.number} failed: {', '.join(failed)}"


def _up_to_sign(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return min(np.max(np.abs(a - b)), np.max(np.abs(a + b)))


def test_criterion_01_standard_lp_moments():
    rep = Report(1, "LP moments of six standard laws within 0.01, < 5 s")
    ref = load_dataset("lp_moments_reference")
    t0 = time.perf_counter()
    got = {name: standard_lp_moments(name, m=6) for name in STANDARD_LAWS}
    elapsed = time.perf_counter() - t0
    for name, row in zip(ref["distribution"], zip(*(ref[f"lp{j}"] for j in range(1, 7)))):
        err = np.max(np.abs(got[name] - np.array(row, float)))
        rep.check(name, err <= 0.01, f"max |err| {err:.4f} (tol 0.01)")
    rep.check("runtime", elapsed < 5, f"{elapsed:.2f} s (< 5 s)")
    rep.finish()


def _gaussian_reference(rho):
    ref = load_dataset("gaussian_comoments_reference")
    out = np.zeros((4, 4))
    for r, j, k, v in zip(ref["rho"], ref["j"], ref["k"], ref["value"]):
        if float(r) == rho:
            out[int(j) - 1, int(k) - 1] = float(v)
    return out


def test_criterion_02_gaussian_comoment_tables():
    rep = Report(2, "bivariate normal m=4 comoments, n=1e6, within 0.02, < 60 s")
    t0 = time.perf_counter()
    for i, rho in enumerate((0.0, 0.5, 0.9)):
        rng = np.random.default_rng(100 + i)
        z = rng.standard_normal((2, 1_000_000))
        x, y = z[0], rho * z[0] + np.sqrt(1 - rho**2) * z[1]
        got = lp_comoments(x, y, m=4).entries
        diff = np.abs(got - _gaussian_reference(rho))
        j, k = np.unravel_index(np.argmax(diff), diff.shape)
        rep.check(
            f"rho={rho}",
            diff.max() <= 0.02,
            f"max |err| {diff.max():.4f} at LP[{j + 1},{k + 1}] (estimate {got[j, k]:+.4f}, reference {_gaussian_reference(rho)[j, k]:+.3f})",
        )
    elapsed = time.perf_counter() - t0
    rep.check("runtime", elapsed < 60, f"{elapsed:.1f} s (< 60 s)")
    rep.finish()


def _fisher_pipeline(rep, t, label, record):
    cm = lp_comoments(t, m=4)
    err = np.max(np.abs(np.abs(cm.entries) - np.abs(FISHER_LP)))
    record(f"{label} comoment matrix", err <= 0.005, f"max ||LP|-|ref|| {err:.4f} (tol 0.005)")
    cd = chidiv(t)
    record(f"{label} chi2/n", abs(cd - 0.230) <= 0.002, f"{cd:.4f} (0.230 +- 0.002)")
    r = lpinfor(cm)
    record(
        f"{label} smooth LPINFOR ({r.rule} rule)",
        abs(r.smooth - 0.220) <= 0.005 and r.df_smooth == 3,
        f"{r.smooth:.4f} with df {r.df_smooth} (0.220 +- 0.005, df 3)",
    )
    ca = correspondence_analysis(t, rank=2)
    sv = np.max(np.abs(ca.singular_values - FISHER_SV))
    record(f"{label} singular values", sv <= 0.005, f"{np.round(ca.singular_values, 4).tolist()} (tol 0.005)")
    coord = max(
        max(_up_to_sign(ca.row_coords[:, k], FISHER_ROW[k]) for k in range(2)),
        max(_up_to_sign(ca.col_coords[:, k], FISHER_COL[k]) for k in range(2)),
    )
    record(f"{label} profile coordinates", coord <= 0.01, f"max err {coord:.4f} up to sign (tol 0.01)")


def test_criterion_03_fisher_pipeline():
    rep = Report(3, "Fisher table from printed joint probabilities, < 1 s")
    t0 = time.perf_counter()
    _fisher_pipeline(rep, load_dataset("fisher_probs"), "printed probabilities", rep.check)
    elapsed = time.perf_counter() - t0
    rep.check("runtime", elapsed < 1, f"{elapsed:.2f} s (< 1 s)")
    # the same pipeline on the raw counts behind the printed table, for the record
    _fisher_pipeline(rep, load_dataset("fisher"), "counts", lambda n, ok, d: rep.info(n, f"{d} [{'ok' if ok else 'miss'}]"))
    cm = lp_comoments(load_dataset("fisher"), m=4)
    mask = np.zeros(cm.shape, bool)
    mask[0, 0] = mask[1, 0] = mask[1, 1] = True
    r = lpinfor(cm, selection=mask)
    rep.info("counts, printed starred set", f"smooth {r.smooth:.4f} with df {r.df_smooth}")
    rep.finish()


def test_criterion_04_wais():
    rep = Report(4, "WAIS table: classical chi2, LP[2,1], permutation p, < 30 s")
    wais = load_dataset("wais")
    t0 = time.perf_counter()
    stat, df, p = chi_square_test(wais)
    rep.check("classical chi2", round(stat, 6) == 60 and df == 56, f"{stat:.4f} with df {df}, p {p:.4f}")
    e = lp_comoments(wais, m=4).entries[1, 0]
    rep.check("LP[2,1]", abs(e - (-0.617)) <= 0.002, f"{e:.4f} (-0.617 +- 0.002)")
    pv, seed = permutation_pvalue(wais, statistic=("entry", 2, 1), B=9999, seed=1)
    rep.check("permutation p of |LP[2,1]|", pv <= 0.05, f"{pv:.4f} (B=9999, seed {seed}; <= 0.05)")
    elapsed = time.perf_counter() - t0
    rep.check("runtime", elapsed < 30, f"{elapsed:.1f} s (< 30 s)")
    rep.finish()


def _random_table(rng, max_i=5, max_j=5):
    I, J = rng.integers(2, max_i + 1), rng.integers(2, max_j + 1)
    P = rng.uniform(0.01, 1.0, (I, J))
    return P / P.sum()


def test_criterion_05_identity_suite():
    rep = Report(5, "exact identities on 100 random instances each, tol 1e-8, < 30 s")
    rng = np.random.default_rng(2024)
    N, tol = 100, 1e-8
    worst = dict.fromkeys(
        ["Q(F(X)) = X", "Parseval", "covariance decomposition", "GOF = chi2 divergence",
         "2x2 singular value = |phi|", "2x2 exp singular value = log odds term",
         "full LPINFOR = chi2/n", "mixture of conditional LPINFOR", "zero-order cross identity"],
        0.0,
    )
    t0 = time.perf_counter()
    for _ in range(N):
        k = int(rng.integers(2, 9))
        p = rng.uniform(0.01, 1.0, k)
        p /= p.sum()
        atoms = np.cumsum(rng.uniform(0.1, 3.0, k))
        d = DiscreteDist(atoms, p)
        # F at the top atom is 1, outside the quantile domain: use its left limit
        u = np.minimum(d.cdf(atoms), np.nextafter(1.0, 0.0))
        worst["Q(F(X)) = X"] = max(worst["Q(F(X)) = X"], np.max(np.abs(d.quantile(u) - atoms)))
        v = lp_moments(d, build_scores(d, k - 1), m=k - 1).coeffs
        worst["Parseval"] = max(worst["Parseval"], abs(np.sum(v**2) - d.var))

        q = rng.uniform(0.01, 1.0, k)
        q /= q.sum()
        g = Baseline.discrete(DiscreteDist(atoms, q))
        stat = gof_statistic(gof_components(d, g, k - 1))
        worst["GOF = chi2 divergence"] = max(worst["GOF = chi2 divergence"], abs(stat - np.sum(q * (p / q - 1) ** 2)))

        P = _random_table(rng)
        cov, dec = covariance_decomposition(P)
        worst["covariance decomposition"] = max(worst["covariance decomposition"], abs(cov - dec))
        worst["full LPINFOR = chi2/n"] = max(
            worst["full LPINFOR = chi2/n"], abs(lpinfor(P, m="full", selection="all").raw - chidiv(P))
        )
        c = conditional_lpinfor(JointDist.from_probabilities(P))
        worst["mixture of conditional LPINFOR"] = max(worst["mixture of conditional LPINFOR"], abs(c.mixture - c.total))
        j = JointDist.from_probabilities(P)
        cm = lp_comoments(j, m=(j.x.k - 1, j.y.k - 1))
        ly = lp_moments(j.y, cm.y_basis, m=cm.y_basis.m).coeffs
        worst["zero-order cross identity"] = max(
            worst["zero-order cross identity"], np.max(np.abs(cm.zero_col - cm.entries @ ly))
        )

        T = _random_table(rng, 2, 2)
        r = two_by_two_identities(T)
        worst["2x2 singular value = |phi|"] = max(worst["2x2 singular value = |phi|"], abs(r.lambda1 - abs(r.phi)))
        worst["2x2 exp singular value = log odds term"] = max(
            worst["2x2 exp singular value = log odds term"], abs(r.gamma1 - r.log_odds_term)
        )
    elapsed = time.perf_counter() - t0
    for name, err in worst.items():
        rep.check(name, err <= tol, f"max error {err:.2e} over {N} instances")
    rep.check("runtime", elapsed < 30, f"{elapsed:.1f} s (< 30 s)")
    rep.finish()


def test_criterion_06_genest():
    rep = Report(6, "Genest examples: |LP[1,1]| = 1 for p = 0.1..0.9")
    worst = 0.0
    for p in np.round(np.arange(0.1, 1.0, 0.1), 1):
        for t in ([[p, 0], [0, 1 - p]], [[0, p], [1 - p, 0]]):
            worst = max(worst, abs(abs(spearman_lp11(ContingencyTable.from_array(t))) - 1))
    rep.check("both constructions", worst <= 1e-12, f"max ||LP[1,1]| - 1| {worst:.1e}")
    rep.finish()


def test_criterion_07_gaussian_lpinfor():
    rep = Report(7, "Gaussian LPINFOR: m=4 Monte Carlo within 0.02 of sum rho^2j; closed form exact")
    for i, rho in enumerate((0.25, 0.5, 0.75)):
        rng = np.random.default_rng(700 + i)
        z = rng.standard_normal((2, 1_000_000))
        x, y = z[0], rho * z[0] + np.sqrt(1 - rho**2) * z[1]
        raw = lpinfor(x, y, m=4, selection="all").raw
        target = sum(rho ** (2 * j) for j in range(1, 5))
        rep.check(f"rho={rho}", abs(raw - target) <= 0.02, f"statistic {raw:.4f} vs {target:.4f} (diff {raw - target:+.4f})")
    worst = max(abs(gaussian_lpinfor(r) - r**2 / (1 - r**2)) for r in np.linspace(-0.95, 0.95, 39))
    rep.check("closed form rho^2/(1-rho^2)", worst <= 1e-12, f"max error {worst:.1e}")
    rep.finish()


def test_criterion_08_power_study():
    rep = Report(8, "desk-scale power study (n=300, B0=250, B1=200), < 10 min")
    t0 = time.perf_counter()
    null = power_study(scenario_grid(null=True), B0=250, B1=200, seed=2013)
    alt = power_study(scenario_grid(), B0=250, B1=200, seed=2013)
    elapsed = time.perf_counter() - t0
    for meth in METHODS:
        rows = [r for r in null if r.method == meth]
        rate = sum(r.rejections for r in rows) / sum(r.replications[1] for r in rows)
        rep.check(f"null calibration {meth}", abs(rate - 0.05) <= 0.03, f"pooled rate {rate:.4f} over {len(rows)} null cells (0.05 +- 0.03)")
        spread = [r.power for r in rows]
        rep.info(f"null cells {meth}", f"per-cell rates {min(spread):.3f}..{max(spread):.3f}")
    checks = directional_check(alt)
    cells = {(c["pattern"], c["noise"]) for c in checks}
    expected = {k for k, w in TABLE3_WINNERS.items() if w == "lpinfor"}
    rep.check("LPINFOR-winner cells covered", cells == expected, f"{len(cells)} of {len(expected)} cells")
    for c in checks:
        rep.check(
            f"{c['pattern']}/{c['noise']} vs {c['baseline']}",
            not c["baseline_better"],
            f"power {c['power_lpinfor']:.3f} vs {c['power_baseline']:.3f}, z {c['z']:+.2f}",
        )
    rep.check("runtime", elapsed < 600, f"{elapsed:.0f} s (< 600 s)")
    rep.finish()


def test_criterion_09_scalability():
    rep = Report(9, "LPINFOR runtime t(1e4)/t(1e3) < 15 and t(1e4) < 1 s")
    timing_bench(ns=(1000,), repeats=3)  # warm-up
    rows = timing_bench(ns=(1000, 10_000), repeats=20, seed=9)
    ratio, t4 = rows[1]["ratio"], rows[1]["median"]
    rep.check("scaling ratio", ratio < 15, f"median ratio {ratio:.2f}")
    rep.check("absolute time at n=1e4", t4 < 1, f"median {t4 * 1e3:.2f} ms")
    rep.finish()


def _ripley_columns(path):
    cols = read_columns(path)
    lower = {k.lower(): v for k, v in cols.items()}
    if "age" in lower and "gag" in lower:
        return lower["age"], lower["gag"]
    names = list(cols)
    return cols[names[0]], cols[names[1]]


@pytest.mark.skipif(not os.environ.get("LPSTAT_RIPLEY"), reason="set LPSTAT_RIPLEY to the GAG data CSV to run")
def test_criterion_10_ripley():
    rep = Report(10, "Ripley GAG reproduction")
    age, gag = _ripley_columns(os.environ["LPSTAT_RIPLEY"])
    cm = lp_comoments(age, gag, m=4)
    err = np.max(np.abs(cm.entries - RIPLEY_LP))
    rep.check("comoment matrix", err <= 0.01, f"max |err| {err:.4f} (tol 0.01)")
    r = lpinfor(cm)
    rep.check(f"smooth LPINFOR ({r.rule} rule)", abs(r.smooth - 1.851) <= 0.02, f"{r.smooth:.4f} with df {r.df_smooth} (1.851 +- 0.02)")
    rep.info("smooth LPINFOR (bic rule)", f"{lpinfor(cm, selection='bic').smooth:.4f}")
    model = fit_conditional(cm)
    coef = np.array([model.y_mean, *model.mean_coeffs[:2]])
    cerr = np.max(np.abs(coef - [13.1, -7.32, 2.20]))
    rep.check("mean coefficients", cerr <= 0.2, f"{np.round(coef, 3).tolist()} (tol 0.2)")
    cd = fit_comparison_density(age, Baseline.fit("exponential", age), m=8, rule="aic")
    stat = cd.statistic(True)
    sel = (np.flatnonzero(cd.selected) + 1).tolist()
    rep.check("GOF statistic, exponential baseline", abs(stat - 0.365) <= 0.01, f"{stat:.4f} selecting {sel} (0.365 +- 0.01)")
    rep.finish()
