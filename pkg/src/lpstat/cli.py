"""Command-line entry point ``lpstat``.

Exit codes: 0 success, 1 usage error (bad flag, missing file, incompatible
plot kind), 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .basis import build_scores
from .copula import copula_grid, copula_slice, fit_canonical_copula, fit_exponential_copula, fit_l2_copula
from .correspondence import correspondence_analysis
from .dist import ContingencyTable, empirical_dist
from .errors import DataError, NumericalError
from .io import _open_text, load_dataset, read_columns, read_table, write_csv
from .lpinfor import conditional_lpinfor, default_threads, lpinfor, permutation_pvalue
from .moments import lp_comoments, lp_moments
from .regress import conditional_mean, conditional_quantile, fit_conditional
from .sim import MID_NOISE, NOISES, PATTERNS, power_study, scenario_grid, tail_alternative_study, timing_bench
from .skew import Baseline, fit_comparison_density, gof_components, lp_skew_density

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

SCHEMA = 1
# options that only steer where output goes; not part of the echoed config
OUTPUT_KEYS = {"format", "output", "plotdata", "plot_kind", "config", "func", "threads"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


@dataclass
class Outcome:
    results: dict
    csv: tuple[list, list] | None = None
    plots: dict = field(default_factory=dict)
    default_plots: tuple = ()
    seed: int | None = None
    notes: list = field(default_factory=list)


# -- input ------------------------------------------------------------------


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def _load(args):
    """ContingencyTable or dict of numeric columns."""
    if args.dataset and args.input:
        raise UsageError("give --input or --dataset, not both")
    if args.dataset:
        data = load_dataset(args.dataset)
        if not isinstance(data, ContingencyTable):
            raise DataError(f"dataset {args.dataset!r} is a reference table, not analysable data")
        return data
    if not args.input:
        raise UsageError("no input: use --input PATH (or - for stdin) or --dataset NAME")
    try:
        text = _open_text(args.input)
    except FileNotFoundError as e:
        raise UsageError(str(e)) from None
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if len(lines) < 2:
        raise DataError("empty input")
    layout = args.layout
    if layout == "auto":
        first = lines[1].split(",")[0].strip()
        layout = "columns" if _is_number(first) else "table"
    if layout == "table":
        return read_table(io.StringIO(text))
    return read_columns(io.StringIO(text))


def _column(cols: dict, name, default_index: int) -> np.ndarray:
    names = list(cols)
    if name is None:
        if default_index >= len(names):
            raise DataError(f"input has {len(names)} column(s); need at least {default_index + 1}")
        name = names[default_index]
    if name not in cols:
        raise DataError(f"no column {name!r}; available: {', '.join(names)}")
    return cols[name]


def _univariate(args) -> np.ndarray:
    data = _load(args)
    if isinstance(data, ContingencyTable):
        raise DataError("this command needs a sample column, not a contingency table")
    x = _column(data, args.column, 0)
    if x.size == 0:
        raise DataError("empty input")
    return x


def _bivariate(args):
    """Table, or ``(x, y)`` pair of columns."""
    data = _load(args)
    if isinstance(data, ContingencyTable):
        return data
    return _column(data, args.x, 0), _column(data, args.y, 1)


def _m(value):
    if value == "full":
        return "full"
    parts = [int(v) for v in str(value).split(",")]
    if any(p < 1 for p in parts) or len(parts) > 2:
        raise UsageError(f"--m must be a positive integer, a pair 'm1,m2' or 'full'; got {value!r}")
    return parts[0] if len(parts) == 1 else tuple(parts)


def _int_m(value) -> int:
    m = _m(value)
    if not isinstance(m, int):
        raise UsageError(f"--m must be a positive integer here; got {value!r}")
    return m


def _comoments(args, data, m=None):
    m = _m(args.m) if m is None else m
    if m == "full":
        if not isinstance(data, ContingencyTable):
            raise DataError("--m full needs a contingency table")
        m = (data.shape[0] - 1, data.shape[1] - 1)
    if isinstance(data, ContingencyTable):
        return lp_comoments(data, m=m)
    return lp_comoments(data[0], data[1], m=m)


def _clip_notes(*bases) -> list[str]:
    return [
        f"{b.requested} scores requested for {b.dist.k} atoms; basis clipped to m={b.m}"
        for b in bases
        if b.clipped
    ]


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _seed(args) -> int:
    if args.seed is None:
        args.seed = int(np.random.SeedSequence().entropy % (2**63))
    return args.seed


# -- commands ---------------------------------------------------------------


def cmd_moments(args) -> Outcome:
    x = _univariate(args)
    d = empirical_dist(x)
    b = build_scores(d, _int_m(args.m))
    lm = lp_moments(d, b, m=b.m, n=x.size)
    res = {"n": int(x.size), "distinct": d.k, **lm.to_dict()}
    left, right = b.cells()
    scores = [(float(l), float(r), j + 1, float(v)) for j in range(b.m) for l, r, v in zip(left, right, b.table[j])]
    return Outcome(
        res,
        csv=(["j", "lp_moment"], [(j + 1, float(c)) for j, c in enumerate(lm.coeffs)]),
        plots={"scores": (["u_left", "u_right", "j", "value"], scores)},
        default_plots=("scores",),
        notes=_clip_notes(b),
    )


def cmd_comoments(args) -> Outcome:
    cm = _comoments(args, _bivariate(args))
    res = cm.to_dict()
    sel = cm.select(args.selection) if cm.n is not None else None
    res["rule"] = args.selection if sel is not None else None
    res["selected"] = None if sel is None else [[int(j) + 1, int(k) + 1] for j, k in zip(*np.nonzero(sel))]
    return Outcome(
        res, csv=(["j", "k", "value", "significant"], list(cm.csv_rows())), notes=_clip_notes(cm.x_basis, cm.y_basis)
    )


def _baseline(args, x) -> Baseline:
    if args.baseline == "poisson":
        return Baseline.poisson(float(np.mean(x)), upto=int(np.max(x)))
    return Baseline.fit(args.baseline, x)


def cmd_gof(args) -> Outcome:
    x = _univariate(args)
    g = _baseline(args, x)
    m = _int_m(args.m)
    cd = fit_comparison_density(x, g, m=m, rule=args.selection, form="l2")
    res = cd.to_dict()
    res["components"] = gof_components(x, g, m).tolist()
    rows = [(j + 1, float(c), int(s)) for j, (c, s) in enumerate(zip(cd.coeffs, cd.selected))]
    u = np.linspace(0.0, 1.0, 201)
    return Outcome(
        res,
        csv=(["j", "component", "selected"], rows),
        plots={"comparison": (["u", "d"], list(zip(map(float, u), map(float, cd(u)))))},
        default_plots=("comparison",),
    )


def cmd_density(args) -> Outcome:
    x = _univariate(args)
    g = _baseline(args, x)
    cd = fit_comparison_density(x, g, m=_int_m(args.m), rule=args.selection, form=args.form)
    res = cd.to_dict()
    notes = []
    if cd.form == "l2" and cd.clipped_mass > 0:
        notes.append(f"comparison density clipped at zero; renormalised by {cd.norm:.6g}")
    res["clipped_mass"] = cd.clipped_mass if cd.form == "l2" else 0.0
    if g.is_discrete:
        grid = np.unique(x) if args.grid is None else np.arange(np.min(x), np.max(x) + 1)
    else:
        lo, hi = np.min(x), np.max(x)
        pad = 0.05 * (hi - lo)
        grid = np.linspace(lo - pad, hi + pad, args.grid or 201)
        if g.kind in ("exponential", "gamma"):
            grid = grid[grid >= 0]
    base = g.pdf(grid)
    dens = lp_skew_density(cd, grid)
    u = np.linspace(0.0, 1.0, 201)
    comp = cd(u)
    return Outcome(
        res,
        csv=(["x", "baseline", "density"], list(zip(map(float, grid), map(float, base), map(float, dens)))),
        plots={
            "density": (["x", "baseline", "density"], list(zip(map(float, grid), map(float, base), map(float, dens)))),
            "comparison": (["u", "d"], list(zip(map(float, u), map(float, comp)))),
        },
        default_plots=("density", "comparison"),
        notes=notes,
    )


SLICE_U = (0.1, 0.25, 0.5, 0.75, 0.9)


def cmd_copula(args) -> Outcome:
    cm = _comoments(args, _bivariate(args))
    if args.form == "l2":
        model = fit_l2_copula(cm, args.selection)
    elif args.form == "exp":
        model = fit_exponential_copula(cm, args.selection)
    else:
        model = fit_canonical_copula(cm, rank=args.rank)
    res = model.to_dict()
    res["total_mass"] = model.total_mass()
    grid = copula_grid(model, 101)
    v = np.linspace(0.0, 1.0, 101)
    slices = []
    for u in SLICE_U:
        s = copula_slice(model, u)
        slices.extend((u, float(vv), float(d)) for vv, d in zip(v, s(v)))
    rows = [tuple(map(float, r)) for r in grid]
    return Outcome(
        res,
        csv=(["u", "v", "density"], rows),
        plots={"copula_grid": (["u", "v", "density"], rows), "slices": (["u", "v", "density"], slices)},
        default_plots=("copula_grid", "slices"),
        notes=_clip_notes(cm.x_basis, cm.y_basis),
    )


def cmd_corresp(args) -> Outcome:
    data = _bivariate(args)
    if not isinstance(data, ContingencyTable):
        raise DataError("correspondence analysis needs a contingency table")
    res = correspondence_analysis(data, rank=args.rank, variant=args.variant)
    out = res.to_dict()
    out["total_inertia"] = res.total_inertia
    rows = list(res.csv_rows())
    return Outcome(
        out,
        csv=(res.csv_header(), rows),
        plots={"coordinates": (res.csv_header(), rows)},
        default_plots=("coordinates",),
    )


def cmd_lpinfor(args) -> Outcome:
    data = _bivariate(args)
    cm = _comoments(args, data)
    seed = _seed(args) if args.perm else None
    res = lpinfor(cm, selection=args.selection, perm=args.perm, seed=seed, threads=args.threads)
    out = res.to_dict()
    entries = []
    for j, k in zip(*np.nonzero(res.selected)):
        e = {"j": int(j) + 1, "k": int(k) + 1, "value": float(cm.entries[j, k])}
        if args.perm:
            e["pvalue"], _ = permutation_pvalue(
                cm.joint, statistic=("entry", e["j"], e["k"]), B=args.perm, seed=seed, m=cm.shape, threads=args.threads
            )
        entries.append(e)
    out["significant_entries"] = entries
    plots = {}
    try:
        cond = conditional_lpinfor(cm, selection=res.selected)
        plots["conditional"] = (["u", "lpinfor"], list(zip(map(float, cond.u), map(float, cond.curve))))
        out["conditional_total"] = cond.total
    except DataError:
        pass
    return Outcome(
        out,
        csv=(["j", "k", "value", "significant"], list(cm.csv_rows())),
        plots=plots,
        default_plots=tuple(plots),
        seed=seed,
        notes=_clip_notes(cm.x_basis, cm.y_basis),
    )


def cmd_regress(args) -> Outcome:
    data = _bivariate(args)
    cm = _comoments(args, data)
    model = fit_conditional(cm, rule=args.selection, y_model=args.y_model)
    if isinstance(data, ContingencyTable) and model.marginal is None and args.y_model == "skew":
        raise DataError("a skew marginal needs a paired sample")
    levels = _floats(args.levels)
    us = np.linspace(0.05, 0.95, args.grid)
    seed = _seed(args) if args.path == "sample" else None
    xd = cm.x_basis.dist
    quant, mean_rows = [], []
    for u in us:
        x = float(xd.quantile(u))
        q = conditional_quantile(model, levels, u=u, path=args.path, seed=seed)
        quant.extend((float(u), x, v, float(qq)) for v, qq in zip(levels, q))
    for x in xd.atoms if xd.k <= 400 else xd.quantile(np.linspace(0.001, 0.999, 400)):
        mean_rows.append((float(x), float(conditional_mean(model, float(x)))))
    out = model.to_dict()
    out["path"] = args.path
    out["quantiles"] = [{"u": r[0], "x": r[1], "v": r[2], "quantile": r[3]} for r in quant]
    return Outcome(
        out,
        csv=(["u", "x", "v", "quantile"], quant),
        plots={"quantiles": (["u", "x", "v", "quantile"], quant), "mean": (["x", "mean"], mean_rows)},
        default_plots=("quantiles", "mean"),
        seed=seed,
        notes=_clip_notes(cm.x_basis, cm.y_basis),
    )


def _noise_levels(noises, k: int) -> dict:
    if k <= 0:
        return {e: (MID_NOISE[e],) for e in noises}
    return {e: tuple(np.linspace(*NOISES[e], k)) for e in noises}


def cmd_power_sim(args) -> Outcome:
    seed = _seed(args)
    if args.study == "tail":
        rows = tail_alternative_study(
            pis=tuple(_floats(args.pis)), mus=tuple(_floats(args.mus)), n=args.n or 1000, B=args.B1, B0=args.B0, seed=seed
        )
        table = [(r["mu"], r["pi"], r["power"]) for r in rows]
        return Outcome(
            {"study": "tail", "rows": rows},
            csv=(["mu", "pi", "power"], table),
            plots={"power": (["mu", "pi", "power"], table)},
            default_plots=("power",),
            seed=seed,
        )
    patterns = [p.strip() for p in args.patterns.split(",")]
    noises = [e.strip() for e in args.noises.split(",")]
    for e in noises:
        if e not in NOISES:
            raise DataError(f"unknown noise regime {e!r}")
    grid = scenario_grid(patterns, noises, _noise_levels(noises, args.levels), n=args.n or 300, null=args.null)
    methods = [s.strip() for s in args.methods.split(",")]
    res = power_study(grid, methods, B0=args.B0, B1=args.B1, seed=seed, threads=args.threads)
    rows = [r.row() for r in res]
    table = [(r["noise_level"], r["method"], r["power"], r["pattern"], r["noise"]) for r in rows]
    header = ["noise_level", "method", "power", "pattern", "noise"]
    return Outcome(
        {"study": "dependence", "rows": rows},
        csv=(header, table),
        plots={"power": (header, table)},
        default_plots=("power",),
        seed=seed,
    )


def cmd_bench(args) -> Outcome:
    ns = [int(v) for v in _floats(args.ns)]
    rows = timing_bench(ns, repeats=args.repeats, seed=_seed(args))
    table = [(r["n"], r["mean"], r["sd"], r["median"], r["ratio"]) for r in rows]
    header = ["n", "mean", "sd", "median", "ratio"]
    return Outcome(
        {"rows": rows},
        csv=(header, table),
        plots={"timing": (header, table)},
        default_plots=("timing",),
        seed=args.seed,
    )


def cmd_verify(args) -> Outcome:
    try:
        env = json.loads(_open_text(args.result))
    except FileNotFoundError as e:
        raise UsageError(str(e)) from None
    except json.JSONDecodeError as e:
        raise DataError(f"not a JSON result: {e}") from None
    if env.get("schema") != SCHEMA or "command" not in env:
        raise DataError("not an lpstat result envelope")
    if env["command"] == "verify":
        raise DataError("cannot verify a verify result")
    parser = build_parser()
    ns = parser.parse_args([env["command"]])
    for k, v in env["config"].items():
        if k in OUTPUT_KEYS or k == "command":
            continue
        setattr(ns, k, tuple(v) if isinstance(v, list) else v)
    out = ns.func(ns)
    fresh = json.loads(json.dumps(_clean(out.results)))
    same = fresh == env["results"]
    if not same:
        raise NumericalError(f"results of {args.result} are not reproduced")
    return Outcome({"verified": True, "command": env["command"]})


COMMANDS = {
    "moments": (cmd_moments, "LP moments of one sample"),
    "comoments": (cmd_comoments, "LP comoment matrix of a pair or table"),
    "gof": (cmd_gof, "LP goodness-of-fit components against a fitted baseline"),
    "density": (cmd_density, "LP skew density estimate"),
    "copula": (cmd_copula, "LP copula density"),
    "corresp": (cmd_corresp, "LP correspondence analysis of a table"),
    "lpinfor": (cmd_lpinfor, "LPINFOR dependence measure"),
    "regress": (cmd_regress, "copula-based conditional mean and quantiles"),
    "power-sim": (cmd_power_sim, "dependence or tail-alternative power study"),
    "bench": (cmd_bench, "LPINFOR timing benchmark"),
    "verify": (cmd_verify, "re-run a JSON result and check it is reproduced"),
}

PLOT_KINDS = ("scores", "density", "comparison", "copula_grid", "slices", "coordinates", "conditional", "quantiles", "mean", "power", "timing")


DATA_DEFAULTS = {
    "gof": {"selection": "aic"},
    "density": {"selection": "aic"},
    "corresp": {"m": "full"},
}


def _data_options(sp, defaults: dict):
    # added per subcommand: argparse parents share action objects, so
    # per-command defaults on a shared parent would leak between commands
    sp.add_argument("--input", "-i", help="CSV path, or - for stdin")
    sp.add_argument("--dataset", help="bundled dataset name (fisher, fisher_probs, wais)")
    sp.add_argument("--layout", choices=("auto", "table", "columns"), default="auto")
    sp.add_argument("--column", help="sample column (default: first)")
    sp.add_argument("--x", help="x column (default: first)")
    sp.add_argument("--y", help="y column (default: second)")
    sp.add_argument("--m", default=defaults.get("m", "4"), help="scores per margin: m, 'm1,m2' or 'full'")
    sp.add_argument(
        "--selection", choices=("threshold", "aic", "bic", "all"), default=defaults.get("selection", "threshold")
    )


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output", "-o", help="write the result here instead of stdout")
    common.add_argument("--plotdata", metavar="DIR", help="write tidy CSV plot data into DIR")
    common.add_argument("--plot-kind", choices=PLOT_KINDS, help="emit only this plot data kind")
    common.add_argument("--config", help="TOML file of option defaults")
    common.add_argument("--threads", type=int, default=None, help="worker threads (default LPSTAT_THREADS or 1)")

    p = _Parser(prog="lpstat", description="LP nonparametric modelling toolkit")
    p.add_argument("--version", action="version", version=f"lpstat {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    parsers = {}
    for name, (func, help_) in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=help_, description=help_)
        sp.set_defaults(func=func)
        if name not in ("power-sim", "bench", "verify"):
            _data_options(sp, DATA_DEFAULTS.get(name, {}))
        parsers[name] = sp
    for name in ("gof", "density"):
        sp = parsers[name]
        sp.add_argument("--baseline", choices=("normal", "exponential", "gamma", "poisson"), default="normal")
        sp.add_argument("--grid", type=int, default=None, help="number of density grid points")
    parsers["density"].add_argument("--form", choices=("l2", "exp"), default="l2")
    parsers["copula"].add_argument("--form", choices=("l2", "exp", "canonical"), default="l2")
    parsers["copula"].add_argument("--rank", type=int, default=None)
    parsers["corresp"].add_argument("--rank", type=int, default=2)
    parsers["corresp"].add_argument("--variant", choices=("ca", "goodman"), default="ca")
    parsers["lpinfor"].add_argument("--perm", type=int, default=None, help="permutations for a p-value")
    parsers["lpinfor"].add_argument("--seed", type=int, default=None)
    rg = parsers["regress"]
    rg.add_argument("--levels", default="0.1,0.25,0.5,0.75,0.9")
    rg.add_argument("--grid", type=int, default=19, help="number of conditioning ranks u")
    rg.add_argument("--path", choices=("invert", "sample"), default="invert")
    rg.add_argument("--y-model", choices=("auto", "discrete", "skew"), default="auto")
    rg.add_argument("--seed", type=int, default=None)
    ps = parsers["power-sim"]
    ps.add_argument("--study", choices=("dependence", "tail"), default="dependence")
    ps.add_argument("--patterns", default=",".join(PATTERNS))
    ps.add_argument("--noises", default=",".join(NOISES))
    ps.add_argument("--levels", type=int, default=0, help="noise levels per regime (0: mid-noise only)")
    ps.add_argument("--methods", default="lpinfor,pearson,spearman")
    ps.add_argument("--null", action="store_true", help="shuffle y: calibration run")
    ps.add_argument("--n", type=int, default=None, help="sample size (300 dependence, 1000 tail)")
    ps.add_argument("--B0", type=int, default=250)
    ps.add_argument("--B1", type=int, default=200)
    ps.add_argument("--pis", default="0.01,0.02,0.05,0.09")
    ps.add_argument("--mus", default="0,0.5,1,1.5,2,2.5,3,3.5")
    ps.add_argument("--seed", type=int, default=0)
    bn = parsers["bench"]
    bn.add_argument("--ns", default="100,500,1000,2500,5000,10000")
    bn.add_argument("--repeats", type=int, default=20)
    bn.add_argument("--seed", type=int, default=0)
    parsers["verify"].add_argument("result", help="JSON result file written by lpstat")
    p._subparsers_by_name = parsers
    return p


def _apply_config(parser, argv, args):
    """Re-parse with TOML values as defaults; flags given on the command line win."""
    try:
        with open(args.config, "rb") as fh:
            conf = tomllib.load(fh)
    except FileNotFoundError:
        raise UsageError(f"no such config file: {args.config}") from None
    except tomllib.TOMLDecodeError as e:
        raise UsageError(f"bad config file: {e}") from None
    section = conf.get(args.command, {})
    values = {k: v for k, v in conf.items() if not isinstance(v, dict)}
    values.update(section)
    sp = parser._subparsers_by_name[args.command]
    known = {a.dest for a in sp._actions}
    defaults = {}
    for k, v in values.items():
        dest = k.replace("-", "_")
        if dest not in known:
            raise UsageError(f"unknown config key {k!r} for {args.command}")
        defaults[dest] = ",".join(map(str, v)) if isinstance(v, list) else v
    sp.set_defaults(**defaults)
    return parser.parse_args(argv)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _config_echo(args) -> dict:
    return _clean({k: v for k, v in vars(args).items() if k not in OUTPUT_KEYS})


def _emit_plots(args, out: Outcome):
    if args.plot_kind and not args.plotdata:
        raise UsageError("--plot-kind needs --plotdata DIR")
    if not args.plotdata:
        return []
    if args.plot_kind:
        if args.plot_kind not in out.plots:
            have = ", ".join(out.plots) or "none"
            raise UsageError(f"plot kind {args.plot_kind!r} not available for {args.command} (available: {have})")
        kinds = (args.plot_kind,)
    else:
        kinds = out.default_plots
        if not kinds:
            raise UsageError(f"{args.command} has no plot data")
    d = Path(args.plotdata)
    d.mkdir(parents=True, exist_ok=True)
    written = []
    for k in kinds:
        header, rows = out.plots[k]
        path = d / f"{k}.csv"
        write_csv(rows, header, path)
        written.append(str(path))
    return written


def run(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            args = _apply_config(parser, argv, args)
        if args.threads is None:
            args.threads = default_threads()
        elif args.threads < 1:
            raise UsageError("--threads must be at least 1")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            out = args.func(args)
        msgs = [str(w.message) for w in caught] + out.notes
        files = _emit_plots(args, out)
        if args.format == "csv":
            if out.csv is None:
                raise UsageError(f"{args.command} has no CSV form; use --format json")
            text = write_csv(out.csv[1], out.csv[0])
        else:
            env = {
                "schema": SCHEMA,
                "tool": "lpstat",
                "version": __version__,
                "command": args.command,
                "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
                "config": _config_echo(args),
                "seed": out.seed,
                "warnings": msgs,
                "plotdata": files,
                "results": _clean(out.results),
            }
            text = json.dumps(env, indent=2, allow_nan=True) + "\n"
        if args.output:
            Path(args.output).write_text(text)
        else:
            sys.stdout.write(text)
        if args.format == "csv":
            for m in msgs:
                print(f"warning: {m}", file=sys.stderr)
        return 0
    except UsageError as e:
        print(f"lpstat {args.command}: {e}", file=sys.stderr)
        return 1
    except DataError as e:
        print(f"lpstat {args.command}: data error: {e}", file=sys.stderr)
        return 2
    except NumericalError as e:
        print(f"lpstat {args.command}: numerical failure: {e}", file=sys.stderr)
        return 3


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
