"""Command-line interface.

Every command prints one JSON document ``{command, config, result, warnings,
timing_ms}`` (or CSV with ``--csv``). Exit status is 0 on success, 1 on data
or numerical errors and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
import warnings as _warnings

import numpy as np

from .binning import BinningSpec, bin_count_rule, discretize
from .errors import MITestError
from .inference import METHODS, STATISTICS, default_method, independence_test
from .nulldist import MC_DRAWS, null_weights
from .sim import (SimConfig, estimate_size_power, ks_distance, mi_curve_2x2, mi_surface_2x2,
                  parse_distribution, replicate_statistics, verify_t2_chi2_identity)
from .table import ProbTable, crosstab, empirical, product_of_marginals, read_counts_csv, read_pairs_csv

SIG_DIGITS = 12


class UsageError(Exception):
    pass


def _clean(obj):
    """Round floats to 12 significant digits; non-finite floats become null."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        return float(f"{x:.{SIG_DIGITS}g}")
    return obj


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.{SIG_DIGITS}g}"
    return str(x)


# -- argument parsing ---------------------------------------------------------

def _add_output(p):
    p.add_argument("--out", help="write output to this path instead of stdout")
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="output", action="store_const", const="json", default="json")
    fmt.add_argument("--csv", dest="output", action="store_const", const="csv")
    p.add_argument("--timing", action="store_true", help="report wall time in timing_ms")
    p.add_argument("--seed", type=int, help="random seed (required for Monte Carlo work)")


def _add_input(p):
    p.add_argument("--input", required=True, help="CSV file")
    p.add_argument("--format", choices=("counts", "pairs"), default="counts")
    p.add_argument("--rule", default="rice", help="sqrt, rice or fixed:KX:KY (pairs input)")
    p.add_argument("--strategy", choices=("width", "freq"), default="freq")


def _add_sim(p, stat_default):
    p.add_argument("--dist-x", default="uniform:5", help="uniform:K, binom:M:Q or categorical:P1,...")
    p.add_argument("--dist-y", default="uniform:5")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--stat", choices=STATISTICS, default=stat_default)
    p.add_argument("--coupling", default="independent", help="independent or checkerboard:STRENGTH")
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mitest", description="Mutual-information independence tests.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="test independence on a table or paired sample")
    _add_input(p)
    p.add_argument("--stat", choices=STATISTICS, default="t2")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--pvalue", choices=METHODS, help="default: classical for t2/pearson, series for t1/g2")
    p.add_argument("--mc-draws", type=int, default=MC_DRAWS)
    _add_output(p)

    p = sub.add_parser("weights", help="null weights at the product of the sample marginals")
    _add_input(p)
    _add_output(p)

    p = sub.add_parser("simulate", help="replicate statistics under a simulated setting")
    _add_sim(p, "t1")
    _add_output(p)

    p = sub.add_parser("power", help="rejection rate of a test under a simulated setting")
    _add_sim(p, "t2")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--pvalue", choices=METHODS)
    _add_output(p)

    p = sub.add_parser("bin", help="discretize a pairs CSV into a count table")
    p.add_argument("--input", required=True)
    p.add_argument("--rule", default="rice")
    p.add_argument("--strategy", choices=("width", "freq"), default="freq")
    _add_output(p)

    p = sub.add_parser("verify-conjecture", help="max relative gap between T2 and Pearson chi-square")
    p.add_argument("--dims", default="3x4", help="IxJ, e.g. 3x4")
    p.add_argument("--trials", type=int, default=100)
    _add_output(p)

    p = sub.add_parser("curve", help="MI along the 2x2 family p12 = p21 = 1/4")
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--surface", type=int, metavar="RES", help="also emit the 3-parameter surface")
    _add_output(p)
    return parser


# -- commands -------------------------------------------------------------------

def _load_table(args, notes):
    if args.format == "counts":
        return read_counts_csv(args.input)
    xs, ys, numeric = read_pairs_csv(args.input)
    if not numeric:
        return crosstab(xs, ys)
    table, msgs = discretize(np.column_stack([xs, ys]), BinningSpec.parse(args.rule, args.strategy),
                             return_notes=True)
    notes.extend(msgs)
    return table


def _table_summary(t):
    return {"dims": list(t.shape), "n": t.n, "pruned_rows": list(t.pruned_rows),
            "pruned_cols": list(t.pruned_cols)}


def _cmd_test(args, notes):
    method = args.pvalue or default_method(args.stat)
    if method == "mc" and args.seed is None:
        raise UsageError("--pvalue mc requires --seed")
    if not 0 < args.alpha < 1:
        raise UsageError("--alpha must lie in (0, 1)")
    args.pvalue = method
    t = _load_table(args, notes)
    res = independence_test(t, args.stat, args.alpha, method, args.seed, args.mc_draws)
    notes.extend(res.warnings)
    out = res.to_dict()
    out.pop("warnings")
    out["table"] = _table_summary(t)
    rows = [(k, out[k]) for k in ("statistic_name", "value", "p_value", "alpha", "reject", "method",
                                  "n", "dof")]
    return out, [("field", "value"), *rows]


def _cmd_weights(args, notes):
    t = _load_table(args, notes)
    w = null_weights(product_of_marginals(empirical(t)))
    out = {"weights": w.lambdas.tolist(), "sum": w.mean, "trace": w.trace,
           "unit_dof": w.unit_dof(), "table": _table_summary(t)}
    return out, [("index", "lambda"), *enumerate(w.lambdas.tolist())]


def _sim_config(args) -> SimConfig:
    if args.seed is None:
        raise UsageError(f"{args.command} requires --seed")
    coupling, strength = args.coupling, 0.0
    if coupling.startswith("checkerboard"):
        _, _, s = coupling.partition(":")
        try:
            strength = float(s) if s else 1.0
        except ValueError:
            raise UsageError(f"bad --coupling {args.coupling!r}; use checkerboard:STRENGTH") from None
        coupling = "checkerboard"
    elif coupling != "independent":
        raise UsageError(f"bad --coupling {args.coupling!r}")
    try:
        dx, dy = parse_distribution(args.dist_x), parse_distribution(args.dist_y)
    except MITestError as exc:
        raise UsageError(str(exc)) from None
    return SimConfig(dx, dy, args.n, args.reps, args.stat, args.seed, coupling, strength)


def _cmd_simulate(args, notes):
    cfg = _sim_config(args)
    values, redraws = replicate_statistics(cfg, args.workers, return_redraws=True)
    if redraws:
        notes.append(f"{redraws} samples redrawn because a category went unobserved")
    out = {"values": values.tolist(), "mean": float(values.mean()), "variance": float(values.var(ddof=1))
           if values.size > 1 else None}
    k = bin_count_rule(values.size, "rice") if values.size >= 4 else 2
    counts, edges = np.histogram(values, bins=k)
    out["histogram"] = {"edges": edges.tolist(), "counts": counts.tolist()}
    pmf = cfg.joint_pmf()
    if cfg.coupling == "independent" and values.size >= 100:
        w = null_weights(ProbTable(pmf))
        out["null_weights"] = w.lambdas.tolist()
        out["ks_distance"] = ks_distance(values, w, args.seed)
    return out, [("rep", "value"), *enumerate(values.tolist())]


def _cmd_power(args, notes):
    cfg = _sim_config(args)
    if not 0 < args.alpha <= 1:
        raise UsageError("--alpha must lie in (0, 1]")
    args.pvalue = args.pvalue or default_method(args.stat)
    rate = estimate_size_power(cfg, args.alpha, args.pvalue, args.workers)
    out = {"rejection_rate": rate, "reps": cfg.reps}
    return out, [("rejection_rate", "reps"), (rate, cfg.reps)]


def _cmd_bin(args, notes):
    xs, ys, numeric = read_pairs_csv(args.input)
    if not numeric:
        raise MITestError(f"{args.input}: bin needs numeric pairs")
    table, msgs = discretize(np.column_stack([xs, ys]), BinningSpec.parse(args.rule, args.strategy),
                             return_notes=True)
    notes.extend(msgs)
    counts = table.counts.tolist()
    return {"counts": counts, **_table_summary(table)}, [tuple(r) for r in counts]


def _cmd_verify(args, notes):
    try:
        dims = tuple(int(v) for v in args.dims.lower().replace(",", "x").split("x"))
    except ValueError:
        dims = ()
    if len(dims) != 2 or min(dims) < 2:
        raise UsageError(f"bad --dims {args.dims!r}; use IxJ with I, J >= 2")
    if args.seed is None:
        raise UsageError("verify-conjecture requires --seed")
    gap = verify_t2_chi2_identity(dims, args.trials, args.seed)
    out = {"max_rel_diff": gap, "dims": list(dims), "trials": args.trials}
    return out, [("max_rel_diff", "trials"), (gap, args.trials)]


def _cmd_curve(args, notes):
    if args.points < 2:
        raise UsageError("--points must be at least 2")
    pts = mi_curve_2x2(np.linspace(0.0, 0.5, args.points))
    out = {"curve": pts.tolist()}
    if args.surface:
        out["surface"] = mi_surface_2x2(args.surface).tolist()
    return out, [("p11", "mi"), *map(tuple, pts.tolist())]


COMMANDS = {"test": _cmd_test, "weights": _cmd_weights, "simulate": _cmd_simulate, "power": _cmd_power,
            "bin": _cmd_bin, "verify-conjecture": _cmd_verify, "curve": _cmd_curve}


def run(argv=None) -> tuple[int, str]:
    """Execute one command; returns ``(exit_code, text)`` without printing.

    On failure ``text`` is the one-line error message.
    """
    parser = build_parser()
    err = io.StringIO()
    try:
        # argparse reports usage errors on stderr and exits with status 2
        sys_stderr, sys.stderr = sys.stderr, err
        try:
            args = parser.parse_args(argv)
        finally:
            sys.stderr = sys_stderr
    except SystemExit as exc:
        return int(exc.code or 0), err.getvalue().strip()
    notes: list[str] = []
    start = time.perf_counter()
    try:
        with _warnings.catch_warnings():
            _warnings.simplefilter("ignore")
            result, rows = COMMANDS[args.command](args, notes)
    except UsageError as exc:
        return 2, f"mitest {args.command}: error: {exc}"
    except MITestError as exc:
        return 1, f"mitest {args.command}: error: {exc}"
    elapsed = (time.perf_counter() - start) * 1000.0
    if args.output == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
        return 0, buf.getvalue()
    config = {k: v for k, v in vars(args).items() if k not in ("output", "out", "timing")}
    doc = {"command": args.command, "config": config, "result": result, "warnings": notes,
           "timing_ms": elapsed if args.timing else None}
    return 0, json.dumps(_clean(doc), indent=2) + "\n"


def main(argv=None) -> int:
    code, text = run(argv)
    if code != 0:
        print(text, file=sys.stderr)
        return code
    out = _out_path(argv)
    if out:
        try:
            with open(out, "w") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"mitest: error: cannot write {out}: {exc.strerror}", file=sys.stderr)
            return 1
    else:
        sys.stdout.write(text)
    return 0


def _out_path(argv):
    args, _ = build_parser().parse_known_args(argv)
    return getattr(args, "out", None)


if __name__ == "__main__":
    sys.exit(main())
