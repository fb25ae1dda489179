"""Command-line driver: zeros, slopes, model, variance, fit, gue."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from contextlib import contextmanager
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import gue, stats
from .errors import EulerZerosError
from .zerolab import MATCH_FIELDS, ZeroSearchConfig, load_zero_table, match_run
from .zetax import XMode

log = logging.getLogger("eulerzeros")

TWO_PI = 2.0 * math.pi


def packaged_zeros():
    return str(resources.files("eulerzeros") / "data" / "zeros_10000.txt")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    zeros_path: str
    x_mode: XMode | None
    range: tuple[int, int] | None
    window: int | None
    out_path: str | None
    seed: int
    chi_method: str


def _index_range(text):
    try:
        a, b = (int(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A:B with integers, got {text!r}")
    if a < 1 or b < a:
        raise argparse.ArgumentTypeError(f"range must satisfy 1 <= A <= B, got {text!r}")
    return a, b


def _x_mode(text):
    try:
        return XMode.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


@contextmanager
def _sink(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _sibling(path, suffix):
    root, _ = os.path.splitext(path)
    return root + suffix


def _say(cfg, text):
    # summaries share stdout only when the data went to a file
    print(text, file=sys.stdout if cfg.out_path else sys.stderr)


def _table(cfg):
    if not os.path.isfile(cfg.zeros_path):
        raise UsageError(f"zeros file not found: {cfg.zeros_path}")
    return load_zero_table(cfg.zeros_path)


def _search_cfg(cfg):
    return ZeroSearchConfig(chi_method=cfg.chi_method)


def _matches(cfg, table):
    a, b = cfg.range
    if b > table.last_index - 1:
        raise UsageError(f"range end {b} needs zero #{b + 1}; table stops at #{table.last_index}")
    run = match_run(range(a, b + 1), table, cfg.x_mode, _search_cfg(cfg))
    for n, why in run.failures:
        log.warning("zero #%d: %s", n, why)
    return run


def cmd_zeros(cfg: RunConfig, args) -> int:
    table = _table(cfg)
    run = _matches(cfg, table)
    with _sink(cfg.out_path) as fh:
        w = csv.writer(fh)
        w.writerow(MATCH_FIELDS)
        for m in run.matches:
            w.writerow(m.row())
    d = np.abs([m.delta for m in run.matches])
    _say(cfg, f"matched={len(run.matches)} failed={len(run.failures)} "
              f"mean_abs_delta={float(d.mean()) if d.size else float('nan')!r} "
              f"flagged={sum(1 for m in run.matches if m.flag)}")
    return 0


def _slopes(cfg, table, matches):
    return stats.estimate_slopes([m.n for m in matches], table, cfg.x_mode, cfg=_search_cfg(cfg))


def cmd_slopes(cfg: RunConfig, args) -> int:
    table = _table(cfg)
    clean = _matches(cfg, table).clean()
    slopes = _slopes(cfg, table, clean)
    with _sink(cfg.out_path) as fh:
        w = csv.writer(fh)
        w.writerow(["n", "gamma", "slope", "r2"])
        for s in slopes:
            w.writerow([s.n, repr(s.gamma), repr(s.slope), repr(s.r2)])
    if args.fit == "affine":
        g = np.array([s.gamma for s in slopes])
        fit = stats.fit_family(np.log(g / TWO_PI), [s.slope for s in slopes], "pow", fixed_exponent=1.0,
                               offset=True)
        record = fit.to_json()
        if cfg.out_path:
            with open(_sibling(cfg.out_path, ".fit.json"), "w") as fh:
                fh.write(record + "\n")
        _say(cfg, f"slope ~ {fit.offset!r} + {fit.coefficient!r} log(t/2pi)  r2={fit.r2!r} "
                  f"r2_uncentered={fit.r2_uncentered!r}")
    return 0


def cmd_model(cfg: RunConfig, args) -> int:
    table = _table(cfg)
    k = args.pairs
    a, b = cfg.range
    if b + k > table.last_index:
        raise UsageError(f"range end {b} with {k} pairs needs zero #{b + k}")
    matches = [m for m in _matches(cfg, table).matches if m.n > k]
    slopes = _slopes(cfg, table, matches)
    diffs = stats.scaled_differences(matches, slopes)
    models = stats.neighbor_models([m.n for m in matches], k, table, cfg.x_mode)
    with _sink(cfg.out_path) as fh:
        w = csv.writer(fh)
        w.writerow(["n", "k", "value"])
        for m in models:
            w.writerow([m.n, m.pairs, repr(m.value)])
    if cfg.out_path:
        with open(_sibling(cfg.out_path, ".scaled.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "d", "flagged"])
            for d in diffs:
                w.writerow([d.n, repr(d.value), int(d.flagged)])
    acc = stats.model_accuracy(diffs, models, a, b, threshold=0.2)
    _say(cfg, f"pairs={k} accuracy_pct={acc!r} threshold=0.2 samples={len(models)}")
    return 0


def cmd_variance(cfg: RunConfig, args) -> int:
    table = _table(cfg)
    window = cfg.window or (100 if cfg.x_mode.kind == "fixed" else 200)
    a, b = cfg.range
    if window > b - a + 1:
        log.warning("window %d exceeds the %d-zero range; every point is partial", window, b - a + 1)
    series = stats.moving_variance(_matches(cfg, table).matches, window, cfg.x_mode)
    with _sink(cfg.out_path) as fh:
        w = csv.writer(fh)
        w.writerow(["n", "gamma", "vbar", "partial"])
        for n, g, v, p in zip(series.n.tolist(), series.gamma.tolist(), series.vbar.tolist(),
                              series.partial.tolist()):
            w.writerow([n, repr(g), repr(v), int(p)])
    t, v = series.full()
    if t.size >= 2:
        slope, level = np.polyfit(t, v, 1)
        _say(cfg, f"window={window} points={series.n.size} line_level={float(level)!r} "
                  f"line_slope={float(slope)!r} mean={float(v.mean())!r}")
    return 0


def cmd_fit(cfg: RunConfig, args) -> int:
    table = _table(cfg)
    a, b = cfg.range
    short = args.short or (a, a + max(9, (b - a + 1) // 20) - 1)
    lo, hi = args.x_grid
    series = {}
    for x in range(lo, hi + 1):
        c = RunConfig(cfg.command, cfg.zeros_path, XMode.fixed(x), cfg.range, cfg.window, None, cfg.seed,
                      cfg.chi_method)
        series[float(x)] = stats.moving_variance(_matches(c, table).matches, cfg.window or 100, c.x_mode)
    sep = stats.fit_separable(series, args.family, short, cfg.range, probe_x=float(args.probe))
    record = {
        "family": sep.a_fit.family,
        "b_family": sep.b_family,
        "k_star": sep.k_star,
        "exponents": sep.a_fit.exponents,
        "coefficient": sep.a_fit.coefficient,
        "offset": sep.a_fit.offset,
        "r2": sep.a_fit.r2,
        "range": [a, b],
        "short_range": list(short),
        "a_table": {repr(k): v for k, v in sep.a_table.items()},
    }
    text = json.dumps(record, sort_keys=True)
    with _sink(cfg.out_path) as fh:
        fh.write(text + "\n")
    _say(cfg, f"family={args.family} k_star={sep.k_star!r} A_exponent={sep.a_fit.exponents[0]!r} "
              f"A_coefficient={sep.a_fit.coefficient!r}")
    return 0


def cmd_gue(cfg: RunConfig, args) -> int:
    samples = gue.sample_gue3(args.samples, cfg.seed)
    c = gue.normalizing_constant()
    check = gue.density_check(samples, c=c)
    deriv = gue.verify_derivation(seed=cfg.seed)
    if cfg.out_path:
        samples.write_csv(cfg.out_path)
    report = check.report() + f"\nderivation_constant={deriv.constant!r}\nderivation_spread={deriv.spread!r}\n"
    if cfg.out_path:
        with open(_sibling(cfg.out_path, ".report.txt"), "w") as fh:
            fh.write(report)
    sys.stdout.write(report)
    return 0


COMMANDS = {"zeros": cmd_zeros, "slopes": cmd_slopes, "model": cmd_model, "variance": cmd_variance,
            "fit": cmd_fit, "gue": cmd_gue}


def build_parser():
    p = argparse.ArgumentParser(prog="eulerzeros", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    p.subparsers = sub.choices

    def common(sp, x_default, range_default, zeros=True):
        if zeros:
            sp.add_argument("--zeros-file", default=None, metavar="PATH",
                            help="zero table (one ordinate per line, optionally 'n value'); default: bundled 10^4 zeros")
            sp.add_argument("--x", type=_x_mode, default=XMode.parse(x_default), metavar="fixed:<value>|vary",
                            help=f"truncation mode (default {x_default})")
            sp.add_argument("--range", type=_index_range, default=range_default, metavar="A:B",
                            help=f"zero index range, inclusive (default {range_default[0]}:{range_default[1]})")
            sp.add_argument("--chi", choices=["exact", "stirling", "auto"], default="auto",
                            help="arg chi evaluation; auto switches to stirling above t = 500")
        sp.add_argument("--out", metavar="PATH", default=None, help="output file (default stdout)")
        sp.add_argument("--seed", type=int, default=0, help="random seed")

    sp = sub.add_parser("zeros", help="match approximate zeros to table zeros")
    common(sp, "fixed:5", (1, 700))

    sp = sub.add_parser("slopes", help="slopes of the phase near each zero")
    common(sp, "vary", (1, 600))
    sp.add_argument("--fit", choices=["affine", "none"], default="affine",
                    help="fit slope = a + b log(t/2pi) (written to <out>.fit.json)")

    sp = sub.add_parser("model", help="neighbour models and their accuracy")
    common(sp, "vary", (1, 600))
    sp.add_argument("--pairs", type=int, default=1, metavar="K", help="neighbour pairs (>= 1)")

    sp = sub.add_parser("variance", help="moving mean of density-scaled squared differences")
    common(sp, "vary", (1, 5000))
    sp.add_argument("--window", type=_positive, default=None, metavar="N",
                    help="window size (default 100 fixed, 200 varying)")

    sp = sub.add_parser("fit", help="separable A(X) B(t)^k fit over a grid of fixed X")
    common(sp, "fixed:20", (1, 5000))
    sp.add_argument("--family", choices=list(stats.FAMILIES), default="logpow",
                    help="B(t) family (powlog has two exponents and is rejected here)")
    sp.add_argument("--window", type=_positive, default=None, metavar="N", help="variance window (default 100)")
    sp.add_argument("--x-grid", type=_index_range, default=(3, 27), metavar="LO:HI", help="integer X values")
    sp.add_argument("--probe", type=int, default=20, metavar="X", help="X used to choose k")
    sp.add_argument("--short", type=_index_range, default=None, metavar="A:B",
                    help="short range (default: first 1/20 of --range)")

    sp = sub.add_parser("gue", help="3x3 GUE spacing samples and density check")
    common(sp, None, None, zeros=False)
    sp.add_argument("--samples", type=int, default=10 ** 6, metavar="N", help="matrices to sample")
    return p


def _config(args):
    return RunConfig(args.command, getattr(args, "zeros_file", None) or packaged_zeros(), getattr(args, "x", None),
                     getattr(args, "range", None), getattr(args, "window", None), args.out, args.seed,
                     getattr(args, "chi", "auto"))


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = parser.subparsers[args.command]
    if args.command == "model" and args.pairs < 1:
        sub.error("--pairs must be >= 1")
    if args.command == "gue" and args.samples < 1:
        sub.error("--samples must be >= 1")
    if args.command == "fit":
        if args.family == "powlog":
            sub.error("--family powlog has two exponents; the separable fit scans one (use logpow, lambertw or pow)")
        if args.probe not in range(args.x_grid[0], args.x_grid[1] + 1):
            sub.error("--probe must lie in --x-grid")
    cfg = _config(args)
    try:
        return COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        print(f"eulerzeros {args.command}: {exc}", file=sys.stderr)
        return 2
    except (EulerZerosError, ArithmeticError, ValueError, OSError) as exc:
        print(f"eulerzeros {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
