"""Command-line interface.

Every command reads and writes files only. On failure a single JSON error
line goes to stderr and the exit status is 1.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import __version__
from .bootstrap import parametric_bootstrap
from .errors import MCGError
from .experiments import DEFAULT_SEED_COUNT, RUNNERS, MCDesign
from .inference import FitResult, confidence_intervals, fit
from .io import (
    fmt_float,
    read_cells,
    read_counts,
    read_json,
    read_mask,
    read_params,
    tile_cells,
    write_counts,
    write_json,
)
from .lattice import build_grid
from .predict import forecast_qq, replicate_fit
from .selection import select
from .simulate import SimConfig, simulate


def _fit_document(res: FitResult, n: int, level: float) -> dict:
    doc = {"version": __version__, "n": n}
    doc.update(res.to_dict())
    ci = confidence_intervals(res, level)
    doc["ci"] = {"level": level, "method": "sandwich", "intervals": ci.tolist()}
    return doc


def _parse_bounds(text):
    if text is None:
        return None
    vals = [float(v) for v in text.split(",")]
    if len(vals) != 4:
        raise argparse.ArgumentTypeError("bounds must be x_min,x_max,y_min,y_max")
    return tuple(vals)


def _parse_times(text):
    return [int(v) for v in text.split(",") if v.strip()]


def cmd_tile(args):
    cells = read_cells(args.cells, args.bounds)
    y = tile_cells(cells, args.n)
    write_counts(args.out, y, args.n)


def cmd_simulate(args):
    params, colors = read_params(args.params)
    geom = build_grid(args.n)
    init = None
    if args.init:
        y0, n0 = read_counts(args.init)
        if n0 != args.n:
            raise MCGError(f"initial slice grid side {n0} differs from --n {args.n}")
        init = y0.counts[0]
        colors = colors or y0.colors
    cfg = SimConfig(params, geom, args.T, args.seed_count, args.rng, init)
    write_counts(args.out, simulate(cfg, colors), args.n)


def cmd_fit(args):
    y, n = read_counts(args.counts)
    mask = read_mask(args.mask) if args.mask else None
    res = fit(y, build_grid(n), mask)
    write_json(args.out, _fit_document(res, n, args.ci))


def cmd_select(args):
    y, n = read_counts(args.counts)
    sel, res = select(y, build_grid(n), args.criterion)
    doc = _fit_document(res, n, args.ci)
    doc["selection"] = sel.to_dict()
    write_json(args.out, doc)


def cmd_bootstrap(args):
    y, n = read_counts(args.counts)
    res = FitResult.from_dict(read_json(args.fit))
    boot = parametric_bootstrap(res, y.counts[0], build_grid(n), args.B, args.rng)
    doc = {"version": __version__, "n": n}
    doc.update(boot.to_dict())
    ci = confidence_intervals(res, args.ci, se=boot.se_boot)
    doc["ci"] = {"level": args.ci, "method": "bootstrap", "intervals": ci.tolist()}
    write_json(args.out, doc)


def cmd_predict(args):
    y, n = read_counts(args.counts)
    rows = forecast_qq(y, build_grid(n), args.t, args.window, args.qq_offset, args.rng)
    lines = ["t,color,prob,observed_q,predicted_q,lo,hi,covered"]
    for t, c, band in rows:
        for k in range(band.probs.size):
            lines.append(
                ",".join(
                    [str(t), y.colors[c]]
                    + [fmt_float(a[k]) for a in (band.probs, band.observed_q, band.predicted_q, band.lo, band.hi)]
                    + [str(int(band.covered))]
                )
            )
    with open(args.out, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_gof(args):
    y, n = read_counts(args.counts)
    res = FitResult.from_dict(read_json(args.fit))
    write_counts(args.out, replicate_fit(y, build_grid(n), res, args.rng), n)


def cmd_montecarlo(args):
    design = MCDesign(
        model=args.model,
        n=args.n,
        T=args.T,
        n_replicates=args.reps,
        rng_seed=args.rng,
        seed_count=args.seed_count,
        n_boot=args.boot,
    )
    rep = RUNNERS[args.table](design)
    doc = {"version": __version__}
    doc.update(rep.to_dict())
    write_json(args.out, doc)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mcgrowth", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("tile", help="bin cell coordinates into lattice counts")
    s.add_argument("--cells", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--bounds", type=_parse_bounds, default=None, help="x_min,x_max,y_min,y_max (default: data bounding box)")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_tile)

    s = sub.add_parser("simulate", help="simulate a count trajectory")
    s.add_argument("--params", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--T", type=int, required=True)
    s.add_argument("--seed-count", type=int, default=DEFAULT_SEED_COUNT)
    s.add_argument("--init", help="count file whose t=0 slice seeds the trajectory")
    s.add_argument("--rng", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("fit", help="maximum likelihood fit")
    s.add_argument("--counts", required=True)
    s.add_argument("--mask")
    s.add_argument("--ci", type=float, default=0.95)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("select", help="AIC/BIC best-subset selection")
    s.add_argument("--counts", required=True)
    s.add_argument("--criterion", choices=["aic", "bic"], default="bic")
    s.add_argument("--ci", type=float, default=0.95)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_select)

    s = sub.add_parser("bootstrap", help="parametric bootstrap of a fit")
    s.add_argument("--counts", required=True)
    s.add_argument("--fit", required=True)
    s.add_argument("-B", type=int, default=50)
    s.add_argument("--rng", type=int, default=0)
    s.add_argument("--ci", type=float, default=0.95)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_bootstrap)

    s = sub.add_parser("predict", help="moving-window one-step-ahead QQ bands")
    s.add_argument("--counts", required=True)
    s.add_argument("--window", type=int, default=5)
    s.add_argument("--t", type=_parse_times, required=True)
    s.add_argument("--qq-offset", type=float, default=0.95)
    s.add_argument("--rng", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("gof", help="goodness-of-fit replicate")
    s.add_argument("--counts", required=True)
    s.add_argument("--fit", required=True)
    s.add_argument("--rng", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_gof)

    s = sub.add_parser("montecarlo", help="Monte Carlo tables")
    s.add_argument("--table", type=int, choices=[1, 2, 3], required=True)
    s.add_argument("--model", type=int, choices=[1, 2, 3], default=1)
    s.add_argument("--n", type=int, default=25)
    s.add_argument("--T", type=int, default=10)
    s.add_argument("--reps", type=int, default=200)
    s.add_argument("--rng", type=int, default=1)
    s.add_argument("--seed-count", type=int, default=DEFAULT_SEED_COUNT)
    s.add_argument("--boot", type=int, default=50, help="bootstrap size per replicate for table 2 (0 disables)")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_montecarlo)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (MCGError, OSError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        if getattr(exc, "line", None) is not None:
            err["line"] = exc.line
        print(json.dumps(err), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
