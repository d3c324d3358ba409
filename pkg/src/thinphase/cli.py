"""``thinphase`` command line: sweeps, plots, validation, cell solves, calculators."""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

from . import assemblage as asm
from .sweep import ConfigError, CSVParseError, resolve_config, run_sweep
from .svgplot import PlotError, emit_gnuplot, emit_plot
from .validation import SUITES, UnknownSuiteError, run_validation


def _sweep(args):
    cfg = resolve_config(args.config)
    cfg = cfg.override(theta2=args.theta2, sigma1=args.sigma1, sigma3=args.sigma3, r1=args.r1, r3=args.r3,
                       lo=args.lo, hi=args.hi, points=args.points, csv=args.out, svg=args.svg)
    if cfg.csv is None:
        raise ConfigError("no CSV path: give --out or set 'csv' in the config")
    rows = run_sweep(cfg)
    print(f"wrote {len(rows)} rows to {cfg.csv}")
    if args.svg is not None or (args.plot and cfg.svg):
        emit_plot(cfg.csv, cfg.svg, cfg.style)
        print(f"wrote {cfg.svg}")
    return 0


def _plot(args):
    emit_plot(args.input, args.out, args.style)
    if args.gnuplot:
        emit_gnuplot(args.input, args.gnuplot, args.style)
    return 0


def _validate(args):
    report = run_validation(args.suite)
    print(report.summary())
    if args.json:
        Path(args.json).write_text(report.to_json() + "\n")
    return 0 if report.passed else 1


def _solve(args):
    import numpy as np

    from .cellio import load_cell, save_solution
    from .solver import solve_periodic

    cell = load_cell(args.cell)
    axis = "xyz".index(args.e0)
    if axis >= cell.dim:
        raise ConfigError(f"--e0 {args.e0} needs a {axis + 1}D cell, got {cell.dim}D")
    E0 = np.eye(cell.dim)[axis]
    sol = solve_periodic(cell, E0, tol=args.tol)
    print(json.dumps({"applied_field": E0.tolist(), "effective_column": sol.effective_column.tolist(),
                      "residual": sol.residual, "iterations": sol.iterations}))
    if args.out:
        save_solution(sol, args.out)
    return 0


def _fractions(args):
    if args.theta1 is not None:
        t1 = args.theta1
    elif args.r1 is not None and args.r3 is not None:
        t1 = (args.r1 / args.r3) ** 3
    else:
        raise ConfigError("give --theta1 or both --r1 and --r3")
    if args.r1 is not None and args.r3 is not None and abs(t1 - (args.r1 / args.r3) ** 3) > 1e-12:
        raise ConfigError("--theta1 disagrees with (r1/r3)^3")
    return t1


def _calc(args):
    t1 = _fractions(args)
    if args.command == "reference":
        val = asm.reference_sigma_star(args.sigma1, args.sigma3, t1)
    elif args.command == "exact":
        val = asm.exact_sigma_star(args.sigma1, args.sigma2, args.sigma3, t1, args.theta2)
    else:
        if args.r1 is None:
            raise ConfigError("approx needs --r1 (and --r3 unless --theta1 is given)")
        r3 = args.r3 if args.r3 is not None else args.r1 / t1 ** (1 / 3)
        h = asm.radius_from_fraction(args.r1, r3, args.theta2) - args.r1
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            val = asm.approx_sigma_star(args.sigma1, args.sigma2, args.sigma3, t1, args.r1, h)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
    print("%.17g" % val)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="thinphase", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep", help="sigma2 sweep to CSV")
    s.add_argument("--config", required=True, help="JSON config file or bundled figure name (fig5..fig10)")
    s.add_argument("--out", help="CSV path (overrides the config)")
    s.add_argument("--svg", help="also render an SVG plot here")
    s.add_argument("--plot", action="store_true", help="render the plot at the config's svg path")
    for name in ("theta2", "sigma1", "sigma3", "r1", "r3", "lo", "hi"):
        s.add_argument(f"--{name}", type=float)
    s.add_argument("--points", type=int)
    s.set_defaults(func=_sweep)

    s = sub.add_parser("plot", help="render a sweep CSV as SVG")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--style", choices=("log-x", "log-log"), default="log-x")
    s.add_argument("--gnuplot", help="also write a gnuplot script")
    s.set_defaults(func=_plot)

    s = sub.add_parser("validate", help="run a named check suite")
    s.add_argument("--suite", required=True, help=f"one of: {', '.join(SUITES)}, all")
    s.add_argument("--json", help="write the JSON report here")
    s.set_defaults(func=_validate)

    s = sub.add_parser("solve", help="solve a periodic cell for one applied field")
    s.add_argument("--cell", required=True)
    s.add_argument("--e0", choices=("x", "y", "z"), required=True)
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--out", help="save the solution (JSON header + binary arrays)")
    s.set_defaults(func=_solve)

    for name in ("exact", "approx", "reference"):
        s = sub.add_parser(name, help=f"{name} effective conductivity of the assemblage")
        s.add_argument("--sigma1", type=float, required=True)
        s.add_argument("--sigma3", type=float, required=True)
        if name != "reference":
            s.add_argument("--sigma2", type=float, required=True)
            s.add_argument("--theta2", type=float, required=True)
        s.add_argument("--theta1", type=float)
        s.add_argument("--r1", type=float)
        s.add_argument("--r3", type=float)
        s.set_defaults(func=_calc)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CSVParseError, PlotError, UnknownSuiteError, asm.DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
