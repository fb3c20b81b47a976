"""Command-line front end.

Subcommands: simulate, certify, figure, compare, sweep.  Scenario
fields can be overridden per invocation (--k, --mu, --dt, --t-end,
--seed); the default output directory comes from NLDAMP_OUT_DIR.

Exit codes: 0 success (simulate: all runs completed or converged),
1 malformed input or unknown name, 2 a run diverged or hit the
singularity guard.
"""

from __future__ import annotations

import argparse
import copy
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .certify import default_grid, default_pmatrix, grid_certificate
from .csvio import write_certificate
from .errors import ScenarioError
from .model import GainParams
from .runner import (
    FIGURE_NAMES,
    run_compare,
    run_figure,
    run_scenario,
    run_sweep,
)
from .scenario import load_raw, parse_scenario

_BAD_OUTCOMES = ("diverged", "singular")


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument(
        "--out-dir",
        default=os.environ.get("NLDAMP_OUT_DIR", "."),
        help="output directory (default: $NLDAMP_OUT_DIR or .)",
    )
    sub.add_argument("--no-plots", action="store_true",
                     help="skip figure rendering, write only delimited output")


def _add_overrides(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--k", type=float, help="override the proportional gain")
    sub.add_argument("--mu", type=float, help="override the regularization")
    sub.add_argument("--dt", type=float, help="override the integrator step")
    sub.add_argument("--t-end", type=float, help="override the horizon")
    sub.add_argument("--seed", type=int, help="override the noise seed")


def _apply_overrides(raw: dict, args: argparse.Namespace) -> dict:
    raw = copy.deepcopy(raw)
    if args.k is not None or args.mu is not None:
        blocks = raw.get("systems")
        if blocks is None:
            blocks = [raw.get("system")] if raw.get("system") else []
        for block in blocks:
            if block.get("kind") == "pd":
                if args.k is not None:
                    block["kp"] = args.k
                    block["kd"] = 2.0 * math.sqrt(args.k)
            else:
                if args.k is not None:
                    block["k"] = args.k
                if args.mu is not None:
                    block["mu"] = args.mu
    if args.dt is not None or args.t_end is not None:
        integ = raw.setdefault("integrator", {})
        if args.dt is not None:
            integ["dt"] = args.dt
        if args.t_end is not None:
            integ["t_end"] = args.t_end
    if args.seed is not None:
        if "noise" not in raw:
            raise ScenarioError("--seed: scenario has no noise block to seed")
        raw["noise"]["seed"] = args.seed
    return raw


def _cmd_simulate(args: argparse.Namespace) -> int:
    scenario_raw = _apply_overrides(load_raw(args.scenario), args)
    scenario = parse_scenario(scenario_raw, name_hint=Path(args.scenario).stem)
    records, _ = run_scenario(scenario, args.out_dir, render=not args.no_plots)
    for rec in records:
        conv = "-" if rec.converged_at is None else f"{rec.converged_at:.4f}s"
        print(f"{rec.csv}: {rec.terminated} (converged_at={conv}, "
              f"samples={rec.samples})")
    if any(rec.terminated in _BAD_OUTCOMES for rec in records):
        return 2
    return 0


def _cmd_certify(args: argparse.Namespace) -> int:
    p = GainParams(k=args.k, mu=args.mu)
    explicit = [args.e1_min, args.e1_max, args.e1_n,
                args.e2_min, args.e2_max, args.e2_n]
    if any(v is not None for v in explicit):
        e1_min = -2.0 if args.e1_min is None else args.e1_min
        e1_max = 2.0 if args.e1_max is None else args.e1_max
        e1_n = 101 if args.e1_n is None else args.e1_n
        e2_min = -2.0 if args.e2_min is None else args.e2_min
        e2_max = 2.0 if args.e2_max is None else args.e2_max
        e2_n = 101 if args.e2_n is None else args.e2_n
        if not (e1_max > e1_min and e2_max > e2_min and e1_n >= 2 and e2_n >= 2):
            raise ScenarioError("grid: empty or inverted range")
        e1 = np.linspace(e1_min, e1_max, e1_n)
        e2 = np.linspace(e2_min, e2_max, e2_n)
    else:
        e1, e2 = default_grid()
    cert = grid_certificate(p, default_pmatrix(p.k), e1, e2)
    os.makedirs(args.out_dir, exist_ok=True)
    out = args.out or os.path.join(
        args.out_dir, f"certificate_k{p.k:g}_mu{p.mu:g}.csv"
    )
    write_certificate(cert, out)
    for line in cert.summary_lines():
        print(line)
    print(f"per-point records: {out}")
    return 0


def _cmd_figure(args: argparse.Namespace) -> int:
    records = run_figure(args.name, args.out_dir, render=not args.no_plots)
    for rec in records:
        print(f"{rec.csv}: {rec.terminated}")
    print(f"figure bundle written to {args.out_dir}")
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    raw = load_raw(args.scenario)
    rows = run_compare(raw, args.out_dir)
    header = f"{'controller':<12} {'conv_time':>10} {'c1':>9} {'c2':>9} {'rms_e1':>12}"
    print(header)
    for m in rows:
        conv = "-" if m.converged_at is None else f"{m.converged_at:.4f}"
        print(f"{m.controller:<12} {conv:>10} {m.logscale_c1:>9.3f} "
              f"{m.logscale_c2:>9.3f} {m.rms_e1:>12.4e}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    scenario_raw = _apply_overrides(load_raw(args.scenario), args)
    scenario = parse_scenario(scenario_raw, name_hint=Path(args.scenario).stem)
    ks = [float(v) for v in args.ks.split(",")] if args.ks else None
    records = run_sweep(scenario, ks, args.out_dir, render=not args.no_plots)
    for rec in records:
        print(f"{rec.csv}: {rec.terminated}")
    if any(rec.terminated in _BAD_OUTCOMES for rec in records):
        return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nldamp",
        description="Simulation and convergence certification for the "
                    "optimal nonlinear damping controller.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p_sim = subs.add_parser("simulate", help="run a scenario file")
    p_sim.add_argument("scenario", help="scenario YAML path")
    _add_common(p_sim)
    _add_overrides(p_sim)
    p_sim.set_defaults(func=_cmd_simulate)

    p_cert = subs.add_parser("certify", help="grid-certify the damping loop")
    p_cert.add_argument("--k", type=float, required=True)
    p_cert.add_argument("--mu", type=float, default=1e-4)
    for axis in ("e1", "e2"):
        p_cert.add_argument(f"--{axis}-min", type=float)
        p_cert.add_argument(f"--{axis}-max", type=float)
        p_cert.add_argument(f"--{axis}-n", type=int)
    p_cert.add_argument("--out", help="certificate CSV path")
    _add_common(p_cert)
    p_cert.set_defaults(func=_cmd_certify)

    p_fig = subs.add_parser("figure", help="reproduce a canonical figure bundle")
    p_fig.add_argument("name", help=f"one of {', '.join(FIGURE_NAMES)}")
    _add_common(p_fig)
    p_fig.set_defaults(func=_cmd_figure)

    p_cmp = subs.add_parser("compare", help="nonlinear vs PD metrics table")
    p_cmp.add_argument("scenario", help="compare scenario YAML path")
    _add_common(p_cmp)
    p_cmp.set_defaults(func=_cmd_compare)

    p_swp = subs.add_parser("sweep", help="gain sweep of a scenario")
    p_swp.add_argument("scenario", help="scenario YAML path")
    p_swp.add_argument("--ks", help="comma-separated gains, e.g. 10,100,1000")
    _add_common(p_swp)
    _add_overrides(p_swp)
    p_swp.set_defaults(func=_cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
