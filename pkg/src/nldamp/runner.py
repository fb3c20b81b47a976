"""Scenario execution: simulation fan-out, delimited output, manifests,
figure rendering, comparisons and gain sweeps.

Every run writes one CSV per (system, initial state); a JSON manifest
records the scenario hash, tool version, per-run outcome summaries and
wall-clock time.  Rendering is a convenience layered on top of the CSV
contract.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .certify import logscale_fit, energy_rate_grid
from .csvio import write_grid, write_table, write_timeseries
from .errors import DegenerateInput, ScenarioError
from .integrator import SimOutcome, Termination, simulate
from .model import GainParams
from .plotting import (
    plot_energy_rate,
    plot_phase_portrait,
    plot_state_traces,
    plot_tracking,
)
from .scenario import Scenario, load_scenario, parse_scenario, scenario_hash

FIGURE_NAMES = ("fig1", "fig2", "fig3", "fig4", "fig5")


@dataclass
class RunRecord:
    csv: str
    system: str
    init: tuple[float, float]
    terminated: str
    converged_at: float | None
    samples: int
    wall_s: float


def _write_manifest(
    path: Path, scenario: Scenario, records: list[RunRecord],
    extra_outputs: list[str], wall_s: float,
) -> None:
    doc = {
        "tool": "nldamp",
        "version": __version__,
        "scenario": scenario.name,
        "scenario_hash": scenario_hash(scenario.raw),
        "runs": [vars(r) for r in records],
        "outputs": extra_outputs,
        "wall_clock_s": wall_s,
    }
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def run_scenario(
    scenario: Scenario, out_dir: str | Path, render: bool = True
) -> tuple[list[RunRecord], list[SimOutcome]]:
    """Run every (system, init) combination and write CSVs, a manifest,
    and (optionally) a rendered figure."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t_start = time.perf_counter()
    profile = scenario.profile()
    records: list[RunRecord] = []
    outcomes: list[SimOutcome] = []
    labels: list[str] = []
    for sysspec in scenario.run_systems():
        gains = sysspec.gains()
        ref = None if sysspec.kind == "setpoint" else profile
        for i, init in enumerate(scenario.inits):
            t0 = time.perf_counter()
            out = simulate(
                sysspec.kind, gains, init, ref, scenario.integrator,
                noise=scenario.noise,
            )
            wall = time.perf_counter() - t0
            name = f"{scenario.prefix}_{sysspec.name}_{i}.csv"
            write_timeseries(out.series, out_dir / name)
            records.append(RunRecord(
                csv=name,
                system=sysspec.name,
                init=init,
                terminated=out.terminated.value,
                converged_at=out.converged_at,
                samples=len(out.series),
                wall_s=round(wall, 4),
            ))
            outcomes.append(out)
            labels.append(f"{sysspec.name} ({init[0]:g},{init[1]:g})")

    extra: list[str] = []
    if render:
        png = out_dir / f"{scenario.prefix}.png"
        series = [o.series for o in outcomes]
        if profile is None:
            plot_phase_portrait(series, png, title=scenario.name)
        else:
            plot_tracking(series, labels, png, title=scenario.name)
        extra.append(png.name)
        if scenario.sweep_ks is not None or len(scenario.systems) > 1:
            png2 = out_dir / f"{scenario.prefix}_traces.png"
            plot_state_traces(series, labels, png2, title=scenario.name)
            extra.append(png2.name)

    _write_manifest(
        out_dir / f"{scenario.prefix}_manifest.json", scenario, records, extra,
        round(time.perf_counter() - t_start, 4),
    )
    return records, outcomes


def run_grid_scenario(raw: dict, out_dir: str | Path, render: bool = True) -> list[str]:
    """Energy-rate grid bundle (the fig3 path)."""
    for key in raw:
        if key not in ("name", "kind", "k", "mu", "e1", "e2", "outputs"):
            raise ScenarioError(f"{key}: unknown field for a grid scenario")
    name = raw.get("name", "grid")
    p = GainParams(k=float(raw["k"]), mu=float(raw.get("mu", 0.0)))
    axes = {}
    for ax in ("e1", "e2"):
        block = raw.get(ax, {})
        lo = float(block.get("min", -1.0))
        hi = float(block.get("max", 1.0))
        n = int(block.get("n", 201))
        if not (hi > lo and n >= 2):
            raise ScenarioError(f"{ax}: invalid range")
        axes[ax] = np.linspace(lo, hi, n)
    prefix = raw.get("outputs", {}).get("prefix", name)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = energy_rate_grid(p, axes["e1"], axes["e2"])
    files = [f"{prefix}_grid.csv"]
    write_grid(axes["e1"], axes["e2"], table, "abs_vdot", out_dir / files[0])
    if render:
        png = out_dir / f"{prefix}.png"
        plot_energy_rate(axes["e1"], axes["e2"], table, png,
                         title=f"{name}: |Vdot|, k={p.k:g}, mu={p.mu:g}")
        files.append(png.name)
    return files


def load_figure_scenario(name: str) -> dict:
    if name not in FIGURE_NAMES:
        raise ScenarioError(
            f"unknown figure {name!r}; expected one of {', '.join(FIGURE_NAMES)}"
        )
    text = resources.files("nldamp.scenarios").joinpath(f"{name}.yaml").read_text()
    return yaml.safe_load(text)


def run_figure(name: str, out_dir: str | Path, render: bool = True) -> list[RunRecord]:
    """Reproduce one canonical figure bundle from the committed scenario."""
    raw = load_figure_scenario(name)
    if raw.get("kind") == "grid":
        run_grid_scenario(raw, out_dir, render)
        return []
    scenario = parse_scenario(raw, name_hint=name)
    records, _ = run_scenario(scenario, out_dir, render)
    return records


@dataclass
class CompareMetrics:
    controller: str
    converged_at: float | None
    logscale_c0: float
    logscale_c1: float
    logscale_c2: float
    rms_e1: float


def _controller_metrics(
    label: str, kind: str, gains, scenario: Scenario, profile,
    floor: float, fit_start: float,
) -> CompareMetrics:
    ref = None if kind == "setpoint" else profile
    clean = simulate(kind, gains, scenario.inits[0], ref, scenario.integrator)
    full = simulate(
        kind, gains, scenario.inits[0], ref, scenario.integrator,
        noise=scenario.noise, stop_early=False,
    )
    try:
        c0, c1, c2 = logscale_fit(clean.series, floor=floor, fit_start=fit_start)
    except DegenerateInput:
        c0 = c1 = c2 = math.nan
    tau = profile.transient_end if profile is not None else 0.0
    tail = full.series.t >= tau
    rms = float(np.sqrt(np.mean(full.series.e1[tail] ** 2)))
    return CompareMetrics(
        controller=label,
        converged_at=clean.converged_at,
        logscale_c0=c0,
        logscale_c1=c1,
        logscale_c2=c2,
        rms_e1=rms,
    )


def run_compare(raw: dict, out_dir: str | Path) -> list[CompareMetrics]:
    """Nonlinear-vs-PD comparison table (shared gain k, same scenario)."""
    for block in ("nonlinear", "pd"):
        if block not in raw:
            raise ScenarioError(f"{block}: compare scenarios need this block")
    for key in raw:
        if key not in ("name", "kind", "k", "nonlinear", "pd", "init", "inits",
                       "integrator", "reference", "noise", "metrics", "outputs"):
            raise ScenarioError(f"{key}: unknown field for a compare scenario")
    if "k" not in raw:
        raise ScenarioError("k: compare scenarios share one proportional gain")
    k = float(raw["k"])
    nl = dict(raw["nonlinear"])
    pd = dict(raw["pd"])
    if "kp" in pd and float(pd["kp"]) != k:
        raise ScenarioError("pd.kp: must equal the shared gain k")
    pd.setdefault("kp", k)
    pd.setdefault("kd", 2.0 * math.sqrt(k))
    metrics_raw = raw.get("metrics", {})
    floor = float(metrics_raw.get("logscale_floor", 1e-12))
    fit_start = float(metrics_raw.get("logscale_fit_start", 0.0))

    base = {
        "name": raw.get("name", "compare"),
        "system": {"kind": "pd", "kp": pd["kp"], "kd": pd["kd"]},
        "inits": raw.get("inits", [raw.get("init", [1.0, 0.0])]),
    }
    for key in ("integrator", "reference", "noise", "outputs"):
        if key in raw:
            base[key] = raw[key]
    scenario = parse_scenario(base, name_hint=base["name"])
    profile = scenario.profile()
    nl_kind = "setpoint" if profile is None else "tracking"
    nl_gains = GainParams(k=k, mu=float(nl.get("mu", 0.0)),
                          sat=nl.get("sat"))
    pd_gains = scenario.systems[0].gains()

    rows = [
        _controller_metrics("nonlinear", nl_kind, nl_gains, scenario, profile,
                            floor, fit_start),
        _controller_metrics("pd", "pd", pd_gains, scenario, profile,
                            floor, fit_start),
    ]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_table(
        ["controller", "converged_at", "logscale_c0", "logscale_c1",
         "logscale_c2", "rms_e1"],
        [[m.controller,
          math.nan if m.converged_at is None else m.converged_at,
          m.logscale_c0, m.logscale_c1, m.logscale_c2, m.rms_e1]
         for m in rows],
        out_dir / f"{scenario.prefix}_compare.csv",
    )
    return rows


def run_sweep(
    scenario: Scenario, ks: list[float] | None, out_dir: str | Path,
    render: bool = True,
) -> list[RunRecord]:
    """Gain sweep: run the scenario once per gain and write a summary table."""
    if ks:
        scenario = replace(scenario, sweep_ks=tuple(float(v) for v in ks))
    if scenario.sweep_ks is None:
        raise ScenarioError("sweep.ks: no gains given (flag --ks or scenario sweep block)")
    records, outcomes = run_scenario(scenario, out_dir, render)
    rows = []
    for rec, out in zip(records, outcomes):
        s = out.series
        rows.append([
            rec.system, rec.terminated,
            math.nan if rec.converged_at is None else rec.converged_at,
            float(np.nanmax(np.abs(s.u))),
            float(s.error_norm()[-1]),
        ])
    write_table(
        ["system", "terminated", "converged_at", "max_abs_u", "final_error_norm"],
        rows, Path(out_dir) / f"{scenario.prefix}_sweep.csv",
    )
    return records
