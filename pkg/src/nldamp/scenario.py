"""Scenario files: schema, strict validation, and canonical hashing.

A scenario is a YAML mapping that pins everything a run needs: the
system(s), integrator settings, initial states, reference profile,
optional measurement noise, optional gain sweep, and output naming.
Validation is strict (unknown keys are rejected) and failures raise
ScenarioError with a field-path diagnostic.

The scenario hash is the SHA-256 of the canonical JSON encoding of the
parsed mapping, so it is stable under key reordering of the text.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import InvalidProfile, ScenarioError
from .integrator import IntegratorConfig
from .model import GainParams, PDGains
from .reference import NoiseConfig, RefProfile, make_constant, make_slope, make_trapezoid


def _require(cond: bool, where: str, msg: str) -> None:
    if not cond:
        raise ScenarioError(f"{where}: {msg}")


def _take(mapping: dict, where: str, known: dict[str, bool]) -> None:
    """Reject unknown keys and missing required ones.  known maps
    key -> required."""
    _require(isinstance(mapping, dict), where, "expected a mapping")
    for key in mapping:
        _require(key in known, f"{where}.{key}", "unknown field")
    for key, required in known.items():
        if required:
            _require(key in mapping, f"{where}.{key}", "missing required field")


def _number(mapping: dict, where: str, key: str, default=None) -> float:
    val = mapping.get(key, default)
    _require(
        isinstance(val, (int, float)) and not isinstance(val, bool),
        f"{where}.{key}",
        f"expected a number, got {val!r}",
    )
    return float(val)


@dataclass(frozen=True)
class SystemSpec:
    """One controller block of a scenario."""

    kind: str               # setpoint | tracking | pd
    name: str
    k: float | None = None
    mu: float = 0.0
    sat: float | None = None
    kp: float | None = None
    kd: float | None = None

    def gains(self) -> GainParams | PDGains:
        if self.kind == "pd":
            return PDGains(kp=self.kp, kd=self.kd)
        return GainParams(k=self.k, mu=self.mu, sat=self.sat)

    def with_k(self, k: float) -> "SystemSpec":
        """Sweep variant with the proportional gain replaced."""
        tag = f"k{k:g}"
        if self.kind == "pd":
            return SystemSpec(kind="pd", name=tag, kp=k, kd=2.0 * math.sqrt(k))
        return SystemSpec(kind=self.kind, name=tag, k=k, mu=self.mu, sat=self.sat)


def _parse_system(raw: dict, where: str, default_name: str | None = None) -> SystemSpec:
    _take(raw, where, {"kind": True, "name": False, "k": False, "mu": False,
                       "sat": False, "kp": False, "kd": False})
    kind = raw["kind"]
    _require(kind in ("setpoint", "tracking", "pd"), f"{where}.kind",
             f"unknown system kind {kind!r}")
    name = raw.get("name", default_name or kind)
    _require(isinstance(name, str) and name, f"{where}.name", "expected a non-empty string")
    try:
        if kind == "pd":
            _require("k" not in raw and "mu" not in raw, where,
                     "pd systems take kp/kd, not k/mu")
            spec = SystemSpec(kind=kind, name=name,
                              kp=_number(raw, where, "kp"),
                              kd=_number(raw, where, "kd"))
        else:
            _require("kp" not in raw and "kd" not in raw, where,
                     f"{kind} systems take k/mu/sat, not kp/kd")
            sat = None if raw.get("sat") is None else _number(raw, where, "sat")
            spec = SystemSpec(kind=kind, name=name,
                              k=_number(raw, where, "k"),
                              mu=_number(raw, where, "mu", 0.0),
                              sat=sat)
        spec.gains()  # validate ranges now, with a field diagnostic
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"{where}: {exc}") from exc
    return spec


@dataclass(frozen=True)
class ReferenceSpec:
    kind: str               # constant | slope | trapezoid
    params: dict = field(default_factory=dict)

    def build(self, t_end: float) -> RefProfile:
        try:
            if self.kind == "constant":
                return make_constant(self.params.get("value", 0.0), t_end)
            if self.kind == "slope":
                return make_slope(self.params["v"], t_end)
            return make_trapezoid(
                self.params["v_max"], self.params["a"],
                self.params["t_cruise"], t_end,
            )
        except InvalidProfile as exc:
            raise ScenarioError(f"reference: {exc}") from exc

    @property
    def is_zero(self) -> bool:
        return self.kind == "constant" and self.params.get("value", 0.0) == 0.0


def _parse_reference(raw: dict, where: str) -> ReferenceSpec:
    _take(raw, where, {"kind": True, "value": False, "v": False,
                       "v_max": False, "a": False, "t_cruise": False})
    kind = raw.get("kind")
    _require(kind in ("constant", "slope", "trapezoid"), f"{where}.kind",
             f"unknown reference kind {kind!r}")
    params: dict = {}
    if kind == "constant":
        if "value" in raw:
            params["value"] = _number(raw, where, "value")
    elif kind == "slope":
        params["v"] = _number(raw, where, "v")
    else:
        for key in ("v_max", "a", "t_cruise"):
            params[key] = _number(raw, where, key)
    return ReferenceSpec(kind=kind, params=params)


@dataclass(frozen=True)
class Scenario:
    name: str
    systems: tuple[SystemSpec, ...]
    integrator: IntegratorConfig
    inits: tuple[tuple[float, float], ...]
    reference: ReferenceSpec
    noise: NoiseConfig | None
    prefix: str
    sweep_ks: tuple[float, ...] | None
    raw: dict = field(repr=False, default_factory=dict)

    def profile(self) -> RefProfile | None:
        """Profile covering the integration horizon; None for the
        origin-regulation case."""
        if self.reference.is_zero:
            return None
        return self.reference.build(self.integrator.t_end)

    def run_systems(self) -> tuple[SystemSpec, ...]:
        if self.sweep_ks is None:
            return self.systems
        return tuple(sys.with_k(k) for sys in self.systems for k in self.sweep_ks)


def parse_scenario(raw: dict, name_hint: str = "scenario") -> Scenario:
    _take(raw, name_hint, {
        "name": False, "system": False, "systems": False, "integrator": False,
        "inits": False, "reference": False, "noise": False, "outputs": False,
        "sweep": False,
    })
    name = raw.get("name", name_hint)
    _require(isinstance(name, str) and name, "name", "expected a non-empty string")

    _require(("system" in raw) != ("systems" in raw), name,
             "exactly one of 'system' or 'systems' is required")
    if "system" in raw:
        systems = (_parse_system(raw["system"], "system"),)
    else:
        blocks = raw["systems"]
        _require(isinstance(blocks, list) and blocks, "systems",
                 "expected a non-empty list")
        systems = tuple(
            _parse_system(b, f"systems[{i}]", default_name=f"sys{i}")
            for i, b in enumerate(blocks)
        )
        names = [s.name for s in systems]
        _require(len(set(names)) == len(names), "systems", "duplicate system names")

    integ = raw.get("integrator", {})
    _take(integ, "integrator", {"dt": False, "t_end": False, "conv_eps": False,
                                "conv_hold": False, "blowup_bound": False})
    defaults = IntegratorConfig()
    try:
        cfg = IntegratorConfig(
            dt=_number(integ, "integrator", "dt", defaults.dt),
            t_end=_number(integ, "integrator", "t_end", defaults.t_end),
            conv_eps=_number(integ, "integrator", "conv_eps", defaults.conv_eps),
            conv_hold=_number(integ, "integrator", "conv_hold", defaults.conv_hold),
            blowup_bound=_number(integ, "integrator", "blowup_bound",
                                 defaults.blowup_bound),
        )
    except ValueError as exc:
        raise ScenarioError(f"integrator: {exc}") from exc

    inits_raw = raw.get("inits")
    _require(isinstance(inits_raw, list) and len(inits_raw) > 0, "inits",
             "expected a non-empty list of [x1, x2] pairs")
    inits = []
    for i, pair in enumerate(inits_raw):
        _require(
            isinstance(pair, list) and len(pair) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in pair),
            f"inits[{i}]", f"expected [x1, x2], got {pair!r}",
        )
        inits.append((float(pair[0]), float(pair[1])))

    ref = _parse_reference(raw.get("reference", {"kind": "constant"}), "reference")
    for i, sys in enumerate(systems):
        if sys.kind == "setpoint":
            _require(ref.is_zero, f"systems[{i}]",
                     "setpoint systems regulate to the origin; use a constant-zero reference")

    noise_raw = raw.get("noise")
    noise = None
    if noise_raw is not None:
        _take(noise_raw, "noise", {"enabled": False, "sigma1": False, "sigma2": False,
                                   "sample_dt": False, "seed": False})
        if noise_raw.get("enabled", True):
            seed = noise_raw.get("seed", 0)
            _require(isinstance(seed, int) and not isinstance(seed, bool),
                     "noise.seed", "expected an integer")
            try:
                noise = NoiseConfig(
                    sigma1=_number(noise_raw, "noise", "sigma1", 1e-4),
                    sigma2=_number(noise_raw, "noise", "sigma2", 1e-3),
                    sample_dt=_number(noise_raw, "noise", "sample_dt", 1e-3),
                    seed=seed,
                )
            except ValueError as exc:
                raise ScenarioError(f"noise: {exc}") from exc
            _require(noise.sample_dt >= cfg.dt, "noise.sample_dt",
                     "must be at least integrator.dt")

    outputs = raw.get("outputs", {})
    _take(outputs, "outputs", {"prefix": False})
    prefix = outputs.get("prefix", name)
    _require(isinstance(prefix, str) and prefix, "outputs.prefix",
             "expected a non-empty string")

    sweep_raw = raw.get("sweep")
    sweep_ks = None
    if sweep_raw is not None:
        _take(sweep_raw, "sweep", {"ks": True})
        ks = sweep_raw["ks"]
        _require(isinstance(ks, list) and ks
                 and all(isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0
                         for v in ks),
                 "sweep.ks", "expected a non-empty list of positive gains")
        sweep_ks = tuple(float(v) for v in ks)

    return Scenario(
        name=name, systems=systems, integrator=cfg, inits=tuple(inits),
        reference=ref, noise=noise, prefix=prefix, sweep_ks=sweep_ks, raw=raw,
    )


def load_raw(path: str | Path) -> dict:
    """Read a YAML scenario file into a mapping, with parse diagnostics."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}" if mark is not None else str(path)
        raise ScenarioError(f"{where}: {exc}") from exc
    except OSError as exc:
        raise ScenarioError(str(exc)) from exc
    if not isinstance(raw, dict):
        raise ScenarioError(f"{path}: top level must be a mapping")
    return raw


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    return parse_scenario(load_raw(path), name_hint=path.stem)


def scenario_hash(raw: dict) -> str:
    """SHA-256 of the canonical JSON encoding of the parsed mapping."""
    canon = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()
