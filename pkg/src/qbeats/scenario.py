"""TOML scenario files: validation and conversion to simulation objects.

Every key carries its unit in the name.  Validation collects all problems
(unknown keys, missing keys, out-of-range values) before raising, so one
run reports every offending key at once.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .amplitude import AtomicSuperposition, scheme
from .atomic import ZeemanConfig, level
from .errors import ConfigurationError, NoSolutionError, QBeatsError
from .geometry import CollectionGeometry
from .master import DecayConfig, LaserDrive, PulseEnvelope, Scenario, TimeGrid

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

REQUIRED = object()


def _num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _nonneg(x):
    return _num(x) and x >= 0


def _pos(x):
    return _num(x) and x > 0


def _unit(x):
    return _num(x) and 0 <= x <= 1


def _str(x):
    return isinstance(x, str)


def _num_list(x):
    return isinstance(x, list) and len(x) > 0 and all(_num(v) for v in x)


def _window(x):
    return isinstance(x, list) and len(x) == 2 and all(_num(v) for v in x) and x[0] < x[1]


def _opt(check):
    return lambda x: x == "balanced" or check(x)


# section -> key -> (default, check, description of the valid range)
SCHEMA = {
    "zeeman": {
        "b_gauss": (REQUIRED, _nonneg, "a field >= 0"),
    },
    "initial_state": {
        "scheme": (REQUIRED, lambda x: x in ("lambda", "V", "v"), '"lambda" or "V"'),
        "m_a": (None, _num, "a D5/2 magnetic quantum number"),
        "m_b": (None, _num, "a D5/2 magnetic quantum number"),
        "population_b": (None, lambda x: _num(x) and 0 < x < 1, "in (0, 1)"),
        "phi_d0_deg": (0.0, _num, "a number"),
        "prep_infidelity": (0.0, lambda x: _num(x) and 0 <= x <= 0.5, "in [0, 0.5]"),
    },
    "drive_854": {
        "rabi_mhz": (REQUIRED, _nonneg, ">= 0"),
        "detuning_mhz": ("balanced", _opt(_num), 'a number or "balanced"'),
        "polarization": ("H", lambda x: _str(x) and x.upper() in "HVDARL" and len(x) == 1,
                         "one of H, V, D, A, R, L"),
        "start_ns": (0.0, _nonneg, ">= 0"),
        "pulse_ns": (None, _nonneg, ">= 0 (omit for a continuous drive)"),
        "rise_ns": (60.0, _nonneg, ">= 0"),
        "fall_ns": (0.0, _nonneg, ">= 0"),
    },
    "detection": {
        "numerical_aperture": (0.4, lambda x: _num(x) and 0 <= x < 1, "in [0, 1)"),
        "analyzer": (None, lambda x: _str(x) and x.upper() in ("H", "V", "NONE"),
                     '"H", "V" or "none"'),
        "detector_efficiency": (1.0, _unit, "in [0, 1]"),
        "dark_rate_per_s": (0.0, _nonneg, ">= 0"),
        "jitter_fwhm_ps": (300.0, _nonneg, ">= 0"),
    },
    "decay": {
        "gamma_mhz": (None, _pos, "> 0"),
        "branching_s12": (None, _unit, "in [0, 1]"),
        "branching_d52": (None, _unit, "in [0, 1]"),
        "branching_d32": (None, _unit, "in [0, 1]"),
    },
    "run": {
        "t_max_ns": (2000.0, _pos, "> 0"),
        "step_ns": (0.5, _pos, "> 0"),
        "bin_ns": (2.0, lambda x: _num(x) and x >= 0.001, ">= 0.001"),
        "n_triggers": (1_000_000, lambda x: isinstance(x, int) and x >= 1, "an integer >= 1"),
        "seed": (0, lambda x: isinstance(x, int) and 0 <= x < 2 ** 64, "an unsigned 64-bit integer"),
        "fit_window_ns": (None, _window, "[start, stop] with start < stop"),
        "fit_background": (None, _num, "a number"),
        "phases_deg": (None, _num_list, "a non-empty list of numbers"),
        "phase_mode": ("integrated_flux",
                       lambda x: x in ("integrated_flux", "depletion_at_fixed_pulse"),
                       '"integrated_flux" or "depletion_at_fixed_pulse"'),
        "depletion_step_ns": (12.5, _pos, "> 0"),
        "depletion_max_ns": (2000.0, _pos, "> 0"),
        "shots_per_point": (1000, lambda x: isinstance(x, int) and x >= 1, "an integer >= 1"),
        "populations": (None, lambda x: _num_list(x) and all(0 < v < 1 for v in x),
                        "a list of values in (0, 1)"),
    },
}
TOP_LEVEL = {"name", "description"}


@dataclass(frozen=True)
class RunConfig:
    t_max_ns: float = 2000.0
    step_ns: float = 0.5
    bin_ns: float = 2.0
    n_triggers: int = 1_000_000
    seed: int = 0
    fit_window_ns: tuple | None = None
    fit_background: float | None = None
    phases_deg: tuple | None = None
    phase_mode: str = "integrated_flux"
    depletion_step_ns: float = 12.5
    depletion_max_ns: float = 2000.0
    shots_per_point: int = 1000
    populations: tuple | None = None
    jitter_fwhm_ps: float = 300.0

    def pulse_lengths(self):
        n = int(math.floor(self.depletion_max_ns / self.depletion_step_ns + 1e-9))
        return self.depletion_step_ns * np.arange(n + 1)

    def phases_rad(self):
        deg = self.phases_deg if self.phases_deg is not None else tuple(range(0, 360, 15))
        return np.deg2rad(np.asarray(deg, float))


@dataclass(frozen=True)
class ScenarioFile:
    name: str
    description: str
    scenario: Scenario
    run: RunConfig
    raw: dict = field(repr=False)

    @property
    def config_hash(self):
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def bundled_scenarios() -> list[str]:
    root = resources.files("qbeats") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def resolve_path(name_or_path) -> Path:
    """A file path, or the name of a bundled scenario (with or without .toml)."""
    p = Path(name_or_path)
    if p.exists():
        return p
    stem = p.name[:-5] if p.name.endswith(".toml") else p.name
    bundled = resources.files("qbeats") / "scenarios" / f"{stem}.toml"
    if bundled.is_file():
        return Path(str(bundled))
    raise ConfigurationError(f"scenario {name_or_path!r} not found (bundled: "
                             f"{', '.join(bundled_scenarios())})", ["scenario"])


def load_scenario(name_or_path) -> ScenarioFile:
    path = resolve_path(name_or_path)
    try:
        raw = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationError(f"{path}: invalid TOML: {e}", ["<file>"]) from None
    return parse_scenario(raw, default_name=path.stem)


def _validate(raw: dict) -> tuple[dict, list[str], list[str]]:
    """Filled-in sections, offending keys and their messages."""
    bad, msgs, out = [], [], {}
    for k, v in raw.items():
        if k in SCHEMA:
            if not isinstance(v, dict):
                bad.append(k)
                msgs.append(f"[{k}] must be a table")
        elif k not in TOP_LEVEL:
            bad.append(k)
            msgs.append(f"unknown key {k!r}")
    for sec, keys in SCHEMA.items():
        given = raw.get(sec, {})
        if not isinstance(given, dict):
            given = {}
        vals = {}
        for k, v in given.items():
            if k not in keys:
                bad.append(f"{sec}.{k}")
                msgs.append(f"unknown key {sec}.{k}")
        for k, (default, check, desc) in keys.items():
            if k in given:
                v = given[k]
                if not check(v):
                    bad.append(f"{sec}.{k}")
                    msgs.append(f"{sec}.{k} = {v!r} must be {desc}")
                    continue
                vals[k] = v
            elif default is REQUIRED:
                bad.append(f"{sec}.{k}")
                msgs.append(f"missing required key {sec}.{k}")
            else:
                vals[k] = default
        out[sec] = vals
    return out, bad, msgs


def parse_scenario(raw: dict, default_name: str = "scenario") -> ScenarioFile:
    cfg, bad, msgs = _validate(raw)
    if bad:
        raise ConfigurationError("invalid scenario: " + "; ".join(msgs), bad)
    z, ini, drv, det, dec, run = (cfg[s] for s in SCHEMA)
    name = str(raw.get("name", default_name))
    try:
        sch = scheme(ini["scheme"])
        m_a = sch.m_a if ini["m_a"] is None else ini["m_a"]
        m_b = sch.m_b if ini["m_b"] is None else ini["m_b"]
        rho2 = sch.default_rho2 if ini["population_b"] is None else ini["population_b"]
        initial = AtomicSuperposition(level("D5/2", m_a), level("D5/2", m_b), 1.0 - rho2, rho2,
                                      math.radians(ini["phi_d0_deg"]))
        envelope = PulseEnvelope(drv["start_ns"], drv["pulse_ns"], drv["rise_ns"], drv["fall_ns"])
        detuning = None if drv["detuning_mhz"] == "balanced" else float(drv["detuning_mhz"])
        drive = LaserDrive(float(drv["rabi_mhz"]), detuning, drv["polarization"].upper(), envelope)
        analyzer = sch.analyzer if det["analyzer"] is None else det["analyzer"].upper()
        geometry = CollectionGeometry(det["numerical_aperture"], analyzer, det["detector_efficiency"])
        decay_kw = {}
        if dec["gamma_mhz"] is not None:
            decay_kw["gamma_mhz"] = dec["gamma_mhz"]
        given_b = {k: dec[f"branching_{k}"] for k in ("s12", "d52", "d32")
                   if dec[f"branching_{k}"] is not None}
        if given_b:
            if len(given_b) != 3:
                missing = [f"decay.branching_{k}" for k in ("s12", "d52", "d32") if k not in given_b]
                raise ConfigurationError("give all three branching fractions or none", missing)
            decay_kw["branching"] = {"S1/2": given_b["s12"], "D5/2": given_b["d52"],
                                     "D3/2": given_b["d32"]}
        decay = DecayConfig(**decay_kw)
        grid = TimeGrid(run["t_max_ns"], run["step_ns"], run["bin_ns"])
        sc = Scenario(sch.name, ZeemanConfig(float(z["b_gauss"])), initial, drive, geometry, decay,
                      grid, float(ini["prep_infidelity"]), det["dark_rate_per_s"] * 1e-9, name)
    except ConfigurationError:
        raise
    except QBeatsError as e:
        raise ConfigurationError(f"invalid scenario: {e}", getattr(e, "keys", [])) from e
    try:
        sc.detuning_mhz
    except NoSolutionError as e:
        raise ConfigurationError(f"invalid scenario: {e}; set an explicit detuning",
                                 ["drive_854.detuning_mhz"]) from e
    rc = RunConfig(
        t_max_ns=run["t_max_ns"], step_ns=run["step_ns"], bin_ns=run["bin_ns"],
        n_triggers=run["n_triggers"], seed=run["seed"],
        fit_window_ns=tuple(run["fit_window_ns"]) if run["fit_window_ns"] else None,
        fit_background=run["fit_background"],
        phases_deg=tuple(run["phases_deg"]) if run["phases_deg"] else None,
        phase_mode=run["phase_mode"], depletion_step_ns=run["depletion_step_ns"],
        depletion_max_ns=run["depletion_max_ns"], shots_per_point=run["shots_per_point"],
        populations=tuple(run["populations"]) if run["populations"] else None,
        jitter_fwhm_ps=det["jitter_fwhm_ps"])
    return ScenarioFile(name, str(raw.get("description", "")), sc, rc, raw)
