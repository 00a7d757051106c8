"""Declarative scenario configuration (TOML).

A config names a scenario and overrides any of its defaults::

    scenario = "nm_vs_omega_s"

    [model]            # bath + system parameters
    kind = "dimer"     # dimer | custom | star
    N = 40
    omega0 = 0.5
    g = 0.2
    h = 0.05
    k = 0.001

    [[sweep]]          # at most two axes; lo/hi/step (inclusive) or values
    name = "omega_s"
    lo = 0.45
    hi = 0.93
    step = 0.02

    [nm]
    grid = "default"   # default | star_scan | thorough | {r1_list=.., theta1=.., r2_range=.., theta2_range=..}
    r_probe = 1.0
    rhp_k_scale = 1.0  # RHP evaluated with k multiplied by this factor

    [run]
    T = 0.0
    t_final = "horizon"   # or a number
    dt = 0.1
    output = "results"
    workers = 1

Unknown keys anywhere are errors.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .scenarios import SCENARIOS

__all__ = ["ConfigError", "SweepAxis", "ScenarioConfig", "load_config", "parse_config"]

MODEL_KEYS = {
    "kind", "N", "omega0", "g", "h", "k", "omega_s", "couplings", "coupling_base", "coupling_slope",
    "density", "s", "omega_lo", "omega_hi", "pivot", "density_omega0", "omega_R", "table",
    "constant_density", "delta",
}
NUMERIC_MODEL_KEYS = {
    "N", "omega0", "g", "h", "k", "omega_s", "coupling_base", "coupling_slope", "s", "omega_lo",
    "omega_hi", "pivot", "density_omega0", "omega_R", "delta",
}
NM_KEYS = {"grid", "r_probe", "rhp_k_scale", "measures"}
RUN_KEYS = {"T", "t_final", "dt", "output", "workers", "omega"}
SWEEPABLE = NUMERIC_MODEL_KEYS | {"T", "t_final", "omega", "r_probe"}
TOP_KEYS = {"scenario", "model", "sweep", "nm", "run"}
MODEL_KINDS = ("dimer", "custom", "star")
MAX_AXES = 2


class ConfigError(ValueError):
    """Invalid scenario configuration."""


@dataclass(frozen=True)
class SweepAxis:
    name: str
    values: tuple

    @classmethod
    def from_dict(cls, d: dict) -> "SweepAxis":
        extra = set(d) - {"name", "lo", "hi", "step", "values"}
        if extra:
            raise ConfigError(f"unknown sweep keys: {sorted(extra)}")
        name = d.get("name")
        if name not in SWEEPABLE:
            raise ConfigError(f"sweep parameter {name!r} is not resolvable; choose from {sorted(SWEEPABLE)}")
        if "values" in d:
            if any(k in d for k in ("lo", "hi", "step")):
                raise ConfigError(f"axis {name!r}: give either values or lo/hi/step, not both")
            values = tuple(float(v) for v in d["values"])
        else:
            try:
                lo, hi, step = float(d["lo"]), float(d["hi"]), float(d["step"])
            except KeyError as exc:
                raise ConfigError(f"axis {name!r} needs lo, hi and step (missing {exc})") from None
            if step <= 0 or hi < lo:
                raise ConfigError(f"axis {name!r}: need step > 0 and hi >= lo")
            n = int(math.floor((hi - lo) / step + 1e-9))
            # round to kill accumulated binary noise in the coordinates
            values = tuple(float(np.round(lo + i * step, 12)) for i in range(n + 1))
        if not values:
            raise ConfigError(f"axis {name!r} is empty")
        if name == "N":
            values = tuple(float(int(round(v))) for v in values)
        return cls(name, values)

    def as_dict(self) -> dict:
        return {"name": self.name, "values": list(self.values)}


@dataclass
class ScenarioConfig:
    scenario: str
    model: dict
    sweep: list
    nm: dict
    run: dict
    source: dict = field(default_factory=dict)

    @property
    def axes(self) -> list[SweepAxis]:
        return self.sweep

    def n_cells(self) -> int:
        return int(np.prod([len(a.values) for a in self.sweep])) if self.sweep else 1

    def resolved(self) -> dict:
        return {
            "scenario": self.scenario,
            "model": _jsonable(self.model),
            "sweep": [a.as_dict() for a in self.sweep],
            "nm": _jsonable(self.nm),
            "run": _jsonable(self.run),
        }


def _jsonable(d):
    if isinstance(d, dict):
        return {k: _jsonable(v) for k, v in d.items()}
    if isinstance(d, (list, tuple)):
        return [_jsonable(v) for v in d]
    if isinstance(d, np.generic):
        return d.item()
    return d


def _merge_section(name: str, defaults: dict, given: dict, allowed: set) -> dict:
    if not isinstance(given, dict):
        raise ConfigError(f"[{name}] must be a table")
    extra = set(given) - allowed
    if extra:
        raise ConfigError(f"unknown keys in [{name}]: {sorted(extra)}")
    out = copy.deepcopy(defaults)
    out.update(given)
    return out


def parse_config(raw: dict, base_dir: Path | None = None) -> ScenarioConfig:
    extra = set(raw) - TOP_KEYS
    if extra:
        raise ConfigError(f"unknown top-level keys: {sorted(extra)}")
    name = raw.get("scenario")
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; run list-scenarios")
    sc = SCENARIOS[name]
    given_model = raw.get("model", {})
    defaults_model = sc.defaults["model"]
    if "kind" in given_model and given_model["kind"] != defaults_model.get("kind"):
        # switching bath family drops the family-specific defaults
        defaults_model = {"omega_s": defaults_model.get("omega_s")}
    model = _merge_section("model", defaults_model, given_model, MODEL_KEYS)
    nm = _merge_section("nm", sc.defaults.get("nm", {}), raw.get("nm", {}), NM_KEYS)
    run = _merge_section("run", sc.defaults.get("run", {}), raw.get("run", {}), RUN_KEYS)

    sweep_raw = raw.get("sweep", sc.defaults.get("sweep", []))
    if isinstance(sweep_raw, dict):
        sweep_raw = [sweep_raw]
    axes = [SweepAxis.from_dict(a) for a in sweep_raw]
    if len(axes) > MAX_AXES:
        raise ConfigError(f"at most {MAX_AXES} sweep axes are supported, got {len(axes)}")
    names = [a.name for a in axes]
    if len(set(names)) != len(names):
        raise ConfigError(f"duplicate sweep axes: {names}")
    missing = [a for a in sc.required_axes if a not in names]
    if missing:
        raise ConfigError(f"scenario {name!r} needs sweep axes {missing}")

    if model.get("kind") not in MODEL_KINDS:
        raise ConfigError(f"model.kind must be one of {MODEL_KINDS}")
    if model.get("table") and base_dir is not None:
        model["table"] = str((base_dir / model["table"]).resolve())
    for key in NUMERIC_MODEL_KEYS & set(model):
        if model[key] is not None and not isinstance(model[key], (int, float)):
            raise ConfigError(f"model.{key} must be a number")
    t_final = run.get("t_final", "horizon")
    if not (t_final == "horizon" or (isinstance(t_final, (int, float)) and t_final > 0)):
        raise ConfigError("run.t_final must be a positive number or 'horizon'")
    if not run.get("dt", 0.1) > 0:
        raise ConfigError("run.dt must be positive")
    if int(run.get("workers", 1)) < 1:
        raise ConfigError("run.workers must be >= 1")
    grid = nm.get("grid", "default")
    if isinstance(grid, str) and grid not in ("default", "star_scan", "thorough"):
        raise ConfigError(f"unknown BLP grid preset {grid!r}")
    if isinstance(grid, dict):
        extra = set(grid) - {"r1_list", "theta1", "r2_range", "theta2_range"}
        if extra:
            raise ConfigError(f"unknown keys in nm.grid: {sorted(extra)}")
    cfg = ScenarioConfig(scenario=name, model=model, sweep=axes, nm=nm, run=run, source=raw)
    # build every model-level object once to surface errors before any run
    from .scenarios import check_config

    try:
        check_config(cfg)
    except ConfigError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(raw, base_dir=path.parent)
