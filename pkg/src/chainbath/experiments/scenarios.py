"""Scenario registry: defaults, output columns and the per-cell computation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

from ..chain_models import (
    StarModel,
    assemble_full_system,
    build_custom_chain,
    build_dimer_chain,
    diagonalize_environment,
)
from ..nonmarkov import BlpGrid, ReducedDynamics, blp_measure, rhp_measure, time_grid
from ..spectral import (
    SpectralDensityTarget,
    load_tabulated_density,
    recurrence_time_estimate,
    spectral_density_transform,
    synthesize_star_from_density,
)
from .physics import averaged_fidelity, constant_mode_density_variant, filter_bath, system_excitation

__all__ = ["Scenario", "SCENARIOS", "build_star", "build_grid", "cell_params", "compute_cell", "check_config"]

COMMON_COLUMNS = ("t_final", "tau_rephasing", "tau_signal", "status")

DIMER_WIDE_GAP = dict(kind="dimer", N=40, omega0=0.5, g=0.2, h=0.05, k=0.001, omega_s=0.7)
DIMER_FILTER = dict(kind="dimer", N=50, omega0=0.3, g=0.1, h=0.05, k=0.005, omega_s=0.65)
DIMER_THERMAL = dict(kind="dimer", N=50, omega0=0.3, g=0.1, h=0.05, k=0.001, omega_s=0.25)


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    observables: tuple
    compute: Callable
    defaults: dict
    required_axes: tuple = ()
    notes: str = ""

    @property
    def columns(self) -> tuple:
        return self.observables + COMMON_COLUMNS


# ---------------------------------------------------------------- model building


def _model_key(p: dict) -> tuple:
    keys = ("kind", "N", "omega0", "g", "h", "k", "couplings", "coupling_base", "coupling_slope",
            "density", "s", "omega_lo", "omega_hi", "pivot", "density_omega0", "omega_R", "table",
            "constant_density", "omega_s")
    return tuple((k, tuple(p[k]) if isinstance(p.get(k), list) else p.get(k)) for k in keys)


def _density_target(p: dict) -> SpectralDensityTarget:
    kind = p.get("density", "pivot_power")
    k = p["k"]
    if kind == "pivot_power":
        pivot = p.get("pivot") or p["omega_s"]
        return SpectralDensityTarget.pivot_power(k, p["s"], p["omega_lo"], p["omega_hi"], pivot)
    if kind == "offset_power":
        return SpectralDensityTarget.offset_power(k, p["s"], p["density_omega0"], p["omega_R"], p.get("omega_lo"))
    if kind == "normalized_power":
        return SpectralDensityTarget.normalized_power(
            k, p["s"], p["density_omega0"], p["omega_R"], p.get("omega_lo")
        )
    if kind == "ohmic_semicircle":
        return SpectralDensityTarget.ohmic_semicircle(k, p["omega_R"], p.get("omega_lo") or 0.0)
    if kind == "tabulated":
        return load_tabulated_density(p["table"], k=k)
    raise ValueError(f"unknown density kind {kind!r}")


def build_star(p: dict) -> StarModel:
    return _build_star(_model_key(p))


@lru_cache(maxsize=64)
def _build_star(key: tuple) -> StarModel:
    p = dict(key)
    kind = p["kind"]
    if kind == "dimer":
        chain = build_dimer_chain(int(p["N"]), p["omega0"], p["g"], p["h"], p["k"])
    elif kind == "custom":
        if p.get("couplings") is not None:
            bonds = list(p["couplings"])
        else:
            n = int(p["N"])
            bonds = [p["coupling_base"] + p["coupling_slope"] * i for i in range(1, n)]
        chain = build_custom_chain(p["omega0"], bonds, p["k"])
    elif kind == "star":
        return synthesize_star_from_density(_density_target(p), int(p["N"]))
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    if p.get("constant_density"):
        return constant_mode_density_variant(chain)
    return diagonalize_environment(chain)


def build_grid(nm: dict) -> BlpGrid:
    grid = nm.get("grid", "default")
    if isinstance(grid, dict):
        return BlpGrid(**{k: tuple(v) if isinstance(v, list) else v for k, v in grid.items()})
    return {"default": BlpGrid.default, "star_scan": BlpGrid.star_scan, "thorough": BlpGrid.thorough}[grid]()


def _t_final(p: dict, star: StarModel) -> tuple[float, dict]:
    rec = recurrence_time_estimate(star)
    t = p.get("t_final", "horizon")
    t = rec.safe_horizon if t == "horizon" else float(t)
    return t, {"tau_rephasing": rec.rephasing, "tau_signal": rec.signal}


@lru_cache(maxsize=8)
def _dynamics(key: tuple, t_final: float, dt: float) -> ReducedDynamics:
    p = dict(key)
    model = assemble_full_system(_build_star(key), p["omega_s"])
    return ReducedDynamics(model, time_grid(t_final, dt))


def _scaled_k(p: dict, scale: float) -> dict:
    q = dict(p)
    q["k"] = p["k"] * scale
    return q


# ---------------------------------------------------------------- cell computations


def _gallery(p, nm):
    star = build_star(p)
    t, extra = _t_final(p, star)
    J = float(spectral_density_transform(star, p["omega"], t, warn=False))
    return {"J_transform": J, "t_final": t, **extra}


def _filter_map(p, nm):
    star = build_star(p)
    t, extra = _t_final(p, star)
    ws = p["omega_s"]
    full = assemble_full_system(star, ws)
    filtered = assemble_full_system(filter_bath(star, ws, p["delta"]), ws)
    F = averaged_fidelity(full, filtered, p["T"], t, p["dt"])
    return {"avg_fidelity": F, "t_final": t, **extra}


def _excitation(p, nm):
    star = build_star(p)
    t, extra = _t_final(p, star)
    n0, n1 = system_excitation(assemble_full_system(star, p["omega_s"]), p["T"], t)
    return {"n_initial": n0, "n_final": n1, "t_final": t, **extra}


def _nm(p, nm, blp=True, rhp=False, J=False):
    measures = nm.get("measures", ["blp", "rhp"])
    blp = blp and "blp" in measures
    rhp = rhp and "rhp" in measures
    star = build_star(p)
    t, extra = _t_final(p, star)
    out = {"t_final": t, **extra}
    if blp:
        dyn = _dynamics(_model_key(p), t, p["dt"])
        res = blp_measure(dyn.model, build_grid(nm), T=p["T"], dynamics=dyn)
        out["M_BLP"] = res.value
        out["log_M_BLP"] = math.log(res.value) if res.value > 0 else float("-inf")
    if rhp:
        q = _scaled_k(p, float(nm.get("rhp_k_scale", 1.0)))
        dyn = _dynamics(_model_key(q), t, p["dt"])
        res = rhp_measure(dyn.model, float(p.get("r_probe", nm.get("r_probe", 1.0))), T=p["T"], dynamics=dyn)
        out["M_RHP"] = res.value
        out["RHP_status"] = res.meta["status"]
    if J:
        out["J"] = float(spectral_density_transform(star, p["omega_s"], t, warn=False))
    return out


def _nm_both(p, nm):
    return _nm(p, nm, blp=True, rhp=True, J=True)


def _nm_coupling(p, nm):
    return _nm(p, nm, blp=True, rhp=True)


def _nm_blp(p, nm):
    res = _nm(p, nm)
    res.pop("log_M_BLP", None)
    return res


def _nm_blp_log(p, nm):
    return _nm(p, nm)


_RUN = {"T": 0.0, "t_final": "horizon", "dt": 0.1, "output": "results", "workers": 1}

SCENARIOS: dict[str, Scenario] = {
    s.name: s
    for s in [
        Scenario(
            "spectral_density_gallery",
            "J(omega) from the windowed damping-kernel transform over a frequency axis",
            ("J_transform",),
            _gallery,
            {
                "model": dict(kind="dimer", N=100, omega0=0.2, g=0.1, h=0.05, k=0.0075, omega_s=0.5),
                "sweep": [{"name": "omega", "lo": 0.1, "hi": 0.8, "step": 0.0025}],
                "run": dict(_RUN),
            },
            required_axes=("omega",),
        ),
        Scenario(
            "resonance_filter_map",
            "time-averaged fidelity between full and bandwidth-filtered dynamics over (k, delta)",
            ("avg_fidelity",),
            _filter_map,
            {
                "model": dict(DIMER_FILTER, delta=0.1),
                "sweep": [
                    {"name": "k", "lo": 0.001, "hi": 0.02, "step": 0.001},
                    {"name": "delta", "lo": 0.0, "hi": 0.4, "step": 0.01},
                ],
                "run": dict(_RUN, t_final=400.0),
            },
        ),
        Scenario(
            "excitation_sweep",
            "system excitation number at t_final versus system frequency",
            ("n_initial", "n_final"),
            _excitation,
            {
                "model": dict(DIMER_FILTER),
                "sweep": [
                    {"name": "k", "values": [0.005, 0.025]},
                    {"name": "omega_s", "lo": 0.2, "hi": 0.7, "step": 0.005},
                ],
                "run": dict(_RUN, t_final=400.0),
            },
        ),
        Scenario(
            "nm_vs_omega_s",
            "BLP and RHP non-Markovianity and J(omega_s) versus system frequency",
            ("M_BLP", "log_M_BLP", "M_RHP", "RHP_status", "J"),
            _nm_both,
            {
                "model": dict(DIMER_WIDE_GAP),
                "sweep": [{"name": "omega_s", "lo": 0.42, "hi": 0.95, "step": 0.005}],
                "nm": {"grid": "default", "r_probe": 1.0, "rhp_k_scale": 1.0},
                "run": dict(_RUN, t_final=700.0),
            },
        ),
        Scenario(
            "nm_temperature_map",
            "log M_BLP over (temperature, system frequency)",
            ("M_BLP", "log_M_BLP"),
            _nm_blp_log,
            {
                "model": dict(DIMER_THERMAL),
                "sweep": [
                    {"name": "T", "lo": 0.0, "hi": 10.0, "step": 1.0},
                    {"name": "omega_s", "lo": 0.2, "hi": 0.7, "step": 0.025},
                ],
                "nm": {"grid": "thorough"},
                "run": dict(_RUN),
            },
        ),
        Scenario(
            "nm_temperature_cut",
            "M_BLP versus temperature at fixed system frequencies (in gap and in band)",
            ("M_BLP",),
            _nm_blp,
            {
                "model": dict(DIMER_THERMAL),
                "sweep": [
                    {"name": "omega_s", "values": [0.25, 0.375]},
                    {"name": "T", "lo": 0.0, "hi": 10.0, "step": 0.5},
                ],
                "nm": {"grid": "thorough"},
                "run": dict(_RUN),
            },
        ),
        Scenario(
            "nm_coupling_sweep",
            "BLP and RHP versus system-bath coupling on a homogeneous chain",
            ("M_BLP", "log_M_BLP", "M_RHP", "RHP_status"),
            _nm_coupling,
            {
                "model": dict(kind="dimer", N=50, omega0=0.3, g=0.1, h=0.1, k=0.001, omega_s=0.575),
                "sweep": [{"name": "k", "values": [0.001, 0.002, 0.005, 0.01, 0.02, 0.03]}],
                "nm": {"grid": "default", "r_probe": 1.0},
                "run": dict(_RUN),
            },
        ),
        Scenario(
            "nm_cutoff_sweep",
            "M_BLP for an Ohmic star bath with semicircular cutoff versus its cutoff omega_R",
            ("M_BLP",),
            _nm_blp,
            {
                "model": dict(kind="star", density="ohmic_semicircle", N=40, k=1e-5, omega_R=0.6, omega_s=0.4),
                "sweep": [{"name": "omega_R", "values": [0.5, 0.6, 0.8, 1.0, 1.2]}],
                "nm": {"grid": "star_scan"},
                "run": dict(_RUN),
            },
        ),
        Scenario(
            "nm_exponent_sweep",
            "M_BLP for algebraic star densities k (w/omega_s)^s on a sharp band versus s",
            ("M_BLP",),
            _nm_blp,
            {
                "model": dict(kind="star", density="pivot_power", N=40, k=1e-4, s=1.0,
                              omega_lo=0.25, omega_hi=0.75, omega_s=0.5),
                "sweep": [
                    {"name": "T", "values": [0.0, 0.25, 0.5, 1.0]},
                    {"name": "s", "values": [-2.0, -1.0, 0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]},
                ],
                "nm": {"grid": "star_scan"},
                "run": dict(_RUN),
            },
        ),
        Scenario(
            "sm_parametrization_sweep",
            "M_BLP for offset/normalized power-law densities versus s",
            ("M_BLP",),
            _nm_blp,
            {
                "model": dict(kind="star", density="normalized_power", N=40, k=0.01, s=1.0,
                              density_omega0=3.0, omega_R=5.0, omega_s=4.0),
                "sweep": [{"name": "s", "values": [0.5, 1.0, 2.0]}],
                "nm": {"grid": "star_scan"},
                "run": dict(_RUN),
            },
        ),
    ]
}


def cell_params(cfg, coords: dict) -> dict:
    p = dict(cfg.model)
    for key in ("T", "t_final", "dt"):
        if key in cfg.run:
            p[key] = cfg.run[key]
    if "omega" in cfg.run:
        p["omega"] = cfg.run["omega"]
    if "r_probe" in cfg.nm:
        p["r_probe"] = cfg.nm["r_probe"]
    p.update(coords)
    if "N" in coords:
        p["N"] = int(coords["N"])
    return p


def compute_cell(scenario: str, params: dict, nm: dict) -> dict:
    return SCENARIOS[scenario].compute(params, nm)


def check_config(cfg) -> None:
    """Build the bath of the first sweep cell and the BLP grid; raises on bad parameters."""
    coords = {a.name: a.values[0] for a in cfg.sweep}
    p = cell_params(cfg, coords)
    needed = {"spectral_density_gallery": ("omega",), "resonance_filter_map": ("delta",)}
    for key in needed.get(cfg.scenario, ()):
        if key not in p:
            raise ValueError(f"scenario {cfg.scenario} needs parameter {key!r}")
    build_star(p)
    build_grid(cfg.nm)
