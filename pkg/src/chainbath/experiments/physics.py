"""Experiment-level operations built on the core modules."""

from __future__ import annotations

from typing import Optional, Union

import numpy as np
from scipy.integrate import trapezoid

from ..chain_models import ChainSpec, FullModel, StarModel, diagonalize_environment
from ..gaussian import GaussianState, excitation_number, fidelity_from_moments, squeezed_vacuum
from ..nonmarkov import ReducedDynamics, time_grid
from ..spectral import _band_slices

__all__ = [
    "filter_bath",
    "averaged_fidelity",
    "constant_mode_density_variant",
    "system_excitation",
    "default_probe",
]


def default_probe(omega_s: float) -> GaussianState:
    """System squeezed vacuum r=1, theta=0 in the system frame."""
    return squeezed_vacuum(1.0, 0.0, omega=omega_s)


def filter_bath(star: StarModel, omega_s: float, delta: float) -> StarModel:
    """Keep only the couplings of modes with |nu - omega_s| < delta.

    Frequencies are untouched so the filtered model has the same shape.
    """
    if delta < 0:
        raise ValueError(f"delta must be non-negative, got {delta}")
    keep = np.abs(star.nu - omega_s) < delta
    return StarModel(star.nu, np.where(keep, star.gtilde, 0.0))


def averaged_fidelity(model_full: FullModel, model_filtered: FullModel, T: float, t_final: float,
                      dt: float = 0.1, probe: Optional[GaussianState] = None) -> float:
    """Time average (trapezoid) of F between the system states of two models started alike."""
    if model_full.n_modes != model_filtered.n_modes:
        raise ValueError("models must have the same number of modes")
    if not np.isclose(model_full.omega_s, model_filtered.omega_s, rtol=0, atol=1e-14):
        raise ValueError("models must share the system frequency")
    if t_final <= 0:
        raise ValueError("t_final must be positive")
    probe = probe or default_probe(model_full.omega_s)
    times = time_grid(t_final, dt)
    ma, ca = ReducedDynamics(model_full, times).system_moments(probe.mean, probe.cov, T)
    mb, cb = ReducedDynamics(model_filtered, times).system_moments(probe.mean, probe.cov, T)
    F = fidelity_from_moments(ma, ca, mb, cb)
    return float(trapezoid(F, times) / times[-1])


def system_excitation(model: FullModel, T: float, t: float,
                      probe: Optional[GaussianState] = None) -> tuple[float, float]:
    """Excitation number of the system at time 0 and at time ``t``."""
    probe = probe or default_probe(model.omega_s)
    rd = ReducedDynamics(model, [0.0, float(t)])
    mean, cov = rd.system_moments(probe.mean, probe.cov, T)
    n = [excitation_number(GaussianState(("S",), mean[i], cov[i]), model.omega_s) for i in range(2)]
    return n[0], n[1]


def _slot_bounds(nu: np.ndarray) -> np.ndarray:
    """Frequency slots around each mode: midpoints inside, half a spacing outside."""
    mid = (nu[1:] + nu[:-1]) / 2
    return np.r_[nu[0] - (nu[1] - nu[0]) / 2, mid, nu[-1] + (nu[-1] - nu[-2]) / 2]


def constant_mode_density_variant(bath: Union[ChainSpec, StarModel]) -> StarModel:
    """Same J(omega) and bands, but equally spaced modes inside every band.

    Each mode carries spectral weight ``int J dnu = (pi/2) g^2 / nu`` over its
    slot. The cumulative weight of the original band is interpolated onto the
    slots of the new equally spaced modes and turned back into couplings, so
    J is preserved slot by slot and the total weight exactly.
    """
    star = diagonalize_environment(bath) if isinstance(bath, ChainSpec) else bath
    nu_new = np.empty_like(star.nu)
    g_new = np.empty_like(star.nu)
    for sl in _band_slices(star.nu):
        band = star.nu[sl]
        if band.size < 2 or band[-1] <= band[0]:
            raise ValueError("constant-density variant needs bands with at least two distinct modes")
        weight = 0.5 * np.pi * star.gtilde[sl] ** 2 / band
        cumulative = np.r_[0.0, np.cumsum(weight)]
        nu_b = np.linspace(band[0], band[-1], band.size)
        slot_weight = np.diff(np.interp(_slot_bounds(nu_b), _slot_bounds(band), cumulative))
        nu_new[sl] = nu_b
        g_new[sl] = np.sqrt(2 / np.pi * nu_b * slot_weight)
    return StarModel(nu_new, g_new)
