"""Damping kernels, spectral densities and recurrence-time estimates of finite baths.

With ``gamma(t) = sum_i (g_i^2 / nu_i^2) cos(nu_i t)`` the spectral density is
``J(w) = w * int_0^inf gamma(t) cos(w t) dt``, so a bath mode of frequency
``nu`` occupying a frequency slot ``dnu`` contributes
``J(nu) = (pi/2) g^2 / (nu dnu)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .chain_models import StarModel

__all__ = [
    "SpectralDensityTarget",
    "RecurrenceEstimate",
    "damping_kernel",
    "spectral_density_transform",
    "spectral_density_local",
    "synthesize_star_from_density",
    "recurrence_time_estimate",
    "band_edges",
    "load_tabulated_density",
]

KINDS = ("pivot_power", "offset_power", "normalized_power", "ohmic_semicircle", "tabulated")

# adjacent spacing above this multiple of the median spacing separates two bands
GAP_FACTOR = 5.0


def damping_kernel(star: StarModel, t):
    t = np.asarray(t, dtype=float)
    w = star.gtilde**2 / star.nu**2
    return np.cos(np.multiply.outer(t, star.nu)) @ w


def _hann_cos(c, T):
    """int_0^T cos(c t) (1 + cos(pi t / T)) / 2 dt, valid for any real c."""
    def s(x):
        # sin(x T) / x without the removable singularity
        return T * np.sinc(x * T / np.pi)

    return 0.5 * s(c) + 0.25 * (s(c + np.pi / T) + s(c - np.pi / T))


def spectral_density_transform(star: StarModel, omega, t_window: float, warn: bool = True):
    """Smooth J(omega) from a Hann-tapered cosine transform of the damping kernel.

    The kernel is a finite cosine sum, so the tapered integral over
    ``[0, t_window]`` is evaluated in closed form, term by term.
    """
    if t_window <= 0:
        raise ValueError("t_window must be positive")
    if warn and star.n_modes >= 3:
        horizon = recurrence_time_estimate(star).safe_horizon
        if t_window > horizon:
            warnings.warn(
                f"t_window={t_window:g} exceeds the recurrence horizon {horizon:g}; "
                "the transform resolves individual bath modes",
                stacklevel=2,
            )
    omega = np.asarray(omega, dtype=float)
    w = star.gtilde**2 / star.nu**2
    om = omega[..., None]
    integral = 0.5 * (_hann_cos(star.nu - om, t_window) + _hann_cos(star.nu + om, t_window))
    return omega * (integral @ w)


def _band_slices(nu: np.ndarray) -> list[slice]:
    if nu.size < 3:
        return [slice(0, nu.size)]
    d = np.diff(nu)
    cuts = np.flatnonzero(d > GAP_FACTOR * np.median(d)) + 1
    bounds = np.r_[0, cuts, nu.size]
    return [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:])]


def band_edges(star: StarModel) -> list[tuple[float, float]]:
    """(lowest, highest) frequency of each band of the bath spectrum."""
    return [(float(star.nu[s][0]), float(star.nu[s][-1])) for s in _band_slices(star.nu)]


def _local_spacing(nu: np.ndarray) -> np.ndarray:
    out = np.empty_like(nu)
    for sl in _band_slices(nu):
        band = nu[sl]
        if band.size == 1:
            # isolated mode: fall back to the global median spacing
            out[sl] = np.median(np.diff(nu))
        else:
            out[sl] = np.gradient(band)
    return out


def spectral_density_local(star: StarModel, i: Optional[int] = None):
    """Discretization estimate ``(pi/2) g_i^2 / (nu_i dnu_i)``.

    ``i`` is a 0-based mode index; without it every mode is returned.
    The local spacing is a centered difference within the mode's band.
    """
    if star.n_modes < 2:
        raise ValueError("local spectral density needs at least two bath modes")
    J = 0.5 * np.pi * star.gtilde**2 / (star.nu * _local_spacing(star.nu))
    return J if i is None else float(J[i])


@dataclass(frozen=True)
class SpectralDensityTarget:
    """Analytic or tabulated J(omega) restricted to ``[omega_lo, omega_hi]``.

    kinds:
      pivot_power       k (w / pivot)^s
      offset_power      k (w - omega0)^s
      normalized_power  k ((w - omega0) / (omega_R - omega0))^s
      ohmic_semicircle  k w sqrt(omega_R^2 - w^2) / omega_R
      tabulated         linear interpolation of ``table`` (two columns w, J)
    """

    kind: str
    k: float = 1.0
    omega_lo: float = 0.0
    omega_hi: float = 1.0
    s: float = 1.0
    pivot: Optional[float] = None
    omega0: Optional[float] = None
    omega_R: Optional[float] = None
    table: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown spectral density kind {self.kind!r}; choose from {KINDS}")
        if not 0 <= self.omega_lo < self.omega_hi:
            raise ValueError(f"need 0 <= omega_lo < omega_hi, got [{self.omega_lo}, {self.omega_hi}]")
        if self.k < 0:
            raise ValueError("k must be non-negative")
        if self.kind.endswith("power") and not -2 <= self.s <= 4:
            raise ValueError(f"exponent s={self.s} outside supported range [-2, 4]")
        if self.kind == "pivot_power" and not (self.pivot and self.pivot > 0):
            raise ValueError("pivot_power needs a positive pivot frequency")
        if self.kind in ("offset_power", "normalized_power"):
            if self.omega0 is None or self.omega_lo < self.omega0:
                raise ValueError(f"{self.kind} support must start at or above omega0")
            if self.s < 0 and self.omega_lo <= self.omega0:
                raise ValueError("negative exponents need omega_lo > omega0 (J diverges at omega0)")
        if self.kind == "normalized_power" and not (self.omega_R and self.omega_R > self.omega0):
            raise ValueError("normalized_power needs omega_R > omega0")
        if self.kind == "ohmic_semicircle" and not (self.omega_R and self.omega_hi <= self.omega_R):
            raise ValueError("ohmic_semicircle needs omega_hi <= omega_R")
        if self.kind == "tabulated":
            tab = np.asarray(self.table, dtype=float)
            if tab.ndim != 2 or tab.shape[1] != 2 or tab.shape[0] < 2:
                raise ValueError("tabulated density needs an (n, 2) table with n >= 2")
            if np.any(np.diff(tab[:, 0]) <= 0):
                raise ValueError("tabulated frequencies must increase strictly")
            object.__setattr__(self, "table", tab)

    # convenience constructors, one per density family
    @classmethod
    def pivot_power(cls, k, s, omega_lo, omega_hi, pivot):
        return cls("pivot_power", k=k, s=s, omega_lo=omega_lo, omega_hi=omega_hi, pivot=pivot)

    @classmethod
    def offset_power(cls, k, s, omega0, omega_R, omega_lo=None):
        lo = omega0 if omega_lo is None else omega_lo
        return cls("offset_power", k=k, s=s, omega_lo=lo, omega_hi=omega_R, omega0=omega0, omega_R=omega_R)

    @classmethod
    def normalized_power(cls, k, s, omega0, omega_R, omega_lo=None):
        lo = omega0 if omega_lo is None else omega_lo
        return cls(
            "normalized_power", k=k, s=s, omega_lo=lo, omega_hi=omega_R, omega0=omega0, omega_R=omega_R
        )

    @classmethod
    def ohmic_semicircle(cls, k, omega_R, omega_lo=0.0):
        return cls("ohmic_semicircle", k=k, omega_lo=omega_lo, omega_hi=omega_R, omega_R=omega_R)

    @classmethod
    def tabulated(cls, table, k=1.0):
        tab = np.asarray(table, dtype=float)
        return cls("tabulated", k=k, omega_lo=float(tab[0, 0]), omega_hi=float(tab[-1, 0]), table=tab)

    def __call__(self, omega):
        w = np.asarray(omega, dtype=float)
        inside = (w >= self.omega_lo) & (w <= self.omega_hi)
        # evaluate on a clipped copy so edge-divergent kinds stay finite outside
        wc = np.clip(w, self.omega_lo, self.omega_hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == "pivot_power":
                J = self.k * (wc / self.pivot) ** self.s
            elif self.kind == "offset_power":
                J = self.k * (wc - self.omega0) ** self.s
            elif self.kind == "normalized_power":
                J = self.k * ((wc - self.omega0) / (self.omega_R - self.omega0)) ** self.s
            elif self.kind == "ohmic_semicircle":
                J = self.k * wc * np.sqrt(np.maximum(self.omega_R**2 - wc**2, 0.0)) / self.omega_R
            else:
                J = self.k * np.interp(wc, self.table[:, 0], self.table[:, 1])
        return np.where(inside, J, 0.0)


def load_tabulated_density(path, k: float = 1.0) -> SpectralDensityTarget:
    """Two-column whitespace text table (omega, J); '#' comments allowed."""
    table = np.loadtxt(Path(path), dtype=float, ndmin=2)
    return SpectralDensityTarget.tabulated(table, k=k)


def synthesize_star_from_density(target: SpectralDensityTarget, N: int) -> StarModel:
    """Equally spaced star bath (midpoint grid) reproducing ``target``."""
    if N < 2:
        raise ValueError("need at least two bath modes")
    dnu = (target.omega_hi - target.omega_lo) / N
    nu = target.omega_lo + (np.arange(N) + 0.5) * dnu
    J = target(nu)
    if np.any(~np.isfinite(J)) or np.any(J < 0):
        raise ValueError("target spectral density is negative or non-finite on the grid")
    return StarModel(nu=nu, gtilde=np.sqrt(2 / np.pi * J * nu * dnu))


@dataclass(frozen=True)
class RecurrenceEstimate:
    rephasing: float  # 2 pi / smallest adjacent spacing
    signal: float  # round trip of the fastest wave packet
    v_max: float

    @property
    def safe_horizon(self) -> float:
        return min(self.rephasing, self.signal)

    def as_dict(self) -> dict:
        return {"tau_rephasing": self.rephasing, "tau_signal": self.signal, "safe_horizon": self.safe_horizon}


def recurrence_time_estimate(star: StarModel) -> RecurrenceEstimate:
    """Two recurrence bounds for a finite bath.

    The rephasing time is ``2 pi / min(dnu)``. For the signal estimate each
    band of ``n_b`` modes is indexed by ``q_n = pi n / (n_b + 1)`` in units of
    its own unit cell; the band's wave packets cross ``n_b`` cells and come
    back, taking ``2 n_b / max|dnu/dq|``. The fastest band sets the bound.
    """
    nu = star.nu
    if nu.size < 3:
        raise ValueError("recurrence estimate needs at least three bath modes")
    d = np.diff(nu)
    rephase = 2 * np.pi / d.min() if d.min() > 0 else np.inf
    signal = np.inf
    v_max = 0.0
    for sl in _band_slices(nu):
        band = nu[sl]
        n_b = band.size
        if n_b < 2:
            continue
        v = np.diff(band).max() * (n_b + 1) / np.pi
        v_max = max(v_max, v)
        signal = min(signal, 2 * n_b / v)
    return RecurrenceEstimate(rephasing=float(rephase), signal=float(signal), v_max=float(v_max))
