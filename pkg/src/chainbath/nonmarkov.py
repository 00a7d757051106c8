"""BLP (fidelity back-flow) and RHP (entanglement non-monotonicity) measures.

Every trajectory starts from a product of a system state and a thermal bath
(Gibbs state of each star eigenmode). Only the system rows of the
propagator are needed, so they are tabulated once per time grid in
:class:`ReducedDynamics` and reused for every initial system state.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .chain_models import FullModel
from .gaussian import (
    bose_occupation,
    fidelity_from_moments,
    log_negativity_from_cov,
    squeezed_vacuum,
    two_mode_squeezed_vacuum,
)
from .spectral import recurrence_time_estimate

__all__ = [
    "DECREASE_EPS",
    "BlpGrid",
    "NmResult",
    "ReducedDynamics",
    "time_grid",
    "decrease_sum",
    "increase_sum",
    "fidelity_trajectory",
    "blp_measure",
    "rhp_measure",
    "default_t_final",
]

DECREASE_EPS = 1e-12


def time_grid(t_final: float, dt: float) -> np.ndarray:
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if t_final < 0:
        raise ValueError(f"t_final must be non-negative, got {t_final}")
    n = int(np.floor(t_final / dt + 1e-9))
    return dt * np.arange(n + 1)


def default_t_final(model: FullModel) -> float:
    """Safe recurrence horizon of the model's bath."""
    return recurrence_time_estimate(model.star).safe_horizon


class ReducedDynamics:
    """System-mode dynamics of a full model tabulated on a time grid.

    ``sys_map[t]`` is the 2x2 block mapping initial system (q, p) onto
    system (q, p) at time t; the bath enters only through the additive
    ``bath_noise(T)`` covariance.
    """

    def __init__(self, model: FullModel, times):
        self.model = model
        self.times = np.asarray(times, dtype=float)
        f, O = model.f, model.O
        s = model.system_index
        ft = np.multiply.outer(self.times, f)
        cos, sin = np.cos(ft), np.sin(ft)
        row = O[s]
        # system rows of QQ, QP, PQ, PP for every time: shape (n_t, n_modes)
        self._qq = (row * cos) @ O.T
        self._qp = (row * sin / f) @ O.T
        self._pq = -(row * sin * f) @ O.T
        self._pp = self._qq
        self.sys_map = np.stack(
            [
                np.stack([self._qq[:, s], self._qp[:, s]], axis=-1),
                np.stack([self._pq[:, s], self._pp[:, s]], axis=-1),
            ],
            axis=-2,
        )
        self._noise_cache: dict[float, np.ndarray] = {}

    def bath_noise(self, T: float) -> np.ndarray:
        """(n_t, 2, 2) system covariance contributed by the initial thermal bath."""
        T = float(T)
        if T not in self._noise_cache:
            nu = self.model.star.nu
            n = self.model.star.n_modes
            occ = bose_occupation(nu, T) + 0.5
            var_q, var_p = occ / nu, occ * nu
            qq, qp, pq, pp = self._qq[:, :n], self._qp[:, :n], self._pq[:, :n], self._pp[:, :n]
            cqq = np.einsum("tj,tj->t", qq * var_q, qq) + np.einsum("tj,tj->t", qp * var_p, qp)
            cpp = np.einsum("tj,tj->t", pq * var_q, pq) + np.einsum("tj,tj->t", pp * var_p, pp)
            cqp = np.einsum("tj,tj->t", qq * var_q, pq) + np.einsum("tj,tj->t", qp * var_p, pp)
            self._noise_cache[T] = np.stack(
                [np.stack([cqq, cqp], -1), np.stack([cqp, cpp], -1)], axis=-2
            )
        return self._noise_cache[T]

    def system_moments(self, mean0, cov0, T: float):
        """Mean (n_t, 2) and covariance (n_t, 2, 2) of the system at every grid time."""
        M = self.sys_map
        mean = M @ np.asarray(mean0, float)
        cov = M @ np.asarray(cov0, float) @ np.swapaxes(M, -1, -2) + self.bath_noise(T)
        return mean, cov

    def system_ancilla_cov(self, cov0, T: float) -> np.ndarray:
        """(n_t, 4, 4) covariance of system + idle ancilla, ordering (qS, qA, pS, pA)."""
        cov0 = np.asarray(cov0, float)
        sys_idx, anc_idx = [0, 2], [1, 3]
        M = self.sys_map
        out = np.empty((self.times.size, 4, 4))
        ss = cov0[np.ix_(sys_idx, sys_idx)]
        sa = cov0[np.ix_(sys_idx, anc_idx)]
        out[np.ix_(range(self.times.size), sys_idx, sys_idx)] = (
            M @ ss @ np.swapaxes(M, -1, -2) + self.bath_noise(T)
        )
        cross = M @ sa
        out[np.ix_(range(self.times.size), sys_idx, anc_idx)] = cross
        out[np.ix_(range(self.times.size), anc_idx, sys_idx)] = np.swapaxes(cross, -1, -2)
        out[np.ix_(range(self.times.size), anc_idx, anc_idx)] = cov0[np.ix_(anc_idx, anc_idx)]
        return out


def decrease_sum(series, eps: float = DECREASE_EPS) -> float:
    """Total drop accumulated over the steps where ``series`` falls by more than ``eps``."""
    d = np.diff(np.asarray(series, float))
    return float(np.sum(-d[d < -eps]))


def increase_sum(series, eps: float = DECREASE_EPS) -> float:
    d = np.diff(np.asarray(series, float))
    return float(d[d > eps].sum())


def _frange(lo: float, hi: float, step: float) -> np.ndarray:
    if step <= 0:
        raise ValueError("grid steps must be positive")
    if hi < lo:
        raise ValueError(f"empty range [{lo}, {hi}]")
    n = int(np.floor((hi - lo) / step + 1e-9))
    return lo + step * np.arange(n + 1)


@dataclass(frozen=True)
class BlpGrid:
    """Pairs of single-mode squeezed vacua: (r1, theta1) against a (r2, theta2) lattice."""

    r1_list: tuple = (1.0,)
    theta1: float = 0.0
    r2_range: tuple = (0.5, 1.0, 0.5)
    theta2_range: tuple = (0.0, np.pi / 2, np.pi / 4)

    def __post_init__(self):
        if not self.r1_list:
            raise ValueError("r1_list must not be empty")
        object.__setattr__(self, "r1_list", tuple(float(r) for r in self.r1_list))
        self.r2_values()
        self.theta2_values()

    @classmethod
    def default(cls) -> "BlpGrid":
        return cls()

    @classmethod
    def star_scan(cls) -> "BlpGrid":
        """r2 in [0.25, 1] step 0.25, used for the star-bath scans."""
        return cls(r2_range=(0.25, 1.0, 0.25))

    @classmethod
    def thorough(cls, r2_step: float = 0.1, theta2_step: float = np.pi / 10) -> "BlpGrid":
        return cls(r1_list=(1 / 3, 1.0), r2_range=(0.0, 2.0, r2_step), theta2_range=(0.0, np.pi, theta2_step))

    def r2_values(self) -> np.ndarray:
        return _frange(*self.r2_range)

    def theta2_values(self) -> np.ndarray:
        return _frange(*self.theta2_range)

    def pairs(self) -> list[tuple[float, float, float, float]]:
        """(r1, theta1, r2, theta2) tuples; identical pairs are kept (they contribute 0)."""
        return [
            (r1, self.theta1, float(r2), float(th2))
            for r1 in self.r1_list
            for r2 in self.r2_values()
            for th2 in self.theta2_values()
        ]

    def describe(self) -> dict:
        return {
            "r1_list": list(self.r1_list),
            "theta1": self.theta1,
            "r2_range": list(self.r2_range),
            "theta2_range": list(self.theta2_range),
            "n_pairs": len(self.pairs()),
        }


@dataclass
class NmResult:
    value: float
    argmax: object
    trajectory: np.ndarray
    meta: dict = field(default_factory=dict)


def _resolve_horizon(model: FullModel, t_final: Optional[float]) -> float:
    horizon = default_t_final(model)
    if t_final is None:
        return horizon
    if t_final > horizon * (1 + 1e-9):
        warnings.warn(
            f"t_final={t_final:g} exceeds the safe recurrence horizon {horizon:g}",
            stacklevel=3,
        )
    return float(t_final)


def fidelity_trajectory(model: FullModel, pair, T: float, t_final: float, dt: float = 0.1,
                        dynamics: Optional[ReducedDynamics] = None) -> np.ndarray:
    """F(rho_1(t), rho_2(t)) for two system states sharing one thermal bath.

    ``pair`` holds two single-mode :class:`GaussianState` objects expressed in
    the system frame.
    """
    a, b = pair
    if a.n_modes != 1 or b.n_modes != 1:
        raise ValueError("fidelity_trajectory needs two single-mode system states")
    if dynamics is None:
        dynamics = ReducedDynamics(model, time_grid(t_final, dt))
    ma, ca = dynamics.system_moments(a.mean, a.cov, T)
    mb, cb = dynamics.system_moments(b.mean, b.cov, T)
    return fidelity_from_moments(ma, ca, mb, cb)


def blp_measure(model: FullModel, grid: Optional[BlpGrid] = None, T: float = 0.0,
                t_final: Optional[float] = None, dt: float = 0.1,
                dynamics: Optional[ReducedDynamics] = None) -> NmResult:
    """Largest accumulated fidelity decrease over the grid of state pairs.

    The integral of dF/dt over its negative stretches is reported as a
    positive magnitude (larger means more non-Markovian).
    """
    grid = grid or BlpGrid.default()
    pairs = grid.pairs()
    if not pairs:
        raise ValueError("BLP grid is empty")
    if dynamics is None:
        t_final = _resolve_horizon(model, t_final)
        dynamics = ReducedDynamics(model, time_grid(t_final, dt))
    ws = model.omega_s
    cache = {}

    def system_state(r, th):
        key = (r, th)
        if key not in cache:
            st = squeezed_vacuum(r, th, omega=ws)
            cache[key] = dynamics.system_moments(st.mean, st.cov, T)
        return cache[key]

    best, best_pair, best_traj = -1.0, None, None
    values = []
    for r1, th1, r2, th2 in pairs:
        ma, ca = system_state(r1, th1)
        mb, cb = system_state(r2, th2)
        F = fidelity_from_moments(ma, ca, mb, cb)
        v = decrease_sum(F)
        values.append(v)
        if v > best:
            best, best_pair, best_traj = v, (r1, th1, r2, th2), F
    times = dynamics.times
    return NmResult(
        value=best,
        argmax=best_pair,
        trajectory=best_traj,
        meta={
            "measure": "BLP",
            "t_final": float(times[-1]),
            "dt": float(times[1] - times[0]) if times.size > 1 else dt,
            "T": T,
            "grid": grid.describe(),
            "pair_values": values,
            "model": model.fingerprint(),
        },
    )


def rhp_measure(model: FullModel, r_probe: float = 1.0, T: float = 0.0,
                t_final: Optional[float] = None, dt: float = 0.1,
                dynamics: Optional[ReducedDynamics] = None) -> NmResult:
    """Entanglement non-monotonicity of a system-ancilla two-mode squeezed probe.

    The integral of ``|dE/dt|`` minus the net loss ``E(0) - E(t_f)`` telescopes
    to twice the summed increases of E(t), so a monotone decay scores 0;
    increases below ``DECREASE_EPS`` are treated as round-off. A zero
    value is inconclusive and flagged in ``meta['status']``.
    """
    if not r_probe > 0:
        raise ValueError("r_probe must be positive")
    if dynamics is None:
        t_final = _resolve_horizon(model, t_final)
        dynamics = ReducedDynamics(model, time_grid(t_final, dt))
    probe = two_mode_squeezed_vacuum(r_probe, omegas=(model.omega_s, 1.0))
    E = log_negativity_from_cov(dynamics.system_ancilla_cov(probe.cov, T))
    value = 2 * increase_sum(E)
    times = dynamics.times
    return NmResult(
        value=value,
        argmax=r_probe,
        trajectory=E,
        meta={
            "measure": "RHP",
            "status": "positive" if value > 0 else "zero-inconclusive",
            "t_final": float(times[-1]),
            "dt": float(times[1] - times[0]) if times.size > 1 else dt,
            "T": T,
            "r_probe": r_probe,
            "log_base": "e",
            "model": model.fingerprint(),
        },
    )
