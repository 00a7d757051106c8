"""Gaussian states of oscillators: construction, evolution, partial trace, figures of merit.

Covariances follow ``sigma_ij = <{x_i, x_j}>/2 - <x_i><x_j>`` with
``x = (q_1..q_M, p_1..p_M)`` and hbar = 1, so a unit-frequency vacuum has
``sigma = I/2``. Positions and momenta are the physical (unit-mass)
coordinates that the propagators act on; a state "of an oscillator with
frequency omega" is expressed in that oscillator's own frame, e.g. its
ground state has ``diag(1/(2 omega), omega/2)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .chain_models import Propagator, symplectic_form

__all__ = [
    "UnphysicalStateError",
    "GaussianState",
    "vacuum",
    "squeezed_vacuum",
    "two_mode_squeezed_vacuum",
    "thermal_state",
    "bose_occupation",
    "product",
    "evolve",
    "reduce",
    "fidelity",
    "fidelity_from_moments",
    "log_negativity",
    "log_negativity_from_cov",
    "excitation_number",
    "symplectic_eigenvalues",
]

PHYSICAL_TOL = 1e-9


class UnphysicalStateError(ValueError):
    """Covariance violates the uncertainty principle."""


@dataclass(frozen=True)
class GaussianState:
    labels: tuple
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        labels = tuple(self.labels)
        mean = np.array(self.mean, dtype=float)
        cov = np.array(self.cov, dtype=float)
        m = len(labels)
        if len(set(labels)) != m:
            raise ValueError(f"duplicate mode labels: {labels}")
        if mean.shape != (2 * m,) or cov.shape != (2 * m, 2 * m):
            raise ValueError(
                f"{m} modes need mean (2m,) and cov (2m, 2m); got {mean.shape}, {cov.shape}"
            )
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12 * max(1.0, np.abs(cov).max())):
            raise ValueError("covariance matrix is not symmetric")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n_modes(self) -> int:
        return len(self.labels)

    def index(self, label) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown mode label {label!r}; have {self.labels}") from None

    def is_physical(self, tol: float = PHYSICAL_TOL) -> bool:
        return bool(symplectic_eigenvalues(self.cov).min() >= 0.5 - tol)

    def check_physical(self, tol: float = PHYSICAL_TOL) -> "GaussianState":
        nu = symplectic_eigenvalues(self.cov).min()
        if nu < 0.5 - tol:
            raise UnphysicalStateError(f"smallest symplectic eigenvalue {nu:.6g} < 1/2")
        return self


def _frame(omega: float) -> np.ndarray:
    if not omega > 0:
        raise ValueError(f"oscillator frequency must be positive, got {omega}")
    return np.diag([1 / np.sqrt(omega), np.sqrt(omega)])


def symplectic_eigenvalues(cov: np.ndarray) -> np.ndarray:
    """Symplectic spectrum of a (q.., p..)-ordered covariance, ascending."""
    m = cov.shape[0] // 2
    ev = np.linalg.eigvals(1j * symplectic_form(m) @ cov)
    return np.sort(np.abs(ev.real))[::2]


def vacuum(omega: float = 1.0, label="S") -> GaussianState:
    return squeezed_vacuum(0.0, 0.0, omega=omega, label=label)


def squeezed_vacuum(r: float, theta: float, omega: float = 1.0, label="S") -> GaussianState:
    """Ground state of a frequency-``omega`` oscillator squeezed by ``r`` along angle ``theta``.

    In the oscillator's dimensionless quadratures the covariance is
    ``R(theta) diag(e^{-2r}, e^{2r}) R(theta)^T / 2``.
    """
    c, s = np.cos(theta), np.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    base = rot @ np.diag([np.exp(-2 * r), np.exp(2 * r)]) @ rot.T / 2
    D = _frame(omega)
    return GaussianState((label,), np.zeros(2), D @ base @ D)


def two_mode_squeezed_vacuum(
    r: float, omegas: tuple[float, float] = (1.0, 1.0), labels=("S", "A")
) -> GaussianState:
    """Two-mode squeezed vacuum; in quadrature units the correlation block is sinh(2r) diag(1,-1)/2."""
    if r < 0:
        raise ValueError(f"two-mode squeezing must be non-negative, got {r}")
    ch, sh = np.cosh(2 * r) / 2, np.sinh(2 * r) / 2
    # (q1, q2, p1, p2)
    cov = np.array(
        [
            [ch, sh, 0, 0],
            [sh, ch, 0, 0],
            [0, 0, ch, -sh],
            [0, 0, -sh, ch],
        ]
    )
    d = np.array([1 / np.sqrt(omegas[0]), 1 / np.sqrt(omegas[1]), np.sqrt(omegas[0]), np.sqrt(omegas[1])])
    return GaussianState(tuple(labels), np.zeros(4), cov * np.outer(d, d))


def bose_occupation(nu, T):
    """Mean occupation 1/(exp(nu/T) - 1); exactly 0 at T = 0."""
    nu = np.asarray(nu, dtype=float)
    if T < 0:
        raise ValueError(f"temperature must be non-negative, got {T}")
    if T == 0:
        return np.zeros_like(nu)
    return 1.0 / np.expm1(nu / T)


def thermal_state(nu: float, T: float, label="E") -> GaussianState:
    """Gibbs state of a frequency-``nu`` oscillator: ``(nbar + 1/2)`` times its vacuum quadratures."""
    n = float(bose_occupation(nu, T))
    D = _frame(nu)
    return GaussianState((label,), np.zeros(2), (n + 0.5) * D @ D)


def product(states: Iterable[GaussianState]) -> GaussianState:
    """Tensor product of independent Gaussian states, modes concatenated in order."""
    states = list(states)
    labels = sum((s.labels for s in states), ())
    m = len(labels)
    mean = np.zeros(2 * m)
    cov = np.zeros((2 * m, 2 * m))
    pos = 0
    for s in states:
        k = s.n_modes
        idx = np.r_[pos : pos + k, m + pos : m + pos + k]
        mean[idx] = s.mean
        cov[np.ix_(idx, idx)] = s.cov
        pos += k
    return GaussianState(labels, mean, cov)


def _rows(state: GaussianState, keep: Sequence) -> np.ndarray:
    pos = np.array([state.index(lbl) for lbl in keep], dtype=int)
    return np.r_[pos, pos + state.n_modes]


def reduce(state: GaussianState, keep: Sequence) -> GaussianState:
    """Partial trace onto the modes in ``keep`` (in the given order)."""
    keep = list(keep)
    if not keep:
        raise ValueError("keep must name at least one mode")
    idx = _rows(state, keep)
    return GaussianState(tuple(keep), state.mean[idx], state.cov[np.ix_(idx, idx)])


def evolve(state: GaussianState, prop: Propagator) -> GaussianState:
    """Apply the propagator to the first modes of ``state``; any extra modes (ancillas) stay put."""
    n = prop.qq.shape[0]
    m = state.n_modes
    if m < n:
        raise ValueError(f"propagator acts on {n} modes but the state has only {m}")
    S = np.eye(2 * m)
    idx = np.r_[0:n, m : m + n]
    S[np.ix_(idx, idx)] = prop.matrix()
    cov = S @ state.cov @ S.T
    return GaussianState(state.labels, S @ state.mean, (cov + cov.T) / 2)


def fidelity_from_moments(mean_a, cov_a, mean_b, cov_b):
    """Uhlmann fidelity Tr sqrt(sqrt(rho_a) rho_b sqrt(rho_a)) of single-mode Gaussians.

    Vectorized over leading axes of ``(..., 2)`` means and ``(..., 2, 2)``
    covariances. Uses the closed form for the squared fidelity
    ``exp(-d.(Va+Vb)^-1.d / 2) / (sqrt(Delta + Lam) - sqrt(Lam))`` with
    ``Delta = det(Va + Vb)`` and ``Lam = 4 (det Va - 1/4)(det Vb - 1/4)``.
    """
    cov_a = np.asarray(cov_a, float)
    cov_b = np.asarray(cov_b, float)
    total = cov_a + cov_b
    delta = np.linalg.det(total)
    lam = 4 * (np.linalg.det(cov_a) - 0.25) * (np.linalg.det(cov_b) - 0.25)
    lam = np.maximum(lam, 0.0)
    # sqrt(D + L) - sqrt(L) = D / (sqrt(D + L) + sqrt(L)) avoids cancellation
    denom = delta / (np.sqrt(delta + lam) + np.sqrt(lam))
    d = np.asarray(mean_a, float) - np.asarray(mean_b, float)
    if np.any(d):
        quad = np.einsum("...i,...i->...", d, np.linalg.solve(total, d[..., None])[..., 0])
    else:
        quad = 0.0
    f2 = np.exp(-0.5 * quad) / denom
    return np.clip(np.sqrt(f2), 0.0, 1.0)


def fidelity(a: GaussianState, b: GaussianState) -> float:
    if a.n_modes != 1 or b.n_modes != 1:
        raise ValueError("fidelity is implemented for single-mode states only")
    a.check_physical()
    b.check_physical()
    return float(fidelity_from_moments(a.mean, a.cov, b.mean, b.cov))


def log_negativity_from_cov(cov):
    """Logarithmic negativity (natural log) of two-mode covariances.

    ``cov`` has shape ``(..., 4, 4)`` in (q1, q2, p1, p2) ordering. The
    smallest symplectic eigenvalue of the partial transpose follows from the
    invariants ``Delta~ = det A + det B - 2 det C`` and ``det sigma``.
    """
    cov = np.asarray(cov, float)
    A = cov[..., [0, 2]][..., [0, 2], :]
    B = cov[..., [1, 3]][..., [1, 3], :]
    # rows (q2, p2), cols (q1, p1): the transpose of the cross block, same determinant
    C = cov[..., [0, 2]][..., [1, 3], :]
    delta_pt = np.linalg.det(A) + np.linalg.det(B) - 2 * np.linalg.det(C)
    det = np.linalg.det(cov)
    disc = np.maximum(delta_pt**2 - 4 * det, 0.0)
    nu_minus = np.sqrt(np.maximum((delta_pt - np.sqrt(disc)) / 2, 0.0))
    with np.errstate(divide="ignore"):
        return np.maximum(0.0, -np.log(2 * nu_minus))


def log_negativity(state: GaussianState) -> float:
    if state.n_modes != 2:
        raise ValueError("log_negativity needs a two-mode state")
    state.check_physical()
    return float(log_negativity_from_cov(state.cov))


def excitation_number(state: GaussianState, omega: float) -> float:
    """<H>/omega for H = (p^2 + omega^2 q^2)/2, zero-point 1/2 included."""
    if state.n_modes != 1:
        raise ValueError("excitation_number needs a single-mode state")
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega}")
    q, p = state.mean
    return float(((state.cov[1, 1] + p**2) + omega**2 * (state.cov[0, 0] + q**2)) / (2 * omega))
