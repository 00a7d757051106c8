"""Chain and star environments, full normal-mode diagonalization, propagators.

Units: hbar = k_B = 1 and all masses are 1. Frequencies and couplings are
dimensionless numbers in one fixed (arbitrary) unit.

Mode ordering of the full model follows the star picture: bath eigenmodes
``0..N-1`` first, the system oscillator last (index ``N``). Phase-space
vectors are ordered ``(q_0..q_N, p_0..p_N)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "InstabilityError",
    "ChainSpec",
    "StarModel",
    "FullModel",
    "Propagator",
    "build_dimer_chain",
    "build_custom_chain",
    "diagonalize_environment",
    "assemble_full_system",
    "propagator",
    "stability_margin",
    "symplectic_form",
]

# smallest eigenvalue must exceed this fraction of the largest one
PD_RTOL = 1e-12


class InstabilityError(ValueError):
    """A quadratic potential matrix is not positive definite."""


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def _eigh_fixed_sign(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenpairs with each column's largest-|.| entry made positive."""
    w, v = np.linalg.eigh(mat)
    idx = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[idx, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    return w, v * signs


def _check_positive(w: np.ndarray, what: str) -> None:
    scale = max(float(np.max(np.abs(w))), np.finfo(float).tiny)
    if w[0] < PD_RTOL * scale:
        raise InstabilityError(
            f"{what} is not positive definite: smallest eigenvalue {w[0]:.6g} "
            f"(largest {w[-1]:.6g})"
        )


@dataclass(frozen=True)
class ChainSpec:
    """Real-space harmonic chain with the system attached to site 1.

    ``couplings[i]`` is the spring between sites ``i`` and ``i+1``; the
    on-site frequencies are derived so that every bond stiffens both ends.
    The system coupling ``k`` does not stiffen site 1.
    """

    omega0: float
    couplings: np.ndarray
    k: float
    onsite_freqs: np.ndarray = field(init=False)

    def __post_init__(self):
        c = _frozen(self.couplings)
        if c.ndim != 1:
            raise ValueError("couplings must be a 1-d sequence")
        if np.any(c < 0):
            raise ValueError("chain couplings must be non-negative")
        # omega0 = 0 is left to the positive-definiteness check, which names the eigenvalue
        if not self.omega0 >= 0:
            raise ValueError(f"omega0 must be non-negative, got {self.omega0}")
        if self.k < 0:
            raise ValueError(f"system coupling k must be non-negative, got {self.k}")
        object.__setattr__(self, "couplings", c)
        stiff = np.zeros(c.size + 1)
        stiff[:-1] += c
        stiff[1:] += c
        object.__setattr__(self, "onsite_freqs", _frozen(np.sqrt(self.omega0**2 + stiff)))
        # fails loudly on unstable chains
        _check_positive(np.linalg.eigvalsh(self.potential_matrix()), "chain potential matrix A")

    @property
    def n_modes(self) -> int:
        return self.couplings.size + 1

    def connection_matrix(self) -> np.ndarray:
        c = self.couplings
        return np.diag(c, 1) + np.diag(c, -1)

    def potential_matrix(self) -> np.ndarray:
        """A with H_E = p.p/2 + q.A.q."""
        return np.diag(self.onsite_freqs**2) / 2 - self.connection_matrix() / 2


@dataclass(frozen=True)
class StarModel:
    """Independent bath modes ``nu`` each coupled to the system with ``gtilde``."""

    nu: np.ndarray
    gtilde: np.ndarray
    K: Optional[np.ndarray] = None

    def __post_init__(self):
        nu = _frozen(self.nu)
        g = _frozen(self.gtilde)
        if nu.ndim != 1 or nu.shape != g.shape:
            raise ValueError("nu and gtilde must be 1-d arrays of equal length")
        if nu.size == 0 or np.any(nu <= 0):
            raise ValueError("bath frequencies must be strictly positive")
        if np.any(np.diff(nu) < 0):
            raise ValueError("bath frequencies must be sorted ascending")
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "gtilde", g)
        if self.K is not None:
            object.__setattr__(self, "K", _frozen(self.K))

    @property
    def n_modes(self) -> int:
        return self.nu.size

    def with_couplings(self, gtilde) -> "StarModel":
        return StarModel(self.nu, gtilde, self.K)


@dataclass(frozen=True)
class FullModel:
    """System + star bath, diagonalized: ``O.T @ B @ O = diag(f**2 / 2)``."""

    omega_s: float
    star: StarModel
    f: np.ndarray
    O: np.ndarray

    @property
    def n_modes(self) -> int:
        """Number of oscillators including the system."""
        return self.f.size

    @property
    def system_index(self) -> int:
        return self.f.size - 1

    def coupling_matrix(self) -> np.ndarray:
        """B with H = p.p/2 + q.B.q."""
        return _coupling_matrix(self.star, self.omega_s)

    def fingerprint(self) -> dict:
        return {
            "omega_s": float(self.omega_s),
            "n_bath": int(self.star.n_modes),
            "nu_min": float(self.star.nu[0]),
            "nu_max": float(self.star.nu[-1]),
            "sum_g2": float(np.sum(self.star.gtilde**2)),
        }


@dataclass(frozen=True)
class Propagator:
    """Heisenberg-picture blocks at time ``t``: q(t) = QQ q + QP p, p(t) = PQ q + PP p."""

    t: float
    qq: np.ndarray
    qp: np.ndarray
    pq: np.ndarray
    pp: np.ndarray

    @property
    def blocks(self) -> tuple[np.ndarray, ...]:
        return self.qq, self.qp, self.pq, self.pp

    def matrix(self) -> np.ndarray:
        return np.block([[self.qq, self.qp], [self.pq, self.pp]])


def symplectic_form(n: int) -> np.ndarray:
    """Omega for (q_1..q_n, p_1..p_n) ordering."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def build_dimer_chain(N: int, omega0: float, g: float, h: float, k: float) -> ChainSpec:
    """Chain with couplings alternating g, h, g, ... starting on bond 1-2."""
    if N < 2:
        raise ValueError(f"dimer chain needs N >= 2, got {N}")
    if min(g, h, k) < 0:
        raise ValueError("couplings g, h, k must be non-negative")
    if h > g:
        warnings.warn(f"dimer convention expects h <= g (got g={g}, h={h})", stacklevel=2)
    bonds = np.where(np.arange(N - 1) % 2 == 0, g, h)
    return ChainSpec(omega0=float(omega0), couplings=bonds, k=float(k))


def build_custom_chain(omega0: float, couplings: Sequence[float], k: float) -> ChainSpec:
    return ChainSpec(omega0=float(omega0), couplings=np.asarray(couplings, float), k=float(k))


def diagonalize_environment(chain: ChainSpec) -> StarModel:
    """Map the chain onto its star configuration.

    ``nu_i = sqrt(2 lambda_i)`` for the eigenvalues of A, and the system sees
    mode i through ``gtilde_i = k * K[0, i]``.
    """
    lam, K = _eigh_fixed_sign(chain.potential_matrix())
    _check_positive(lam, "chain potential matrix A")
    return StarModel(nu=np.sqrt(2 * lam), gtilde=chain.k * K[0, :], K=K)


def _coupling_matrix(star: StarModel, omega_s: float) -> np.ndarray:
    n = star.n_modes
    B = np.zeros((n + 1, n + 1))
    B[np.arange(n), np.arange(n)] = star.nu**2 / 2
    B[n, n] = omega_s**2 / 2
    B[:n, n] = B[n, :n] = -star.gtilde / 2
    return B


def stability_margin(star: StarModel, omega_s: float) -> float:
    """omega_s**2 minus the renormalization sum; B is positive definite iff > 0."""
    return omega_s**2 - float(np.sum(star.gtilde**2 / star.nu**2))


def assemble_full_system(star: StarModel, omega_s: float) -> FullModel:
    if not omega_s > 0:
        raise ValueError(f"omega_s must be positive, got {omega_s}")
    B = _coupling_matrix(star, omega_s)
    lam, O = _eigh_fixed_sign(B)
    try:
        _check_positive(lam, "full coupling matrix B")
    except InstabilityError as exc:
        raise InstabilityError(
            "system-bath coupling exceeds stability threshold: "
            f"sum(g^2/nu^2) = {np.sum(star.gtilde**2 / star.nu**2):.6g} "
            f"must stay below omega_s^2 = {omega_s**2:.6g} ({exc})"
        ) from None
    return FullModel(omega_s=float(omega_s), star=star, f=_frozen(np.sqrt(2 * lam)), O=_frozen(O))


def propagator(model: FullModel, t: float) -> Propagator:
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    f, O = model.f, model.O
    c = np.cos(f * t)
    s = np.sin(f * t)
    cc = (O * c) @ O.T
    return Propagator(
        t=float(t),
        qq=cc,
        qp=(O * (s / f)) @ O.T,
        pq=-(O * (f * s)) @ O.T,
        pp=cc.copy(),
    )
