"""Exact finite-chain open-system simulator: Gaussian dynamics, spectral densities, non-Markovianity."""

from .chain_models import (
    ChainSpec,
    FullModel,
    InstabilityError,
    Propagator,
    StarModel,
    assemble_full_system,
    build_custom_chain,
    build_dimer_chain,
    diagonalize_environment,
    propagator,
)
from .gaussian import GaussianState
from .nonmarkov import BlpGrid, NmResult, blp_measure, rhp_measure
from .spectral import SpectralDensityTarget, synthesize_star_from_density

__version__ = "0.1.0"

__all__ = [
    "ChainSpec",
    "FullModel",
    "InstabilityError",
    "Propagator",
    "StarModel",
    "assemble_full_system",
    "build_custom_chain",
    "build_dimer_chain",
    "diagonalize_environment",
    "propagator",
    "GaussianState",
    "BlpGrid",
    "NmResult",
    "blp_measure",
    "rhp_measure",
    "SpectralDensityTarget",
    "synthesize_star_from_density",
]
