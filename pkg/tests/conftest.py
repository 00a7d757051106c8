import numpy as np
import pytest

from chainbath import assemble_full_system, build_dimer_chain, diagonalize_environment


def random_model(rng, n_max=40):
    """A stable random dimer-chain model; k is drawn well inside the stability bound."""
    N = int(rng.integers(2, n_max + 1))
    omega0 = rng.uniform(0.2, 1.0)
    g = rng.uniform(0.01, 0.3)
    h = rng.uniform(0.0, g)
    chain = build_dimer_chain(N, omega0, g, h, 0.0)
    star0 = diagonalize_environment(chain)
    omega_s = rng.uniform(0.2, 1.2)
    # couplings scale as k K[0,:]; stay at 30% of the threshold sum(g^2/nu^2) < omega_s^2
    kmax = omega_s / np.sqrt(np.sum(star0.K[0] ** 2 / star0.nu**2))
    k = rng.uniform(0, 0.3) * kmax
    star = diagonalize_environment(build_dimer_chain(N, omega0, g, h, k))
    return assemble_full_system(star, omega_s)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def wide_gap_star():
    return diagonalize_environment(build_dimer_chain(40, 0.5, 0.2, 0.05, 0.001))
