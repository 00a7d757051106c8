import warnings

import numpy as np
import pytest
from scipy.linalg import expm

from chainbath import (
    InstabilityError,
    StarModel,
    assemble_full_system,
    build_custom_chain,
    build_dimer_chain,
    diagonalize_environment,
    propagator,
)
from chainbath.chain_models import symplectic_form
from chainbath.spectral import band_edges

from conftest import random_model


def test_dimer_onsite_frequencies():
    c = build_dimer_chain(50, 0.3, 0.1, 0.05, 0.0075)
    assert c.onsite_freqs[0] == pytest.approx(np.sqrt(0.09 + 0.1), abs=1e-15)
    assert c.onsite_freqs[-1] == pytest.approx(np.sqrt(0.09 + 0.1), abs=1e-15)  # even N ends on a g bond
    assert np.allclose(c.onsite_freqs[1:-1], np.sqrt(0.09 + 0.15), rtol=0, atol=1e-15)
    assert c.couplings[0] == 0.1 and c.couplings[1] == 0.05


def test_zero_coupling_chain_is_decoupled():
    c = build_dimer_chain(4, 1.0, 0.0, 0.0, 0.0)
    assert np.allclose(c.onsite_freqs, 1.0)
    star = diagonalize_environment(c)
    assert np.allclose(star.nu, 1.0)
    assert np.all(star.gtilde == 0)


def test_two_site_custom_chain():
    c = build_custom_chain(1.0, [0.1], 0.0)
    assert np.allclose(c.onsite_freqs, np.sqrt(1.1))


def test_uniform_custom_matches_dimer():
    a = build_custom_chain(0.5, [0.2] * 9, 0.01)
    b = build_dimer_chain(10, 0.5, 0.2, 0.2, 0.01)
    assert np.array_equal(a.potential_matrix(), b.potential_matrix())


def test_h_greater_than_g_warns():
    with pytest.warns(UserWarning, match="h <= g"):
        build_dimer_chain(6, 0.5, 0.05, 0.1, 0.01)


def test_invalid_chain_parameters():
    with pytest.raises(ValueError):
        build_dimer_chain(1, 0.5, 0.1, 0.05, 0.01)
    with pytest.raises(ValueError):
        build_custom_chain(0.5, [0.1, -0.1], 0.01)
    with pytest.raises(InstabilityError, match="smallest eigenvalue"):
        build_dimer_chain(10, 0.0, 0.1, 0.05, 0.01)


def test_two_mode_environment_analytic():
    w0, g, k = 0.7, 0.3, 0.05
    star = diagonalize_environment(build_custom_chain(w0, [g], k))
    assert np.allclose(star.nu, [w0, np.sqrt(w0**2 + 2 * g)], rtol=0, atol=1e-14)
    # symmetric and antisymmetric combinations, both weighted 1/sqrt(2) on site 1
    assert np.allclose(np.abs(star.gtilde), k / np.sqrt(2), rtol=0, atol=1e-15)


def test_star_K_and_gtilde():
    c = build_dimer_chain(30, 0.3, 0.1, 0.05, 0.02)
    star = diagonalize_environment(c)
    K = star.K
    assert np.abs(K @ K.T - np.eye(30)).max() < 1e-10
    assert np.allclose(star.gtilde, 0.02 * K[0], rtol=0, atol=1e-16)
    assert np.all(np.diff(star.nu) >= 0)
    # sign convention: largest-magnitude component of each eigenvector positive
    idx = np.abs(K).argmax(axis=0)
    assert np.all(K[idx, np.arange(30)] > 0)


def test_dimer_has_gap_rubin_has_none():
    dimer = diagonalize_environment(build_dimer_chain(50, 0.3, 0.1, 0.05, 0.0))
    edges = band_edges(dimer)
    assert len(edges) == 2
    gap = edges[1][0] - edges[0][1]
    inband = max(np.diff(dimer.nu[:25]).max(), np.diff(dimer.nu[25:]).max())
    assert gap > 10 * inband
    rubin = diagonalize_environment(build_dimer_chain(50, 0.3, 0.1, 0.1, 0.01))
    d = np.diff(rubin.nu)
    assert d[1:-1].max() < 3 * np.median(d)


def test_gap_monotone_in_dimerization():
    widths = []
    for h in [0.1, 0.08, 0.06, 0.04, 0.02]:
        nu = diagonalize_environment(build_dimer_chain(50, 0.3, 0.1, h, 0.0)).nu
        widths.append(nu[25] - nu[24])
    spacing_rubin = np.median(np.diff(diagonalize_environment(build_dimer_chain(50, 0.3, 0.1, 0.1, 0.0)).nu))
    assert widths[0] < 3 * spacing_rubin  # no gap beyond ordinary spacing
    assert np.all(np.diff(widths) > 0)


def test_decoupled_full_model_is_permutation():
    star = StarModel(np.array([0.3, 0.5, 0.9]), np.zeros(3))
    m = assemble_full_system(star, 0.6)
    assert np.allclose(m.f, [0.3, 0.5, 0.6, 0.9], rtol=0, atol=1e-15)
    assert np.allclose(np.abs(m.O), np.abs(m.O).round())


def test_single_mode_full_model_analytic():
    m = assemble_full_system(StarModel(np.array([1.0]), np.array([0.1])), 1.0)
    assert np.allclose(m.f, [np.sqrt(0.9), np.sqrt(1.1)], rtol=0, atol=1e-15)
    assert m.f[0] == pytest.approx(0.9486832980505138, abs=1e-15)


def test_instability_reported():
    star = StarModel(np.array([0.5]), np.array([0.6]))
    with pytest.raises(InstabilityError, match="stability threshold"):
        assemble_full_system(star, 1.0)


def test_wide_gap_working_point_stable(wide_gap_star):
    for ws in np.linspace(0.45, 0.93, 25):
        m = assemble_full_system(wide_gap_star, ws)
        assert np.all(m.f > 0)


def test_orthogonality_and_reconstruction(rng):
    for _ in range(20):
        m = random_model(rng)
        O = m.O
        n = m.n_modes
        assert np.abs(O @ O.T - np.eye(n)).max() < 1e-10
        assert np.abs(O @ np.diag(m.f**2 / 2) @ O.T - m.coupling_matrix()).max() < 1e-10


def test_propagator_identity_and_half_period():
    m = assemble_full_system(StarModel(np.array([0.8]), np.array([0.0])), 1.3)
    p0 = propagator(m, 0.0)
    assert np.array_equal(p0.matrix(), np.eye(4))
    p = propagator(m, np.pi / 1.3)
    s = m.system_index
    assert p.qq[s, s] == pytest.approx(-1, abs=1e-14) and p.pp[s, s] == pytest.approx(-1, abs=1e-14)
    assert abs(p.qp[s, s]) < 1e-14 and abs(p.pq[s, s]) < 1e-14


def test_propagator_symplectic_and_group(rng):
    for _ in range(10):
        m = random_model(rng, 25)
        J = symplectic_form(m.n_modes)
        t1, t2 = rng.uniform(0, 100, size=2)
        S1 = propagator(m, t1).matrix()
        S2 = propagator(m, t2).matrix()
        assert np.abs(S1 @ J @ S1.T - J).max() < 1e-10
        assert np.abs(S1 @ S2 - propagator(m, t1 + t2).matrix()).max() < 1e-9


def test_propagator_matches_matrix_exponential(rng):
    # Hamilton's equations x' = [[0, I], [-2B, 0]] x as an independent oracle
    m = random_model(rng, 12)
    n = m.n_modes
    gen = np.block([[np.zeros((n, n)), np.eye(n)], [-2 * m.coupling_matrix(), np.zeros((n, n))]])
    t = 7.3
    assert np.abs(propagator(m, t).matrix() - expm(gen * t)).max() < 1e-10


def test_zero_coupling_factorizes():
    star = diagonalize_environment(build_dimer_chain(10, 0.4, 0.1, 0.05, 0.0))
    m = assemble_full_system(star, 0.55)
    s = m.system_index
    for t in [0.0, 3.1, 47.0]:
        p = propagator(m, t)
        c, sn = np.cos(0.55 * t), np.sin(0.55 * t)
        for blk, val in zip(p.blocks, [c, sn / 0.55, -0.55 * sn, c]):
            row = np.delete(blk[s], s)
            assert np.all(row == 0) and np.all(np.delete(blk[:, s], s) == 0)
            assert blk[s, s] == pytest.approx(val, abs=1e-14)


def test_negative_time_rejected():
    m = assemble_full_system(StarModel(np.array([1.0]), np.array([0.0])), 1.0)
    with pytest.raises(ValueError):
        propagator(m, -1.0)


def test_no_warning_for_regular_dimer():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        build_dimer_chain(10, 0.3, 0.1, 0.05, 0.01)
