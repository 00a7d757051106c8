import warnings

import numpy as np
import pytest

from chainbath import StarModel, build_dimer_chain, diagonalize_environment
from chainbath.spectral import (
    SpectralDensityTarget,
    band_edges,
    damping_kernel,
    load_tabulated_density,
    recurrence_time_estimate,
    spectral_density_local,
    spectral_density_transform,
    synthesize_star_from_density,
)


@pytest.fixture(scope="module")
def gapped():
    return diagonalize_environment(build_dimer_chain(100, 0.2, 0.1, 0.05, 0.0075))


@pytest.fixture(scope="module")
def rubin():
    return diagonalize_environment(build_dimer_chain(200, 0.2, 0.1, 0.1, 0.01))


def test_damping_kernel_examples(gapped):
    assert damping_kernel(gapped, 0.0) == pytest.approx(np.sum(gapped.gtilde**2 / gapped.nu**2), rel=1e-14)
    one = StarModel(np.array([2.0]), np.array([0.1]))
    t = np.linspace(0, 10, 7)
    assert np.allclose(damping_kernel(one, t), 0.0025 * np.cos(2 * t), rtol=0, atol=1e-16)
    zero = StarModel(np.array([1.0, 2.0]), np.zeros(2))
    assert np.all(damping_kernel(zero, t) == 0)
    g0 = damping_kernel(gapped, 0.0)
    assert np.all(np.abs(damping_kernel(gapped, np.linspace(0, 2000, 501))) <= g0 * (1 + 1e-12))


def test_transform_gap_and_off_support(gapped):
    tw = recurrence_time_estimate(gapped).safe_horizon
    w = np.linspace(0.05, 1.0, 2000)
    J = spectral_density_transform(gapped, w, tw)
    peak = J.max()
    (lo1, hi1), (lo2, hi2) = band_edges(gapped)
    in_gap = (w > hi1 + 0.01) & (w < lo2 - 0.01)
    assert np.abs(J[in_gap]).max() < 1e-3 * peak
    assert np.abs(J[w > hi2 + 0.05]).max() < 1e-3 * peak
    assert J.min() >= -0.02 * peak


def test_transform_warns_past_horizon(gapped):
    tw = recurrence_time_estimate(gapped).safe_horizon
    with pytest.warns(UserWarning, match="recurrence horizon"):
        spectral_density_transform(gapped, 0.3, 2 * tw)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        spectral_density_transform(gapped, 0.3, tw)
    with pytest.raises(ValueError):
        spectral_density_transform(gapped, 0.3, 0.0)


def test_rubin_free_end_law(rubin):
    # free-end chain (site 1 stiffened only by its bond):
    # J = (k^2 / 2g) sqrt((wc^2 - w^2) / (w^2 - w0^2)), wc^2 = w0^2 + 4g
    w0, g, k = 0.2, 0.1, 0.01
    wc = np.sqrt(w0**2 + 4 * g)
    tw = recurrence_time_estimate(rubin).safe_horizon
    lo, hi = rubin.nu[0], rubin.nu[-1]
    w = np.linspace(lo + 0.2 * (hi - lo), hi - 0.2 * (hi - lo), 200)
    J = spectral_density_transform(rubin, w, tw)
    law = k**2 / (2 * g) * np.sqrt((wc**2 - w**2) / (w**2 - w0**2))
    assert np.abs(J / law - 1).max() < 0.01
    assert hi == pytest.approx(wc, rel=1e-3) and lo == pytest.approx(w0, rel=1e-3)


def test_local_matches_transform_in_rubin_interior(rubin):
    tw = recurrence_time_estimate(rubin).safe_horizon
    interior = slice(40, 160)
    Jl = spectral_density_local(rubin)[interior]
    Jt = spectral_density_transform(rubin, rubin.nu[interior], tw)
    assert np.abs(Jl / Jt - 1).max() < 0.10


def test_local_density_edge_cases():
    star = StarModel(np.array([0.5, 0.6, 0.7]), np.zeros(3))
    assert np.all(spectral_density_local(star) == 0)
    assert spectral_density_local(star.with_couplings([0.1, 0.1, 0.1]), 1) == pytest.approx(
        np.pi / 2 * 0.01 / (0.6 * 0.1)
    )
    with pytest.raises(ValueError):
        spectral_density_local(StarModel(np.array([1.0]), np.array([0.1])))


def test_synthesis_round_trip_constant():
    target = SpectralDensityTarget.tabulated([[0.3, 2e-4], [0.9, 2e-4]])
    star = synthesize_star_from_density(target, 50)
    d = np.diff(star.nu)
    assert np.allclose(d, d[0], rtol=1e-12)
    assert star.nu[0] == pytest.approx(0.3 + d[0] / 2)
    assert star.K is None
    assert np.allclose(spectral_density_local(star)[2:-2], 2e-4, rtol=0.02)


def test_synthesis_scaling_is_quadratic():
    target = SpectralDensityTarget.ohmic_semicircle(1e-4, 0.8, 0.1)
    star = synthesize_star_from_density(target, 30)
    scaled = star.with_couplings(3 * star.gtilde)
    assert np.allclose(spectral_density_local(scaled), 9 * spectral_density_local(star), rtol=1e-12)


@pytest.mark.parametrize("s", [-2, -1, 0, 0.5, 1, 2, 3, 4])
def test_pivot_power_equals_k_at_pivot(s):
    target = SpectralDensityTarget.pivot_power(1e-4, s, 0.25, 0.75, 0.5)
    assert float(target(0.5)) == pytest.approx(1e-4, rel=1e-14)
    star = synthesize_star_from_density(target, 40)
    assert np.allclose(spectral_density_local(star), target(star.nu), rtol=1e-12)


def test_target_validation_and_support():
    with pytest.raises(ValueError):
        SpectralDensityTarget.pivot_power(1e-4, 5.0, 0.25, 0.75, 0.5)
    with pytest.raises(ValueError):
        SpectralDensityTarget.offset_power(1e-2, -1.0, 3.0, 5.0)  # diverges at omega0
    with pytest.raises(ValueError):
        SpectralDensityTarget("lorentzian")
    with pytest.raises(ValueError):
        SpectralDensityTarget.pivot_power(1e-4, 1.0, 0.75, 0.25, 0.5)
    ok = SpectralDensityTarget.offset_power(1e-2, -1.0, 3.0, 5.0, omega_lo=3.1)
    assert np.isfinite(ok(3.1))
    t = SpectralDensityTarget.normalized_power(1e-2, 2.0, 3.0, 5.0)
    assert float(t(5.0)) == pytest.approx(1e-2)
    assert float(t(5.5)) == 0.0 and float(t(2.0)) == 0.0


def test_tabulated_file(tmp_path):
    p = tmp_path / "j.txt"
    p.write_text("# omega J\n0.2 0.0\n0.4 1.0\n0.6 0.0\n")
    target = load_tabulated_density(p, k=2e-4)
    assert float(target(0.3)) == pytest.approx(1e-4)
    assert float(target(0.7)) == 0.0


def test_recurrence_estimates(wide_gap_star):
    rec = recurrence_time_estimate(wide_gap_star)
    assert rec.safe_horizon >= 700
    assert rec.safe_horizon == min(rec.rephasing, rec.signal)
    uniform = StarModel(np.linspace(0.3, 0.7, 21), np.full(21, 1e-3))
    assert recurrence_time_estimate(uniform).rephasing == pytest.approx(2 * np.pi / 0.02, rel=1e-10)
    with pytest.raises(ValueError):
        recurrence_time_estimate(StarModel(np.array([0.3, 0.4]), np.zeros(2)))


@pytest.mark.parametrize("N", [20, 40])
def test_signal_time_doubles_with_N(N):
    a = recurrence_time_estimate(diagonalize_environment(build_dimer_chain(N, 0.5, 0.2, 0.05, 0.001)))
    b = recurrence_time_estimate(diagonalize_environment(build_dimer_chain(2 * N, 0.5, 0.2, 0.05, 0.001)))
    assert b.signal / a.signal == pytest.approx(2.0, rel=0.10)
