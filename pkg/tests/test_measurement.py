import math
import warnings

import numpy as np
import pytest
from scipy import stats

from pdcsim.errors import DomainError, NumericalError, SpecError
from pdcsim.measurement import (
    DetectionChain,
    InconsistentEfficiencyWarning,
    TofSpectrometer,
    efficiency_budget,
    klyshko,
    mc_g2,
    mean_photon,
    simulate_heralding,
    simulate_jsi_measurement,
    tof_resolution,
    truncate_probabilities,
    waveguide_transmission,
)
from pdcsim.spectra import FrequencyGrid


def test_tof_resolution():
    assert tof_resolution(TofSpectrometer(0.3, 70.0)) == pytest.approx(0.2333, abs=1e-4)
    assert tof_resolution(TofSpectrometer(0.3, 0.0)) == 0.0
    assert tof_resolution(TofSpectrometer(0.6, 70.0)) == pytest.approx(0.11667, abs=1e-5)
    with pytest.raises(DomainError):
        tof_resolution(TofSpectrometer(0.0, 70.0))


def test_klyshko_definition():
    assert klyshko(1000, 1000, 1000) == (1.0, 1.0)
    assert klyshko(1e6, 1e6, 8e4) == (0.08, 0.08)
    eta_s, eta_i = klyshko(2000, 1000, 100)
    assert (eta_s, eta_i) == (0.1, 0.05)
    with pytest.raises(DomainError):
        klyshko(0, 10, 0)
    with pytest.raises(DomainError):
        klyshko(10, 10, 11)


def test_klyshko_recovers_injected_losses():
    pairs = 2_000_000
    s, i, cc = simulate_heralding(pairs, 0.08, 0.05, seed=4)
    eta_s, eta_i = klyshko(s, i, cc)
    assert abs(eta_s - 0.08) < 3 * math.sqrt(0.08 * 0.92 / i)
    assert abs(eta_i - 0.05) < 3 * math.sqrt(0.05 * 0.95 / s)


def test_efficiency_budget():
    assert efficiency_budget(0.08, 0.26, 0.55) == pytest.approx(0.559, abs=5e-4)
    assert efficiency_budget(0.05, 0.30, 0.41) == pytest.approx(0.407, abs=5e-4)
    assert efficiency_budget(0.3, 1.0, 1.0) == 0.3
    assert efficiency_budget(0.08, 0.26, 0.55, 0.6) == pytest.approx(0.08 / (0.26 * 0.55 * 0.6))
    with pytest.warns(InconsistentEfficiencyWarning):
        assert efficiency_budget(0.5, 0.3, 0.4) == 1.0
    with pytest.raises(DomainError):
        efficiency_budget(0.1, 0.0, 0.5)


def test_budget_inverts_klyshko():
    chain = DetectionChain()
    intrinsic = 0.7
    measured = intrinsic * chain.signal_transmission * chain.signal_detector
    s, i = 1e6, 1e6
    eta_s, _ = klyshko(s, i, measured * i)
    assert efficiency_budget(eta_s, chain.signal_transmission, chain.signal_detector) == pytest.approx(intrinsic)


def test_detection_chain_validation():
    with pytest.raises(DomainError):
        DetectionChain(signal_detector=1.2)


def test_loss_and_brightness_arithmetic():
    assert waveguide_transmission(0.85, 1.6) == pytest.approx(0.7311, abs=1e-4)
    assert waveguide_transmission(0.67, 1.6) == pytest.approx(0.7813, abs=1e-4)
    assert waveguide_transmission(0.0, 5.0) == 1.0
    assert mean_photon(0.0, 0.28) == 0.0
    assert mean_photon(37.5, 0.28) == pytest.approx(7.22, abs=0.01)
    assert mean_photon(1e-4, 0.28) / (0.28**2 * 1e-4) == pytest.approx(1.0, rel=0.01)


def test_jsi_measurement_limits(star_jsa):
    exact = star_jsa.intensity / star_jsa.intensity.sum()
    ident = simulate_jsi_measurement(star_jsa, 0.0, 0.0, 10**12, seed=1, normalize=True)
    assert np.max(np.abs(ident - exact)) < 1e-3 * exact.max()
    a = simulate_jsi_measurement(star_jsa, 0.2, 0.2, 10**9, seed=1, normalize=True)
    b = simulate_jsi_measurement(star_jsa, 0.2, 0.2, 10**15, seed=2, normalize=True)
    assert np.max(np.abs(a - b)) < 1e-3
    assert np.max(np.abs(a - b)) < 1e-2 * b.max()
    assert np.abs(b - exact).max() > 1e-3 * exact.max()


def test_jsi_measurement_reproducible_and_consistent(star_jsa):
    a = simulate_jsi_measurement(star_jsa, 0.2, 0.2, 10**5, seed=9)
    b = simulate_jsi_measurement(star_jsa, 0.2, 0.2, 10**5, seed=9)
    np.testing.assert_array_equal(a, b)
    c = simulate_jsi_measurement(star_jsa, 0.2, 0.2, 10**5, seed=10)
    # coarse-binned counts from two seeds should look like the same distribution
    ra, rc = a.reshape(16, 32, 16, 32).sum(axis=(1, 3)).ravel(), c.reshape(16, 32, 16, 32).sum(axis=(1, 3)).ravel()
    keep = (ra + rc) > 20
    table = np.vstack([ra[keep], rc[keep]])
    assert stats.chi2_contingency(table)[1] > 1e-4


def test_jsi_measurement_requires_resolvable_kernel(star_jsa):
    with pytest.raises(SpecError, match="refine"):
        simulate_jsi_measurement(star_jsa, 0.05, 0.2, 1000)


def test_mc_single_and_two_mode():
    one = mc_g2([1.0], 2.0, 10**6, seed=1)
    assert one.g2 == pytest.approx(2.0, abs=0.02)
    two = mc_g2([0.5, 0.5], 2.0, 10**6, seed=2)
    assert two.g2 == pytest.approx(1.5, abs=0.02)


def test_mc_poisson_limit():
    run = mc_g2(np.full(200, 1 / 200), 1.0, 10**6, seed=3)
    assert 1.0 <= run.g2 + 2 * run.stderr and run.g2 <= 1.02


def test_mc_mean_independent():
    lam = [0.6, 0.3, 0.1]
    a = mc_g2(lam, 0.1, 10**6, seed=5)
    b = mc_g2(lam, 1.0, 10**6, seed=6)
    assert abs(a.g2 - b.g2) < 4 * math.hypot(a.stderr, b.stderr)


def test_mc_deterministic_and_chunked():
    a = mc_g2([0.7, 0.3], 1.0, 123_457, seed=11)
    b = mc_g2([0.7, 0.3], 1.0, 123_457, seed=11)
    assert a.g2 == b.g2 and a.sum_ab == b.sum_ab
    assert a.batch_g2.size == 20


def test_mc_click_detectors_bounded():
    run = mc_g2([1.0], 5.0, 10**5, seed=1, click=True)
    assert run.g2 < 2.0


def test_mc_guards():
    with pytest.raises(NumericalError):
        mc_g2([1.0], 2e6, 1000)
    with pytest.raises(DomainError):
        mc_g2([0.5, 0.4], 1.0, 1000)
    with pytest.raises(DomainError):
        mc_g2([1.0], 1.0, 10)


def test_truncation_renormalizes():
    lam = truncate_probabilities(np.r_[0.9, 0.1 - 1e-12, np.full(100, 1e-14)])
    assert lam.size == 2 and lam.sum() == pytest.approx(1.0)


def test_mc_matches_filtered_analytic(filtered_jsa):
    from pdcsim.analysis import schmidt_decompose
    s = schmidt_decompose(filtered_jsa, modes=False)
    run = mc_g2(truncate_probabilities(s.probabilities), 0.5, 10**6, seed=21)
    assert abs(run.g2 - s.g2) < 3 * run.stderr
