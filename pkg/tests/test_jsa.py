import json

import numpy as np
import pytest

from pdcsim.analysis import schmidt_decompose
from pdcsim.errors import DegenerateStateError, SpecError
from pdcsim.jsa import (
    LinearProfile,
    PhasematchingSpec,
    RandomWalkProfile,
    SinusoidalProfile,
    apply_filters,
    assemble_jsa,
    fwhm,
    marginals,
    phasematching_matrix,
    read_matrix_csv,
    source_jsa,
)
from pdcsim.spectra import FrequencyGrid, GaussianPump, RectFilter

SMALL = FrequencyGrid.from_wavelengths((1366, 1456), (1256, 1296), 128, 128)


def test_homogeneous_phasematching_is_bounded_sinc(model):
    phi = phasematching_matrix(model, PhasematchingSpec(), SMALL)
    assert np.abs(phi).max() <= 1 + 1e-12
    assert np.abs(phi).max() > 0.99


@pytest.mark.parametrize("segments", [1, 7, 100])
def test_segmented_equals_homogeneous_without_profile(model, segments):
    ref = phasematching_matrix(model, PhasematchingSpec(0.016), SMALL)
    seg = phasematching_matrix(model, PhasematchingSpec(0.016, LinearProfile(0.0), segments), SMALL)
    assert np.max(np.abs(seg - ref)) < 1e-12


ROW = FrequencyGrid.from_wavelengths((1410, 1412), (1256, 1296), 16, 4001)


def idler_cut(model, profile):
    phi = phasematching_matrix(model, PhasematchingSpec(0.016, profile, 200), ROW)
    return np.abs(phi[8]) ** 2


def asymmetry(p):
    k = int(np.argmax(p))
    n = min(k, p.size - 1 - k)
    left, right = p[k - n:k + 1][::-1], p[k:k + n + 1]
    return np.sum(np.abs(left - right)) / np.sum(left + right)


def test_linear_profile_broadens_phasematching(model):
    base = idler_cut(model, None)
    widths = [fwhm(ROW.idler, idler_cut(model, LinearProfile(s))) for s in (0.0, 0.01, 0.02)]
    assert widths[0] == pytest.approx(fwhm(ROW.idler, base), rel=1e-6)
    assert widths[0] < widths[1] < widths[2]


def test_linear_profile_is_mirror_symmetric(model):
    # reversing the gradient mirrors the waveguide, which leaves |phi| unchanged
    a = idler_cut(model, LinearProfile(0.02))
    b = idler_cut(model, LinearProfile(-0.02))
    np.testing.assert_allclose(a, b, atol=1e-12)
    assert asymmetry(a) < 2 * asymmetry(idler_cut(model, None))


@pytest.mark.parametrize("profile", [RandomWalkProfile(2e-5, seed=1), SinusoidalProfile(1e-4, 0.011)])
def test_unsymmetric_profiles_skew_phasematching(model, profile):
    assert asymmetry(idler_cut(model, profile)) > 5 * asymmetry(idler_cut(model, None))


def test_inhomogeneity_lowers_purity(model):
    pump = GaussianPump(670.0, 2.0)
    base = source_jsa(model, pump, PhasematchingSpec(), SMALL)
    skew = source_jsa(model, pump, PhasematchingSpec(0.016, LinearProfile(0.02), 100), SMALL)
    assert schmidt_decompose(skew).schmidt_number > schmidt_decompose(base).schmidt_number


def test_profiles_are_deterministic():
    z = np.linspace(0, 0.016, 50)
    a = RandomWalkProfile(1e-5, seed=3).offsets(z, 0.016)
    b = RandomWalkProfile(1e-5, seed=3).offsets(z, 0.016)
    np.testing.assert_array_equal(a, b)
    s = SinusoidalProfile(1e-5, 0.004).offsets(z, 0.016)
    assert np.max(np.abs(s)) <= 1e-5
    spec = PhasematchingSpec(0.016, SinusoidalProfile(1e-5, 0.004), 50)
    assert spec.to_dict()["profile"]["kind"] == "sinusoidal"


def test_spec_validation():
    with pytest.raises(SpecError):
        PhasematchingSpec(0.0)
    with pytest.raises(SpecError):
        PhasematchingSpec(0.01, segments=0)


def test_jsa_is_normalized_and_marginals_integrate(star_jsa):
    assert np.linalg.norm(star_jsa.values) == pytest.approx(1.0)
    ms, mi = marginals(star_jsa)
    assert np.sum(ms) * star_jsa.grid.d_signal == pytest.approx(1.0)
    assert np.sum(mi) * star_jsa.grid.d_idler == pytest.approx(1.0)


def test_star_point_marginal_widths(star_jsa):
    ms, mi = marginals(star_jsa)
    # the signal follows the broad pump, the idler the narrow sinc
    assert 7 < fwhm(star_jsa.grid.signal_nm, ms) < 11
    assert 0.8 < fwhm(star_jsa.grid.idler_nm, mi) < 1.6


def test_disjoint_pump_raises(model):
    phi = phasematching_matrix(model, PhasematchingSpec(), SMALL)
    with pytest.raises(DegenerateStateError):
        assemble_jsa(GaussianPump(600.0, 0.5), phi, SMALL)


def test_filter_reports_transmitted_fraction(star_jsa):
    out, frac = apply_filters(star_jsa, None, RectFilter(1276.0, 3.0))
    assert 0.5 < frac < 1.0
    assert np.linalg.norm(out.values) == pytest.approx(1.0)
    with pytest.raises(DegenerateStateError):
        apply_filters(star_jsa, RectFilter(1300.0, 1.0), None)


def test_write_and_read_back(tmp_path, model):
    jsa = source_jsa(model, GaussianPump(), PhasematchingSpec(), SMALL)
    jsa.write(tmp_path / "j", complex_parts=True)
    s, i, data = read_matrix_csv(tmp_path / "j.csv")
    np.testing.assert_array_equal(data, jsa.intensity)
    np.testing.assert_array_equal(s, SMALL.signal_nm)
    re = read_matrix_csv(tmp_path / "j_re.csv")[2]
    np.testing.assert_array_equal(re, jsa.values.real)
    meta = json.loads((tmp_path / "j.json").read_text())
    assert meta["grid"]["signal_points"] == 128 and meta["pump"]["kind"] == "gaussian"


def test_fwhm_requires_contained_peak():
    x = np.linspace(-1, 1, 101)
    with pytest.raises(ValueError):
        fwhm(x, np.exp(-x**2 / 100))
