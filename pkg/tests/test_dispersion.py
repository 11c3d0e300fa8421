import warnings

import numpy as np
import pytest
from scipy.constants import c

from pdcsim.dispersion import (
    FRADKIN_NZ,
    IDLER,
    KONIG_NY,
    PUMP,
    SELLMEIER_SETS,
    SIGNAL,
    CalibrationAnchors,
    DispersionCorrection,
    DispersionModel,
    Polarization,
    SellmeierModel,
    anchor_residuals,
    calibrate,
    group_velocity,
    phase_mismatch,
    refractive_index,
    solve_pm_curve,
)
from pdcsim.errors import CalibrationWarning, DomainError, SpecError
from pdcsim.units import nm_to_omega


def analytic_group_index(model, pol, nm):
    lam = nm * 1e-3
    sm = model.sellmeier(pol)
    omega = nm_to_omega(nm)
    corr = model.correction
    slope = corr.te_slope if pol is Polarization.TE else corr.tm_slope
    return sm.index(lam) - lam * sm.dindex(lam) + corr.delta_n(pol, omega) + slope * omega


def test_bulk_indices_are_plausible():
    assert KONIG_NY.index(1.064) == pytest.approx(1.7454, abs=2e-3)
    assert FRADKIN_NZ.index(1.064) == pytest.approx(1.8302, abs=2e-3)
    for sm in SELLMEIER_SETS.values():
        lam = np.linspace(0.5, 1.6, 50)
        assert np.all(np.diff(sm.index(lam)) < 0)


def test_dindex_matches_finite_difference():
    lam = np.linspace(0.6, 1.5, 7)
    h = 1e-6
    for sm in SELLMEIER_SETS.values():
        fd = (sm.index(lam + h) - sm.index(lam - h)) / (2 * h)
        np.testing.assert_allclose(sm.dindex(lam), fd, rtol=1e-7)


def test_sellmeier_rejects_unphysical_coefficients():
    with pytest.raises(SpecError):
        SellmeierModel("bad", 0.5)
    with pytest.raises(SpecError):
        SellmeierModel("anomalous", 2.0, ir=-0.1)


def test_coefficient_round_trip():
    sm = SellmeierModel.from_coefficients("copy", FRADKIN_NZ.coefficients)
    assert sm.index(1.2) == FRADKIN_NZ.index(1.2)


@pytest.mark.parametrize("nm", [670.0, 1276.0, 1411.0])
@pytest.mark.parametrize("pol", [Polarization.TE, Polarization.TM])
def test_group_velocity_matches_closed_form(model, pol, nm):
    expected = c / analytic_group_index(model, pol, nm)
    assert abs(group_velocity(model, pol, nm) / expected - 1) < 1e-8


def test_group_velocity_step_convergence(model):
    # central differences are second order: halving the step cuts the error ~4x
    w = nm_to_omega(1411.0)
    exact = analytic_group_index(model, SIGNAL, 1411.0) / c
    e1 = abs(model._dk(SIGNAL, w, 1e-3) - exact)
    e2 = abs(model._dk(SIGNAL, w, 5e-4) - exact)
    assert 3.0 < e1 / e2 < 5.0
    rich = (4 * model._dk(SIGNAL, w, 5e-4) - model._dk(SIGNAL, w, 1e-3)) / 3
    assert abs(rich / exact - 1) < 1e-10


def test_out_of_window_raises_with_window(model):
    with pytest.raises(DomainError, match="400"):
        refractive_index(model, PUMP, 350.0)
    with pytest.raises(DomainError, match="stencil"):
        model.inverse_group_velocity(IDLER, nm_to_omega(1800.0))


def test_phase_mismatch_broadcasts(model):
    ws = nm_to_omega(np.linspace(1400, 1420, 5))[:, None]
    wi = nm_to_omega(np.linspace(1270, 1280, 3))[None, :]
    assert phase_mismatch(model, ws, wi).shape == (5, 3)


def test_calibration_hits_anchors():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CalibrationWarning)
        res = calibrate()
    assert np.all(np.abs(res.residuals[:2]) < 1e-3)
    corr = res.correction
    assert abs(corr.te_offset) < 0.05 and abs(corr.tm_offset) < 0.05
    d = res.to_dict()
    assert set(d["correction"]) == {"te_offset", "te_slope_s", "tm_offset", "tm_slope_s", "reference_wavelength_nm"}


def test_calibration_warns_when_group_velocity_mismatched():
    with pytest.warns(CalibrationWarning):
        res = calibrate()
    assert not res.agvm_satisfied
    res = calibrate(anchors=CalibrationAnchors(agvm=False))
    assert res.agvm_satisfied


def test_anchors_must_conserve_energy():
    with pytest.raises(SpecError, match="energy"):
        CalibrationAnchors(star_pump_nm=660.0)


def test_nonperturbative_correction_rejected():
    with pytest.raises(SpecError, match="perturbative"):
        DispersionModel(correction=DispersionCorrection(te_offset=0.2))


def test_correction_vector_round_trip():
    corr = DispersionCorrection(0.001, 2e-18, -0.002, 5e-18)
    back = DispersionCorrection.from_vector(corr.as_vector(), corr.omega_ref)
    np.testing.assert_allclose(
        [back.te_offset, back.te_slope, back.tm_offset, back.tm_slope],
        [corr.te_offset, corr.te_slope, corr.tm_offset, corr.tm_slope], rtol=1e-12)


def test_pm_curve_conserves_energy_and_passes_anchors(model):
    curve = solve_pm_curve(model, (630.0, 690.0), 13)
    lp, ls, li = curve.pump_nm, curve.signal_nm, curve.idler_nm
    np.testing.assert_allclose(1 / ls + 1 / li, 1 / lp, rtol=1e-12)
    star = solve_pm_curve(model, (670.0, 637.5), 2)
    (p,) = star.at(670.0)
    assert abs(p.signal_nm - 1411) < 2 and abs(p.idler_nm - 1276) < 2
    for q in star.at(637.5):
        assert abs(q.signal_nm - 1275) < 2 and abs(q.idler_nm - 1275) < 2


def test_pm_curve_reports_unsolvable_pumps(model):
    curve = solve_pm_curve(model, (400.0, 420.0), 3)
    assert curve.points == [] and len(curve.no_solution) == 3


def test_anchor_residuals_of_uncorrected_model_are_large():
    r = anchor_residuals(DispersionModel(), CalibrationAnchors())
    assert abs(r[0]) > 1e3
