"""Calibrated chromatic dispersion and type-II phasematching in KTP waveguides.

The waveguide effective indices are modelled as a bulk KTP Sellmeier index
plus a small correction linear in angular frequency, one per polarization::

    n_eff(w) = n_bulk(w) + a + b * (w - w_ref)

TE modes (pump and idler) see the crystal y index, TM modes (signal) the
z index.  ``calibrate`` fits the corrections to measured phasematching
anchors so that downstream spectra are computed at the right wavelengths.
"""
from __future__ import annotations

import enum
import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.constants import c

from .errors import CalibrationError, CalibrationWarning, DomainError, SpecError
from .units import nm_to_omega, omega_to_nm

logger = logging.getLogger(__name__)

#: Relative angular-frequency step of the central-difference stencil.
FD_STEP = 1e-6
#: Reference frequency of the linear index correction (1275 nm).
REFERENCE_OMEGA = float(nm_to_omega(1275.0))
PERTURBATIVE_LIMIT = 0.05


class Polarization(enum.Enum):
    """Waveguide mode polarization for propagation along x in z-cut KTP."""

    TE = "TE"  # in-plane, crystal y index
    TM = "TM"  # out-of-plane, crystal z index


PUMP = Polarization.TE
SIGNAL = Polarization.TM
IDLER = Polarization.TE


@dataclass(frozen=True)
class SellmeierModel:
    """Bulk index ``n^2 = A + sum_j B_j l^2 / (l^2 - C_j) - D l^2`` with l in um."""

    name: str
    a: float
    poles: tuple = ()
    ir: float = 0.0
    window_um: tuple = (0.4, 1.8)

    def __post_init__(self):
        object.__setattr__(self, "poles", tuple(tuple(float(v) for v in p) for p in self.poles))
        lo, hi = self.window_um
        if not 0 < lo < hi:
            raise SpecError(f"invalid Sellmeier window {self.window_um}")
        lam = np.linspace(lo, hi, 1000)
        n = self.index(lam)
        if not np.all(np.isfinite(n)) or np.any(n <= 1):
            raise SpecError(f"Sellmeier set {self.name!r}: n <= 1 or non-finite inside {self.window_um} um")
        if np.any(self.dindex(lam) >= 0):
            raise SpecError(f"Sellmeier set {self.name!r}: dispersion is not normal inside {self.window_um} um")

    def index(self, lam_um):
        l2 = np.asarray(lam_um, dtype=float) ** 2
        n2 = self.a - self.ir * l2
        for b, cc in self.poles:
            n2 = n2 + b * l2 / (l2 - cc)
        return np.sqrt(n2)

    def dindex(self, lam_um):
        """Closed-form dn/dlambda in 1/um."""
        lam = np.asarray(lam_um, dtype=float)
        l2 = lam**2
        dn2 = -2.0 * self.ir * lam
        for b, cc in self.poles:
            dn2 = dn2 - 2.0 * b * cc * lam / (l2 - cc) ** 2
        return dn2 / (2.0 * self.index(lam))

    @property
    def coefficients(self):
        return [self.a, self.ir] + [v for p in self.poles for v in p]

    @classmethod
    def from_coefficients(cls, name, coefficients, window_um=(0.4, 1.8)):
        a, ir, *rest = coefficients
        if len(rest) % 2:
            raise SpecError("Sellmeier coefficients must be A, D, then (B, C) pairs")
        poles = tuple(zip(rest[::2], rest[1::2]))
        return cls(name, a, poles, ir, tuple(window_um))


# Konig & Wong (2004) for n_y; Fradkin et al. (1999) for n_z.
KONIG_NY = SellmeierModel("konig2004_ny", 2.09930, ((0.922683, 0.0467695),), 0.0138408)
FRADKIN_NZ = SellmeierModel(
    "fradkin1999_nz", 2.12725, ((1.18431, 5.14852e-2), (0.6603, 100.00507)), 9.68956e-3
)
# Fan et al. (1987), kept as an alternative pair.
FAN_NY = SellmeierModel("fan1987_ny", 2.19229, ((0.83547, 0.04970),), 0.01621)
FAN_NZ = SellmeierModel("fan1987_nz", 2.25411, ((1.06543, 0.05486),), 0.02140)

SELLMEIER_SETS = {m.name: m for m in (KONIG_NY, FRADKIN_NZ, FAN_NY, FAN_NZ)}


@dataclass(frozen=True)
class DispersionCorrection:
    """Per-polarization index offset ``a + b (w - w_ref)``; ``b`` in seconds."""

    te_offset: float = 0.0
    te_slope: float = 0.0
    tm_offset: float = 0.0
    tm_slope: float = 0.0
    omega_ref: float = REFERENCE_OMEGA

    def delta_n(self, pol, omega):
        if pol is Polarization.TE:
            a, b = self.te_offset, self.te_slope
        else:
            a, b = self.tm_offset, self.tm_slope
        return a + b * (np.asarray(omega, dtype=float) - self.omega_ref)

    def as_vector(self):
        """Dimensionless parameter vector (a_TE, b_TE w_ref, a_TM, b_TM w_ref)."""
        w = self.omega_ref
        return np.array([self.te_offset, self.te_slope * w, self.tm_offset, self.tm_slope * w])

    @classmethod
    def from_vector(cls, x, omega_ref=REFERENCE_OMEGA):
        return cls(float(x[0]), float(x[1]) / omega_ref, float(x[2]), float(x[3]) / omega_ref, omega_ref)

    def to_dict(self):
        return {
            "te_offset": self.te_offset,
            "te_slope_s": self.te_slope,
            "tm_offset": self.tm_offset,
            "tm_slope_s": self.tm_slope,
            "reference_wavelength_nm": float(omega_to_nm(self.omega_ref)),
        }


@dataclass(frozen=True)
class DispersionModel:
    """Effective-index model for the TE (crystal y) and TM (crystal z) modes."""

    te: SellmeierModel = KONIG_NY
    tm: SellmeierModel = FRADKIN_NZ
    correction: DispersionCorrection = field(default_factory=DispersionCorrection)

    def __post_init__(self):
        for pol in Polarization:
            lo, hi = self.omega_window(pol)
            w = np.linspace(lo, hi, 1000)
            offset = self.correction.delta_n(pol, self.correction.omega_ref)
            drift = np.max(np.abs(self.correction.delta_n(pol, w) - offset))
            if abs(offset) >= PERTURBATIVE_LIMIT or drift >= PERTURBATIVE_LIMIT:
                raise SpecError(f"{pol.value} index correction is not perturbative (|dn| >= {PERTURBATIVE_LIMIT})")
            if np.any(np.diff(self._k(pol, w)) <= 0):
                raise SpecError(f"k(w) of the {pol.value} mode is not strictly increasing")

    def sellmeier(self, pol):
        return self.te if pol is Polarization.TE else self.tm

    def window_nm(self, pol):
        lo, hi = self.sellmeier(pol).window_um
        return lo * 1e3, hi * 1e3

    def omega_window(self, pol):
        lo, hi = self.window_nm(pol)
        return float(nm_to_omega(hi)), float(nm_to_omega(lo))

    def check_omega(self, pol, omega):
        omega = np.asarray(omega, dtype=float)
        lo, hi = self.omega_window(pol)
        slack = 1e-12 * hi
        if omega.size and (omega.min() < lo - slack or omega.max() > hi + slack):
            wl = self.window_nm(pol)
            raise DomainError(
                f"{pol.value} wavelength outside the validity window [{wl[0]:g}, {wl[1]:g}] nm "
                f"(requested {float(omega_to_nm(omega.max())):.2f}-{float(omega_to_nm(omega.min())):.2f} nm)"
            )

    def _n(self, pol, omega):
        return self.sellmeier(pol).index(omega_to_nm(omega) * 1e-3) + self.correction.delta_n(pol, omega)

    def _k(self, pol, omega):
        omega = np.asarray(omega, dtype=float)
        return self._n(pol, omega) * omega / c

    def index(self, pol, omega):
        self.check_omega(pol, omega)
        return self._n(pol, omega)

    def wavenumber(self, pol, omega):
        """k(w) = n_eff(w) w / c in 1/m."""
        self.check_omega(pol, omega)
        return self._k(pol, omega)

    def inverse_group_velocity(self, pol, omega):
        """dk/dw in s/m from a central difference with relative step ``FD_STEP``."""
        return self._dk(pol, omega, FD_STEP)

    def _dk(self, pol, omega, step):
        omega = np.asarray(omega, dtype=float)
        h = step * omega
        try:
            self.check_omega(pol, omega - h)
            self.check_omega(pol, omega + h)
        except DomainError as exc:
            raise DomainError(f"finite-difference stencil leaves the window: {exc}") from None
        return (self._k(pol, omega + h) - self._k(pol, omega - h)) / (2 * h)

    def with_correction(self, correction):
        return replace(self, correction=correction)


def refractive_index(model, pol, wavelength_nm):
    """Effective index n_base + dn at a vacuum wavelength in nm."""
    omega = nm_to_omega(wavelength_nm)
    n = model.index(pol, omega)
    return float(n) if np.ndim(n) == 0 else n


def group_velocity(model, pol, wavelength_nm, step=FD_STEP):
    """Group velocity (dk/dw)^-1 in m/s."""
    v = 1.0 / model._dk(pol, nm_to_omega(wavelength_nm), step)
    return float(v) if np.ndim(v) == 0 else v


def phase_mismatch(model, omega_s, omega_i):
    """Delta k = k_TE(ws + wi) - k_TM(ws) - k_TE(wi) in 1/m; broadcasts."""
    omega_s = np.asarray(omega_s, dtype=float)
    omega_i = np.asarray(omega_i, dtype=float)
    return (
        model.wavenumber(PUMP, omega_s + omega_i)
        - model.wavenumber(SIGNAL, omega_s)
        - model.wavenumber(IDLER, omega_i)
    )


@dataclass(frozen=True)
class PMPoint:
    pump_nm: float
    signal_nm: float
    idler_nm: float
    residual: float


@dataclass
class PMCurve:
    """Phasematched (pump, signal, idler) triples; pumps without a root are listed apart."""

    points: list
    no_solution: list

    @property
    def pump_nm(self):
        return np.array([p.pump_nm for p in self.points])

    @property
    def signal_nm(self):
        return np.array([p.signal_nm for p in self.points])

    @property
    def idler_nm(self):
        return np.array([p.idler_nm for p in self.points])

    def at(self, pump_nm, tol=1e-9):
        return [p for p in self.points if abs(p.pump_nm - pump_nm) <= tol]


def _bisect(fun, lo, hi, flo, tol, maxiter=200):
    x = 0.5 * (lo + hi)
    for _ in range(maxiter):
        x = 0.5 * (lo + hi)
        fx = fun(x)
        if abs(fx) < tol or hi - lo <= 4 * np.finfo(float).eps * abs(x):
            return x, fx
        if np.sign(fx) == np.sign(flo):
            lo, flo = x, fx
        else:
            hi = x
    return x, fun(x)


def solve_pm_curve(model, pump_range_nm, steps, *, tol=1e-3, scan=400):
    """Solve Delta k(ws, wp - ws) = 0 for pump wavelengths in ``pump_range_nm``.

    For each pump wavelength the signal is searched in [1.4, 2.8] x lambda_p,
    clipped so both daughter photons stay inside the validity windows.  Sign
    changes on a ``scan``-point sweep are refined by bisection to
    ``|Delta k| < tol`` (1/m).  The idler follows from energy conservation, so
    every triple conserves energy exactly.
    """
    if steps < 2:
        raise ValueError("steps must be >= 2")
    pumps = np.linspace(pump_range_nm[0], pump_range_nm[1], int(steps))
    model.check_omega(PUMP, nm_to_omega(pumps))
    s_lo, s_hi = model.omega_window(SIGNAL)
    i_lo, i_hi = model.omega_window(IDLER)
    points, missing = [], []
    for lam_p in pumps:
        wp = float(nm_to_omega(lam_p))
        lo = max(float(nm_to_omega(2 * 1.4 * lam_p)), s_lo, wp - i_hi)
        hi = min(float(nm_to_omega(2 * 0.7 * lam_p)), s_hi, wp - i_lo)
        if not lo < hi:
            missing.append(float(lam_p))
            continue

        def f(ws):
            return float(phase_mismatch(model, ws, wp - ws))

        grid = np.linspace(lo, hi, scan)
        vals = phase_mismatch(model, grid, wp - grid)
        found = False
        for j in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]:
            if vals[j] == 0 and j > 0 and vals[j - 1] == 0:
                continue
            ws, res = _bisect(f, grid[j], grid[j + 1], vals[j], tol)
            points.append(PMPoint(float(lam_p), float(omega_to_nm(ws)), float(omega_to_nm(wp - ws)), res))
            found = True
        if not found:
            missing.append(float(lam_p))
    return PMCurve(points, missing)


@dataclass(frozen=True)
class CalibrationAnchors:
    """Measured phasematching points used to pin the waveguide dispersion."""

    star_pump_nm: float = 670.0
    star_signal_nm: float = 1411.0
    star_idler_nm: float = 1276.0
    degeneracy_pump_nm: float = 637.5
    degeneracy_nm: float = 1275.0
    agvm: bool = True

    def __post_init__(self):
        for name, lp, ls, li in (
            ("star", self.star_pump_nm, self.star_signal_nm, self.star_idler_nm),
            ("degeneracy", self.degeneracy_pump_nm, self.degeneracy_nm, self.degeneracy_nm),
        ):
            implied = 1.0 / (1.0 / ls + 1.0 / li)
            if abs(implied - lp) > 0.2:
                raise SpecError(
                    f"{name} anchor violates energy conservation: 1/(1/{ls}+1/{li}) = {implied:.3f} nm != {lp} nm"
                )


@dataclass
class CalibrationResult:
    correction: DispersionCorrection
    model: DispersionModel
    residuals: np.ndarray  # [dk_star 1/m, dk_degeneracy 1/m, relative GV mismatch]
    iterations: int
    agvm_satisfied: bool

    def to_dict(self):
        return {
            "correction": self.correction.to_dict(),
            "residuals": {
                "star_phase_mismatch_per_m": float(self.residuals[0]),
                "degeneracy_phase_mismatch_per_m": float(self.residuals[1]),
                "agvm_relative_velocity": float(self.residuals[2]),
            },
            "iterations": self.iterations,
            "agvm_satisfied": self.agvm_satisfied,
        }


def anchor_residuals(model, anchors):
    """Residual vector (Delta k star, Delta k degeneracy, (v_p - v_s) / v_p)."""
    ws, wi = nm_to_omega(anchors.star_signal_nm), nm_to_omega(anchors.star_idler_nm)
    wd = nm_to_omega(anchors.degeneracy_nm)
    r_star = float(phase_mismatch(model, ws, wi))
    r_deg = float(phase_mismatch(model, wd, wd))
    vp = 1.0 / float(model.inverse_group_velocity(PUMP, ws + wi))
    vs = 1.0 / float(model.inverse_group_velocity(SIGNAL, ws))
    return np.array([r_star, r_deg, (vp - vs) / vp])


def calibrate(te=KONIG_NY, tm=FRADKIN_NZ, anchors=None, *, start=None, tol=1e-3, gv_tol=1e-3, maxiter=200):
    """Fit the linear index corrections to the calibration anchors.

    The two phasematching anchors are imposed as equality constraints and
    solved by damped Newton iteration with minimum-norm (pseudo-inverse)
    steps from ``start`` (zero correction by default), so the free directions
    are fixed by the smallest correction.  The slope parameters enter the
    norm scaled by the reference frequency to make them dimensionless.

    The group-velocity matching condition is checked afterwards; with a
    correction linear in frequency it cannot be enforced together with both
    anchors without leaving the perturbative regime, so a miss is reported
    through ``agvm_satisfied`` and a :class:`CalibrationWarning`.
    """
    anchors = anchors or CalibrationAnchors()
    start = start or DispersionCorrection()
    omega_ref = start.omega_ref
    x = start.as_vector()

    def residual(vec):
        model = DispersionModel(te, tm, DispersionCorrection.from_vector(vec, omega_ref))
        return anchor_residuals(model, anchors)

    r = residual(x)
    it = 0
    while np.max(np.abs(r[:2])) >= tol:
        if it >= maxiter:
            raise CalibrationError(f"calibration did not converge in {maxiter} iterations; residuals {r}", r)
        jac = np.empty((2, x.size))
        for j in range(x.size):
            e = np.zeros_like(x)
            e[j] = 1e-7
            jac[:, j] = (residual(x + e)[:2] - r[:2]) / 1e-7
        step = np.linalg.pinv(jac) @ r[:2]
        damping = 1.0
        while True:
            trial = x - damping * step
            try:
                r_trial = residual(trial)
            except SpecError:
                r_trial = None
            if r_trial is not None and np.linalg.norm(r_trial[:2]) < np.linalg.norm(r[:2]):
                break
            damping *= 0.5
            if damping < 1e-6:
                raise CalibrationError("damped Newton step failed to reduce the anchor residuals", r)
        x, r = trial, r_trial
        it += 1
        logger.debug("calibration iter %d: residuals %s", it, r)

    correction = DispersionCorrection.from_vector(x, omega_ref)
    ok = bool(abs(r[2]) < gv_tol) or not anchors.agvm
    if not ok:
        warnings.warn(
            f"group-velocity matching residual {r[2]:.3e} exceeds {gv_tol:g} after fitting both anchors",
            CalibrationWarning,
            stacklevel=2,
        )
    return CalibrationResult(correction, DispersionModel(te, tm, correction), r, it, ok)


def calibrated_model(te=KONIG_NY, tm=FRADKIN_NZ, anchors=None):
    """Convenience wrapper returning the calibrated :class:`DispersionModel`."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CalibrationWarning)
        return calibrate(te, tm, anchors).model
