"""Frequency grids, shaped pump spectra and bandpass filters."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import eval_hermite

from .errors import SpecError
from .units import bandwidth_nm_to_omega, nm_to_omega, omega_to_nm

DEFAULT_SIGNAL_WINDOW_NM = (1366.0, 1456.0)
DEFAULT_IDLER_WINDOW_NM = (1256.0, 1296.0)
DEFAULT_POINTS = 512
SHAPER_RESOLUTION_NM = 0.035
SUPPORT_LEVEL = 1e-6  # |alpha|^2 relative to peak


@dataclass(eq=False)
class FrequencyGrid:
    """Uniform angular-frequency axes (rad/s, increasing) for signal and idler."""

    signal: np.ndarray
    idler: np.ndarray

    def __post_init__(self):
        self.signal = np.asarray(self.signal, dtype=float)
        self.idler = np.asarray(self.idler, dtype=float)
        for name, ax in (("signal", self.signal), ("idler", self.idler)):
            if ax.ndim != 1 or ax.size < 16:
                raise SpecError(f"{name} axis needs at least 16 points")
            if np.any(np.diff(ax) <= 0):
                raise SpecError(f"{name} axis must be strictly increasing")

    @classmethod
    def from_wavelengths(cls, signal_nm=DEFAULT_SIGNAL_WINDOW_NM, idler_nm=DEFAULT_IDLER_WINDOW_NM,
                         n_signal=DEFAULT_POINTS, n_idler=DEFAULT_POINTS):
        """Grid uniform in frequency spanning the given wavelength windows."""
        ws = np.linspace(nm_to_omega(max(signal_nm)), nm_to_omega(min(signal_nm)), int(n_signal))
        wi = np.linspace(nm_to_omega(max(idler_nm)), nm_to_omega(min(idler_nm)), int(n_idler))
        return cls(ws, wi)

    @property
    def shape(self):
        return self.signal.size, self.idler.size

    @property
    def signal_nm(self):
        return omega_to_nm(self.signal)

    @property
    def idler_nm(self):
        return omega_to_nm(self.idler)

    @property
    def d_signal(self):
        return (self.signal[-1] - self.signal[0]) / (self.signal.size - 1)

    @property
    def d_idler(self):
        return (self.idler[-1] - self.idler[0]) / (self.idler.size - 1)

    @property
    def pump(self):
        """Pump frequency w_s + w_i on the (signal, idler) mesh."""
        return self.signal[:, None] + self.idler[None, :]

    def to_dict(self):
        return {
            "signal_window_nm": [float(self.signal_nm.min()), float(self.signal_nm.max())],
            "idler_window_nm": [float(self.idler_nm.min()), float(self.idler_nm.max())],
            "signal_points": int(self.signal.size),
            "idler_points": int(self.idler.size),
        }


def default_grid():
    return FrequencyGrid.from_wavelengths()


class PumpSpectrum:
    """Base for pump amplitude shapes; ``amplitude`` is unit-normalized in rad/s."""

    kind = "pump"
    center_nm: float
    chirp_s2: float

    @property
    def omega0(self):
        return float(nm_to_omega(self.center_nm))

    def _envelope(self, x):
        raise NotImplementedError

    def amplitude(self, omega):
        d = np.asarray(omega, dtype=float) - self.omega0
        amp = self._envelope(d).astype(complex)
        if self.chirp_s2:
            amp *= np.exp(0.5j * self.chirp_s2 * d**2)
        return amp

    def support_nm(self):
        """Wavelength interval where |alpha|^2 exceeds 1e-6 of its peak."""
        half = self._extent_nm()
        lam = np.linspace(self.center_nm - half, self.center_nm + half, 200001)
        p = np.abs(self._envelope(nm_to_omega(lam) - self.omega0)) ** 2
        idx = np.nonzero(p >= SUPPORT_LEVEL * p.max())[0]
        return float(lam[idx[0]]), float(lam[idx[-1]])

    def to_dict(self):
        return {"kind": self.kind, **asdict(self)}


def _sigma(fwhm_nm, center_nm):
    # |alpha|^2 = exp(-d^2 / sigma^2) has intensity FWHM 2 sigma sqrt(ln 2)
    return bandwidth_nm_to_omega(fwhm_nm, center_nm) / (2.0 * math.sqrt(math.log(2.0)))


@dataclass(frozen=True)
class GaussianPump(PumpSpectrum):
    center_nm: float = 670.0
    fwhm_nm: float = 2.0
    chirp_s2: float = 0.0
    kind = "gaussian"

    def __post_init__(self):
        if not self.fwhm_nm > 0:
            raise SpecError("pump FWHM must be positive")

    @property
    def sigma(self):
        return _sigma(self.fwhm_nm, self.center_nm)

    def _envelope(self, d):
        s = self.sigma
        return np.exp(-0.5 * (d / s) ** 2) / math.sqrt(s * math.sqrt(math.pi))

    def _extent_nm(self):
        return 4.0 * self.fwhm_nm


@dataclass(frozen=True)
class HermiteGaussPump(PumpSpectrum):
    """H_n(d/sigma) exp(-d^2 / 2 sigma^2); FWHM refers to the n = 0 Gaussian."""

    order: int = 0
    center_nm: float = 670.0
    fwhm_nm: float = 2.0
    chirp_s2: float = 0.0
    kind = "hermite_gauss"

    def __post_init__(self):
        if self.order not in (0, 1, 2, 3):
            raise SpecError("Hermite-Gauss order must be 0, 1, 2 or 3")
        if not self.fwhm_nm > 0:
            raise SpecError("pump FWHM must be positive")

    @property
    def sigma(self):
        return _sigma(self.fwhm_nm, self.center_nm)

    def _envelope(self, d):
        s, n = self.sigma, self.order
        norm = math.sqrt(s * 2.0**n * math.factorial(n) * math.sqrt(math.pi))
        x = d / s
        return eval_hermite(n, x) * np.exp(-0.5 * x**2) / norm

    def _extent_nm(self):
        return (4.0 + self.order) * self.fwhm_nm


@dataclass(frozen=True)
class FrequencyBinsPump(PumpSpectrum):
    """``count`` flat-top bins, equally spaced and centred on the carrier."""

    count: int = 5
    center_nm: float = 670.0
    spacing_nm: float = 1.0
    width_nm: float = 0.5
    chirp_s2: float = 0.0
    kind = "bins"

    def __post_init__(self):
        if self.count < 1:
            raise SpecError("bin count must be >= 1")
        if not 0 < self.width_nm:
            raise SpecError("bin width must be positive")
        if self.count > 1 and not self.width_nm < self.spacing_nm:
            raise SpecError("bin width must be smaller than the bin spacing")

    def _bins_omega(self):
        w = bandwidth_nm_to_omega(self.width_nm, self.center_nm)
        step = bandwidth_nm_to_omega(self.spacing_nm, self.center_nm)
        offsets = (np.arange(self.count) - (self.count - 1) / 2.0) * step
        return offsets, w

    def _envelope(self, d):
        offsets, w = self._bins_omega()
        d = np.asarray(d, dtype=float)
        out = np.zeros(d.shape)
        for o in offsets:
            out += np.abs(d - o) <= w / 2
        return out / math.sqrt(self.count * w)

    def _extent_nm(self):
        return (self.count - 1) / 2.0 * self.spacing_nm + self.width_nm


def pump_amplitude(spec, omega):
    """Complex pump amplitude alpha(w) in 1/sqrt(rad/s)."""
    return spec.amplitude(omega)


@dataclass(eq=False)
class ShaperMask:
    """Pump mask sampled at the shaper resolution."""

    wavelength_nm: np.ndarray
    amplitude: np.ndarray
    phase: np.ndarray
    fidelity: float
    resolution_nm: float

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["wavelength_nm", "amplitude", "phase_rad"])
            for row in zip(self.wavelength_nm, self.amplitude, self.phase):
                w.writerow([repr(float(v)) for v in row])


def discretize_to_shaper(spec, resolution_nm=SHAPER_RESOLUTION_NM, oversample=32):
    """Sample a pump shape on pixels of width ``resolution_nm``.

    Fidelity is the normalized overlap between the ideal spectrum and its
    nearest-neighbour (staircase) reconstruction from the samples.
    """
    lo, hi = spec.support_nm()
    width = hi - lo
    if width < 4 * resolution_nm:
        raise SpecError(
            f"pump support {width:.4f} nm spans fewer than 4 shaper pixels of {resolution_nm} nm; use a broader shape"
        )
    n = math.ceil(width / resolution_nm)
    lam = lo + (np.arange(n) + 0.5) * resolution_nm
    target = spec.amplitude(nm_to_omega(lam))

    # fine grid covering the ideal support plus one pixel either side
    fine = np.linspace(lo - resolution_nm, lo + (n + 1) * resolution_nm, (n + 2) * oversample + 1)
    fine_omega = nm_to_omega(fine)
    weights = np.abs(np.gradient(fine_omega))
    ideal = spec.amplitude(fine_omega)
    pix = np.floor((fine - lo) / resolution_nm).astype(int)
    inside = (pix >= 0) & (pix < n)
    stair = np.zeros_like(ideal)
    stair[inside] = target[pix[inside]]
    overlap = np.sum(np.conj(ideal) * stair * weights)
    norm = np.sum(np.abs(ideal) ** 2 * weights) * np.sum(np.abs(stair) ** 2 * weights)
    fidelity = float(np.abs(overlap) ** 2 / norm)

    mag = np.abs(target)
    return ShaperMask(lam, mag / mag.max(), np.angle(target), fidelity, resolution_nm)


class SpectralFilter:
    kind = "filter"

    def transmission(self, omega):
        raise NotImplementedError

    def to_dict(self):
        return {"kind": self.kind, **asdict(self)}


@dataclass(frozen=True)
class RectFilter(SpectralFilter):
    """Ideal bandpass, flat in wavelength; band edges transmit."""

    center_nm: float
    width_nm: float
    kind = "rect"

    def __post_init__(self):
        if not self.width_nm > 0:
            raise SpecError("filter width must be positive")

    def transmission(self, omega):
        lam = omega_to_nm(omega)
        # small slack so an edge sitting exactly on the band limit counts as inside
        half = 0.5 * self.width_nm * (1 + 1e-12)
        return (np.abs(lam - self.center_nm) <= half).astype(float)


@dataclass(frozen=True)
class SuperGaussianFilter(SpectralFilter):
    center_nm: float
    width_nm: float
    order: int = 4
    kind = "super_gaussian"

    def __post_init__(self):
        if not self.width_nm > 0 or self.order < 1:
            raise SpecError("super-Gaussian filter needs width > 0 and order >= 1")

    def transmission(self, omega):
        x = (omega_to_nm(omega) - self.center_nm) / (0.5 * self.width_nm)
        return np.exp(-np.abs(x) ** (2 * self.order) * math.log(2.0))


def filter_transmission(spectral_filter, omega):
    """Power-independent filter transmission in [0, 1]."""
    return spectral_filter.transmission(omega)
