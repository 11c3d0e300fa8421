"""Detection-chain simulation: JSI spectrometry, heralding efficiencies and g2 counting."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import DegenerateStateError, DomainError, NumericalError, SpecError
from .jsa import JointSpectralAmplitude
from .units import bandwidth_nm_to_omega

FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))
MC_CHUNK = 50_000
MC_BATCHES = 20
MAX_MODE_MEAN = 1e6


class InconsistentEfficiencyWarning(UserWarning):
    """An inferred intrinsic efficiency exceeded one and was capped."""


@dataclass(frozen=True)
class TofSpectrometer:
    """Dispersive-fibre spectrometer; ``dispersion_ns_per_nm`` maps wavelength to delay."""

    dispersion_ns_per_nm: float = 0.3
    jitter_ps: float = 70.0

    @property
    def resolution_nm(self):
        return tof_resolution(self)


def tof_resolution(spec):
    """Jitter divided by total dispersion, in nm."""
    if spec.dispersion_ns_per_nm == 0:
        raise DomainError("time-of-flight dispersion must be non-zero")
    if spec.jitter_ps < 0:
        raise DomainError("timing jitter must be non-negative")
    return spec.jitter_ps * 1e-3 / abs(spec.dispersion_ns_per_nm)


def _check_unit_interval(name, value):
    if not 0 < value <= 1:
        raise DomainError(f"{name} must lie in (0, 1], got {value}")


@dataclass(frozen=True)
class DetectionChain:
    """Per-arm transmissions and efficiencies of the heralding setup."""

    signal_transmission: float = 0.26
    idler_transmission: float = 0.30
    signal_detector: float = 0.55
    idler_detector: float = 0.41
    signal_coupling: float = 0.60
    idler_coupling: float = 0.65
    te_loss_db_per_cm: float = 0.85
    tm_loss_db_per_cm: float = 0.67
    seed: int = 0

    def __post_init__(self):
        for name in ("signal_transmission", "idler_transmission", "signal_detector", "idler_detector",
                     "signal_coupling", "idler_coupling"):
            _check_unit_interval(name, getattr(self, name))
        if self.te_loss_db_per_cm < 0 or self.tm_loss_db_per_cm < 0:
            raise DomainError("propagation loss must be non-negative")


def simulate_jsi_measurement(jsa, res_signal_nm, res_idler_nm, events, seed=0, normalize=False):
    """Blur |f|^2 with a separable Gaussian resolution kernel and draw Poisson counts.

    Resolutions are FWHM in nm and are converted to frequency at the centre
    of each grid axis.  A resolution of exactly zero skips the blur on that
    axis.  Returns integer counts, or counts / events with ``normalize``.
    """
    if isinstance(jsa, JointSpectralAmplitude):
        intensity, grid = jsa.intensity, jsa.grid
    else:
        raise TypeError("simulate_jsi_measurement expects a JointSpectralAmplitude")
    if events <= 0:
        raise DomainError("event count must be positive")
    sigmas = []
    for name, res, axis, step in (("signal", res_signal_nm, grid.signal_nm, grid.d_signal),
                                  ("idler", res_idler_nm, grid.idler_nm, grid.d_idler)):
        if res < 0:
            raise DomainError(f"{name} resolution must be non-negative")
        spacing_nm = float(np.max(np.abs(np.diff(axis))))
        if 0 < res < spacing_nm:
            raise SpecError(
                f"{name} resolution {res} nm is below the grid spacing {spacing_nm:.4g} nm; refine the grid"
            )
        width = bandwidth_nm_to_omega(res, float(np.mean(axis))) if res else 0.0
        sigmas.append(width * FWHM_TO_SIGMA / step)
    blurred = gaussian_filter(intensity, sigmas, mode="constant") if any(sigmas) else intensity.copy()
    total = blurred.sum()
    if not total > 0:
        raise DegenerateStateError("blurred intensity is zero")
    rng = np.random.default_rng(seed)
    counts = rng.poisson(blurred * (events / total))
    return counts / events if normalize else counts


def klyshko(singles_signal, singles_idler, coincidences):
    """Heralding efficiencies; each arm is normalized by the other arm's singles."""
    if singles_signal <= 0 or singles_idler <= 0:
        raise DomainError("singles counts must be positive")
    if coincidences < 0 or coincidences > min(singles_signal, singles_idler):
        raise DomainError("coincidences must lie between 0 and the smaller singles count")
    return coincidences / singles_idler, coincidences / singles_signal


def efficiency_budget(measured, transmission, detector_efficiency, *extra_factors):
    """Intrinsic efficiency = measured / (transmission x detector efficiency x extras).

    Values above one indicate inconsistent inputs; they are capped at one
    and an :class:`InconsistentEfficiencyWarning` is issued.
    """
    factors = (transmission, detector_efficiency) + tuple(extra_factors)
    for i, f in enumerate(factors):
        if f == 0:
            raise DomainError(f"efficiency factor {i} is zero")
        _check_unit_interval(f"efficiency factor {i}", f)
    _check_unit_interval("measured efficiency", measured)
    value = measured / math.prod(factors)
    if value > 1:
        warnings.warn(f"intrinsic efficiency {value:.4g} exceeds 1; inputs are inconsistent",
                      InconsistentEfficiencyWarning, stacklevel=2)
        return 1.0
    return value


def waveguide_transmission(loss_db_per_cm, length_cm):
    if loss_db_per_cm < 0 or length_cm < 0:
        raise DomainError("loss and length must be non-negative")
    return 10.0 ** (-loss_db_per_cm * length_cm / 10.0)


def mean_photon(pulse_energy_pj, alpha):
    """Mean photon number sinh^2(alpha sqrt(E)) of a single-mode source."""
    if np.any(np.asarray(pulse_energy_pj) < 0):
        raise DomainError("pulse energy must be non-negative")
    return np.sinh(alpha * np.sqrt(pulse_energy_pj)) ** 2


def simulate_heralding(pairs, eta_signal, eta_idler, seed=0):
    """Singles and coincidences for ``pairs`` single pairs with Bernoulli losses."""
    rng = np.random.default_rng(seed)
    s = rng.random(pairs) < eta_signal
    i = rng.random(pairs) < eta_idler
    return int(s.sum()), int(i.sum()), int(np.sum(s & i))


@dataclass(eq=False)
class CountingRun:
    """Tallies of a split-detector photon-counting run."""

    pulses: int
    mean_photon: float
    probabilities: np.ndarray
    seed: int
    click: bool
    sum_a: float = 0.0
    sum_b: float = 0.0
    sum_ab: float = 0.0
    g2: float = float("nan")
    stderr: float = float("nan")
    batch_g2: np.ndarray = field(default=None, repr=False)

    @property
    def analytic_g2(self):
        return 1.0 + float(np.sum(self.probabilities**2))

    def to_dict(self):
        return {
            "pulses": self.pulses,
            "mean_photon": self.mean_photon,
            "modes": int(self.probabilities.size),
            "seed": self.seed,
            "click_detectors": self.click,
            "sum_a": self.sum_a,
            "sum_b": self.sum_b,
            "sum_ab": self.sum_ab,
            "g2": self.g2,
            "stderr": self.stderr,
            "analytic_g2": self.analytic_g2,
        }

    def write_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def truncate_probabilities(probabilities, tail=1e-9, max_modes=256):
    """Drop the smallest Schmidt weights (total mass below ``tail``) and renormalize."""
    lam = np.sort(np.asarray(probabilities, dtype=float))[::-1]
    lam = lam / lam.sum()
    keep = np.searchsorted(np.cumsum(lam), 1.0 - tail) + 1
    lam = lam[:min(keep, max_modes, lam.size)]
    return lam / lam.sum()


def mc_g2(probabilities, mean_photon, pulses=1_000_000, seed=0, click=False):
    """Monte-Carlo g2(0) of one unheralded arm split on a 50/50 coupler.

    Each Schmidt mode j carries an independent thermal photon number with
    mean ``mean_photon * lambda_j``.  Pulses are processed in fixed chunks
    whose random streams derive from (seed, chunk index), so results do not
    depend on how the work is divided.  The standard error comes from 20
    contiguous batch means.
    """
    lam = np.asarray(probabilities, dtype=float)
    if lam.ndim != 1 or lam.size == 0 or np.any(lam < 0):
        raise DomainError("Schmidt probabilities must be a non-empty non-negative vector")
    if abs(lam.sum() - 1) > 1e-9:
        raise DomainError(f"Schmidt probabilities sum to {lam.sum()}, expected 1")
    if not mean_photon > 0:
        raise DomainError("mean photon number must be positive")
    if pulses < 1000:
        raise DomainError("at least 1000 pulses are required")
    means = mean_photon * lam[lam > 0]
    if means.max() > MAX_MODE_MEAN:
        raise NumericalError(f"mode mean photon number {means.max():.3g} exceeds {MAX_MODE_MEAN:g}")
    p = 1.0 / (1.0 + means)

    sa = np.zeros(MC_BATCHES)
    sb = np.zeros(MC_BATCHES)
    sab = np.zeros(MC_BATCHES)
    cnt = np.zeros(MC_BATCHES)
    for chunk, start in enumerate(range(0, pulses, MC_CHUNK)):
        n = min(MC_CHUNK, pulses - start)
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk,)))
        total = (rng.geometric(p, size=(n, p.size)) - 1).sum(axis=1)
        na = rng.binomial(total, 0.5)
        nb = total - na
        if click:
            na, nb = (na > 0).astype(np.int64), (nb > 0).astype(np.int64)
        batch = (np.arange(start, start + n) * MC_BATCHES) // pulses
        sa += np.bincount(batch, na, MC_BATCHES)
        sb += np.bincount(batch, nb, MC_BATCHES)
        sab += np.bincount(batch, na * nb, MC_BATCHES)
        cnt += np.bincount(batch, minlength=MC_BATCHES)

    def estimate(a, b, ab, m):
        return (ab / m) / ((a / m) * (b / m))

    with np.errstate(divide="ignore", invalid="ignore"):
        batches = estimate(sa, sb, sab, cnt)
        g2 = float(estimate(sa.sum(), sb.sum(), sab.sum(), cnt.sum()))
    if not np.isfinite(g2):
        raise NumericalError("no photons were detected on one of the outputs; increase pulses or N")
    stderr = float(np.std(batches, ddof=1) / math.sqrt(MC_BATCHES))
    return CountingRun(pulses, float(mean_photon), lam, seed, click, float(sa.sum()), float(sb.sum()),
                       float(sab.sum()), g2, stderr, batches)
