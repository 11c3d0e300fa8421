"""Schmidt decomposition, purity maps and g2(0) predictions."""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .dispersion import IDLER, PUMP, DomainError
from .errors import DegenerateStateError, NumericalError, SpecError
from .jsa import JointSpectralAmplitude, PhasematchingSpec, apply_filters, assemble_jsa, phasematching_matrix
from .spectra import (
    DEFAULT_IDLER_WINDOW_NM,
    DEFAULT_POINTS,
    DEFAULT_SIGNAL_WINDOW_NM,
    FrequencyGrid,
    GaussianPump,
    HermiteGaussPump,
    RectFilter,
)
from .units import bandwidth_omega_to_nm, nm_to_omega

logger = logging.getLogger(__name__)

N_MODES = 8


@dataclass(eq=False)
class SchmidtSpectrum:
    """Schmidt probabilities with K = 1/sum(l^2), purity 1/K and g2 = 1 + purity."""

    probabilities: np.ndarray
    signal_modes: np.ndarray = None  # (N_s, <=8) columns
    idler_modes: np.ndarray = None  # (<=8, N_i) rows
    intensity_based: bool = False

    @property
    def schmidt_number(self):
        return float(1.0 / np.sum(self.probabilities**2))

    K = schmidt_number

    @property
    def purity(self):
        return float(np.sum(self.probabilities**2))

    @property
    def g2(self):
        return 1.0 + self.purity

    def to_dict(self, max_modes=None):
        p = self.probabilities if max_modes is None else self.probabilities[:max_modes]
        return {
            "probabilities": [float(v) for v in p],
            "K": self.schmidt_number,
            "P": self.purity,
            "g2": self.g2,
            "intensity_based": self.intensity_based,
        }

    def write_json(self, path, max_modes=64):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(max_modes), fh, indent=2)
            fh.write("\n")


def _values(jsa):
    return jsa.values if isinstance(jsa, JointSpectralAmplitude) else np.asarray(jsa)


def schmidt_decompose(jsa, modes=True):
    """SVD of the amplitude matrix; probabilities are normalized squared singular values."""
    f = _values(jsa)
    try:
        if modes:
            u, s, vh = np.linalg.svd(f, full_matrices=False)
        else:
            s = np.linalg.svd(f, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        fin = np.all(np.isfinite(f))
        cond = np.linalg.cond(f) if fin else float("nan")
        raise NumericalError(f"SVD did not converge (finite={fin}, condition number={cond:.3g})") from exc
    s2 = s**2
    total = s2.sum()
    if not total > 0:
        raise DegenerateStateError("JSA has zero norm")
    lam = s2 / total
    if not modes:
        return SchmidtSpectrum(lam)
    k = min(N_MODES, s.size)
    return SchmidtSpectrum(lam, u[:, :k], vh[:k, :])


def k_from_jsi(jsi):
    """Schmidt spectrum estimated from an intensity assuming a flat spectral phase.

    The estimate cannot see phase correlations, so it is biased towards
    purer states; the result is flagged ``intensity_based``.
    """
    jsi = np.asarray(jsi, dtype=float)
    if np.any(jsi < 0):
        raise ValueError("joint spectral intensity must be non-negative")
    if not np.any(jsi > 0):
        raise DegenerateStateError("joint spectral intensity is identically zero")
    amp = np.sqrt(jsi)
    out = schmidt_decompose(amp / np.linalg.norm(amp))
    out.intensity_based = True
    return out


def _pump_width_omega(pump):
    if hasattr(pump, "fwhm_nm"):
        return nm_to_omega(pump.center_nm - pump.fwhm_nm / 2) - nm_to_omega(pump.center_nm + pump.fwhm_nm / 2)
    lo, hi = pump.support_nm()
    return nm_to_omega(lo) - nm_to_omega(hi)


def _support_omega(pump):
    lo, hi = pump.support_nm()
    return nm_to_omega(lo) - nm_to_omega(hi)


@dataclass(frozen=True)
class GridPolicy:
    """Rescale the default windows so each purity-map cell stays resolved.

    Idler window width follows the sinc main-lobe width; signal window width
    follows max(pump FWHM, 3 main lobes) in frequency.  Both equal the
    default windows at the reference cell.  Point counts grow where needed
    to keep >= ``min_lobe_samples`` idler samples across the main lobe and
    >= ``min_pump_samples`` signal samples across the pump support.
    """

    signal_window_nm: tuple = DEFAULT_SIGNAL_WINDOW_NM
    idler_window_nm: tuple = DEFAULT_IDLER_WINDOW_NM
    reference_fwhm_nm: float = 2.0
    reference_length_m: float = 0.016
    points: int = DEFAULT_POINTS
    min_lobe_samples: int = 20
    min_pump_samples: int = 100
    max_points: int = 16384

    def lobe_omega(self, model, length_m):
        """Null-to-null width of the sinc main lobe along the idler axis."""
        ws = nm_to_omega(np.mean(self.signal_window_nm))
        wi = nm_to_omega(np.mean(self.idler_window_nm))
        mismatch = abs(float(model.inverse_group_velocity(PUMP, ws + wi) - model.inverse_group_velocity(IDLER, wi)))
        return 4.0 * np.pi / (mismatch * length_m)

    def grid_for(self, model, pump, length_m):
        ref_pump = pump.__class__(**{**pump.__dict__, "fwhm_nm": self.reference_fwhm_nm}) \
            if hasattr(pump, "fwhm_nm") else pump
        lobe = self.lobe_omega(model, length_m)
        lobe_ref = self.lobe_omega(model, self.reference_length_m)
        scale_s = max(_pump_width_omega(pump), 3 * lobe) / max(_pump_width_omega(ref_pump), 3 * lobe_ref)
        scale_i = lobe / lobe_ref
        cs, hs = np.mean(self.signal_window_nm), 0.5 * np.ptp(self.signal_window_nm) * scale_s
        ci, hi = np.mean(self.idler_window_nm), 0.5 * np.ptp(self.idler_window_nm) * scale_i
        sig_nm, idl_nm = (cs - hs, cs + hs), (ci - hi, ci + hi)
        span_s = nm_to_omega(sig_nm[0]) - nm_to_omega(sig_nm[1])
        span_i = nm_to_omega(idl_nm[0]) - nm_to_omega(idl_nm[1])
        n_s = max(self.points, math.ceil(self.min_pump_samples * span_s / _support_omega(pump)) + 1)
        n_i = max(self.points, math.ceil(self.min_lobe_samples * span_i / lobe) + 1)
        if max(n_s, n_i) > self.max_points:
            raise SpecError(f"cell needs {max(n_s, n_i)} grid points (limit {self.max_points})")
        return FrequencyGrid.from_wavelengths(sig_nm, idl_nm, n_s, n_i)


def resolution_report(model, pump, length_m, grid):
    """Samples across the sinc main lobe (idler) and the pump support (signal)."""
    lobe = GridPolicy().lobe_omega(model, length_m)
    return lobe / grid.d_idler, _support_omega(pump) / grid.d_signal


@dataclass(eq=False)
class PurityMap:
    bandwidths_nm: np.ndarray
    lengths_mm: np.ndarray
    purity: np.ndarray  # (n_bandwidths, n_lengths), NaN where invalid
    pump_shape: str
    errors: dict = field(default_factory=dict)

    @property
    def valid(self):
        return np.isfinite(self.purity)

    def argmax(self):
        i, j = np.unravel_index(np.nanargmax(self.purity), self.purity.shape)
        return int(i), int(j)

    def write(self, stem):
        with open(f"{stem}.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["bandwidth_nm", "length_mm", "purity"])
            for a, bw in enumerate(self.bandwidths_nm):
                for b, ln in enumerate(self.lengths_mm):
                    p = self.purity[a, b]
                    w.writerow([repr(float(bw)), repr(float(ln)), "" if not np.isfinite(p) else repr(float(p))])
        i, j = self.argmax()
        meta = {
            "pump_shape": self.pump_shape,
            "bandwidths_nm": [float(v) for v in self.bandwidths_nm],
            "lengths_mm": [float(v) for v in self.lengths_mm],
            "valid_cells": int(self.valid.sum()),
            "max_purity": float(self.purity[i, j]),
            "argmax": {"bandwidth_nm": float(self.bandwidths_nm[i]), "length_mm": float(self.lengths_mm[j])},
            "invalid": {f"{k[0]},{k[1]}": v for k, v in self.errors.items()},
        }
        with open(f"{stem}.json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2)
            fh.write("\n")


def default_map_axes(steps=24):
    """Uniform axes over [0.25, 5] nm and [2, 40] mm, with the 2 nm / 16 mm point added."""
    bw = np.union1d(np.linspace(0.25, 5.0, steps), [2.0])
    ln = np.union1d(np.linspace(2.0, 40.0, steps), [16.0])
    return bw, ln


def cell_purity(model, pump, length_m, policy=None):
    policy = policy or GridPolicy()
    grid = policy.grid_for(model, pump, length_m)
    phi = phasematching_matrix(model, PhasematchingSpec(length_m), grid)
    return schmidt_decompose(assemble_jsa(pump, phi, grid), modes=False).purity


def purity_map(model, pump_family=None, bandwidths_nm=None, lengths_mm=None, policy=None):
    """Purity of the homogeneous, unfiltered JSA over pump bandwidth x length.

    ``pump_family`` maps a FWHM in nm to a pump spectrum (Gaussian at 670 nm
    by default).  Cells whose grid cannot be resolved are left as NaN and the
    reason is stored in ``errors``.
    """
    pump_family = pump_family or (lambda fwhm: GaussianPump(670.0, fwhm))
    if bandwidths_nm is None or lengths_mm is None:
        dbw, dln = default_map_axes()
        bandwidths_nm = dbw if bandwidths_nm is None else bandwidths_nm
        lengths_mm = dln if lengths_mm is None else lengths_mm
    bandwidths_nm = np.asarray(bandwidths_nm, dtype=float)
    lengths_mm = np.asarray(lengths_mm, dtype=float)
    if np.any(bandwidths_nm <= 0) or np.any(lengths_mm <= 0):
        raise ValueError("bandwidths and lengths must be positive")
    policy = policy or GridPolicy()
    out = np.full((bandwidths_nm.size, lengths_mm.size), np.nan)
    errors = {}
    for a, bw in enumerate(bandwidths_nm):
        pump = pump_family(float(bw))
        for b, ln in enumerate(lengths_mm):
            try:
                out[a, b] = cell_purity(model, pump, ln * 1e-3, policy)
            except (SpecError, DomainError, DegenerateStateError, NumericalError) as exc:
                errors[(a, b)] = str(exc)
                logger.warning("purity map cell (%g nm, %g mm) invalid: %s", bw, ln, exc)
    shape = pump_family(float(bandwidths_nm[0])).kind
    return PurityMap(bandwidths_nm, lengths_mm, out, shape, errors)


@dataclass(eq=False)
class G2Table:
    orders: list
    bandwidths_nm: np.ndarray
    g2: np.ndarray  # (n_orders, n_bandwidths)
    arm: str
    filtered: bool

    def write(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["hg_order", "bandwidth_nm", "arm", "filtered", "g2"])
            for a, n in enumerate(self.orders):
                for b, bw in enumerate(self.bandwidths_nm):
                    w.writerow([n, repr(float(bw)), self.arm, int(self.filtered), repr(float(self.g2[a, b]))])


G2_GRID = dict(signal_nm=(1336.0, 1486.0), idler_nm=DEFAULT_IDLER_WINDOW_NM, n_signal=768, n_idler=DEFAULT_POINTS)


def g2_prediction_table(model, orders=(0, 1, 2, 3), bandwidths_nm=(0.5, 1.0, 1.5, 2.0, 3.0), arm="idler",
                        idler_filter=True, signal_filter=None, length_m=0.016, center_nm=670.0, grid=None):
    """Unheralded g2(0) = 1 + sum(l^2) of one arm for Hermite-Gauss pumps.

    Only the filter in the measured arm acts on its reduced state, so
    ``idler_filter`` (True for the default 3 nm band, a filter object, or
    False) applies to ``arm='idler'`` and ``signal_filter`` to ``arm='signal'``.
    """
    if arm not in ("signal", "idler"):
        raise ValueError("arm must be 'signal' or 'idler'")
    if idler_filter is True:
        idler_filter = RectFilter(1276.0, 3.0)
    grid = grid or FrequencyGrid.from_wavelengths(**G2_GRID)
    phi = phasematching_matrix(model, PhasematchingSpec(length_m), grid)
    table = np.empty((len(orders), len(bandwidths_nm)))
    for a, n in enumerate(orders):
        for b, bw in enumerate(bandwidths_nm):
            jsa = assemble_jsa(HermiteGaussPump(int(n), center_nm, float(bw)), phi, grid)
            if arm == "idler" and idler_filter:
                jsa, _ = apply_filters(jsa, None, idler_filter)
            elif arm == "signal" and signal_filter:
                jsa, _ = apply_filters(jsa, signal_filter, None)
            table[a, b] = schmidt_decompose(jsa, modes=False).g2
    return G2Table(list(orders), np.asarray(bandwidths_nm, dtype=float), table, arm, bool(
        idler_filter if arm == "idler" else signal_filter))
