"""Joint spectral amplitude of the type-II down-conversion process.

f(ws, wi) = alpha(ws + wi) * phi(ws, wi), with phi the phasematching function
of a homogeneous or segmented (inhomogeneous) waveguide.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c

from .dispersion import phase_mismatch
from .errors import DegenerateStateError, SpecError
from .spectra import FrequencyGrid

DEFAULT_LENGTH_M = 0.016
DEFAULT_SEGMENTS = 100


def _sinc(x):
    return np.sinc(x / np.pi)


@dataclass(frozen=True)
class LinearProfile:
    """Signal-index offset growing linearly along z, zero at the waveguide centre."""

    slope_per_m: float
    kind = "linear"

    def offsets(self, z, length):
        return self.slope_per_m * (z - 0.5 * length)


@dataclass(frozen=True)
class SinusoidalProfile:
    amplitude: float
    period_m: float
    kind = "sinusoidal"

    def offsets(self, z, length):
        return self.amplitude * np.sin(2 * np.pi * z / self.period_m)


@dataclass(frozen=True)
class RandomWalkProfile:
    """Cumulative Gaussian steps, one per segment, drawn from ``seed``."""

    step_sigma: float
    seed: int = 0
    kind = "random_walk"

    def offsets(self, z, length):
        rng = np.random.default_rng(self.seed)
        return np.cumsum(rng.normal(0.0, self.step_sigma, size=np.size(z)))


@dataclass(frozen=True)
class PhasematchingSpec:
    """Waveguide length and optional longitudinal index inhomogeneity.

    With ``profile=None`` and one segment the closed-form sinc is used;
    otherwise the waveguide is cut into ``segments`` equal homogeneous pieces.
    """

    length_m: float = DEFAULT_LENGTH_M
    profile: object = None
    segments: int = 1

    def __post_init__(self):
        if not self.length_m > 0:
            raise SpecError("waveguide length must be positive")
        if self.segments < 1:
            raise SpecError("segment count must be >= 1")

    @property
    def homogeneous(self):
        return self.profile is None and self.segments == 1

    def segment_offsets(self):
        m = self.segments
        z = (np.arange(m) + 0.5) * self.length_m / m
        if self.profile is None:
            return z, np.zeros(m)
        return z, np.asarray(self.profile.offsets(z, self.length_m), dtype=float)

    def to_dict(self):
        d = {"length_m": self.length_m, "segments": self.segments, "profile": None}
        if self.profile is not None:
            d["profile"] = {"kind": self.profile.kind, **self.profile.__dict__}
        return d


def segmented_sum(dk, omega_s, length, offsets):
    """Coherent sum of equal-length sinc segments.

    ``dk`` is the unperturbed mismatch; segment m adds ``-offsets[m] ws / c``.
    """
    m = len(offsets)
    lm = length / m
    phi = np.zeros(np.broadcast(dk, omega_s).shape, dtype=complex)
    acc = np.zeros(phi.shape)
    ks = omega_s / c
    for dn in offsets:
        dkm = dk - dn * ks
        x = 0.5 * dkm * lm
        phi += _sinc(x) * np.exp(1j * (acc + x))
        acc = acc + dkm * lm
    return phi / m


def phasematching_matrix(model, spec, grid):
    """phi(ws, wi) on the grid mesh, complex, |phi| <= 1."""
    ws = grid.signal[:, None]
    wi = grid.idler[None, :]
    dk = phase_mismatch(model, ws, wi)
    if spec.homogeneous:
        x = 0.5 * dk * spec.length_m
        return _sinc(x) * np.exp(1j * x)
    _, offsets = spec.segment_offsets()
    return segmented_sum(dk, np.broadcast_to(ws, dk.shape), spec.length_m, offsets)


@dataclass(eq=False)
class JointSpectralAmplitude:
    values: np.ndarray
    grid: FrequencyGrid
    normalized: bool = True
    metadata: dict = field(default_factory=dict)
    transmitted_fraction: float = 1.0

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise SpecError(f"JSA shape {self.values.shape} does not match grid {self.grid.shape}")

    @property
    def intensity(self):
        return np.abs(self.values) ** 2

    def write(self, stem, complex_parts=False):
        """Write ``<stem>.csv`` (|f|^2), ``<stem>.json`` and optionally re/im CSVs."""
        stem = str(stem)
        write_matrix_csv(f"{stem}.csv", self.grid, self.intensity)
        if complex_parts:
            write_matrix_csv(f"{stem}_re.csv", self.grid, self.values.real)
            write_matrix_csv(f"{stem}_im.csv", self.grid, self.values.imag)
        meta = {
            "grid": self.grid.to_dict(),
            "normalized": self.normalized,
            "transmitted_fraction": self.transmitted_fraction,
            **self.metadata,
        }
        with open(f"{stem}.json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2)
            fh.write("\n")


def write_matrix_csv(path, grid, matrix):
    """Rows follow the signal axis, columns the idler axis; wavelengths in nm."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["signal_nm\\idler_nm"] + [repr(float(v)) for v in grid.idler_nm])
        for lam, row in zip(grid.signal_nm, np.asarray(matrix)):
            w.writerow([repr(float(lam))] + [repr(float(v)) for v in row])


def read_matrix_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    idler = np.array([float(v) for v in rows[0][1:]])
    signal = np.array([float(r[0]) for r in rows[1:]])
    data = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    return signal, idler, data


def _normalize(values, what):
    norm = np.linalg.norm(values)
    if not np.isfinite(norm) or norm <= 1e-300:
        raise DegenerateStateError(f"{what} vanishes on the grid")
    return values / norm


def assemble_jsa(pump, phi, grid):
    """Entrywise alpha(ws + wi) phi(ws, wi), Frobenius-normalized."""
    phi = np.asarray(phi)
    if phi.shape != grid.shape:
        raise SpecError(f"phasematching shape {phi.shape} does not match grid {grid.shape}")
    values = pump.amplitude(grid.pump) * phi
    values = _normalize(values, "pump and phasematching product (disjoint in frequency?)")
    return JointSpectralAmplitude(values, grid, True, {"pump": pump.to_dict()})


def apply_filters(jsa, signal_filter=None, idler_filter=None):
    """Multiply by F_s(ws) F_i(wi) and renormalize.

    Returns the filtered JSA and the fraction of pair probability transmitted.
    """
    ts = np.ones(jsa.grid.signal.size) if signal_filter is None else signal_filter.transmission(jsa.grid.signal)
    ti = np.ones(jsa.grid.idler.size) if idler_filter is None else idler_filter.transmission(jsa.grid.idler)
    filtered = jsa.values * ts[:, None] * ti[None, :]
    total = np.sum(np.abs(jsa.values) ** 2)
    fraction = float(np.sum(np.abs(filtered) ** 2) / total)
    if fraction < 1e-6:
        raise DegenerateStateError(f"filters transmit only {fraction:.3g} of the pair probability")
    meta = dict(jsa.metadata)
    meta["filters"] = {
        "signal": None if signal_filter is None else signal_filter.to_dict(),
        "idler": None if idler_filter is None else idler_filter.to_dict(),
    }
    out = JointSpectralAmplitude(filtered / np.linalg.norm(filtered), jsa.grid, True, meta,
                                 jsa.transmitted_fraction * fraction)
    return out, fraction


def marginals(jsa):
    """Signal and idler spectral densities (per rad/s), each integrating to 1."""
    p = np.abs(jsa.values) ** 2
    p = p / p.sum()
    return p.sum(axis=1) / jsa.grid.d_signal, p.sum(axis=0) / jsa.grid.d_idler


def fwhm(x, y):
    """Full width at half maximum of a sampled single-peaked curve (linear interpolation)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    order = np.argsort(x)
    x, y = x[order], y[order]
    half = 0.5 * y.max()
    above = np.nonzero(y >= half)[0]
    i0, i1 = above[0], above[-1]
    if i0 == 0 or i1 == len(y) - 1:
        raise ValueError("peak is not contained in the sampled range")
    left = np.interp(half, [y[i0 - 1], y[i0]], [x[i0 - 1], x[i0]])
    right = np.interp(half, [y[i1 + 1], y[i1]], [x[i1 + 1], x[i1]])
    return float(right - left)


def source_jsa(model, pump, spec=None, grid=None, signal_filter=None, idler_filter=None):
    """Build the (optionally filtered) JSA for one source configuration."""
    spec = spec or PhasematchingSpec()
    grid = grid or FrequencyGrid.from_wavelengths()
    out = assemble_jsa(pump, phasematching_matrix(model, spec, grid), grid)
    out.metadata["waveguide"] = spec.to_dict()
    if signal_filter is not None or idler_filter is not None:
        out, _ = apply_filters(out, signal_filter, idler_filter)
    return out
