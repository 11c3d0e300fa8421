"""Conversions between vacuum wavelength and angular frequency."""
import numpy as np
from scipy.constants import c

TWO_PI_C = 2.0 * np.pi * c


def nm_to_omega(wavelength_nm):
    """Vacuum wavelength in nm -> angular frequency in rad/s."""
    return TWO_PI_C / (np.asarray(wavelength_nm, dtype=float) * 1e-9)


def omega_to_nm(omega):
    """Angular frequency in rad/s -> vacuum wavelength in nm."""
    return TWO_PI_C / np.asarray(omega, dtype=float) * 1e9


def bandwidth_nm_to_omega(width_nm, center_nm):
    """Map a small wavelength interval at ``center_nm`` to rad/s (first order)."""
    return TWO_PI_C * width_nm * 1e-9 / (center_nm * 1e-9) ** 2


def bandwidth_omega_to_nm(width_omega, center_nm):
    return width_omega * (center_nm * 1e-9) ** 2 / TWO_PI_C * 1e9


def scalar(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x
