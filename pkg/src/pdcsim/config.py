"""Strict INI run configuration with unit-suffixed keys."""
from __future__ import annotations

import configparser
import hashlib
import json
from importlib import resources
from pathlib import Path

from .errors import ConfigError


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _strs(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def _choice(*options):
    def parse(text):
        v = text.strip()
        if v not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {v!r}")
        return v
    return parse


# section -> key -> (parser, default)
SCHEMA = {
    "dispersion": {
        "te_sellmeier": (str, "konig2004_ny"),
        "tm_sellmeier": (str, "fradkin1999_nz"),
        "anchor_pump_nm": (float, 670.0),
        "anchor_signal_nm": (float, 1411.0),
        "anchor_idler_nm": (float, 1276.0),
        "degenerate_pump_nm": (float, 637.5),
        "degenerate_nm": (float, 1275.0),
        "match_group_velocity": (_bool, True),
        "corrections_file": (str, ""),
    },
    "source": {
        "pump_shape": (_choice("gaussian", "hermite_gauss", "bins"), "gaussian"),
        "pump_center_nm": (float, 670.0),
        "pump_fwhm_nm": (float, 2.0),
        "hg_order": (int, 0),
        "bin_count": (int, 5),
        "bin_spacing_nm": (float, 1.0),
        "bin_width_nm": (float, 0.5),
        "chirp_fs2": (float, 0.0),
        "length_mm": (float, 16.0),
        "profile": (_choice("none", "linear", "sinusoidal", "random_walk"), "none"),
        "profile_slope_per_mm": (float, 0.0),
        "profile_amplitude": (float, 0.0),
        "profile_period_mm": (float, 1.0),
        "profile_step": (float, 0.0),
        "profile_seed": (int, 0),
        "segments": (int, 1),
        "signal_filter": (_choice("none", "rect", "super_gaussian"), "none"),
        "signal_filter_center_nm": (float, 1411.0),
        "signal_filter_width_nm": (float, 45.0),
        "idler_filter": (_choice("none", "rect", "super_gaussian"), "none"),
        "idler_filter_center_nm": (float, 1276.0),
        "idler_filter_width_nm": (float, 3.0),
        "filter_order": (int, 4),
    },
    "grid": {
        "signal_min_nm": (float, 1366.0),
        "signal_max_nm": (float, 1456.0),
        "idler_min_nm": (float, 1256.0),
        "idler_max_nm": (float, 1296.0),
        "signal_points": (int, 512),
        "idler_points": (int, 512),
    },
    "analysis": {
        "pm_pump_min_nm": (float, 630.0),
        "pm_pump_max_nm": (float, 690.0),
        "pm_steps": (int, 121),
        "map_fwhm_min_nm": (float, 0.25),
        "map_fwhm_max_nm": (float, 5.0),
        "map_length_min_mm": (float, 2.0),
        "map_length_max_mm": (float, 40.0),
        "map_steps": (int, 24),
        "map_include_reference": (_bool, True),
        "g2_orders": (_ints, [0, 1, 2, 3]),
        "g2_fwhms_nm": (_floats, [0.5, 1.0, 1.5, 2.0, 3.0]),
        "g2_arm": (_choice("signal", "idler"), "idler"),
        "jsi_shapes": (_strs, ["hg0", "hg1", "hg2", "hg3", "bins"]),
    },
    "measurement": {
        "res_signal_nm": (float, 0.2),
        "res_idler_nm": (float, 0.2),
        "events": (int, 1_000_000),
        "seed": (int, 0),
        "mc_pulses": (int, 1_000_000),
        "mc_mean_photon": (float, 0.5),
        "click_detectors": (_bool, False),
        "klyshko_signal": (float, 0.08),
        "klyshko_idler": (float, 0.05),
        "signal_transmission": (float, 0.26),
        "idler_transmission": (float, 0.30),
        "signal_detector": (float, 0.55),
        "idler_detector": (float, 0.41),
        "signal_extra_factors": (_floats, []),
        "idler_extra_factors": (_floats, []),
        "te_loss_db_per_cm": (float, 0.85),
        "tm_loss_db_per_cm": (float, 0.67),
        "pulse_energies_pj": (_floats, [37.5]),
        "brightness_alpha": (float, 0.28),
        "tof_dispersion_ns_per_nm": (float, 0.3),
        "tof_jitter_ps": (float, 70.0),
        "shaper_resolution_nm": (float, 0.035),
    },
    "output": {
        "directory": (str, ""),
        "complex_parts": (_bool, False),
    },
}

PRESETS = ("star-point.default", "fig2a", "fig2b", "fig3", "fig4-brightness", "fig5", "fig6", "fig7")


def defaults():
    return {sec: {k: (list(v[1]) if isinstance(v[1], list) else v[1]) for k, v in keys.items()}
            for sec, keys in SCHEMA.items()}


def _assign(cfg, section, key, text):
    name = f"{section}.{key}"
    if section not in SCHEMA:
        raise ConfigError(f"unknown config section {section!r} (in {name})", key=name)
    if key not in SCHEMA[section]:
        raise ConfigError(f"unknown config key {name}", key=name)
    parser = SCHEMA[section][key][0]
    try:
        cfg[section][key] = parser(text)
    except ValueError as exc:
        raise ConfigError(f"invalid value for {name}: {exc}", key=name) from exc


def preset_path(name):
    return resources.files("pdcsim") / "presets" / f"{name}.ini"


def _read_text(source):
    path = Path(source)
    if path.is_file():
        return path.read_text(encoding="utf-8")
    if source in PRESETS:
        return preset_path(source).read_text(encoding="utf-8")
    raise ConfigError(f"config file not found and not a shipped preset: {source}", key="--config")


def load_config(source=None, overrides=()):
    """Resolve a config from defaults, an INI file (or preset name, or manifest JSON) and overrides.

    Overrides are ``section.key=value`` strings.  Unknown sections or keys
    raise :class:`ConfigError` naming the key.
    """
    cfg = defaults()
    if source is not None:
        text = _read_text(str(source))
        if text.lstrip().startswith("{"):
            data = json.loads(text)
            data = data.get("config", data)
            for section, keys in data.items():
                for key, value in keys.items():
                    _assign(cfg, section, key, _to_text(value))
        else:
            parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
            parser.optionxform = str
            try:
                parser.read_string(text)
            except configparser.Error as exc:
                raise ConfigError(f"cannot parse config: {exc}", key=str(source)) from exc
            for section in parser.sections():
                for key, value in parser.items(section):
                    _assign(cfg, section, key, value)
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value, got {item!r}", key=item)
        name, value = item.split("=", 1)
        section, key = name.strip().split(".", 1)
        _assign(cfg, section, key, value)
    return cfg


def _to_text(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, list):
        return ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def config_hash(cfg):
    """SHA-256 of the resolved config, ignoring where outputs are written."""
    data = {s: dict(k) for s, k in cfg.items()}
    data["output"] = {k: v for k, v in data["output"].items() if k != "directory"}
    blob = json.dumps(data, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()
