"""Command-line front end: ``pdcsim <subcommand> --config <path> [--set k=v]... [--out dir]``."""
from __future__ import annotations

import argparse
import csv
import datetime
import json
import logging
import os
import sys
import warnings
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from . import analysis, dispersion, jsa as jsamod, measurement, spectra
from .config import PRESETS, config_hash, load_config
from .errors import (
    CalibrationError,
    CalibrationWarning,
    ConfigError,
    DegenerateStateError,
    DomainError,
    NumericalError,
    SpecError,
)
from .units import nm_to_omega

ENV_OUT = "PDCSIM_OUT"
EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3
LOCK_NAME = ".pdcsim.lock"

logger = logging.getLogger("pdcsim")


def tool_version():
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "0+unknown"


def _write_json(path, data):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


class Run:
    """Resolved config plus lazily built physics objects for one invocation."""

    def __init__(self, cfg, out):
        self.cfg = cfg
        self.out = out
        self.files = []
        self._cal = None

    def section(self, name):
        return self.cfg[name]

    def path(self, name):
        self.files.append(name)
        return self.out / name

    # dispersion
    @property
    def calibration(self):
        if self._cal is None:
            d = self.cfg["dispersion"]
            try:
                te = dispersion.SELLMEIER_SETS[d["te_sellmeier"]]
            except KeyError:
                raise ConfigError(f"unknown Sellmeier set {d['te_sellmeier']!r} "
                                  f"(choose from {', '.join(dispersion.SELLMEIER_SETS)})",
                                  key="dispersion.te_sellmeier") from None
            try:
                tm = dispersion.SELLMEIER_SETS[d["tm_sellmeier"]]
            except KeyError:
                raise ConfigError(f"unknown Sellmeier set {d['tm_sellmeier']!r}",
                                  key="dispersion.tm_sellmeier") from None
            if d["corrections_file"]:
                data = json.loads(Path(d["corrections_file"]).read_text(encoding="utf-8"))
                data = data.get("correction", data)
                corr = dispersion.DispersionCorrection(
                    data["te_offset"], data["te_slope_s"], data["tm_offset"], data["tm_slope_s"],
                    float(nm_to_omega(data["reference_wavelength_nm"])))
                model = dispersion.DispersionModel(te, tm, corr)
                anchors = self.anchors()
                self._cal = dispersion.CalibrationResult(corr, model, dispersion.anchor_residuals(model, anchors), 0,
                                                         True)
            else:
                with warnings.catch_warnings(record=True) as caught:
                    warnings.simplefilter("always", CalibrationWarning)
                    self._cal = dispersion.calibrate(te, tm, self.anchors())
                for w in caught:
                    logger.warning("%s", w.message)
        return self._cal

    def anchors(self):
        d = self.cfg["dispersion"]
        return dispersion.CalibrationAnchors(d["anchor_pump_nm"], d["anchor_signal_nm"], d["anchor_idler_nm"],
                                             d["degenerate_pump_nm"], d["degenerate_nm"], d["match_group_velocity"])

    @property
    def model(self):
        return self.calibration.model

    # source
    def pump(self, shape=None, fwhm_nm=None, order=None):
        s = self.cfg["source"]
        shape = shape or s["pump_shape"]
        fwhm_nm = s["pump_fwhm_nm"] if fwhm_nm is None else fwhm_nm
        chirp = s["chirp_fs2"] * 1e-30
        if shape == "gaussian":
            return spectra.GaussianPump(s["pump_center_nm"], fwhm_nm, chirp)
        if shape == "hermite_gauss":
            return spectra.HermiteGaussPump(s["hg_order"] if order is None else order, s["pump_center_nm"], fwhm_nm,
                                            chirp)
        return spectra.FrequencyBinsPump(s["bin_count"], s["pump_center_nm"], s["bin_spacing_nm"],
                                         s["bin_width_nm"], chirp)

    def waveguide(self):
        s = self.cfg["source"]
        profile = None
        if s["profile"] == "linear":
            profile = jsamod.LinearProfile(s["profile_slope_per_mm"] * 1e3)
        elif s["profile"] == "sinusoidal":
            profile = jsamod.SinusoidalProfile(s["profile_amplitude"], s["profile_period_mm"] * 1e-3)
        elif s["profile"] == "random_walk":
            profile = jsamod.RandomWalkProfile(s["profile_step"], s["profile_seed"])
        segments = s["segments"]
        if profile is not None and segments == 1:
            segments = jsamod.DEFAULT_SEGMENTS
        return jsamod.PhasematchingSpec(s["length_mm"] * 1e-3, profile, segments)

    def _filter(self, arm):
        s = self.cfg["source"]
        kind = s[f"{arm}_filter"]
        center, width = s[f"{arm}_filter_center_nm"], s[f"{arm}_filter_width_nm"]
        if kind == "rect":
            return spectra.RectFilter(center, width)
        if kind == "super_gaussian":
            return spectra.SuperGaussianFilter(center, width, s["filter_order"])
        return None

    def filters(self):
        return self._filter("signal"), self._filter("idler")

    def grid(self):
        g = self.cfg["grid"]
        return spectra.FrequencyGrid.from_wavelengths((g["signal_min_nm"], g["signal_max_nm"]),
                                                      (g["idler_min_nm"], g["idler_max_nm"]),
                                                      g["signal_points"], g["idler_points"])


# subcommands -----------------------------------------------------------------

def cmd_calibrate(run):
    cal = run.calibration
    data = cal.to_dict()
    _write_json(run.path("calibration.json"), data)
    r = data["residuals"]
    print(f"corrections: {data['correction']}")
    print(f"residual dk star {r['star_phase_mismatch_per_m']:.3e} 1/m, "
          f"degeneracy {r['degeneracy_phase_mismatch_per_m']:.3e} 1/m, "
          f"GV mismatch {r['agvm_relative_velocity']:.3e} (matched: {cal.agvm_satisfied})")


def cmd_pm_curve(run):
    a = run.section("analysis")
    model, anchors = run.model, run.anchors()
    curve = dispersion.solve_pm_curve(model, (a["pm_pump_min_nm"], a["pm_pump_max_nm"]), a["pm_steps"])
    _write_rows(run.path("pm_curve.csv"), ["pump_nm", "signal_nm", "idler_nm", "residual_per_m"],
                [(p.pump_nm, p.signal_nm, p.idler_nm, p.residual) for p in curve.points])
    extra = dispersion.solve_pm_curve(model, (anchors.star_pump_nm, anchors.degeneracy_pump_nm), 2)
    star = [p for p in extra.points if p.pump_nm == anchors.star_pump_nm]
    deg = [p for p in extra.points if p.pump_nm == anchors.degeneracy_pump_nm]
    ws = nm_to_omega(anchors.star_signal_nm)
    wi = nm_to_omega(anchors.star_idler_nm)
    vp = 1.0 / float(model.inverse_group_velocity(dispersion.PUMP, ws + wi))
    vs = 1.0 / float(model.inverse_group_velocity(dispersion.SIGNAL, ws))
    report = {
        "star": [{"signal_nm": p.signal_nm, "idler_nm": p.idler_nm} for p in star],
        "degeneracy": [{"signal_nm": p.signal_nm, "idler_nm": p.idler_nm} for p in deg],
        "pump_group_velocity_m_per_s": vp,
        "signal_group_velocity_m_per_s": vs,
        "relative_group_velocity_mismatch": (vp - vs) / vp,
        "pumps_without_solution_nm": curve.no_solution,
    }
    _write_json(run.path("pm_curve.json"), report)
    for p in star:
        print(f"pump {p.pump_nm} nm -> signal {p.signal_nm:.3f} nm, idler {p.idler_nm:.3f} nm")
    for p in deg:
        print(f"pump {p.pump_nm} nm -> signal {p.signal_nm:.3f} nm, idler {p.idler_nm:.3f} nm")
    print(f"relative group-velocity mismatch (pump TE vs signal TM): {report['relative_group_velocity_mismatch']:.3e}")


def cmd_jsa(run):
    sf, idf = run.filters()
    out = jsamod.source_jsa(run.model, run.pump(), run.waveguide(), run.grid(), sf, idf)
    out.write(run.out / "jsa", run.cfg["output"]["complex_parts"])
    run.files += ["jsa.csv", "jsa.json"] + (["jsa_re.csv", "jsa_im.csv"] if run.cfg["output"]["complex_parts"] else [])
    ms, mi = jsamod.marginals(out)
    _write_rows(run.path("marginal_signal.csv"), ["signal_nm", "density_per_rad_s"], zip(out.grid.signal_nm, ms))
    _write_rows(run.path("marginal_idler.csv"), ["idler_nm", "density_per_rad_s"], zip(out.grid.idler_nm, mi))
    s = analysis.schmidt_decompose(out)
    _write_rows(run.path("schmidt_signal_modes.csv"),
                ["signal_nm"] + [f"mode{k}_abs" for k in range(s.signal_modes.shape[1])],
                ([lam] + list(np.abs(row)) for lam, row in zip(out.grid.signal_nm, s.signal_modes)))
    report = s.to_dict(max_modes=16)
    report["transmitted_fraction"] = out.transmitted_fraction
    _write_json(run.path("schmidt.json"), report)
    print(f"K = {s.schmidt_number:.4f}  P = {s.purity:.4f}  g2 = {s.g2:.4f}")


def cmd_purity_map(run):
    a = run.section("analysis")
    bw = np.linspace(a["map_fwhm_min_nm"], a["map_fwhm_max_nm"], a["map_steps"])
    ln = np.linspace(a["map_length_min_mm"], a["map_length_max_mm"], a["map_steps"])
    if a["map_include_reference"]:
        bw, ln = np.union1d(bw, [run.cfg["source"]["pump_fwhm_nm"]]), np.union1d(ln, [run.cfg["source"]["length_mm"]])
    pm = analysis.purity_map(run.model, lambda f: run.pump(fwhm_nm=f), bw, ln)
    pm.write(run.out / "purity_map")
    run.files += ["purity_map.csv", "purity_map.json"]
    i, j = pm.argmax()
    print(f"{pm.valid.sum()}/{pm.purity.size} valid cells; max P = {pm.purity[i, j]:.4f} at "
          f"{pm.bandwidths_nm[i]:.3f} nm, {pm.lengths_mm[j]:.2f} mm")


def cmd_filter_study(run):
    sf, idf = run.filters()
    base = jsamod.source_jsa(run.model, run.pump(), run.waveguide(), run.grid())
    rows = {"unfiltered": (base, 1.0)}
    if idf is not None:
        rows["idler_filtered"] = jsamod.apply_filters(base, None, idf)
    if sf is not None:
        rows["signal_filtered"] = jsamod.apply_filters(base, sf, None)
    if sf is not None and idf is not None:
        rows["both_filtered"] = jsamod.apply_filters(base, sf, idf)
    report = {"filters": {"signal": sf.to_dict() if sf else None, "idler": idf.to_dict() if idf else None}}
    for name, (state, frac) in rows.items():
        s = analysis.schmidt_decompose(state, modes=False)
        report[name] = {"K": s.schmidt_number, "P": s.purity, "transmitted_fraction": frac}
        print(f"{name:>16}: K = {s.schmidt_number:.4f}  (transmitted {frac:.3f})")
    _write_json(run.path("filter_study.json"), report)


def _jsi_pump(run, label):
    if label == "bins":
        return run.pump(shape="bins")
    if label.startswith("hg") and label[2:].isdigit():
        return run.pump(shape="hermite_gauss", order=int(label[2:]))
    if label == "gaussian":
        return run.pump(shape="gaussian")
    raise ConfigError(f"unknown pump shape label {label!r} in analysis.jsi_shapes", key="analysis.jsi_shapes")


def cmd_jsi_sim(run):
    m = run.section("measurement")
    sf, idf = run.filters()
    grid = run.grid()
    phi = jsamod.phasematching_matrix(run.model, run.waveguide(), grid)
    report = {"res_signal_nm": m["res_signal_nm"], "res_idler_nm": m["res_idler_nm"], "events": m["events"],
              "seed": m["seed"], "shapes": {}}
    for k, label in enumerate(run.section("analysis")["jsi_shapes"]):
        state = jsamod.assemble_jsa(_jsi_pump(run, label), phi, grid)
        if sf is not None or idf is not None:
            state, _ = jsamod.apply_filters(state, sf, idf)
        counts = measurement.simulate_jsi_measurement(state, m["res_signal_nm"], m["res_idler_nm"], m["events"],
                                                      seed=m["seed"] + k)
        jsamod.write_matrix_csv(run.path(f"jsi_{label}.csv"), grid, counts)
        est = analysis.k_from_jsi(counts)
        true = analysis.schmidt_decompose(state, modes=False)
        report["shapes"][label] = {"K_from_jsi": est.schmidt_number, "K_true": true.schmidt_number,
                                   "counts": int(counts.sum())}
        print(f"{label:>6}: K from measured JSI = {est.schmidt_number:.4f}  (amplitude K = {true.schmidt_number:.4f})")
    _write_json(run.path("jsi_sim.json"), report)


def cmd_g2_table(run):
    a = run.section("analysis")
    sf, idf = run.filters()
    table = analysis.g2_prediction_table(run.model, a["g2_orders"], a["g2_fwhms_nm"], a["g2_arm"],
                                         idler_filter=idf or False, signal_filter=sf,
                                         length_m=run.cfg["source"]["length_mm"] * 1e-3,
                                         center_nm=run.cfg["source"]["pump_center_nm"], grid=run.grid())
    table.write(run.path("g2_table.csv"))
    print("order " + " ".join(f"{b:>7.2f}nm" for b in table.bandwidths_nm))
    for n, row in zip(table.orders, table.g2):
        print(f"HG{n:<4}" + " ".join(f"{v:>9.4f}" for v in row))


def cmd_g2_mc(run):
    m = run.section("measurement")
    sf, idf = run.filters()
    state = jsamod.source_jsa(run.model, run.pump(), run.waveguide(), run.grid(), sf, idf)
    lam = measurement.truncate_probabilities(analysis.schmidt_decompose(state, modes=False).probabilities)
    res = measurement.mc_g2(lam, m["mc_mean_photon"], m["mc_pulses"], m["seed"], m["click_detectors"])
    res.write_json(run.path("g2_mc.json"))
    print(f"g2 = {res.g2:.4f} +/- {res.stderr:.4f}  (analytic {res.analytic_g2:.4f}, {lam.size} modes)")


def cmd_budget(run):
    m = run.section("measurement")
    eta_s = measurement.efficiency_budget(m["klyshko_signal"], m["signal_transmission"], m["signal_detector"],
                                          *m["signal_extra_factors"])
    eta_i = measurement.efficiency_budget(m["klyshko_idler"], m["idler_transmission"], m["idler_detector"],
                                          *m["idler_extra_factors"])
    length_cm = run.cfg["source"]["length_mm"] / 10.0
    tof = measurement.TofSpectrometer(m["tof_dispersion_ns_per_nm"], m["tof_jitter_ps"])
    energies = m["pulse_energies_pj"]
    mean_n = [float(measurement.mean_photon(e, m["brightness_alpha"])) for e in energies]
    report = {
        "intrinsic_efficiency_signal": eta_s,
        "intrinsic_efficiency_idler": eta_i,
        "waveguide_transmission_te": measurement.waveguide_transmission(m["te_loss_db_per_cm"], length_cm),
        "waveguide_transmission_tm": measurement.waveguide_transmission(m["tm_loss_db_per_cm"], length_cm),
        "tof_resolution_nm": measurement.tof_resolution(tof),
        "brightness_alpha": m["brightness_alpha"],
        "mean_photon": [{"pulse_energy_pj": e, "N": n} for e, n in zip(energies, mean_n)],
    }
    _write_json(run.path("budget.json"), report)
    _write_rows(run.path("brightness.csv"), ["pulse_energy_pj", "mean_photon"], zip(energies, mean_n))
    print(f"intrinsic efficiency signal {eta_s:.3f}, idler {eta_i:.3f}")
    print(f"waveguide transmission TE {report['waveguide_transmission_te']:.4f}, "
          f"TM {report['waveguide_transmission_tm']:.4f}")
    print(f"time-of-flight resolution {report['tof_resolution_nm']:.4f} nm")
    for e, n in zip(energies, mean_n):
        print(f"mean photon number at {e:g} pJ: {n:.3f}")


def cmd_shaper_mask(run):
    mask = spectra.discretize_to_shaper(run.pump(), run.section("measurement")["shaper_resolution_nm"])
    mask.write_csv(run.path("shaper_mask.csv"))
    _write_json(run.path("shaper_mask.json"), {"pump": run.pump().to_dict(), "pixels": int(mask.wavelength_nm.size),
                                               "resolution_nm": mask.resolution_nm, "fidelity": mask.fidelity})
    print(f"{mask.wavelength_nm.size} pixels, fidelity {mask.fidelity:.6f}")


COMMANDS = {
    "calibrate": (cmd_calibrate, "fit index corrections to the anchors"),
    "pm-curve": (cmd_pm_curve, "phasematching curve over a pump range"),
    "jsa": (cmd_jsa, "JSA, marginals and Schmidt report"),
    "purity-map": (cmd_purity_map, "purity versus pump bandwidth and length"),
    "filter-study": (cmd_filter_study, "Schmidt number before and after filtering"),
    "jsi-sim": (cmd_jsi_sim, "simulated measured JSIs for several pump shapes"),
    "g2-table": (cmd_g2_table, "predicted g2(0) for Hermite-Gauss pumps"),
    "g2-mc": (cmd_g2_mc, "Monte-Carlo photon-counting g2(0)"),
    "budget": (cmd_budget, "heralding efficiency, loss and brightness arithmetic"),
    "shaper-mask": (cmd_shaper_mask, "pump mask at the shaper resolution"),
}


def build_parser():
    p = argparse.ArgumentParser(prog="pdcsim", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", help=f"INI file, manifest JSON, or preset ({', '.join(PRESETS)})")
        sp.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE")
        sp.add_argument("--out", help=f"output directory (default: output.directory, then ${ENV_OUT})")
    return p


def _output_dir(args, cfg):
    return Path(args.out or cfg["output"]["directory"] or os.environ.get(ENV_OUT) or "pdcsim-out")


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = load_config(args.config, args.overrides)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    out = _output_dir(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    lock = out / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        print(f"error: output directory {out} is locked by another run ({lock})", file=sys.stderr)
        return EXIT_INVALID
    os.write(fd, str(os.getpid()).encode())
    os.close(fd)
    run = Run(cfg, out)
    status, message = EXIT_OK, None
    try:
        COMMANDS[args.command][0](run)
    except ConfigError as exc:
        status, message = EXIT_INVALID, str(exc)
    except (NumericalError, CalibrationError, DegenerateStateError) as exc:
        status, message = EXIT_NUMERICAL, f"numerical failure: {exc}"
    except (DomainError, SpecError, ValueError) as exc:
        status, message = EXIT_INVALID, str(exc)
    finally:
        manifest = {
            "tool": "pdcsim",
            "version": tool_version(),
            "command": args.command,
            "config_hash": config_hash(cfg),
            "seed": cfg["measurement"]["seed"],
            "exit_code": status,
            "files": run.files,
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
            "config": cfg,
        }
        _write_json(out / f"manifest_{args.command}.json", manifest)
        lock.unlink(missing_ok=True)
    if message:
        print(f"error: {message}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
