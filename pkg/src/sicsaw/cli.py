"""Command-line entry point: ``sicsaw <subcommand> [--config PATH] [--out DIR] ...``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import experiments as ex
from .acoustics import GridError, NoRootError, _Profile
from .analysis import FitError
from .config import ConfigError, RunConfig, load_config
from .dynamics import UnsupportedToneSet

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
NUMERICAL_ERRORS = (FitError, NoRootError, GridError, UnsupportedToneSet, FloatingPointError,
                    np.linalg.LinAlgError, ValueError)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    return obj


class OutputWriter:
    """Writes CSV/JSON artifacts with a common header; no timestamps, so reruns are byte-identical."""

    def __init__(self, out_dir: Path, run: RunConfig, command: str):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.header = {"tool": "sicsaw", "version": __version__, "command": command, "config_sha256": run.hash,
                       "rng_seed": run.seed}
        self.written: list[Path] = []

    def csv(self, name: str, columns: dict):
        path = self.out_dir / name
        keys = list(columns)
        cols = [np.asarray(columns[k]).ravel() for k in keys]
        n = {len(c) for c in cols}
        if len(n) != 1:
            raise ValueError(f"{name}: columns differ in length")
        with open(path, "w", newline="") as fh:
            for k, v in self.header.items():
                fh.write(f"# {k}: {v}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(keys)
            for row in zip(*cols):
                w.writerow([_cell(v) for v in row])
        self.written.append(path)
        return path

    def json(self, name: str, payload: dict):
        path = self.out_dir / name
        doc = {"header": self.header, **_jsonable(payload)}
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        self.written.append(path)
        return path


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


# ---------------------------------------------------------------------------
# subcommands


def cmd_rayleigh(run: RunConfig, out: OutputWriter, args) -> dict:
    supplied = "v_r_m_s" in run.raw["material"]
    mat = run.material.solved()
    wave = run.wave
    q, s = wave.decay_constants(mat)
    prof = _Profile(wave, mat)
    lam = wave.wavelength
    z = np.linspace(0.0, 2.0 * lam, 41)
    e0 = abs(prof.exx_amp(0.0))
    out.csv("rayleigh_decay.csv", {
        "z_over_lambda": z / lam,
        "z_um": z * 1e6,
        "uz_rel": prof.uz_amp(z) / prof.uz_amp(0.0),
        "exx_rel": prof.exx_amp(z) / e0,
        "ezz_rel": prof.ezz_amp(z) / e0,
        "exz_rel": prof.exz_amp(z) / e0,
    })
    report = {
        "v_l_m_s": mat.v_l, "v_t_m_s": mat.v_t, "v_r_m_s": mat.v_r, "v_r_over_v_t": mat.v_r / mat.v_t,
        "v_r_supplied": supplied, "q_per_um": q * 1e-6, "s_per_um": s * 1e-6,
        "f_saw_mhz": mat.v_r / lam * 1e-6,
    }
    out.json("rayleigh.json", report)
    print(f"v_r = {mat.v_r:.4f} m/s (v_r/v_t = {mat.v_r / mat.v_t:.6f}){' [supplied]' if supplied else ''}")
    return report


def cmd_field(run: RunConfig, out: OutputWriter, args) -> dict:
    f = ex.run_field(run)
    out.csv("field_strain.csv", f.strain)
    out.csv("field_slopes.csv", f.slopes)
    return {"n_strain": len(f.strain["x_um"]), "n_slopes": len(f.slopes["x_um"])}


def cmd_autler_townes(run: RunConfig, out: OutputWriter, args) -> dict:
    res = ex.run_autler_townes(run)
    cols = {"power_mw": [], "probe_mhz": [], "contrast": []}
    for p, spec in zip(res.powers_mw, res.spectra):
        cols["power_mw"] += [p] * len(spec.x)
        cols["probe_mhz"] += list(spec.x / ex.MHZ)
        cols["contrast"] += list(spec.y)
    out.csv("autler_townes_spectrum.csv", cols)
    report = {
        "splittings": [{"power_mw": p, **r.to_record()} for p, r in zip(res.powers_mw, res.splittings)],
        "sqrt_power_fit": None if res.sqrt_fit is None else {
            "slope_hz_per_sqrt_w": res.sqrt_fit.slope, "intercept_hz": res.sqrt_fit.intercept,
            "r_squared": res.sqrt_fit.r_squared},
        "detuning_sweep": [{"mech_detuning_mhz": d, "splitting_hz": r.splitting, "resolved": r.resolved}
                           for d, r in res.detuning_sweep],
        "species": {k: {"splitting_hz": r.splitting, "resolved": r.resolved} for k, r in res.species_report.items()},
    }
    if res.species_report:
        ref = res.species_report.get(run.experiment["species"])
        if ref is not None:
            key = "species_ratio_to_" + run.experiment["species"]
            report[key] = {k: r.splitting / ref.splitting for k, r in res.species_report.items()}
    out.json("autler_townes.json", report)
    for p, r in zip(res.powers_mw, res.splittings):
        print(f"{p:g} mW: splitting {r.splitting / ex.MHZ:.4f} MHz{'' if r.resolved else ' (upper bound)'}")
    return report


def cmd_rabi(run: RunConfig, out: OutputWriter, args) -> dict:
    powers = run.experiment["power_mw"]
    cols = {"power_mw": [], "tau_us": [], "ensemble_signal": [], "single_spin_signal": []}
    fits = []
    for p in powers:
        r = ex.run_rabi(run, p)
        cols["power_mw"] += [p] * len(r.tau)
        cols["tau_us"] += list(r.tau / ex.UM)
        cols["ensemble_signal"] += list(r.ensemble)
        cols["single_spin_signal"] += list(r.single)
        fits.append({"power_mw": p, "single_spin_rate_hz": r.single_rate, "fitted_frequency_hz": r.fitted_frequency})
    out.csv("rabi.csv", cols)
    report = {"traces": fits}
    out.json("rabi.json", report)
    return report


def cmd_apr(run: RunConfig, out: OutputWriter, args) -> dict:
    r = ex.run_apr(run)
    out.csv("apr.csv", {"delta_b0_g": r.b0, "contrast_on_cavity": r.on_cavity, "contrast_off_cavity": r.off_cavity})
    report = {
        "on_extremum_b0_g": r.b0[int(np.argmax(np.abs(r.on_cavity)))],
        "on_peak": float(np.max(np.abs(r.on_cavity))),
        "off_peak": float(np.max(np.abs(r.off_cavity))),
    }
    if r.transverse_fit is not None:
        out.csv("apr_transverse.csv", {"y_um": r.transverse_y / ex.UM, "contrast": r.transverse_contrast})
        report["transverse_fit"] = {"waist_um": r.transverse_fit.waist / ex.UM,
                                    "waist_ci95_um": r.transverse_fit.waist_ci / ex.UM,
                                    "center_um": r.transverse_fit.center / ex.UM}
    out.json("apr.json", report)
    return report


def cmd_map(run: RunConfig, out: OutputWriter, args) -> dict:
    m = ex.run_map(run, args.direction)
    out.csv(f"map_{args.direction}.csv", {"x_um": m.positions[:, 0] / ex.UM, "y_um": m.positions[:, 1] / ex.UM,
                                          "splitting_mhz": m.splitting / ex.MHZ, "resolved": m.resolved})
    report = {"direction": args.direction, **m.summary}
    out.json(f"map_{args.direction}.json", report)
    return report


COMMANDS = {
    "rayleigh": cmd_rayleigh,
    "field": cmd_field,
    "apr": cmd_apr,
    "autler-townes": cmd_autler_townes,
    "rabi": cmd_rabi,
    "map": cmd_map,
}


def _apply_power(cfg: dict, command: str, powers) -> None:
    """Fold --power-mw into the config so the header hash reflects it."""
    exp = cfg["experiment"]
    if command in ("autler-townes", "rabi"):
        exp["power_mw"] = list(powers)
    elif command in ("apr", "map", "field"):
        if len(powers) != 1:
            raise ConfigError(f"power_mw: {command} takes a single power")
        exp[command]["power_mw"] = powers[0]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sicsaw", description="Acoustically driven SiC spin simulations")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, default=None, help="JSON config merged onto the defaults")
        sp.add_argument("--out", type=Path, default=None, help="output directory (overrides output_dir)")
        sp.add_argument("--seed", type=int, default=None, help="RNG seed (overrides rng_seed)")
        sp.add_argument("--power-mw", type=float, nargs="+", default=None)
        if name == "map":
            sp.add_argument("--direction", choices=["transverse", "longitudinal", "2d"], default="transverse")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {}
    if args.seed is not None:
        overrides["rng_seed"] = args.seed
    if args.out is not None:
        overrides["output_dir"] = str(args.out)
    try:
        cfg = load_config(args.config, overrides)
        if args.power_mw and any(p < 0 for p in args.power_mw):
            raise ConfigError("power_mw: must be non-negative")
        if args.power_mw:
            _apply_power(cfg, args.command, args.power_mw)
        run = RunConfig(cfg)
        run.material  # noqa: B018  fail early on inconsistent material blocks
    except (ConfigError, NoRootError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        out = OutputWriter(Path(cfg["output_dir"]), run, args.command)
        COMMANDS[args.command](run, out, args)
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure in {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for p in out.written:
        print(f"wrote {p}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
