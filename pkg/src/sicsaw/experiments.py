"""End-to-end experiment pipelines built from a RunConfig."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import analysis
from .acoustics import AnalyticalStrainField, amplitude_from_power, lattice_slope_map, sample_strain_grid
from .config import RunConfig, readout_from
from .dynamics import dressed_spectrum, simulate_apr_scan, simulate_rabi_sequence
from .ensemble import EnsembleModel, SpinSamples, channel_power, local_drive_rates, sample_spins, scan_map
from .spin import GTensorC3v

MHZ = 1e6
UM = 1e-6


def strain_scale(run: RunConfig, power_mw: float) -> float:
    return amplitude_from_power(run.calibration, power_mw * 1e-3)


def unit_field(run: RunConfig, angle_deg: float | None = None) -> AnalyticalStrainField:
    """Analytical cavity field with unit peak surface exx."""
    if angle_deg is None:
        angle_deg = run.raw["cavity"].get("propagation_angle_deg", 0.0)
    return AnalyticalStrainField(run.wave, run.material, run.mode, peak_strain=1.0,
                                 propagation_angle=np.deg2rad(angle_deg))


def spin_rates(run: RunConfig, power_mw: float, center=(0.0, 0.0), species: str | None = None,
               angle_deg: float | None = None, model: EnsembleModel | None = None) -> SpinSamples:
    sp = run.species(species)
    model = model or run.ensemble
    samples = sample_spins(model, center)
    return local_drive_rates(unit_field(run, angle_deg), sp.g_params, samples, g_dm1=sp.coupling_dm1,
                             scale=strain_scale(run, power_mw))


def probe_axis(run: RunConfig) -> np.ndarray:
    at = run.experiment["autler_townes"]
    half = at["probe_span_mhz"] * MHZ
    return np.linspace(-half, half, at["n_probe"])


def ensemble_at_spectrum(run: RunConfig, samples: SpinSamples, mech_detuning: float | None = None,
                         probe_rabi: float | None = None) -> analysis.Spectrum:
    """Spot-averaged Autler-Townes spectrum (ODMR dip depth vs probe offset).

    The inhomogeneous linewidth enters as the Gaussian width of every line.
    """
    at = run.experiment["autler_townes"]
    f = probe_axis(run)
    det = at["mech_detuning_mhz"] * MHZ if mech_detuning is None else mech_detuning
    pr = at["probe_rabi_mhz"] * MHZ if probe_rabi is None else probe_rabi
    per_spin = dressed_spectrum(samples.omega_m, det, f, pr, at["linewidth_mhz"] * MHZ)
    return analysis.Spectrum(f, per_spin.mean(axis=0))


def at_splitting(run: RunConfig, samples: SpinSamples, **kw) -> analysis.SplittingResult:
    return analysis.extract_at_splitting(ensemble_at_spectrum(run, samples, **kw))


@dataclass
class AutlerTownesResult:
    powers_mw: list
    spectra: list
    splittings: list
    sqrt_fit: analysis.SqrtPowerFit | None
    detuning_sweep: list
    species_report: dict


def run_autler_townes(run: RunConfig, powers_mw=None) -> AutlerTownesResult:
    exp = run.experiment
    powers = list(powers_mw if powers_mw is not None else exp["power_mw"])
    spectra, splits = [], []
    for p in powers:
        s = spin_rates(run, p)
        spec = ensemble_at_spectrum(run, s)
        spectra.append(spec)
        splits.append(analysis.extract_at_splitting(spec))
    sqrt_fit = None
    if len(powers) >= 3:
        sqrt_fit = analysis.linear_fit_sqrt_power([p * 1e-3 for p in powers], [r.splitting for r in splits])
    sweep = []
    top = max(powers)
    base = spin_rates(run, top)
    for d in exp["autler_townes"]["detuning_sweep_mhz"]:
        sweep.append((d, at_splitting(run, base, mech_detuning=d * MHZ)))
    report = {}
    for name in exp.get("species_sweep", []):
        report[name] = at_splitting(run, spin_rates(run, top, species=name))
    return AutlerTownesResult(powers, spectra, splits, sqrt_fit, sweep, report)


def dm1_rate_ratio(run: RunConfig, num: str, den: str, power_mw: float | None = None) -> float:
    """Ratio of spot-averaged |Delta m = 1| drive rates in the APR device geometry."""
    apr = run.experiment["apr"]
    p = apr["power_mw"] if power_mw is None else power_mw
    a = spin_rates(run, p, species=num, angle_deg=apr["propagation_angle_deg"])
    b = spin_rates(run, p, species=den, angle_deg=apr["propagation_angle_deg"])
    return float(np.mean(np.abs(a.omega_dm1)) / np.mean(np.abs(b.omega_dm1)))


@dataclass
class RabiResult:
    tau: np.ndarray
    ensemble: np.ndarray
    single: np.ndarray
    single_rate: float
    fitted_frequency: float


def run_rabi(run: RunConfig, power_mw: float | None = None) -> RabiResult:
    rb = run.experiment["rabi"]
    p = run.experiment["power_mw"][0] if power_mw is None else power_mw
    sp = run.species()
    samples = spin_rates(run, p)
    n = min(rb["n_spins"], len(samples))
    tau = np.linspace(0.0, rb["tau_max_us"] * UM, rb["n_tau"])
    kw = dict(omega_b=rb["omega_b_mhz"] * MHZ, tau_list=tau, detuning=rb["mech_detuning_mhz"] * MHZ,
              ideal_pulses=rb["ideal_pulses"], readout=readout_from(run.raw, sp))
    ens = simulate_rabi_sequence(samples.omega_m[:n], inhomogeneous_detuning=samples.detuning[:n], **kw)
    mean_rate = float(np.mean(np.abs(samples.omega_m)))
    single = simulate_rabi_sequence(mean_rate, **kw)
    f = analysis.fit_sinusoid(tau, single.signal)
    return RabiResult(tau, ens.signal.mean(axis=0), single.signal, mean_rate, f)


@dataclass
class AprResult:
    b0: np.ndarray
    on_cavity: np.ndarray
    off_cavity: np.ndarray
    transverse_y: np.ndarray | None = None
    transverse_contrast: np.ndarray | None = None
    transverse_fit: analysis.GaussianProfileFit | None = None


def _apr_contrast(run: RunConfig, samples: SpinSamples, b0, cavity_detuning, power_mw):
    apr = run.experiment["apr"]
    sp = run.species(apr["species"])
    n = min(apr["n_spins"], len(samples))
    residual = apr["residual_magnetic_mhz_per_sqrt_w"] * MHZ * np.sqrt(power_mw * 1e-3)
    return simulate_apr_scan(
        samples.omega_dm1[:n], b0, apr["modulation_g"], sp.gamma_hz_per_gauss, run.mode.ring_time,
        pump_time=apr["pump_us"] * UM, probe_time=apr["probe_us"] * UM, cavity_detuning=cavity_detuning,
        linewidth=apr["linewidth_mhz"] * MHZ, readout=readout_from(run.raw, sp),
        residual_magnetic_rabi=residual, n_steps=apr["n_steps"],
    ).contrast


def run_apr(run: RunConfig, power_mw: float | None = None) -> AprResult:
    apr = run.experiment["apr"]
    p = apr["power_mw"] if power_mw is None else power_mw
    b0 = np.linspace(-apr["b0_span_g"], apr["b0_span_g"], apr["n_b0"])
    samples = spin_rates(run, p, species=apr["species"], angle_deg=apr["propagation_angle_deg"])
    on = _apr_contrast(run, samples, b0, 0.0, p)
    off = _apr_contrast(run, samples, b0, apr["off_cavity_mhz"] * MHZ, p)
    res = AprResult(b0, on, off)
    if apr["transverse_scan"]:
        half = apr["transverse_span_um"] * UM
        ys = np.linspace(-half, half, apr["n_transverse"])
        sp = run.species(apr["species"])
        field = unit_field(run, apr["propagation_angle_deg"])
        scale = strain_scale(run, p)

        def contrast_at(s: SpinSamples) -> float:
            s = local_drive_rates(field, sp.g_params, s, g_dm1=sp.coupling_dm1, scale=scale)
            return float(_apr_contrast(run, s, np.array([0.0]), 0.0, p)[0])

        vals = scan_map(contrast_at, [(0.0, y) for y in ys], run.ensemble)
        res.transverse_y, res.transverse_contrast = ys, vals
        res.transverse_fit = analysis.fit_gaussian_profile(ys, np.abs(vals))
    return res


@dataclass
class MapResult:
    direction: str
    positions: np.ndarray  # (n, 2), metres
    splitting: np.ndarray  # Hz
    resolved: np.ndarray
    summary: dict


def run_map(run: RunConfig, direction: str, power_mw: float | None = None, model: EnsembleModel | None = None,
            g: GTensorC3v | None = None) -> MapResult:
    mp = run.experiment["map"]
    p = mp["power_mw"] if power_mw is None else power_mw
    model = model or run.ensemble
    sp = run.species()
    g = g or sp.g_params
    field = unit_field(run)
    scale = strain_scale(run, p)
    if direction == "transverse":
        half = mp["transverse_span_um"] * UM
        pos = np.stack([np.zeros(mp["n_transverse"]), np.linspace(-half, half, mp["n_transverse"])], axis=1)
    elif direction == "longitudinal":
        span = mp["longitudinal_span_um"] * UM
        n = mp["n_longitudinal"]
        xs = -span / 2 + span * np.arange(n) / n
        pos = np.stack([xs, np.zeros(n)], axis=1)
    elif direction == "2d":
        xs = np.linspace(-mp["longitudinal_span_um"] / 2, mp["longitudinal_span_um"] / 2, 25) * UM
        ys = np.linspace(-mp["transverse_span_um"], mp["transverse_span_um"], 21) * UM
        xx, yy = np.meshgrid(xs, ys, indexing="ij")
        pos = np.stack([xx.ravel(), yy.ravel()], axis=1)
    else:
        raise ValueError(f"unknown direction {direction!r}")

    results = scan_map(lambda s: at_splitting(run, local_drive_rates(field, g, s, scale=scale)), pos, model)
    split = np.array([r.splitting for r in results])
    resolved = np.array([r.resolved for r in results])
    summary: dict = {}
    if direction == "transverse":
        fit = analysis.fit_gaussian_profile(pos[resolved, 1], split[resolved])
        summary["fitted_w0_um"] = fit.waist / UM
        summary["fitted_w0_ci95_um"] = fit.waist_ci / UM
        summary["configured_w0_um"] = run.raw["cavity"]["w0_um"]
    elif direction == "longitudinal":
        spec = analysis.fft_spatial(pos[:, 0], split)
        summary["fft_peak_per_um"] = spec.dominant_frequency() * UM
        summary["expected_per_um"] = 2 / run.raw["cavity"]["wavelength_um"]
    if direction != "2d":
        w = mp.get("window_um")
        coord = pos[:, 0] if direction == "longitudinal" else pos[:, 1]
        summary["peak_to_peak_percent"] = analysis.peak_to_peak_modulation(
            split, coord, None if w is None else w * UM)
        summary["min_splitting_mhz"] = float(split.min() / MHZ)
    return MapResult(direction, pos, split, resolved, summary)


def matched_shear_g(run: RunConfig, g: GTensorC3v, model: EnsembleModel | None = None, n_x: int = 49) -> GTensorC3v:
    """Return ``g`` with g14 set so the spot-averaged RMS shear and uniaxial
    Delta m = 2 channels reach equal maxima along the longitudinal axis."""
    model = model or run.ensemble
    field = unit_field(run)
    lam = run.mode.wavelength
    xs = np.linspace(0, lam / 2, n_x)
    unit = replace(g, g14=1.0)
    uni, shear = [], []
    for x in xs:
        a, b = channel_power(sample_spins(model, (x, 0.0)), field, unit)
        uni.append(np.mean(a))
        shear.append(np.mean(b))
    g14 = np.sqrt(max(uni) / max(shear))
    return replace(g, g14=float(g14))


def calibrate_strain(run: RunConfig, target_rate: float, power_mw: float, species: str | None = None) -> float:
    """strain_per_sqrt_watt making the spot-mean |Omega_m| at the centre equal ``target_rate``."""
    sp = run.species(species)
    s = local_drive_rates(unit_field(run), sp.g_params, sample_spins(run.ensemble))
    return target_rate / float(np.mean(np.abs(s.omega_m))) / np.sqrt(power_mw * 1e-3)


@dataclass
class FieldExport:
    strain: dict
    slopes: dict


def run_field(run: RunConfig) -> FieldExport:
    fc = run.experiment["field"]
    field = unit_field(run, 0.0)
    scale = strain_scale(run, fc["power_mw"])
    xs = np.linspace(-fc["x_span_um"] / 2, fc["x_span_um"] / 2, fc["nx"]) * UM
    zs = np.linspace(0, fc["z_max_um"], fc["nz"]) * UM
    grid = sample_strain_grid(field, xs, zs)
    for k in ("exx", "ezz", "exz"):
        grid[k] = grid[k] * scale
    ys = np.linspace(-fc["y_span_um"] / 2, fc["y_span_um"] / 2, fc["ny"]) * UM
    wave = replace(field.wave, surface_amplitude=field.wave.surface_amplitude * scale)
    sl = lattice_slope_map(wave, field.material, run.mode, xs, ys)
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    slopes = {"x_um": xx.ravel() / UM, "y_um": yy.ravel() / UM,
              "duz_dx": sl.longitudinal.ravel(), "duz_dy": sl.transverse.ravel()}
    return FieldExport(grid, slopes)
