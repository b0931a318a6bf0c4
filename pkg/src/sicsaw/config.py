"""JSON run configuration: defaults, schema validation and conversion to SI objects.

Config units: GHz (zero-field splitting, G couplings per unit strain), MHz/G,
MHz (rates, detunings, frequencies), um, mW, G, us.
"""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from .acoustics import GaussianCavityMode, MaterialAcoustics, PowerCalibration, RayleighWaveParams, SIC_V_T
from .dynamics import ReadoutModel
from .ensemble import DepthDistribution, EnsembleModel
from .spin import DefectSpecies, GTensorC3v


class ConfigError(ValueError):
    pass


# Placeholder couplings. kk has g14 chosen so the spot- and depth-averaged
# shear and uniaxial Delta m = 2 channels peak equally; hh and PL6 are kk
# scaled to the 4.0 : 1.1 : 3.4 splittings. The Delta m = 1 sets are scaled so
# kk : hh = 0.89.
_KK_G = {"g11": 20.0, "g12": -4.0, "g13": 3.0, "g14": 34.4521, "g33": 10.0, "g44": 15.0}
_DM1_BASE = {"g11": 20.0, "g12": -4.0, "g13": 3.0, "g14": 5.0, "g33": 10.0, "g44": 15.0}


def _scaled(d, f):
    return {k: v * f for k, v in d.items()}


DEFAULT_CONFIG = {
    "species": {
        "kk": {"d0_ghz": 1.305, "gamma_mhz_per_g": 2.8, "contrast_sign": 1,
               "g_ghz": dict(_KK_G), "g_dm1_ghz": _scaled(_DM1_BASE, 0.89)},
        "hh": {"d0_ghz": 1.336, "gamma_mhz_per_g": 2.8, "contrast_sign": -1,
               "g_ghz": _scaled(_KK_G, 1.1 / 4.0), "g_dm1_ghz": dict(_DM1_BASE)},
        "PL6": {"d0_ghz": 1.365, "gamma_mhz_per_g": 2.8, "contrast_sign": 1,
                "g_ghz": _scaled(_KK_G, 3.4 / 4.0)},
    },
    "material": {"v_l_m_s": 13100.0, "v_t_m_s": SIC_V_T},
    "cavity": {
        "wavelength_um": 12.0,
        "w0_um": 24.0,
        "f_m_mhz": 559.6,
        "q_loaded": 16000.0,
        "strain_per_sqrt_watt": 6.686085604e-4,
        "include_divergence": False,
        "propagation_angle_deg": 0.0,
    },
    "ensemble": {
        "psf_fwhm_um": 1.0,
        "depth": {"kind": "gaussian", "z_mean_um": 0.3, "z_sigma_um": 0.1},
        "detuning_fwhm_mhz": 1.0,
        "n_samples": 2000,
    },
    "readout": {"pl_base": 1.0, "pl_slope": 0.1, "init_polarization": 1.0},
    "experiment": {
        "species": "kk",
        "power_mw": [400.0],
        "species_sweep": [],
        "autler_townes": {
            "probe_span_mhz": 10.0,
            "n_probe": 401,
            "probe_rabi_mhz": 0.2,
            "linewidth_mhz": 1.0,
            "mech_detuning_mhz": 0.0,
            "detuning_sweep_mhz": [],
        },
        "rabi": {
            "omega_b_mhz": 20.0,
            "tau_max_us": 1.5,
            "n_tau": 301,
            "mech_detuning_mhz": 0.0,
            "ideal_pulses": False,
            "n_spins": 2000,
        },
        "apr": {
            "power_mw": 32.0,
            "species": "kk",
            "propagation_angle_deg": 90.0,
            "b0_span_g": 2.0,
            "n_b0": 41,
            "modulation_g": 10.0,
            "pump_us": 4.0,
            "probe_us": 4.0,
            "off_cavity_mhz": 10.0,
            "residual_magnetic_mhz_per_sqrt_w": 0.056,
            "linewidth_mhz": 1.0,
            "n_spins": 32,
            "n_steps": 32,
            "transverse_scan": False,
            "transverse_span_um": 40.0,
            "n_transverse": 21,
        },
        "map": {
            "power_mw": 400.0,
            "transverse_span_um": 20.0,
            "n_transverse": 41,
            "longitudinal_span_um": 60.0,
            "n_longitudinal": 120,
            "window_um": None,
        },
        "field": {
            "x_span_um": 24.0,
            "nx": 97,
            "y_span_um": 60.0,
            "ny": 61,
            "z_max_um": 24.0,
            "nz": 49,
            "power_mw": 400.0,
        },
    },
    "rng_seed": 20181106,
    "output_dir": "out",
}

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_int1 = {"type": "integer", "minimum": 1}
_bool = {"type": "boolean"}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


_G = _obj({k: _num for k in ("g11", "g12", "g13", "g14", "g33", "g44")}, ["g11", "g12", "g13", "g14", "g33", "g44"])

SCHEMA = _obj(
    {
        "species": {
            "type": "object",
            "minProperties": 1,
            "additionalProperties": _obj(
                {"d0_ghz": _pos, "gamma_mhz_per_g": _pos, "contrast_sign": {"enum": [1, -1]}, "g_ghz": _G,
                 "g_dm1_ghz": _G},
                ["d0_ghz", "gamma_mhz_per_g", "contrast_sign", "g_ghz"],
            ),
        },
        "material": _obj({"v_l_m_s": _pos, "v_t_m_s": _pos, "v_r_m_s": _pos}, ["v_l_m_s", "v_t_m_s"]),
        "cavity": _obj(
            {"wavelength_um": _pos, "w0_um": _pos, "f_m_mhz": _pos, "q_loaded": _pos,
             "strain_per_sqrt_watt": _nonneg, "include_divergence": _bool, "propagation_angle_deg": _num},
            ["wavelength_um", "w0_um", "f_m_mhz", "q_loaded", "strain_per_sqrt_watt"],
        ),
        "ensemble": _obj(
            {
                "psf_fwhm_um": _nonneg,
                "depth": {
                    "oneOf": [
                        _obj({"kind": {"const": "uniform"}, "z_min_um": _nonneg, "z_max_um": _nonneg},
                             ["kind", "z_min_um", "z_max_um"]),
                        _obj({"kind": {"const": "gaussian"}, "z_mean_um": _nonneg, "z_sigma_um": _nonneg},
                             ["kind", "z_mean_um", "z_sigma_um"]),
                    ]
                },
                "detuning_fwhm_mhz": _nonneg,
                "n_samples": _int1,
            },
            ["psf_fwhm_um", "depth", "detuning_fwhm_mhz", "n_samples"],
        ),
        "readout": _obj({"pl_base": _pos, "pl_slope": _num,
                         "init_polarization": {"type": "number", "minimum": 0, "maximum": 1}}),
        "experiment": _obj(
            {
                "species": {"type": "string"},
                "power_mw": {"type": "array", "items": _nonneg, "minItems": 1},
                "species_sweep": {"type": "array", "items": {"type": "string"}},
                "autler_townes": _obj({
                    "probe_span_mhz": _pos, "n_probe": {"type": "integer", "minimum": 16},
                    "probe_rabi_mhz": _pos, "linewidth_mhz": _pos, "mech_detuning_mhz": _num,
                    "detuning_sweep_mhz": {"type": "array", "items": _num},
                }),
                "rabi": _obj({
                    "omega_b_mhz": _pos, "tau_max_us": _pos, "n_tau": {"type": "integer", "minimum": 2},
                    "mech_detuning_mhz": _num, "ideal_pulses": _bool, "n_spins": _int1,
                }),
                "apr": _obj({
                    "power_mw": _nonneg, "species": {"type": "string"}, "propagation_angle_deg": _num,
                    "b0_span_g": _pos, "n_b0": {"type": "integer", "minimum": 3}, "modulation_g": _num,
                    "pump_us": _pos, "probe_us": _pos, "off_cavity_mhz": _num, "residual_magnetic_mhz_per_sqrt_w": _nonneg,
                    "linewidth_mhz": _pos, "n_spins": _int1, "n_steps": _int1, "transverse_scan": _bool,
                    "transverse_span_um": _pos, "n_transverse": {"type": "integer", "minimum": 5},
                }),
                "map": _obj({
                    "power_mw": _nonneg, "transverse_span_um": _pos, "n_transverse": {"type": "integer", "minimum": 5},
                    "longitudinal_span_um": _pos, "n_longitudinal": {"type": "integer", "minimum": 8},
                    "window_um": {"type": ["number", "null"], "exclusiveMinimum": 0},
                }),
                "field": _obj({
                    "x_span_um": _pos, "nx": {"type": "integer", "minimum": 2}, "y_span_um": _pos,
                    "ny": {"type": "integer", "minimum": 2}, "z_max_um": _pos, "nz": {"type": "integer", "minimum": 2},
                    "power_mw": _nonneg,
                }),
            }
        ),
        "rng_seed": {"type": "integer", "minimum": 0},
        "output_dir": {"type": "string"},
    },
    ["species", "material", "cavity", "ensemble", "experiment", "rng_seed"],
)


def deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k not in ("depth",):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _field_name(err: jsonschema.ValidationError) -> str:
    path = ".".join(str(p) for p in err.absolute_path)
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        return ".".join(filter(None, [path, extra[0] if extra else ""]))
    if err.validator == "required":
        missing = err.message.split("'")[1] if "'" in err.message else ""
        return ".".join(filter(None, [path, missing]))
    return path or "<root>"


def validate(raw: dict) -> dict:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(f"{_field_name(e)}: {e.message}")
    mat = raw["material"]
    if not mat["v_t_m_s"] < mat["v_l_m_s"]:
        raise ConfigError("material.v_t_m_s: transverse velocity must be below v_l_m_s")
    if "v_r_m_s" in mat and not mat["v_r_m_s"] < mat["v_t_m_s"]:
        raise ConfigError("material.v_r_m_s: Rayleigh velocity must be below v_t_m_s")
    depth = raw["ensemble"]["depth"]
    if depth["kind"] == "uniform" and depth["z_min_um"] > depth["z_max_um"]:
        raise ConfigError("ensemble.depth.z_min_um: must not exceed z_max_um")
    exp = raw["experiment"]
    for key in [exp.get("species")] + list(exp.get("species_sweep", [])) + [exp.get("apr", {}).get("species")]:
        if key is not None and key not in raw["species"]:
            raise ConfigError(f"experiment.species: unknown species {key!r}")
    return raw


def load_config(path=None, overrides: dict | None = None) -> dict:
    raw = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config: cannot read {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config: top level must be an object")
    cfg = deep_merge(DEFAULT_CONFIG, raw)
    if overrides:
        cfg = deep_merge(cfg, overrides)
    return validate(cfg)


def config_hash(cfg: dict) -> str:
    """SHA-256 of the canonical JSON config; ``output_dir`` is excluded since it cannot change results."""
    content = {k: v for k, v in cfg.items() if k != "output_dir"}
    return hashlib.sha256(json.dumps(content, sort_keys=True).encode()).hexdigest()


# ---------------------------------------------------------------------------
# conversion to model objects (SI units)


def _g(block) -> GTensorC3v:
    return GTensorC3v(**{k: v * 1e9 for k, v in block.items()})


def species_from(cfg: dict, name: str) -> DefectSpecies:
    b = cfg["species"][name]
    label = name if name in ("hh", "kk", "PL6") else "custom"
    return DefectSpecies(
        name=label, d0=b["d0_ghz"], gamma=b["gamma_mhz_per_g"], contrast_sign=b["contrast_sign"],
        g_params=_g(b["g_ghz"]), g_params_dm1=_g(b["g_dm1_ghz"]) if "g_dm1_ghz" in b else None,
    )


def material_from(cfg: dict) -> MaterialAcoustics:
    m = cfg["material"]
    return MaterialAcoustics(m["v_l_m_s"], m["v_t_m_s"], m.get("v_r_m_s"))


def mode_from(cfg: dict) -> GaussianCavityMode:
    c = cfg["cavity"]
    return GaussianCavityMode(
        wavelength=c["wavelength_um"] * 1e-6, w0=c["w0_um"] * 1e-6, omega_m=2 * np.pi * c["f_m_mhz"] * 1e6,
        q_loaded=c["q_loaded"], include_divergence=c.get("include_divergence", False),
    )


def wave_from(cfg: dict) -> RayleighWaveParams:
    return RayleighWaveParams(cfg["cavity"]["wavelength_um"] * 1e-6)


def calibration_from(cfg: dict) -> PowerCalibration:
    return PowerCalibration(cfg["cavity"]["strain_per_sqrt_watt"])


def ensemble_from(cfg: dict) -> EnsembleModel:
    e = cfg["ensemble"]
    d = e["depth"]
    if d["kind"] == "uniform":
        depth = DepthDistribution("uniform", d["z_min_um"] * 1e-6, d["z_max_um"] * 1e-6)
    else:
        depth = DepthDistribution("gaussian", d["z_mean_um"] * 1e-6, d["z_sigma_um"] * 1e-6)
    return EnsembleModel(
        psf_fwhm_lateral=e["psf_fwhm_um"] * 1e-6, depth=depth, detuning_fwhm=e["detuning_fwhm_mhz"] * 1e6,
        n_samples=e["n_samples"], rng_seed=cfg["rng_seed"],
    )


def readout_from(cfg: dict, species: DefectSpecies) -> ReadoutModel:
    r = cfg.get("readout", {})
    return ReadoutModel(pl_base=r.get("pl_base", 1.0), pl_slope=r.get("pl_slope", 0.1),
                        contrast_sign=species.contrast_sign, init_polarization=r.get("init_polarization", 1.0))


@dataclass
class RunConfig:
    raw: dict

    @property
    def seed(self) -> int:
        return self.raw["rng_seed"]

    @property
    def hash(self) -> str:
        return config_hash(self.raw)

    def species(self, name: str | None = None) -> DefectSpecies:
        return species_from(self.raw, name or self.raw["experiment"]["species"])

    @property
    def material(self):
        return material_from(self.raw)

    @property
    def mode(self):
        return mode_from(self.raw)

    @property
    def wave(self):
        return wave_from(self.raw)

    @property
    def calibration(self):
        return calibration_from(self.raw)

    @property
    def ensemble(self):
        return ensemble_from(self.raw)

    @property
    def experiment(self) -> dict:
        return self.raw["experiment"]
