"""Rayleigh-wave elasticity and the Gaussian SAW cavity mode.

Coordinates: x along propagation, y transverse in-plane, z depth below the
surface (z >= 0). Lengths in metres.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.optimize import brentq

from .spin import StrainTensor, rotate_strain


class NoRootError(ValueError):
    pass


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class MaterialAcoustics:
    v_l: float
    v_t: float
    v_r: float | None = None

    def __post_init__(self):
        if not (0 < self.v_t < self.v_l):
            raise NoRootError(f"need 0 < v_t < v_l, got v_t={self.v_t}, v_l={self.v_l}")
        if self.v_r is not None and not (0 < self.v_r < self.v_t):
            raise ValueError(f"v_r must lie in (0, v_t), got {self.v_r}")

    def solved(self) -> "MaterialAcoustics":
        if self.v_r is not None:
            return self
        return replace(self, v_r=solve_rayleigh_velocity(self))

    @property
    def rayleigh_velocity(self) -> float:
        return self.v_r if self.v_r is not None else solve_rayleigh_velocity(self)


def rayleigh_residual(xi, ratio_tl):
    """Secular-equation residual for xi = v_r / v_t and ratio_tl = v_t / v_l."""
    xi = np.asarray(xi, dtype=float)
    return (2 - xi**2) ** 2 - 4 * np.sqrt(1 - xi**2 * ratio_tl**2) * np.sqrt(1 - xi**2)


def solve_rayleigh_velocity(m: MaterialAcoustics) -> float:
    if not (0 < m.v_t < m.v_l):
        raise NoRootError("Rayleigh root requires v_t < v_l")
    r = m.v_t / m.v_l
    # xi = 0 is a trivial root; the residual is negative just above it and
    # equals +1 at xi = 1, so the physical root is bracketed.
    lo = 1e-3
    while rayleigh_residual(lo, r) >= 0:
        lo /= 2
    xi = brentq(rayleigh_residual, lo, 1.0, args=(r,), xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return xi * m.v_t


def default_sic_material() -> MaterialAcoustics:
    """Isotropic stand-in for 4H-SiC whose Rayleigh root is 6830 m/s."""
    return MaterialAcoustics(v_l=13100.0, v_t=SIC_V_T)


# v_t tuned so that solve_rayleigh_velocity(v_l=13100) = 6830.000 m/s
SIC_V_T = 7409.27194


@dataclass(frozen=True)
class RayleighWaveParams:
    wavelength: float
    surface_amplitude: float = 1e-9

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")

    @property
    def k(self) -> float:
        return 2 * np.pi / self.wavelength

    def omega(self, m: MaterialAcoustics) -> float:
        return m.rayleigh_velocity * self.k

    def decay_constants(self, m: MaterialAcoustics) -> tuple[float, float]:
        vr = m.rayleigh_velocity
        q = self.k * np.sqrt(1 - (vr / m.v_l) ** 2)
        s = self.k * np.sqrt(1 - (vr / m.v_t) ** 2)
        return q, s


class _Profile:
    """Depth functions of the traveling Rayleigh wave, normalized to unit surface u_z."""

    def __init__(self, p: RayleighWaveParams, m: MaterialAcoustics):
        self.k = p.k
        self.q, self.s = p.decay_constants(m)
        k, q, s = self.k, self.q, self.s
        self.cu = 2 * q * s / (k**2 + s**2)
        self.cw = 2 * k**2 / (k**2 + s**2)
        self.w0 = 1 - self.cw

    def u(self, z):
        return np.exp(-self.q * z) - self.cu * np.exp(-self.s * z)

    def du(self, z):
        return -self.q * np.exp(-self.q * z) + self.cu * self.s * np.exp(-self.s * z)

    def w(self, z):
        return np.exp(-self.q * z) - self.cw * np.exp(-self.s * z)

    def dw(self, z):
        return -self.q * np.exp(-self.q * z) + self.cw * self.s * np.exp(-self.s * z)

    # amplitudes multiplying sin/cos of the propagation phase
    def ux_amp(self, z):
        return self.k * self.u(z) / (self.q * self.w0)

    def uz_amp(self, z):
        return self.w(z) / self.w0

    def exx_amp(self, z):
        return self.k**2 * self.u(z) / (self.q * self.w0)

    def ezz_amp(self, z):
        return self.dw(z) / self.w0

    def exz_amp(self, z):
        return 0.5 * self.k * (self.du(z) / self.q - self.w(z)) / self.w0


def _check_depth(z):
    if np.any(np.asarray(z) < 0):
        raise ValueError("depth z must be >= 0")


def rayleigh_displacement(p: RayleighWaveParams, m: MaterialAcoustics, x, z, phase=0.0):
    """(u_x, u_z) of a +x traveling Rayleigh wave with propagation phase kx - phase."""
    _check_depth(z)
    prof = _Profile(p, m)
    theta = p.k * np.asarray(x) - phase
    h = p.surface_amplitude
    return h * prof.ux_amp(z) * np.sin(theta), h * prof.uz_amp(z) * np.cos(theta)


def rayleigh_strain(p: RayleighWaveParams, m: MaterialAcoustics, x, z, phase=0.0) -> StrainTensor:
    _check_depth(z)
    prof = _Profile(p, m)
    theta = p.k * np.asarray(x) - phase
    h = p.surface_amplitude
    c, s = np.cos(theta), np.sin(theta)
    zero = np.zeros(np.broadcast(theta, np.asarray(z)).shape)
    return StrainTensor(
        exx=h * prof.exx_amp(z) * c,
        eyy=zero,
        ezz=h * prof.ezz_amp(z) * c,
        eyz=zero,
        exz=h * prof.exz_amp(z) * s,
        exy=zero,
    )


def standing_wave_displacement(p: RayleighWaveParams, m: MaterialAcoustics, x, z, phase=0.0):
    """Counter-propagating pair, halved so the peak surface u_z equals surface_amplitude."""
    _check_depth(z)
    prof = _Profile(p, m)
    kx = p.k * np.asarray(x)
    h = p.surface_amplitude * np.cos(phase)
    return h * prof.ux_amp(z) * np.sin(kx), h * prof.uz_amp(z) * np.cos(kx)


def standing_wave_strain(p: RayleighWaveParams, m: MaterialAcoustics, x, z, phase=0.0) -> StrainTensor:
    _check_depth(z)
    prof = _Profile(p, m)
    kx = p.k * np.asarray(x)
    h = p.surface_amplitude * np.cos(phase)
    zero = np.zeros(np.broadcast(kx, np.asarray(z)).shape)
    return StrainTensor(
        exx=h * prof.exx_amp(z) * np.cos(kx),
        eyy=zero,
        ezz=h * prof.ezz_amp(z) * np.cos(kx),
        eyz=zero,
        exz=h * prof.exz_amp(z) * np.sin(kx),
        exy=zero,
    )


def surface_exx_per_amplitude(p: RayleighWaveParams, m: MaterialAcoustics) -> float:
    """Peak surface exx produced by unit surface displacement."""
    return float(abs(_Profile(p, m).exx_amp(0.0)))


@dataclass(frozen=True)
class GaussianCavityMode:
    wavelength: float
    w0: float
    omega_m: float
    q_loaded: float
    include_divergence: bool = False

    @property
    def rayleigh_range(self) -> float:
        return np.pi * self.w0**2 / self.wavelength

    def waist(self, x=0.0):
        if not self.include_divergence:
            return np.full(np.shape(x), self.w0) if np.ndim(x) else self.w0
        return self.w0 * np.sqrt(1 + (np.asarray(x) / self.rayleigh_range) ** 2)

    @property
    def fwhm(self) -> float:
        return 2 * self.w0 * np.sqrt(np.log(2))

    @property
    def ring_time(self) -> float:
        return 2 * self.q_loaded / self.omega_m


def gaussian_envelope(y, x, mode: GaussianCavityMode):
    w = mode.waist(x)
    return np.exp(-np.asarray(y) ** 2 / w**2)


@dataclass(frozen=True)
class PowerCalibration:
    strain_per_sqrt_watt: float
    reference_power: float = 1.0


def amplitude_from_power(cal: PowerCalibration, p_watts):
    p = np.asarray(p_watts, dtype=float)
    if np.any(p < 0):
        raise ValueError("power must be non-negative")
    out = cal.strain_per_sqrt_watt * np.sqrt(p)
    return float(out) if out.ndim == 0 else out


def cavity_amplitude(t, mode: GaussianCavityMode, steady_scale, ring_down: bool = False):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    decay = np.exp(-t / mode.ring_time)
    return steady_scale * (decay if ring_down else 1 - decay)


class StrainField:
    """Strain at (x, y, z, phase) in the crystal frame.

    `propagation_angle` rotates the device frame (x along the SAW) into the
    crystal frame about the c-axis.
    """

    source = "abstract"

    def __init__(self, mode: GaussianCavityMode | None = None, propagation_angle: float = 0.0):
        self.mode = mode
        self.propagation_angle = propagation_angle

    def device_strain_xz(self, x, z, phase) -> StrainTensor:
        raise NotImplementedError

    def contains(self, x, z) -> bool:
        return True

    def envelope(self, x, y):
        if self.mode is None:
            return np.ones(np.broadcast(np.asarray(x), np.asarray(y)).shape)
        return gaussian_envelope(y, x, self.mode)

    def evaluate(self, x, y, z, phase=0.0) -> StrainTensor:
        x, y, z = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, y, z)))
        eps = self.device_strain_xz(x, z, phase) * self.envelope(x, y)
        if self.propagation_angle:
            eps = rotate_strain(eps, self.propagation_angle)
        return eps


class AnalyticalStrainField(StrainField):
    """Gaussian-enveloped Rayleigh standing wave.

    `peak_strain` is the surface exx at the antinode (x = 0, y = 0).
    """

    source = "analytical"

    def __init__(self, wave: RayleighWaveParams, material: MaterialAcoustics, mode: GaussianCavityMode | None,
                 peak_strain: float, propagation_angle: float = 0.0):
        super().__init__(mode, propagation_angle)
        self.material = material.solved()
        self.peak_strain = peak_strain
        amp = peak_strain / surface_exx_per_amplitude(wave, self.material)
        self.wave = replace(wave, surface_amplitude=amp)

    def device_strain_xz(self, x, z, phase):
        return standing_wave_strain(self.wave, self.material, x, z, phase)

    def displacement_uz(self, x, y, z=0.0, phase=0.0):
        _, uz = standing_wave_displacement(self.wave, self.material, x, z, phase)
        return uz * self.envelope(x, y)


class GridStrainField(StrainField):
    """Strain sampled on a rectangular (x, z) grid, bilinearly interpolated."""

    source = "imported-grid"

    def __init__(self, x, z, exx, ezz, exz, mode=None, propagation_angle=0.0):
        super().__init__(mode, propagation_angle)
        self.x = np.asarray(x, dtype=float)
        self.z = np.asarray(z, dtype=float)
        self._interp = {
            name: RegularGridInterpolator((self.x, self.z), np.asarray(v, dtype=float), method="linear",
                                          bounds_error=True)
            for name, v in (("exx", exx), ("ezz", ezz), ("exz", exz))
        }

    def contains(self, x, z) -> bool:
        x, z = np.asarray(x), np.asarray(z)
        return bool(np.all((x >= self.x[0]) & (x <= self.x[-1]) & (z >= self.z[0]) & (z <= self.z[-1])))

    def device_strain_xz(self, x, z, phase):
        if not self.contains(x, z):
            raise GridError("query outside the imported strain grid")
        pts = np.stack([np.ravel(x), np.ravel(z)], axis=-1)
        shape = np.shape(x)
        vals = {k: f(pts).reshape(shape) * np.cos(phase) for k, f in self._interp.items()}
        zero = np.zeros(shape)
        return StrainTensor(exx=vals["exx"], eyy=zero, ezz=vals["ezz"], eyz=zero, exz=vals["exz"], exy=zero)


GRID_COLUMNS = ("x_um", "z_um", "exx", "ezz", "exz")


def import_strain_grid(path, mode: GaussianCavityMode | None = None, propagation_angle: float = 0.0) -> GridStrainField:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    if not rows:
        raise GridError(f"{path}: empty strain grid")
    header = [h.strip() for h in rows[0]]
    for col in GRID_COLUMNS:
        if col not in header:
            raise GridError(f"{path}: missing column '{col}'")
    idx = [header.index(c) for c in GRID_COLUMNS]
    try:
        data = np.array([[float(r[i]) for i in idx] for r in rows[1:] if r], dtype=float)
    except (ValueError, IndexError) as exc:
        raise GridError(f"{path}: malformed row ({exc})") from exc
    if data.size == 0:
        raise GridError(f"{path}: no data rows")
    xs = np.unique(data[:, 0])
    zs = np.unique(data[:, 1])
    if len(xs) < 2 or len(zs) < 2 or len(data) != len(xs) * len(zs):
        raise GridError(f"{path}: points do not form a rectangular grid")
    order = np.lexsort((data[:, 1], data[:, 0]))
    data = data[order]
    if not (np.array_equal(data[:, 0], np.repeat(xs, len(zs))) and np.array_equal(data[:, 1], np.tile(zs, len(xs)))):
        raise GridError(f"{path}: points do not form a rectangular grid")
    grids = [data[:, c].reshape(len(xs), len(zs)) for c in (2, 3, 4)]
    return GridStrainField(xs * 1e-6, zs * 1e-6, *grids, mode=mode, propagation_angle=propagation_angle)


def sample_strain_grid(field: AnalyticalStrainField, x, z):
    """Tabulate the x-z plane (y = 0, phase = 0) of a field as grid columns."""
    xx, zz = np.meshgrid(np.asarray(x, float), np.asarray(z, float), indexing="ij")
    eps = field.device_strain_xz(xx, zz, 0.0)
    return {
        "x_um": xx.ravel() * 1e6,
        "z_um": zz.ravel() * 1e6,
        "exx": np.ravel(eps.exx),
        "ezz": np.ravel(eps.ezz),
        "exz": np.ravel(eps.exz),
    }


@dataclass
class SlopeMaps:
    x: np.ndarray
    y: np.ndarray
    longitudinal: np.ndarray = field(repr=False)
    transverse: np.ndarray = field(repr=False)


def lattice_slope_map(wave: RayleighWaveParams, material: MaterialAcoustics, mode: GaussianCavityMode,
                      x, y, standing: bool = True, phase: float = 0.0) -> SlopeMaps:
    """Surface lattice slopes du_z/dx and du_z/dy on an (x, y) grid, arrays indexed [ix, iy].

    With ``standing=True`` the maps are snapshots of the cavity standing wave at
    ``phase``. With ``standing=False`` they are peak-to-peak amplitudes of a
    traveling wave, as recorded stroboscopically for a cavity-less transducer.
    """
    material = material.solved()
    prof = _Profile(wave, material)
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    xx, yy = np.meshgrid(x, y, indexing="ij")
    h = wave.surface_amplitude
    w = mode.waist(xx)
    env = np.exp(-(yy**2) / w**2)
    denv_dy = -2 * yy / w**2 * env
    denv_dx = env * 2 * yy**2 / w**3 * _dwaist_dx(mode, xx)
    k = prof.k
    if standing:
        uz0 = h * np.cos(phase) * np.cos(k * xx)
        duz0 = -h * np.cos(phase) * k * np.sin(k * xx)
        lon = duz0 * env + uz0 * denv_dx
        tra = uz0 * denv_dy
    else:
        # peak-to-peak of A cos(kx - wt): 2|A|
        lon = 2 * h * np.sqrt((k * env) ** 2 + denv_dx**2)
        tra = 2 * h * denv_dy
    return SlopeMaps(x, y, lon, tra)


def _dwaist_dx(mode: GaussianCavityMode, x):
    if not mode.include_divergence:
        return np.zeros_like(x)
    xr = mode.rayleigh_range
    return mode.w0 * (x / xr**2) / np.sqrt(1 + (x / xr) ** 2)
