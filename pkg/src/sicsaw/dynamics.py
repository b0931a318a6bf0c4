"""Rotating-frame dynamics of a driven S=1 spin.

States are density matrices in the basis (|+1>, |0>, |-1>); Hamiltonians are
H/h in Hz and times in seconds, so U(t) = exp(-2 pi i H t). Every function
broadcasts over leading batch dimensions (one per spin in an ensemble).
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .spin import MINUS, PLUS, ZERO


class Channel(str, Enum):
    MAGNETIC_PLUS = "magnetic_plus"
    MAGNETIC_MINUS = "magnetic_minus"
    MECHANICAL_DM2 = "mechanical_dm2"
    MECHANICAL_DM1 = "mechanical_dm1"


# (row, col) of the rabi/2 element, and (lower, upper) level for the detuning
_CHANNEL_ELEMENT = {
    Channel.MAGNETIC_PLUS: (ZERO, PLUS),
    Channel.MAGNETIC_MINUS: (ZERO, MINUS),
    Channel.MECHANICAL_DM2: (PLUS, MINUS),
    Channel.MECHANICAL_DM1: (ZERO, MINUS),
}
_CHANNEL_LEVELS = {
    Channel.MAGNETIC_PLUS: (ZERO, PLUS),
    Channel.MAGNETIC_MINUS: (ZERO, MINUS),
    Channel.MECHANICAL_DM2: (MINUS, PLUS),
    Channel.MECHANICAL_DM1: (ZERO, MINUS),
}


class UnsupportedToneSet(ValueError):
    pass


@dataclass(frozen=True)
class DriveTone:
    """One drive. ``detuning`` is (transition frequency - tone frequency) in Hz."""

    channel: Channel
    rabi: complex | np.ndarray = 0.0
    detuning: float | np.ndarray = 0.0

    def __post_init__(self):
        object.__setattr__(self, "channel", Channel(self.channel))


def rwa_hamiltonian(tones: Sequence[DriveTone], inhomogeneous_detuning=0.0) -> np.ndarray:
    """Rotating-frame Hamiltonian for a frame-consistent set of tones.

    The tones must connect the three levels without loops and without two
    tones on the same transition; otherwise no single rotating frame removes
    all time dependence. ``inhomogeneous_detuning`` is a static axial shift
    applied as delta * Sz (a hyperfine-like local field).
    """
    edges = {}
    for t in tones:
        levels = frozenset(_CHANNEL_LEVELS[t.channel])
        if levels in edges:
            raise UnsupportedToneSet(f"two tones address the same transition ({t.channel.value})")
        edges[levels] = t
    if len(edges) > 2:
        raise UnsupportedToneSet("tones form a closed loop; no consistent rotating frame")

    shape = np.broadcast(inhomogeneous_detuning, *(t.rabi for t in tones), *(t.detuning for t in tones)).shape
    h = np.zeros(shape + (3, 3), dtype=complex)

    # level energies in the rotating frame, propagated along the tone graph
    energy: dict[int, np.ndarray] = {}
    for root in (ZERO, MINUS, PLUS):
        if root in energy:
            continue
        energy[root] = np.zeros(shape)
        queue = deque([root])
        while queue:
            lvl = queue.popleft()
            for t in tones:
                lo, hi = _CHANNEL_LEVELS[t.channel]
                if lvl == lo and hi not in energy:
                    energy[hi] = energy[lo] + t.detuning
                    queue.append(hi)
                elif lvl == hi and lo not in energy:
                    energy[lo] = energy[hi] - t.detuning
                    queue.append(lo)
    # reference the |0> level to zero
    ref = energy[ZERO]
    sz_shift = {PLUS: 1.0, ZERO: 0.0, MINUS: -1.0}
    for lvl in (PLUS, ZERO, MINUS):
        h[..., lvl, lvl] = energy[lvl] - ref + sz_shift[lvl] * np.asarray(inhomogeneous_detuning)
    for t in tones:
        r, c = _CHANNEL_ELEMENT[t.channel]
        half = 0.5 * np.asarray(t.rabi, dtype=complex)
        h[..., r, c] += half
        h[..., c, r] += np.conj(half)
    return h


def evolution_operator(h: np.ndarray, t) -> np.ndarray:
    """exp(-2 pi i H t) via Hermitian eigendecomposition.

    ``t`` may be an array; its axes are appended after the batch axes of ``h``.
    """
    h = np.asarray(h)
    if not np.all(np.isfinite(h)):
        raise ValueError("Hamiltonian has non-finite entries")
    evals, evecs = np.linalg.eigh(h)
    t = np.asarray(t, dtype=float)
    tshape = t.shape
    ev = evals.reshape(evals.shape[:-1] + (1,) * len(tshape) + (3,))
    vec = evecs.reshape(evecs.shape[:-2] + (1,) * len(tshape) + (3, 3))
    phase = np.exp(-2j * np.pi * ev * t[..., None])
    return (vec * phase[..., None, :]) @ np.conj(np.swapaxes(vec, -1, -2))


def as_density(state) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.shape[-2:] == (3, 3):
        return state
    return state[..., :, None] * np.conj(state[..., None, :])


def populations(rho) -> np.ndarray:
    """(p_plus, p_zero, p_minus) along the last axis."""
    return np.real(np.diagonal(np.asarray(rho), axis1=-2, axis2=-1))


@dataclass(frozen=True)
class ReadoutModel:
    pl_base: float = 1.0
    pl_slope: float = 0.1
    contrast_sign: int = 1
    init_polarization: float = 1.0

    def __post_init__(self):
        if not 0 <= self.init_polarization <= 1:
            raise ValueError("init_polarization must be in [0, 1]")


def laser_reset(rho, model: ReadoutModel) -> np.ndarray:
    p = model.init_polarization
    ground = np.zeros((3, 3), dtype=complex)
    ground[ZERO, ZERO] = 1.0
    return p * ground + (1 - p) * np.asarray(rho)


def pl_readout(state_or_pops, model: ReadoutModel):
    x = np.asarray(state_or_pops)
    pops = populations(x) if x.shape[-2:] == (3, 3) else x
    if not np.allclose(pops.sum(axis=-1), 1.0, atol=1e-8):
        raise ValueError("populations must sum to 1")
    return model.pl_base + model.contrast_sign * model.pl_slope * pops[..., ZERO]


@dataclass(frozen=True)
class Segment:
    duration: float
    tones: tuple[DriveTone, ...] = ()
    laser: bool = False
    marker: str | None = None

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("segment duration must be >= 0")
        chans = [t.channel for t in self.tones]
        if len(set(chans)) != len(chans):
            raise ValueError("at most one tone per channel per segment")


@dataclass
class PulseSequence:
    segments: list[Segment] = field(default_factory=list)

    def add(self, *args, **kwargs) -> "PulseSequence":
        self.segments.append(Segment(*args, **kwargs))
        return self

    @property
    def duration(self) -> float:
        return sum(s.duration for s in self.segments)


def propagate(sequence: PulseSequence, psi0, h_of_segment: Callable[[Segment], np.ndarray] | None = None,
              readout: ReadoutModel | None = None, inhomogeneous_detuning=0.0) -> list[np.ndarray]:
    """Piecewise-constant evolution; returns the density matrix after each segment.

    Laser segments apply the readout model's reset map after the coherent step.
    """
    readout = readout or ReadoutModel()
    if h_of_segment is None:
        def h_of_segment(seg):
            return rwa_hamiltonian(seg.tones, inhomogeneous_detuning)
    rho = as_density(psi0)
    if not np.allclose(np.trace(rho, axis1=-2, axis2=-1), 1.0, atol=1e-10):
        raise ValueError("initial state must be normalized")
    out = []
    for seg in sequence.segments:
        u = evolution_operator(h_of_segment(seg), seg.duration)
        rho = u @ rho @ np.conj(np.swapaxes(u, -1, -2))
        if seg.laser:
            rho = laser_reset(rho, readout)
        out.append(rho)
    return out


# ---------------------------------------------------------------------------
# Autler-Townes spectrum


@dataclass
class DressedLines:
    """Probe resonances (offsets from the bare |0>-|-1> line) and their weights."""

    offsets: np.ndarray
    weights: np.ndarray


def dressed_lines(omega_m_rabi, mech_detuning=0.0, inhomogeneous_detuning=0.0) -> DressedLines:
    """Weak-probe resonances of |0> -> dressed {|+1>, |-1>} states.

    The probe frame places the bare |0> -> |-1> transition at zero offset; a
    zero-amplitude magnetic tone fixes that frame.
    """
    tones = [
        DriveTone(Channel.MAGNETIC_MINUS, 0.0, 0.0),
        DriveTone(Channel.MECHANICAL_DM2, omega_m_rabi, mech_detuning),
    ]
    h = rwa_hamiltonian(tones, inhomogeneous_detuning)
    evals, evecs = np.linalg.eigh(h)
    e0 = np.real(h[..., ZERO, ZERO])[..., None]
    weights = np.abs(evecs[..., MINUS, :]) ** 2
    # drop the bare |0> eigenvector (it carries no |-1> weight)
    return DressedLines(evals - e0, weights)


def gaussian_line(x, center, fwhm):
    return np.exp(-4 * np.log(2) * (x - center) ** 2 / fwhm**2)


def dressed_spectrum(omega_m_rabi, mech_detuning, probe_range, probe_rabi, linewidth,
                     inhomogeneous_detuning=0.0, hyperfine=None):
    """ODMR dip depth versus probe offset (Hz) for a mechanically dressed spin.

    Each dressed line is a Gaussian of FWHM ``linewidth`` with depth set by the
    saturation of its share of the probe. ``hyperfine`` optionally adds a static
    mixture of (offset_hz, weight) copies. Returns an array broadcast over the
    batch shape of the inputs with the probe axis last.
    """
    f = np.asarray(probe_range, dtype=float)
    if f.size == 0:
        raise ValueError("empty probe range")
    mixture = hyperfine or [(0.0, 1.0)]
    total = 0.0
    for offset, weight in mixture:
        lines = dressed_lines(omega_m_rabi, mech_detuning, np.asarray(inhomogeneous_detuning) + offset)
        s = lines.weights * (probe_rabi / linewidth) ** 2
        depth = 0.5 * s / (1 + s)
        total = total + weight * np.sum(
            depth[..., None, :] * gaussian_line(f[..., None], lines.offsets[..., None, :], linewidth), axis=-1
        )
    return total / sum(w for _, w in mixture)


# ---------------------------------------------------------------------------
# Mechanical Rabi sequence


@dataclass
class RabiTrace:
    tau: np.ndarray
    signal: np.ndarray  # p(-1) - p(+1) just before the second pi pulse
    pl_signal: np.ndarray  # 2 p(0) - 1 after the second pi pulse


def _ideal_pi_zero_minus() -> np.ndarray:
    u = np.zeros((3, 3), dtype=complex)
    u[PLUS, PLUS] = 1
    u[ZERO, MINUS] = u[MINUS, ZERO] = -1j
    return u


def simulate_rabi_sequence(omega_m_rabi, omega_b, tau_list, detuning=0.0, inhomogeneous_detuning=0.0,
                           ideal_pulses=False, mech_during_pulses=True,
                           readout: ReadoutModel | None = None) -> RabiTrace:
    """Laser init, pi(0 -> -1), mechanical drive for tau, pi(0 -> -1).

    The mechanical tone stays on through the pi pulses unless
    ``mech_during_pulses`` is False. ``ideal_pulses`` replaces them with
    instantaneous perfect rotations.
    """
    readout = readout or ReadoutModel()
    tau = np.asarray(tau_list, dtype=float)
    if np.any(tau < 0):
        raise ValueError("tau must be >= 0")
    mech = DriveTone(Channel.MECHANICAL_DM2, omega_m_rabi, detuning)
    rho0 = laser_reset(np.eye(3) / 3, readout)

    if ideal_pulses:
        u_pi = _ideal_pi_zero_minus()
    else:
        mech_pi = mech if mech_during_pulses else DriveTone(Channel.MECHANICAL_DM2, 0.0, detuning)
        h_pi = rwa_hamiltonian([DriveTone(Channel.MAGNETIC_MINUS, omega_b, 0.0), mech_pi], inhomogeneous_detuning)
        u_pi = evolution_operator(h_pi, 1.0 / (2 * omega_b))
    h_free = rwa_hamiltonian([DriveTone(Channel.MAGNETIC_MINUS, 0.0, 0.0), mech], inhomogeneous_detuning)

    def dag(u):
        return np.conj(np.swapaxes(u, -1, -2))

    rho1 = u_pi @ rho0 @ dag(u_pi)
    u_tau = evolution_operator(h_free, tau)  # batch + tau axes
    rho1 = np.expand_dims(rho1, tuple(range(rho1.ndim - 2, rho1.ndim - 2 + tau.ndim)))
    u_pi_b = np.expand_dims(u_pi, tuple(range(u_pi.ndim - 2, u_pi.ndim - 2 + tau.ndim)))
    rho2 = u_tau @ rho1 @ dag(u_tau)
    rho3 = u_pi_b @ rho2 @ dag(u_pi_b)
    p2 = populations(rho2)
    p3 = populations(rho3)
    return RabiTrace(tau, p2[..., MINUS] - p2[..., PLUS], 2 * p3[..., ZERO] - 1)


# ---------------------------------------------------------------------------
# Acoustic paramagnetic resonance


@dataclass
class AprScan:
    b0_offsets: np.ndarray
    contrast: np.ndarray
    pl: np.ndarray
    pl_modulated: np.ndarray


def cavity_response(drive_offset, ring_time):
    """Amplitude response of the cavity to a drive detuned by ``drive_offset`` Hz."""
    return 1.0 / np.sqrt(1 + (2 * np.pi * np.asarray(drive_offset) * ring_time) ** 2)


def periodic_ring_amplitudes(ring_time, pump_time, probe_time, n_steps):
    """Cavity amplitude (steady pumped amplitude = 1) at the midpoints of pump sub-steps,
    in the periodic steady state of the interlaced pump/probe cycle."""
    a_up = np.exp(-pump_time / ring_time)
    a_dn = np.exp(-probe_time / ring_time)
    a0 = (1 - a_up) * a_dn / (1 - a_up * a_dn)
    t_mid = (np.arange(n_steps) + 0.5) * pump_time / n_steps
    return 1 + (a0 - 1) * np.exp(-t_mid / ring_time)


def simulate_apr_scan(mech_dm1_rabi, b0_offsets, modulation_depth, gamma_hz_per_gauss, ring_time,
                      pump_time=4e-6, probe_time=4e-6, cavity_detuning=0.0, linewidth=1e6,
                      readout: ReadoutModel | None = None, residual_magnetic_rabi=0.0,
                      n_steps=32, detuning_step=None) -> AprScan:
    """Lock-in PL contrast of the interlaced RF-pump / laser-probe sequence.

    For each field offset the spin (|0> -> |-1> line detuned from the drive by
    gamma * dB0) is pumped from |0> while the cavity rings up, then read out and
    reset by the laser while it rings down. The lock-in output is the PL
    difference between B0 and B0 + modulation_depth.

    The inhomogeneous line (Gaussian, FWHM ``linewidth``) is folded in by
    evaluating the spin response on a uniform detuning grid, fine enough to
    resolve the pump's Fourier width, and convolving with the line shape.
    """
    readout = readout or ReadoutModel()
    b0 = np.asarray(b0_offsets, dtype=float)
    amp = periodic_ring_amplitudes(ring_time, pump_time, probe_time, n_steps)
    # trailing axis runs over spins; a scalar rate is a one-spin ensemble
    drive = np.atleast_1d(np.asarray(mech_dm1_rabi)) * cavity_response(cavity_detuning, ring_time)
    dt = pump_time / n_steps
    sigma = linewidth / (2 * np.sqrt(2 * np.log(2)))

    def pl_at(det):
        det = np.broadcast_to(np.asarray(det, dtype=float)[:, None], (len(det),) + drive.shape)
        rho = np.broadcast_to(laser_reset(np.eye(3) / 3, readout), det.shape + (3, 3)).copy()
        for a in amp:
            h = rwa_hamiltonian([DriveTone(Channel.MECHANICAL_DM1, drive * a, det)])
            if residual_magnetic_rabi:
                h[..., ZERO, MINUS] += 0.5 * residual_magnetic_rabi
                h[..., MINUS, ZERO] += 0.5 * np.conj(residual_magnetic_rabi)
            u = evolution_operator(h, dt)
            rho = u @ rho @ np.conj(np.swapaxes(u, -1, -2))
        return pl_readout(rho, readout).mean(axis=-1)

    pl = []
    for shift in (0.0, modulation_depth):
        centers = gamma_hz_per_gauss * (b0 + shift)
        if sigma == 0:
            pl.append(pl_at(centers))
            continue
        step = detuning_step or min(sigma / 8, 1 / (16 * pump_time))
        grid = np.arange(centers.min() - 6 * sigma, centers.max() + 6 * sigma + step, step)
        w = np.exp(-((grid[None, :] - centers[:, None]) ** 2) / (2 * sigma**2))
        pl.append((w / w.sum(axis=1, keepdims=True)) @ pl_at(grid))
    contrast = (pl[0] - pl[1]) / readout.pl_base
    return AprScan(b0, contrast, pl[0], pl[1])
