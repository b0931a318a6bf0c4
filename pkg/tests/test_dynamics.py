import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sicsaw.analysis import Spectrum, extract_at_splitting
from sicsaw.dynamics import (
    Channel, DriveTone, PulseSequence, ReadoutModel, UnsupportedToneSet, dressed_lines, dressed_spectrum,
    evolution_operator, laser_reset, pl_readout, populations, propagate, rwa_hamiltonian, simulate_apr_scan,
    simulate_rabi_sequence,
)
from sicsaw.spin import MINUS, PLUS, ZERO

MHZ = 1e6
KET0 = np.array([0, 1, 0], complex)
PROBE = np.linspace(-10 * MHZ, 10 * MHZ, 801)


def two_level_gap(delta, omega):
    """Hand-built 2x2 oracle [[d/2, W/2], [W/2, -d/2]]."""
    return np.ptp(np.linalg.eigvalsh(np.array([[delta / 2, omega / 2], [omega / 2, -delta / 2]])))


class TestRwaHamiltonian:
    def test_no_tones(self):
        assert np.array_equal(rwa_hamiltonian([]), np.zeros((3, 3)))

    @pytest.mark.parametrize("delta, omega", [(0.0, 4 * MHZ), (3 * MHZ, 4 * MHZ), (-2 * MHZ, 1 * MHZ)])
    def test_dressed_gap(self, delta, omega):
        h = rwa_hamiltonian([DriveTone(Channel.MECHANICAL_DM2, omega, delta)])
        sub = h[np.ix_([PLUS, MINUS], [PLUS, MINUS])]
        gap = np.ptp(np.linalg.eigvalsh(sub))
        assert gap == pytest.approx(two_level_gap(delta, omega), rel=1e-12)
        if delta == 3 * MHZ:
            assert gap == pytest.approx(5 * MHZ)

    @given(st.floats(-1e7, 1e7), st.floats(0, 1e7), st.floats(0, 2 * np.pi), st.floats(-1e6, 1e6))
    def test_hermitian(self, det, rabi, phi, inh):
        tones = [DriveTone(Channel.MAGNETIC_MINUS, 1e6, 2e5),
                 DriveTone(Channel.MECHANICAL_DM2, rabi * np.exp(1j * phi), det)]
        h = rwa_hamiltonian(tones, inh)
        assert np.allclose(h, h.conj().T)

    def test_same_transition_rejected(self):
        with pytest.raises(UnsupportedToneSet):
            rwa_hamiltonian([DriveTone(Channel.MAGNETIC_MINUS, 1.0), DriveTone(Channel.MECHANICAL_DM1, 1.0)])

    def test_loop_rejected(self):
        tones = [DriveTone(Channel.MAGNETIC_MINUS, 1.0), DriveTone(Channel.MAGNETIC_PLUS, 1.0),
                 DriveTone(Channel.MECHANICAL_DM2, 1.0)]
        with pytest.raises(UnsupportedToneSet):
            rwa_hamiltonian(tones)

    def test_batched_rates(self):
        h = rwa_hamiltonian([DriveTone(Channel.MECHANICAL_DM2, np.array([1.0, 2.0, 3.0]) * MHZ)])
        assert h.shape == (3, 3, 3)
        assert np.allclose(h[:, PLUS, MINUS], [0.5 * MHZ, MHZ, 1.5 * MHZ])


class TestPropagation:
    def test_zero_hamiltonian(self):
        seq = PulseSequence().add(1e-6)
        rho = propagate(seq, KET0, h_of_segment=lambda s: np.zeros((3, 3)))[-1]
        assert np.allclose(rho, np.outer(KET0, KET0.conj()))

    def test_pi_pulse(self):
        ob = 1 * MHZ
        seq = PulseSequence().add(1 / (2 * ob), (DriveTone(Channel.MAGNETIC_MINUS, ob),))
        p = populations(propagate(seq, KET0)[-1])
        assert p[MINUS] > 0.9999

    def test_two_pi_pulses_return(self):
        ob = 1 * MHZ
        tone = (DriveTone(Channel.MAGNETIC_MINUS, ob),)
        seq = PulseSequence().add(1 / (2 * ob), tone).add(1 / (2 * ob), tone)
        p = populations(propagate(seq, KET0)[-1])
        assert abs(p[ZERO] - 1) < 1e-8

    @given(st.floats(1e4, 2e7), st.floats(0, 3e-6))
    def test_two_level_rabi_formula(self, omega, t):
        u = evolution_operator(rwa_hamiltonian([DriveTone(Channel.MAGNETIC_MINUS, omega)]), t)
        p = np.abs(u[MINUS, ZERO]) ** 2
        assert p == pytest.approx(np.sin(np.pi * omega * t) ** 2, abs=1e-8)

    @given(st.lists(st.tuples(st.floats(0, 1e-6), st.floats(0, 5e6), st.floats(-5e6, 5e6)), min_size=1, max_size=6))
    @settings(max_examples=50)
    def test_unitarity(self, segs):
        u = np.eye(3, dtype=complex)
        for dur, rabi, det in segs:
            tones = [DriveTone(Channel.MAGNETIC_MINUS, rabi / 3, det / 2), DriveTone(Channel.MECHANICAL_DM2, rabi, det)]
            u = evolution_operator(rwa_hamiltonian(tones, 1e5), dur) @ u
        assert np.max(np.abs(u.conj().T @ u - np.eye(3))) < 1e-10

    def test_norm_preserved_with_laser(self):
        seq = (PulseSequence()
               .add(3e-7, (DriveTone(Channel.MAGNETIC_MINUS, 2e6),))
               .add(1e-6, (DriveTone(Channel.MECHANICAL_DM2, 4e6),), laser=True)
               .add(2e-7, (DriveTone(Channel.MAGNETIC_PLUS, 3e6, 1e5),)))
        for rho in propagate(seq, KET0, readout=ReadoutModel(init_polarization=0.7)):
            assert abs(np.trace(rho) - 1) < 1e-10

    def test_non_finite(self):
        with pytest.raises(ValueError):
            evolution_operator(np.full((3, 3), np.nan), 1.0)

    def test_negative_duration(self):
        with pytest.raises(ValueError):
            PulseSequence().add(-1.0)

    def test_duplicate_channel(self):
        t = DriveTone(Channel.MAGNETIC_MINUS, 1.0)
        with pytest.raises(ValueError):
            PulseSequence().add(1.0, (t, t))


class TestReadout:
    m = ReadoutModel(pl_base=1.0, pl_slope=0.1, contrast_sign=-1)

    def test_bright_state(self):
        assert pl_readout([0, 1, 0], self.m) == pytest.approx(0.9)

    def test_insensitive_to_plus_minus(self):
        assert pl_readout([1, 0, 0], self.m) == pl_readout([0, 0, 1], self.m)

    def test_midpoint(self):
        assert pl_readout([0.25, 0.5, 0.25], self.m) == pytest.approx(0.95)

    def test_bad_populations(self):
        with pytest.raises(ValueError):
            pl_readout([0.5, 0.1, 0.1], self.m)

    def test_partial_reset(self):
        rho = np.diag([0.0, 0.0, 1.0]).astype(complex)
        out = laser_reset(rho, ReadoutModel(init_polarization=0.8))
        assert np.allclose(populations(out), [0, 0.8, 0.2])
        with pytest.raises(ValueError):
            ReadoutModel(init_polarization=1.5)


def splitting(omega, delta=0.0, probe_rabi=0.2 * MHZ):
    spec = dressed_spectrum(omega, delta, PROBE, probe_rabi, 1 * MHZ)
    return extract_at_splitting(Spectrum(PROBE, spec))


class TestDressedSpectrum:
    def test_resonant_splitting(self):
        r = splitting(4 * MHZ)
        assert r.resolved
        assert r.splitting == pytest.approx(4 * MHZ, abs=PROBE[1] - PROBE[0])

    def test_unsplit_line(self):
        spec = dressed_spectrum(0.0, 0.0, PROBE, 0.2 * MHZ, 1 * MHZ)
        assert PROBE[np.argmax(spec)] == pytest.approx(0.0, abs=PROBE[1] - PROBE[0])
        assert not splitting(0.0).resolved

    def test_detuned_anticrossing(self):
        deltas = np.linspace(-5, 5, 11) * MHZ
        s = np.array([splitting(4 * MHZ, d).splitting for d in deltas])
        assert np.all(np.abs(s - np.hypot(deltas, 4 * MHZ)) <= PROBE[1] - PROBE[0])
        assert deltas[np.argmin(s)] == 0.0

    def test_line_positions_match_eigenvalues(self):
        lines = dressed_lines(4 * MHZ, 3 * MHZ)
        strong = np.sort(lines.offsets[lines.weights > 1e-6])
        assert np.ptp(strong) == pytest.approx(5 * MHZ)

    def test_probe_power_independence(self):
        a = splitting(4 * MHZ, probe_rabi=0.2 * MHZ).splitting
        b = splitting(4 * MHZ, probe_rabi=0.1 * MHZ).splitting
        assert abs(a - b) / a < 0.02

    def test_hyperfine_mixture_adds_satellites(self):
        hf = [(-2.3 * MHZ, 1.0), (0.0, 1.0), (2.3 * MHZ, 1.0)]
        base = dressed_spectrum(0.0, 0.0, PROBE, 0.2 * MHZ, 0.5 * MHZ)
        mixed = dressed_spectrum(0.0, 0.0, PROBE, 0.2 * MHZ, 0.5 * MHZ, hyperfine=hf)
        i = np.argmin(np.abs(PROBE - 2.3 * MHZ))
        assert mixed[i] > 10 * base[i]

    def test_empty_range(self):
        with pytest.raises(ValueError):
            dressed_spectrum(1.0, 0.0, [], 0.1, 1.0)


class TestRabiSequence:
    omega = 4 * MHZ

    def test_tau_zero_ideal(self):
        r = simulate_rabi_sequence(self.omega, 1 * MHZ, [0.0], ideal_pulses=True)
        assert r.signal[0] == pytest.approx(1.0)

    def test_half_period_transfer(self):
        r = simulate_rabi_sequence(self.omega, 1 * MHZ, [1 / (2 * self.omega)], ideal_pulses=True)
        assert r.signal[0] == pytest.approx(-1.0, abs=1e-12)

    def test_oscillation_frequency(self):
        tau = np.arange(1024) * 5e-9
        r = simulate_rabi_sequence(self.omega, 1 * MHZ, tau, ideal_pulses=True)
        spec = np.abs(np.fft.rfft(r.signal - r.signal.mean(), n=16 * len(tau)))
        f = np.fft.rfftfreq(16 * len(tau), d=tau[1])
        assert f[np.argmax(spec)] == pytest.approx(self.omega, rel=0.01)

    def test_three_level_effect_at_tau_zero(self):
        on = simulate_rabi_sequence(self.omega, 20 * MHZ, [0.0], mech_during_pulses=True).signal[0]
        off = simulate_rabi_sequence(self.omega, 20 * MHZ, [0.0], mech_during_pulses=False).signal[0]
        assert off == pytest.approx(1.0, abs=1e-10)
        assert on < off - 0.01

    def test_negative_tau(self):
        with pytest.raises(ValueError):
            simulate_rabi_sequence(self.omega, 1 * MHZ, [-1e-9])

    def test_batched_over_spins(self):
        rates = np.array([1.0, 2.0, 4.0]) * MHZ
        tau = np.linspace(0, 1e-6, 11)
        r = simulate_rabi_sequence(rates, 20 * MHZ, tau, inhomogeneous_detuning=np.zeros(3))
        assert r.signal.shape == (3, 11)
        single = simulate_rabi_sequence(2 * MHZ, 20 * MHZ, tau)
        assert np.allclose(r.signal[1], single.signal)


class TestApr:
    ring = 9.1e-6
    b0 = np.linspace(-2, 2, 41)

    def scan(self, rabi=0.5 * MHZ, **kw):
        return simulate_apr_scan(rabi, self.b0, 10.0, 2.8e6, self.ring, **kw).contrast

    def test_zero_rate(self):
        assert np.max(np.abs(self.scan(0.0))) < 1e-15

    def test_extremum_at_zero(self):
        c = self.scan()
        assert self.b0[np.argmax(np.abs(c))] == 0.0

    def test_off_cavity_suppressed(self):
        on = np.max(np.abs(self.scan()))
        off = np.max(np.abs(self.scan(cavity_detuning=10 * MHZ)))
        assert off * 5 < on

    def test_width_scales_with_linewidth(self):
        b0 = np.linspace(-3, 3, 241)

        def fwhm_mhz(rabi, lw):
            a = np.abs(simulate_apr_scan(rabi, b0, 10.0, 2.8e6, self.ring, linewidth=lw).contrast)
            above = b0[a >= a.max() / 2]
            return (above[-1] - above[0]) * 2.8

        # weak drive: the inhomogeneous line alone sets the width (gamma * dB0 = linewidth)
        for lw in (1.0, 2.0, 3.0):
            assert fwhm_mhz(0.05 * MHZ, lw * MHZ) == pytest.approx(lw, abs=2 * (b0[1] - b0[0]) * 2.8)
        # a stronger drive adds broadening on top of the same line
        assert fwhm_mhz(0.5 * MHZ, 1 * MHZ) > fwhm_mhz(0.05 * MHZ, 1 * MHZ) + 0.2
