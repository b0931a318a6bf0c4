import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sicsaw.spin import (
    MINUS, PLUS, ZERO, SPIN, DefectSpecies, GTensorC3v, MagneticField, StrainTensor,
    build_spin_operators, closed_form_rate_dm2, delta_d, g_voigt_matrix, hamiltonian,
    rotate_strain, transition_frequencies, transition_rate_dm1, transition_rate_dm2, zero_to_minus_frequency,
    zfs_operator,
)

GHZ = 1e9
finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
strain = st.floats(-1e-3, 1e-3, allow_nan=False, allow_infinity=False)


def strain_tensors():
    return st.builds(StrainTensor, strain, strain, strain, strain, strain, strain)


def g_tensors():
    return st.builds(GTensorC3v, *(st.floats(-50, 50).map(lambda v: v * GHZ) for _ in range(6)))


class TestOperators:
    def test_sz_diagonal(self):
        assert np.array_equal(build_spin_operators().sz, np.diag([1, 0, -1]).astype(complex))

    def test_commutators(self):
        s = SPIN
        assert np.allclose(s.sx @ s.sy - s.sy @ s.sx, 1j * s.sz)
        assert np.allclose(s.sy @ s.sz - s.sz @ s.sy, 1j * s.sx)
        assert np.allclose(s.sz @ s.sx - s.sx @ s.sz, 1j * s.sy)

    def test_casimir(self):
        assert np.allclose(SPIN.sx2 + SPIN.sy2 + SPIN.sz2, 2 * np.eye(3))

    def test_bilinears_hermitian(self):
        for m in (SPIN.sx2, SPIN.sy2, SPIN.sz2, SPIN.ac_xy, SPIN.ac_xz, SPIN.ac_yz):
            assert np.allclose(m, m.conj().T)

    def test_dm2_matrix_elements_from_ladder_operators(self):
        # hand-written ladder operators: S+|0> = sqrt2|+1>, S+|-1> = sqrt2|0>
        sp = np.zeros((3, 3), complex)
        sp[0, 1] = sp[1, 2] = np.sqrt(2)
        sm = sp.T.conj()
        # Sx^2 - Sy^2 = (S+^2 + S-^2)/2 and {Sx, Sy} = (S+^2 - S-^2)/(2i)
        assert ((sp @ sp + sm @ sm) / 2)[0, 2] == pytest.approx(1)
        assert ((sp @ sp - sm @ sm) / 2j)[0, 2] == pytest.approx(-1j)
        assert (SPIN.sx2 - SPIN.sy2)[PLUS, MINUS] == pytest.approx(1)
        assert SPIN.ac_xy[PLUS, MINUS] == pytest.approx(-1j)


class TestGMatrix:
    def test_zero(self):
        assert np.array_equal(g_voigt_matrix(GTensorC3v()), np.zeros((6, 6)))

    def test_g66_relation(self):
        assert g_voigt_matrix(GTensorC3v(g11=1.0))[5, 5] == 0.5

    def test_g14_pattern(self):
        m = g_voigt_matrix(GTensorC3v(g14=5.0))
        expected = {(0, 3): 5, (1, 3): -5, (3, 0): 5, (3, 1): -5, (4, 5): 5, (5, 4): 5}
        for (i, j), v in expected.items():
            assert m[i, j] == v
        assert np.count_nonzero(m) == len(expected)

    @given(g_tensors())
    def test_symmetric_with_six_parameters(self, g):
        m = g_voigt_matrix(g)
        assert np.array_equal(m, m.T)


class TestDeltaD:
    def test_zero_strain(self):
        assert np.array_equal(delta_d(GTensorC3v(g11=1.0, g14=2.0), StrainTensor()), np.zeros((3, 3)))

    def test_uniaxial(self):
        dd = delta_d(GTensorC3v(g11=10 * GHZ, g12=4 * GHZ), StrainTensor(exx=1e-4))
        assert dd[0, 0] == pytest.approx(1.0e6)
        assert dd[1, 1] == pytest.approx(0.4e6)

    def test_shear_engineering_factor(self):
        dd = delta_d(GTensorC3v(g14=5 * GHZ), StrainTensor(exz=1e-4))
        assert dd[0, 1] == pytest.approx(1.0e6)
        assert dd[1, 0] == pytest.approx(1.0e6)

    @given(g_tensors(), strain_tensors(), strain_tensors(), finite)
    def test_linear_and_symmetric(self, g, a, b, c):
        lhs = delta_d(g, a + c * b)
        rhs = delta_d(g, a) + c * delta_d(g, b)
        scale = max(np.abs(lhs).max(), np.abs(rhs).max(), 1.0)
        assert np.allclose(lhs, rhs, atol=1e-9 * scale)
        assert np.array_equal(lhs, np.swapaxes(lhs, -1, -2))


class TestHamiltonian:
    kk = DefectSpecies("kk", 1.305)

    def test_zero_field_levels(self):
        f = transition_frequencies(hamiltonian(self.kk, MagneticField()))
        assert np.allclose(f, [0, 1.305e9, 1.305e9])

    def test_cavity_resonant_field(self):
        f = zero_to_minus_frequency(self.kk, 266.2)
        assert f == pytest.approx(1305e6 - 2.8e6 * 266.2)
        assert abs(f - 559.6e6) < 0.1e6

    def test_dxy_only_couples_plus_minus(self):
        dd = np.zeros((3, 3))
        dd[0, 1] = dd[1, 0] = 1e6
        h = hamiltonian(self.kk, MagneticField(), dd)
        off = h - np.diag(np.diag(h))
        nz = {tuple(ix) for ix in np.argwhere(np.abs(off) > 0)}
        assert nz == {(PLUS, MINUS), (MINUS, PLUS)}

    @given(strain_tensors(), g_tensors())
    def test_hermitian(self, eps, g):
        h = hamiltonian(self.kk, MagneticField(1.0, 2.0, 3.0), delta_d(g, eps))
        assert np.allclose(h, h.conj().T)

    @given(st.floats(-1e8, 1e8), strain_tensors())
    def test_identity_shift_leaves_transitions(self, c, eps):
        g = GTensorC3v(20 * GHZ, -4 * GHZ, 3 * GHZ, 7 * GHZ, 10 * GHZ, 15 * GHZ)
        dd = delta_d(g, eps)
        f1 = transition_frequencies(hamiltonian(self.kk, MagneticField(bz=100.0), dd))
        f2 = transition_frequencies(hamiltonian(self.kk, MagneticField(bz=100.0), dd + c * np.eye(3)))
        assert np.allclose(np.diff(f1), np.diff(f2), atol=1e-6 * max(1.0, abs(c)))

    def test_species_validation(self):
        with pytest.raises(ValueError):
            DefectSpecies("kk", -1.0)
        with pytest.raises(ValueError):
            DefectSpecies("kk", 1.305, gamma=0.0)


class TestRates:
    def test_uniaxial_rate(self):
        g = GTensorC3v(g11=6 * GHZ)
        r = transition_rate_dm2(g, StrainTensor(exx=1e-4))
        assert r == pytest.approx(0.3e6)
        assert closed_form_rate_dm2(g, 1e-4, 0.0) == pytest.approx(0.3e6)

    def test_shear_rate(self):
        g = GTensorC3v(g14=5 * GHZ)
        assert transition_rate_dm2(g, StrainTensor(exz=1e-4)) == pytest.approx(-1.0e6j)
        assert closed_form_rate_dm2(g, 0.0, 1e-4) == pytest.approx(-1.0e6j)

    def test_zero_strain(self):
        g = GTensorC3v(1, 2, 3, 4, 5, 6)
        assert transition_rate_dm2(g, StrainTensor()) == 0
        assert transition_rate_dm1(g, StrainTensor()) == 0

    def test_dm1_shear_channel_scales_with_g44(self):
        eps = StrainTensor(exz=1e-4)
        r1 = transition_rate_dm1(GTensorC3v(g44=5 * GHZ, g14=2 * GHZ), eps)
        r2 = transition_rate_dm1(GTensorC3v(g44=10 * GHZ, g14=2 * GHZ), eps)
        assert r1 != 0
        assert r2 == pytest.approx(2 * r1)

    def test_dm1_vanishes_for_ezz(self):
        g = GTensorC3v(1e9, 2e9, 3e9, 4e9, 5e9, 6e9)
        assert transition_rate_dm1(g, StrainTensor(ezz=1e-4)) == 0

    @given(g_tensors(), strain_tensors())
    def test_dm1_magnitude_symmetric_between_branches(self, g, eps):
        # <0|.|-1> and <0|.|+1> have equal magnitude for a single shear component
        shear_only = StrainTensor(exz=eps.exz)
        op = zfs_operator(delta_d(g, shear_only))
        assert abs(op[ZERO, MINUS]) == pytest.approx(abs(op[ZERO, PLUS]), rel=1e-12, abs=1e-6)

    @given(g_tensors(), strain, strain)
    def test_closed_form_and_no_interference(self, g, exx, exz):
        r = transition_rate_dm2(g, StrainTensor(exx=exx, exz=exz))
        cf = closed_form_rate_dm2(g, exx, exz)
        assert abs(r - cf) <= 1e-12 * max(abs(cf), 1e-300) + 1e-9
        a = 0.5 * (g.g11 - g.g12) * exx
        b = 2 * g.g14 * exz
        assert abs(r) ** 2 == pytest.approx(a**2 + b**2, rel=1e-12, abs=1e-6)

    @given(g_tensors(), strain_tensors(), strain_tensors())
    @settings(max_examples=50)
    def test_rates_linear(self, g, a, b):
        # round-off is set by the largest Delta D entry, not by the (possibly cancelled) rate
        scale = max(np.abs(delta_d(g, a)).max(), np.abs(delta_d(g, b)).max(), 1.0)
        for f in (transition_rate_dm1, transition_rate_dm2):
            lhs, rhs = f(g, a + b), f(g, a) + f(g, b)
            assert abs(lhs - rhs) <= 1e-12 * scale


class TestRotation:
    def test_identity(self):
        e = StrainTensor(1e-4, 2e-4, 3e-4, 4e-4, 5e-4, 6e-4)
        r = rotate_strain(e, 0.0)
        assert np.allclose(r.components(), e.components())

    def test_quarter_turn_uniaxial(self):
        r = rotate_strain(StrainTensor(exx=1.0), np.pi / 2)
        assert r.eyy == pytest.approx(1.0)
        assert r.exx == pytest.approx(0.0, abs=1e-15)

    def test_quarter_turn_shear(self):
        r = rotate_strain(StrainTensor(exz=1.0), np.pi / 2)
        assert r.eyz == pytest.approx(1.0)
        assert r.exz == pytest.approx(0.0, abs=1e-15)

    @given(strain_tensors(), st.floats(-2 * np.pi, 2 * np.pi))
    def test_trace_preserved(self, e, angle):
        r = rotate_strain(e, angle)
        assert r.exx + r.eyy + r.ezz == pytest.approx(e.exx + e.eyy + e.ezz, abs=1e-15)
