"""S=1 spin operators, C3v spin-strain coupling and the ground-state Hamiltonian.

All matrices use the ordered basis (|+1>, |0>, |-1>). Hamiltonians are H/h in Hz,
magnetic fields in Gauss and strains are dimensionless.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PLUS, ZERO, MINUS = 0, 1, 2
BASIS_LABELS = ("+1", "0", "-1")

# Voigt index -> (i, j); zero-based, order xx, yy, zz, yz, xz, xy
VOIGT_PAIRS = ((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1))


@dataclass(frozen=True)
class SpinOperators:
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray

    @property
    def vector(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.sx, self.sy, self.sz

    def bilinear(self, i: int, j: int) -> np.ndarray:
        """Symmetrized product (S_i S_j + S_j S_i) / 2."""
        s = self.vector
        return 0.5 * (s[i] @ s[j] + s[j] @ s[i])

    @property
    def sx2(self):
        return self.sx @ self.sx

    @property
    def sy2(self):
        return self.sy @ self.sy

    @property
    def sz2(self):
        return self.sz @ self.sz

    @property
    def ac_xy(self):
        return self.sx @ self.sy + self.sy @ self.sx

    @property
    def ac_xz(self):
        return self.sx @ self.sz + self.sz @ self.sx

    @property
    def ac_yz(self):
        return self.sy @ self.sz + self.sz @ self.sy


def build_spin_operators() -> SpinOperators:
    splus = np.sqrt(2.0) * np.array([[0, 1, 0], [0, 0, 1], [0, 0, 0]], dtype=complex)
    sminus = splus.conj().T
    sx = 0.5 * (splus + sminus)
    sy = (splus - sminus) / 2j
    sz = np.diag([1.0, 0.0, -1.0]).astype(complex)
    return SpinOperators(sx, sy, sz)


SPIN = build_spin_operators()

# S_i S_j symmetrized, stacked as (3, 3, 3, 3) for contraction with a 3x3 tensor
_BILINEARS = np.array([[SPIN.bilinear(i, j) for j in range(3)] for i in range(3)])


@dataclass(frozen=True)
class GTensorC3v:
    """Six independent spin-strain couplings of a C3v defect, in Hz per unit strain."""

    g11: float = 0.0
    g12: float = 0.0
    g13: float = 0.0
    g14: float = 0.0
    g33: float = 0.0
    g44: float = 0.0

    def scaled(self, factor: float) -> "GTensorC3v":
        return GTensorC3v(*(factor * v for v in self.as_tuple()))

    def as_tuple(self) -> tuple[float, ...]:
        return (self.g11, self.g12, self.g13, self.g14, self.g33, self.g44)


@dataclass(frozen=True)
class DefectSpecies:
    name: str
    d0: float  # GHz
    gamma: float = 2.8  # MHz/G
    contrast_sign: int = 1
    g_params: GTensorC3v = field(default_factory=GTensorC3v)
    g_params_dm1: GTensorC3v | None = None

    def __post_init__(self):
        if not self.d0 > 0:
            raise ValueError(f"d0 must be positive, got {self.d0}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.contrast_sign not in (1, -1):
            raise ValueError("contrast_sign must be +1 or -1")

    @property
    def d0_hz(self) -> float:
        return self.d0 * 1e9

    @property
    def gamma_hz_per_gauss(self) -> float:
        return self.gamma * 1e6

    @property
    def coupling_dm1(self) -> GTensorC3v:
        """G set used for the Delta m = +-1 channel (falls back to the main set)."""
        return self.g_params if self.g_params_dm1 is None else self.g_params_dm1


SPECIES_D0 = {"hh": 1.336, "kk": 1.305}


@dataclass(frozen=True)
class StrainTensor:
    """Symmetric strain; components may be scalars or broadcastable arrays."""

    exx: float | np.ndarray = 0.0
    eyy: float | np.ndarray = 0.0
    ezz: float | np.ndarray = 0.0
    eyz: float | np.ndarray = 0.0
    exz: float | np.ndarray = 0.0
    exy: float | np.ndarray = 0.0

    def voigt(self) -> np.ndarray:
        """Engineering-shear Voigt vector, shape (6, ...)."""
        comps = np.broadcast_arrays(self.exx, self.eyy, self.ezz, self.eyz, self.exz, self.exy)
        return np.stack([comps[0], comps[1], comps[2], 2 * comps[3], 2 * comps[4], 2 * comps[5]])

    def matrix(self) -> np.ndarray:
        """3x3 tensor with the spatial axes trailing, shape (..., 3, 3)."""
        return voigt_to_matrix(self.voigt(), engineering=True)

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "StrainTensor":
        m = np.asarray(m)
        return cls(m[..., 0, 0], m[..., 1, 1], m[..., 2, 2], m[..., 1, 2], m[..., 0, 2], m[..., 0, 1])

    def __add__(self, other: "StrainTensor") -> "StrainTensor":
        return StrainTensor(*(a + b for a, b in zip(self.components(), other.components())))

    def __mul__(self, c) -> "StrainTensor":
        return StrainTensor(*(c * a for a in self.components()))

    __rmul__ = __mul__

    def components(self) -> tuple:
        return (self.exx, self.eyy, self.ezz, self.eyz, self.exz, self.exy)


@dataclass(frozen=True)
class MagneticField:
    bx: float = 0.0
    by: float = 0.0
    bz: float = 0.0

    def __post_init__(self):
        if not np.all(np.isfinite([self.bx, self.by, self.bz])):
            raise ValueError("magnetic field components must be finite")


def voigt_to_matrix(v: np.ndarray, engineering: bool = False) -> np.ndarray:
    v = np.asarray(v)
    shear = 0.5 if engineering else 1.0
    out = np.empty(v.shape[1:] + (3, 3), dtype=v.dtype)
    for n, (i, j) in enumerate(VOIGT_PAIRS):
        c = v[n] if i == j else shear * v[n]
        out[..., i, j] = c
        out[..., j, i] = c
    return out


def g_voigt_matrix(g: GTensorC3v) -> np.ndarray:
    """6x6 Voigt matrix of the trigonal 3m spin-strain tensor.

    Rows are (dD_xx, dD_yy, dD_zz, dD_yz, dD_xz, dD_xy); columns act on the
    engineering-shear strain vector.
    """
    g11, g12, g13, g14, g33, g44 = g.as_tuple()
    return np.array(
        [
            [g11, g12, g13, g14, 0, 0],
            [g12, g11, g13, -g14, 0, 0],
            [g13, g13, g33, 0, 0, 0],
            [g14, -g14, 0, g44, 0, 0],
            [0, 0, 0, 0, g44, g14],
            [0, 0, 0, 0, g14, 0.5 * (g11 - g12)],
        ],
        dtype=float,
    )


def delta_d(g: GTensorC3v, eps: StrainTensor) -> np.ndarray:
    """Strain-induced change of the zero-field tensor, Hz, shape (..., 3, 3)."""
    dd_voigt = np.tensordot(g_voigt_matrix(g), eps.voigt(), axes=(1, 0))
    return voigt_to_matrix(dd_voigt, engineering=False)


def zfs_operator(dd: np.ndarray) -> np.ndarray:
    """S . dD . S for one or many dD tensors; returns (..., 3, 3) Hermitian."""
    return np.einsum("...ij,ijab->...ab", np.asarray(dd, dtype=complex), _BILINEARS)


def hamiltonian(species: DefectSpecies, b: MagneticField, dd: np.ndarray | None = None) -> np.ndarray:
    s = SPIN
    h = species.gamma_hz_per_gauss * (b.bx * s.sx + b.by * s.sy + b.bz * s.sz)
    h = h + species.d0_hz * s.sz2
    if dd is not None:
        h = h + zfs_operator(dd)
    return h


def transition_frequencies(h: np.ndarray) -> np.ndarray:
    """Sorted eigenfrequencies of a Hermitian Hamiltonian, Hz."""
    return np.linalg.eigvalsh(h)


def zero_to_minus_frequency(species: DefectSpecies, bz: float) -> float:
    """|0> -> |-1> transition for an axial field and no strain, Hz."""
    h = hamiltonian(species, MagneticField(bz=bz)).real
    return float(h[MINUS, MINUS] - h[ZERO, ZERO])


def transition_rate_dm2(g: GTensorC3v, eps: StrainTensor) -> np.ndarray | complex:
    """<+1| S.dD.S |-1>, the Delta m = +-2 mechanical drive rate in Hz."""
    op = zfs_operator(delta_d(g, eps))
    return op[..., PLUS, MINUS]


def transition_rate_dm1(g: GTensorC3v, eps: StrainTensor) -> np.ndarray | complex:
    """<0| S.dD.S |-1>, the Delta m = +-1 mechanical drive rate in Hz."""
    op = zfs_operator(delta_d(g, eps))
    return op[..., ZERO, MINUS]


def closed_form_rate_dm2(g: GTensorC3v, exx, exz):
    """Rate for strain with only exx and exz nonzero."""
    return 0.5 * (g.g11 - g.g12) * np.asarray(exx) - 2j * g.g14 * np.asarray(exz)


def rotation_about_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotate_strain(eps: StrainTensor, angle_about_z: float) -> StrainTensor:
    r = rotation_about_z(angle_about_z)
    m = eps.matrix()
    return StrainTensor.from_matrix(r @ m @ r.T)
