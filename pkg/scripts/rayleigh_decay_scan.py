"""Tabulate how the Rayleigh strain decays with depth for a given material.

Reports surface-to-depth ratios of the peak strain norm and of the individual
components, the quantities behind the 2-wavelength decay check.
"""
import argparse

import numpy as np

from sicsaw.acoustics import MaterialAcoustics, RayleighWaveParams, _Profile, standing_wave_strain


def peak_norm(wave, mat, z, n_x=241):
    x = np.linspace(0, wave.wavelength, n_x)
    e = standing_wave_strain(wave, mat, x, np.full_like(x, z))
    return np.max(np.sqrt(e.exx**2 + e.ezz**2 + 2 * e.exz**2))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--v-l", type=float, default=3000.0 * np.sqrt(3.0), help="m/s (default: Poisson solid)")
    ap.add_argument("--v-t", type=float, default=3000.0, help="m/s")
    ap.add_argument("--wavelength-um", type=float, default=12.0)
    ap.add_argument("--max-depth", type=float, default=3.0, help="in wavelengths")
    args = ap.parse_args()

    mat = MaterialAcoustics(args.v_l, args.v_t).solved()
    wave = RayleighWaveParams(args.wavelength_um * 1e-6)
    prof = _Profile(wave, mat)
    lam = wave.wavelength
    print(f"v_r = {mat.v_r:.3f} m/s, v_r/v_t = {mat.v_r / mat.v_t:.6f}")
    print(f"{'z/lambda':>9} {'norm':>10} {'exx':>10} {'ezz':>10}")
    s0 = peak_norm(wave, mat, 0.0)
    for zl in np.arange(0.25, args.max_depth + 1e-9, 0.25):
        z = zl * lam
        print(f"{zl:9.2f} {s0 / peak_norm(wave, mat, z):10.1f} "
              f"{abs(prof.exx_amp(0.0) / prof.exx_amp(z)):10.1f} {abs(prof.ezz_amp(0.0) / prof.ezz_amp(z)):10.1f}")


if __name__ == "__main__":
    main()
