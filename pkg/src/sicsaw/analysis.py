"""Peak fitting, Autler-Townes splitting extraction and spatial-profile metrics."""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize, signal, stats

FWHM_TO_SIGMA = 1.0 / (2.0 * np.sqrt(2.0 * np.log(2.0)))


class FitError(RuntimeError):
    pass


@dataclass
class Spectrum:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.shape != self.y.shape or self.x.ndim != 1:
            raise ValueError("abscissa and ordinate must be 1-D and of equal length")
        if np.any(np.diff(self.x) <= 0):
            raise ValueError("abscissa must be strictly increasing")


@dataclass
class Peak:
    center: float
    fwhm: float
    amplitude: float
    center_ci: float = np.nan
    fwhm_ci: float = np.nan
    amplitude_ci: float = np.nan


@dataclass
class PeakFit:
    peaks: list[Peak]
    baseline: float
    residual_norm: float
    degenerate: bool = False
    n_iterations: int = 0
    covariance: np.ndarray | None = field(default=None, repr=False)

    def to_record(self) -> dict:
        return {
            "peaks": [asdict(p) for p in self.peaks],
            "baseline": self.baseline,
            "residual_norm": self.residual_norm,
            "degenerate": self.degenerate,
        }


def gaussian_peaks(x, params, n_peaks, baseline=True):
    p = np.asarray(params)
    out = np.full_like(np.asarray(x, dtype=float), p[-1] if baseline else 0.0)
    for i in range(n_peaks):
        a, c, w = p[3 * i: 3 * i + 3]
        out = out + a * np.exp(-4 * np.log(2) * (x - c) ** 2 / w**2)
    return out


def _initial_guesses(s: Spectrum, n_peaks):
    y = s.y - np.median(s.y)
    if abs(y.min()) > abs(y.max()):
        y = -y
    idx, props = signal.find_peaks(y, height=0.0)
    span = s.x[-1] - s.x[0]
    order = idx[np.argsort(props["peak_heights"])[::-1]] if len(idx) else np.array([int(np.argmax(y))])
    half = 0.5 * y.max()
    above = s.x[y >= half]
    width = max(above[-1] - above[0], 3 * np.median(np.diff(s.x))) if above.size else span / 10
    guesses = []
    for i in range(n_peaks):
        if i < len(order):
            j = order[i]
            w = width / max(len(order[:n_peaks]), 1)
            guesses.append((s.y[j] - np.median(s.y), s.x[j], w))
        else:
            c0 = s.x[order[0]]
            w = width / 2
            guesses.append((0.5 * (s.y[order[0]] - np.median(s.y)), c0 + (i - n_peaks / 2 + 0.5) * w, w))
    return guesses


def fit_gaussian_peaks(s: Spectrum, n_peaks: int, guesses=None, baseline: bool = True,
                       max_iterations: int = 200, tol: float = 1e-10) -> PeakFit:
    """Least-squares fit of ``n_peaks`` Gaussians (plus a constant baseline).

    ``guesses`` is a sequence of (amplitude, center, fwhm). Confidence intervals
    are 95% two-sided from the linearized covariance at the optimum.
    """
    if n_peaks < 1:
        raise ValueError("n_peaks must be >= 1")
    if guesses is None:
        guesses = _initial_guesses(s, n_peaks)
    if len(guesses) != n_peaks:
        raise ValueError("need one (amplitude, center, fwhm) guess per peak")

    # work in scaled units for conditioning
    x0, xs = s.x.mean(), (s.x[-1] - s.x[0]) / 2 or 1.0
    ys = np.max(np.abs(s.y)) or 1.0
    xn = (s.x - x0) / xs
    yn = s.y / ys
    p0 = []
    for a, c, w in guesses:
        p0 += [a / ys, (c - x0) / xs, abs(w) / xs]
    if baseline:
        p0.append(float(np.median(yn)))

    def resid(p):
        return gaussian_peaks(xn, p, n_peaks, baseline) - yn

    res = optimize.least_squares(resid, p0, method="lm", ftol=tol, xtol=tol, gtol=tol,
                                 max_nfev=max_iterations * (len(p0) + 1))
    if res.status <= 0:
        raise FitError(f"fit did not converge: {res.message}")
    p = res.x
    jac = res.jac
    npar = len(p)
    dof = max(len(xn) - npar, 1)
    rss = float(np.sum(res.fun**2))
    jtj = jac.T @ jac
    order = sorted(range(n_peaks), key=lambda i: p[3 * i + 1])
    degenerate = any(
        abs(p[3 * j + 1] - p[3 * i + 1]) < min(abs(p[3 * i + 2]), abs(p[3 * j + 2])) / 10
        for i, j in zip(order, order[1:])
    )
    if np.linalg.matrix_rank(jtj) < npar:
        if not degenerate:
            raise FitError("singular Jacobian at the optimum")
        # overlapping peaks: parameters are not individually identifiable
        cov = np.full((npar, npar), np.inf)
    else:
        cov = np.linalg.inv(jtj) * (rss / dof)
    tcrit = stats.t.ppf(0.975, dof)
    err = tcrit * np.sqrt(np.clip(np.diag(cov), 0, None))

    peaks = []
    for i in range(n_peaks):
        a, c, w = p[3 * i: 3 * i + 3]
        ea, ec, ew = err[3 * i: 3 * i + 3]
        peaks.append(Peak(center=c * xs + x0, fwhm=abs(w) * xs, amplitude=a * ys,
                          center_ci=ec * xs, fwhm_ci=ew * xs, amplitude_ci=ea * ys))
    peaks.sort(key=lambda pk: pk.center)
    scale = np.repeat([ys, xs, xs], n_peaks).tolist() + ([ys] if baseline else [])
    scale = np.asarray(scale)
    return PeakFit(
        peaks=peaks,
        baseline=float(p[-1] * ys) if baseline else 0.0,
        residual_norm=float(np.sqrt(rss) * ys),
        degenerate=degenerate,
        n_iterations=int(res.nfev),
        covariance=cov * np.outer(scale, scale),
    )


@dataclass
class SplittingResult:
    splitting: float
    ci: float
    resolved: bool
    fit: PeakFit

    def to_record(self) -> dict:
        return {"splitting_hz": self.splitting, "ci95_hz": self.ci, "resolved": self.resolved,
                "fit": self.fit.to_record()}


def extract_at_splitting(s: Spectrum) -> SplittingResult:
    """Doublet splitting from a two-Gaussian fit.

    An unresolved doublet reports the single-peak FWHM as an upper bound with
    ``resolved = False``.
    """
    try:
        fit = fit_gaussian_peaks(s, 2)
        ok = not fit.degenerate and all(
            p.fwhm > 0 and np.sign(p.amplitude) == np.sign(fit.peaks[0].amplitude) for p in fit.peaks
        )
    except FitError:
        ok = False
    if ok:
        a, b = fit.peaks
        ci = float(np.hypot(a.center_ci, b.center_ci))
        within = s.x[0] <= a.center <= s.x[-1] and s.x[0] <= b.center <= s.x[-1]
        if within:
            return SplittingResult(abs(b.center - a.center), ci, True, fit)
    single = fit_gaussian_peaks(s, 1)
    return SplittingResult(single.peaks[0].fwhm, float(single.peaks[0].fwhm_ci), False, single)


@dataclass
class SpatialSpectrum:
    frequency: np.ndarray  # cycles per metre, numpy fft ordering
    amplitude: np.ndarray

    def dominant_frequency(self) -> float:
        pos = self.frequency > 0
        return float(self.frequency[pos][np.argmax(self.amplitude[pos])])


def fft_spatial(x, values, window: str | None = None) -> SpatialSpectrum:
    x = np.asarray(x, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(x) < 8:
        raise ValueError("need at least 8 samples")
    dx = np.diff(x)
    if not np.allclose(dx, dx[0], rtol=1e-6, atol=0):
        raise ValueError("spatial samples must be uniformly spaced")
    v = v - v.mean()
    if window == "hann":
        v = v * np.hanning(len(v))
    elif window is not None:
        raise ValueError(f"unknown window {window!r}")
    return SpatialSpectrum(np.fft.fftfreq(len(v), d=dx[0]), np.abs(np.fft.fft(v)))


@dataclass
class SqrtPowerFit:
    slope: float
    intercept: float
    r_squared: float


def linear_fit_sqrt_power(powers, splittings) -> SqrtPowerFit:
    p = np.asarray(powers, dtype=float)
    if len(p) < 3:
        raise ValueError("need at least 3 points")
    if np.any(p < 0):
        raise ValueError("powers must be non-negative")
    res = stats.linregress(np.sqrt(p), np.asarray(splittings, dtype=float))
    return SqrtPowerFit(float(res.slope), float(res.intercept), float(res.rvalue**2))


def peak_to_peak_modulation(values, x=None, window: float | None = None) -> float:
    """100 * (max - min) / mean, optionally restricted to |x| <= window."""
    v = np.asarray(values, dtype=float)
    if window is not None:
        v = v[np.abs(np.asarray(x)) <= window]
    if v.size == 0:
        raise ValueError("empty profile")
    mean = v.mean()
    if mean <= 0:
        raise ValueError("profile mean must be positive")
    return float(100 * (v.max() - v.min()) / mean)


@dataclass
class GaussianProfileFit:
    amplitude: float
    center: float
    waist: float  # w in exp(-(y - c)^2 / w^2)
    waist_ci: float


def fit_gaussian_profile(y, values) -> GaussianProfileFit:
    """Fit A exp(-(y - c)^2 / w^2) to a transverse profile."""
    y = np.asarray(y, dtype=float)
    v = np.asarray(values, dtype=float)
    s = Spectrum(y, v)
    j = int(np.argmax(v))
    guess = [(v[j], y[j], (y[-1] - y[0]) / 2)]
    fit = fit_gaussian_peaks(s, 1, guesses=guess, baseline=False)
    pk = fit.peaks[0]
    to_w = 1.0 / (2 * np.sqrt(np.log(2)))
    return GaussianProfileFit(pk.amplitude, pk.center, pk.fwhm * to_w, pk.fwhm_ci * to_w)


def fit_sinusoid(t, values, f_guess=None):
    """Frequency of c + A cos(2 pi f t + phi) by least squares seeded from the FFT peak."""
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    if f_guess is None:
        spec = np.abs(np.fft.rfft(v - v.mean(), n=8 * len(v)))
        freqs = np.fft.rfftfreq(8 * len(v), d=t[1] - t[0])
        f_guess = freqs[np.argmax(spec[1:]) + 1]
    a0 = 0.5 * (v.max() - v.min())

    def model(tt, c, a, f, phi):
        return c + a * np.cos(2 * np.pi * f * tt + phi)

    best = None
    for phi0 in (0.0, np.pi / 2, np.pi, -np.pi / 2):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", optimize.OptimizeWarning)
                popt, _ = optimize.curve_fit(model, t, v, p0=[v.mean(), a0, f_guess, phi0], maxfev=20000)
        except RuntimeError:
            continue
        r = np.sum((model(t, *popt) - v) ** 2)
        if best is None or r < best[0]:
            best = (r, popt)
    if best is None:
        raise FitError("sinusoid fit failed")
    return abs(float(best[1][2]))
