"""
Autocorrelation and power-spectrum estimates from trajectory ensembles.

Spectra use the convention of :func:`qdephase.analytic.spectrum_y`: a
two-sided density in angular frequency, reported on ``omega >= 0``, so that
``2 * integral_0^inf S d(omega)`` is the variance.  The estimator is the
windowed periodogram of each post-transient path, averaged over
realizations (Bartlett averaging across the ensemble).
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import signal

from .noise_gen import InvalidParameterError, TrajectoryEnsemble

MIN_SAMPLES = 64
_ROWS_PER_CHUNK = 256
WINDOWS = ("rectangular", "hann")


@dataclass(frozen=True)
class SpectrumEstimate:
    omegas: np.ndarray
    s_values: np.ndarray
    std_err: np.ndarray
    n_segments: int
    transient_cut: float
    window: str = "rectangular"
    dt: float = 1.0
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def bin_width(self) -> float:
        return float(self.omegas[1] - self.omegas[0])

    def total_power(self) -> float:
        """Two-sided integral of the estimate (``omega = 0`` and Nyquist counted once)."""
        weights = np.full(self.omegas.size, 2.0)
        weights[0] = 1.0
        if np.isclose(self.omegas[-1], math.pi / self.dt):
            weights[-1] = 1.0
        return float(np.sum(weights * self.s_values) * self.bin_width)

    def band(self, lo: float, hi: float) -> np.ndarray:
        return (self.omegas >= lo) & (self.omegas <= hi)

    def to_csv(self, path=None, metadata: Optional[dict] = None) -> str:
        meta = {**self.settings(), **self.meta, **(metadata or {})}
        lines = [f"# {line}" for line in json.dumps(meta, sort_keys=True, indent=1).splitlines()]
        lines.append("omega,S,stderr")
        lines += [f"{w:.17g},{s:.17g},{e:.17g}" for w, s, e in zip(self.omegas, self.s_values, self.std_err)]
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text

    def to_json(self, path=None, metadata: Optional[dict] = None) -> str:
        data = {"settings": self.settings(), "metadata": {**self.meta, **(metadata or {})},
                "omega": self.omegas.tolist(), "S": self.s_values.tolist(),
                "stderr": self.std_err.tolist()}
        text = json.dumps(data, sort_keys=True) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text

    def settings(self) -> dict:
        return {"estimator": "bartlett-periodogram", "window": self.window,
                "transient_cut": self.transient_cut, "n_segments": self.n_segments,
                "dt": self.dt, "normalization": "two-sided angular density"}


def default_transient_cut(spec) -> float:
    """``10 / (slowest rate)`` of a NoiseSpec; zero when unknown or rate-free."""
    if spec is None:
        return 0.0
    rates = [r for r in (spec.gamma, spec.kappa, spec.mu) if r is not None and r > 0]
    return 10.0 / min(rates) if rates else 0.0


def _resolve_cut(ensemble, transient_cut):
    return default_transient_cut(ensemble.spec) if transient_cut is None else float(transient_cut)


def _post_cut(ensemble: TrajectoryEnsemble, transient_cut: float) -> np.ndarray:
    grid = ensemble.grid
    if not (0 <= transient_cut < grid.t_max):
        raise InvalidParameterError(
            f"transient_cut must lie in [0, t_max={grid.t_max}), got {transient_cut}"
        )
    start = int(math.ceil(transient_cut / grid.dt - 1e-9))
    return ensemble.values[:, start:]


def _chunks(n):
    return [(i, min(i + _ROWS_PER_CHUNK, n)) for i in range(0, n, _ROWS_PER_CHUNK)]


def _reduce(fn, n, threads):
    """Sum ``fn(lo, hi)`` over fixed row chunks in a fixed order."""
    spans = _chunks(n)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda s: fn(*s), spans))
    else:
        parts = [fn(*s) for s in spans]
    total = parts[0]
    for p in parts[1:]:
        total = tuple(a + b for a, b in zip(total, p))
    return total


def autocorr_estimate(ensemble: TrajectoryEnsemble, max_lag: float,
                      transient_cut: Optional[float] = None, *, threads: int = 1):
    """Biased lagged-product average after a transient cut.

    ``r(k dt) = (1/M) sum_n x_n x_{n+k}`` over the ``M`` post-cut samples of
    each path, averaged over realizations.  ``transient_cut=None`` uses
    :func:`default_transient_cut`.

    Returns
    -------
    taus, values : ndarray
    """
    x = _post_cut(ensemble, _resolve_cut(ensemble, transient_cut))
    m = x.shape[1]
    dt = ensemble.grid.dt
    n_lag = int(math.floor(max_lag / dt + 1e-9)) + 1
    if max_lag < 0 or n_lag >= m or m < 2:
        raise InvalidParameterError(
            f"max_lag={max_lag} needs fewer than the {m} post-cut samples"
        )
    nfft = 1 << int(math.ceil(math.log2(2 * m)))

    def part(lo, hi):
        spec = np.fft.rfft(x[lo:hi], n=nfft, axis=1)
        acf = np.fft.irfft(np.abs(spec) ** 2, n=nfft, axis=1)[:, :n_lag]
        return (acf.sum(axis=0),)

    (total,) = _reduce(part, x.shape[0], threads)
    values = total / (x.shape[0] * m)
    return np.arange(n_lag) * dt, values


def fit_decay_rate(taus, values, max_tau: Optional[float] = None) -> float:
    """Least-squares slope of ``-log r(tau)`` over the positive part of ``r``."""
    taus = np.asarray(taus, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = values > 0
    if max_tau is not None:
        keep &= taus <= max_tau
    slope, _ = np.polyfit(taus[keep], np.log(values[keep]), 1)
    return float(-slope)


def periodogram(ensemble: TrajectoryEnsemble, transient_cut: Optional[float] = None, window: str = "rectangular",
                *, omega_max: Optional[float] = None, threads: int = 1) -> SpectrumEstimate:
    """Ensemble-averaged periodogram on ``omega = 2 pi k / (M dt)``, ``k >= 0``.

    Parameters
    ----------
    ensemble : TrajectoryEnsemble
    transient_cut : float, optional
        Time discarded from the start of every path; default
        ``10 / (slowest rate)``.
    window : {"rectangular", "hann"}
    omega_max : float, optional
        Highest frequency of interest; must not exceed the Nyquist frequency.
    """
    if window not in WINDOWS:
        raise InvalidParameterError(f"window must be one of {WINDOWS}, got {window!r}")
    dt = ensemble.grid.dt
    nyquist = math.pi / dt
    if omega_max is not None and omega_max > nyquist:
        raise InvalidParameterError(
            f"grid step {dt:g} resolves omega up to {nyquist:g} < requested {omega_max:g}"
        )
    transient_cut = _resolve_cut(ensemble, transient_cut)
    x = _post_cut(ensemble, transient_cut)
    m = x.shape[1]
    if m < MIN_SAMPLES:
        raise InvalidParameterError(f"only {m} post-cut samples; need at least {MIN_SAMPLES}")
    w = np.ones(m) if window == "rectangular" else signal.get_window("hann", m, fftbins=False)
    scale = dt / (2 * math.pi * np.sum(w ** 2))

    def part(lo, hi):
        p = scale * np.abs(np.fft.rfft(x[lo:hi] * w, axis=1)) ** 2
        return p.sum(axis=0), (p ** 2).sum(axis=0)

    s1, s2 = _reduce(part, x.shape[0], threads)
    n = x.shape[0]
    mean = s1 / n
    if n > 1:
        var = np.clip((s2 - n * mean ** 2) / (n - 1), 0.0, None)
        se = np.sqrt(var / n)
    else:
        se = np.full_like(mean, np.nan)
    omegas = 2 * math.pi * np.fft.rfftfreq(m, dt)
    meta = {}
    if ensemble.spec is not None:
        meta = {"spec": ensemble.spec.to_dict(), "grid": ensemble.grid.to_dict(),
                "master_seed": ensemble.master_seed, "n_realizations": n}
    return SpectrumEstimate(omegas, mean, se, n, float(transient_cut), window, dt, meta)


def smoothed(estimate: SpectrumEstimate, bins: int = 5) -> np.ndarray:
    """Centered moving average of ``s_values`` over ``bins`` bins (edges shrink)."""
    s = estimate.s_values
    half = bins // 2
    c = np.concatenate([[0.0], np.cumsum(s)])
    idx = np.arange(s.size)
    lo = np.clip(idx - half, 0, s.size)
    hi = np.clip(idx + half + 1, 0, s.size)
    return (c[hi] - c[lo]) / (hi - lo)


def peak_frequency(estimate: SpectrumEstimate, *, level: float = 0.5, smooth_bins: int = 9,
                   omega_min: Optional[float] = None) -> float:
    """Location of the dominant off-zero peak.

    A quadratic in ``log omega`` is fitted to ``log S`` over the bins around
    the smoothed maximum where the smoothed estimate stays above
    ``level * max``; bins are weighted by ``1/omega`` so the fit is uniform
    in ``log omega``.  Returns the vertex.
    """
    s = smoothed(estimate, smooth_bins)
    w = estimate.omegas
    usable = w > (omega_min if omega_min is not None else 0.0)
    usable[0] = False
    k = int(np.argmax(np.where(usable, s, -np.inf)))
    top = s[k]
    lo = k
    while lo - 1 >= 1 and usable[lo - 1] and s[lo - 1] >= level * top:
        lo -= 1
    hi = k
    while hi + 1 < s.size and s[hi + 1] >= level * top:
        hi += 1
    sel = slice(lo, hi + 1)
    raw = estimate.s_values[sel]
    if hi - lo < 4 or np.any(raw <= 0):
        return float(w[k])
    x = np.log(w[sel])
    coef = np.polyfit(x, np.log(raw), 2, w=np.sqrt(1.0 / w[sel]))
    if coef[0] >= 0:
        return float(w[k])
    return float(math.exp(-coef[1] / (2 * coef[0])))


def spectral_shape(estimate: SpectrumEstimate, *, smooth_bins: int = 9, prominence: float = 0.1,
                   omega_max: Optional[float] = None) -> dict:
    """Qualitative features: dip at zero and count of off-zero peaks.

    Peaks are local maxima of the smoothed estimate on ``omega > 0`` whose
    prominence exceeds ``prominence`` times the largest value.  The dip holds
    when ``S(0)`` is the minimum of the raw estimate between zero and the
    main peak.
    """
    s = smoothed(estimate, smooth_bins)
    w = estimate.omegas
    if omega_max is not None:
        keep = w <= omega_max
        s, w = s[keep], w[keep]
    peaks, _ = signal.find_peaks(s, prominence=prominence * s[1:].max())
    peak_omegas = w[peaks]
    raw = estimate.s_values[: w.size]
    dip = False
    if peaks.size:
        main = peaks[np.argmax(s[peaks])]
        dip = bool(raw[0] <= raw[: main + 1].min() and raw[0] < s[main])
    return {"dip_at_zero": dip, "n_peaks": int(peaks.size),
            "peak_omegas": peak_omegas.tolist(), "s0": float(raw[0])}
