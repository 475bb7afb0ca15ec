"""
Named self-checks grouped in suites (``oracles``, ``spectra``, ``statistics``).

Each check returns a :class:`Check`; a suite passes when all its checks do.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np

from . import analytic
from .dephasing import DephasingCurve, simulate_curve
from .nm_analysis import Verdict, detect_revivals, nm_measure
from .noise_gen import NoiseSpec, TimeGrid, derive_seed, sample
from .spectral import peak_frequency, periodogram, spectral_shape

# Revival depth sum of the RTN closed form, gamma=0.1, omega0=1 on [0, 30] (40-digit arithmetic)
RTN_MEASURE_0_30 = 5.575564574711678
RTN_FIRST_ZERO = 0.8114235059009696


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    limit: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.detail or f'value={self.value:.6g} limit={self.limit:.6g}'}"


def _le(name, value, limit, detail=""):
    value = float(value)
    return Check(name, bool(value <= limit), value, float(limit),
                 detail or f"{value:.3g} <= {limit:.3g}")


def _ge(name, value, limit, detail=""):
    value = float(value)
    return Check(name, bool(value >= limit), value, float(limit),
                 detail or f"{value:.3g} >= {limit:.3g}")


# --------------------------------------------------------------------------
# oracles

def check_rtn_continuity(omega0: float = 1.0) -> Check:
    """Jump of d_rtn across gamma = 2 omega0 and across its series cut-over."""
    t = np.linspace(0.0, 40.0, 4001)
    g0 = 2 * omega0
    base = analytic.d_rtn(t, g0, omega0)
    worst = 0.0
    for eps in (1e-12, 1e-10, 1e-9):
        for sign in (-1, 1):
            worst = max(worst, np.max(np.abs(analytic.d_rtn(t, g0 * (1 + sign * eps), omega0) - base)))
    # straddle the |nu^2 t^2| = 1e-3 switch at t = 5
    ts = 5.0
    for sign in (-1, 1):
        q_cut = sign * 1e-3 / ts ** 2
        gam = math.sqrt(g0 ** 2 + q_cut)
        lo = analytic.d_rtn(ts, math.sqrt(g0 ** 2 + q_cut * (1 - 1e-9)), omega0)
        hi = analytic.d_rtn(ts, math.sqrt(g0 ** 2 + q_cut * (1 + 1e-9)), omega0)
        worst = max(worst, abs(hi - lo), abs(analytic.d_rtn(ts, gam, omega0) - lo))
    return _le("d_rtn continuity at gamma=2*omega0", worst, 1e-8)


def check_y_continuity() -> Check:
    """Jump of d_y across gamma = kappa and across its series cut-over."""
    t = np.linspace(0.0, 40.0, 4001)
    kappa, sigma = 1.0, 0.63
    base = analytic.d_y(t, kappa, sigma, kappa)
    worst = 0.0
    for eps in (1e-12, 1e-10, 1e-9):
        for sign in (-1, 1):
            worst = max(worst, np.max(np.abs(analytic.d_y(t, kappa * (1 + sign * eps), sigma, kappa) - base)))
    cut = analytic.DEGENERATE_RTOL
    for sign in (-1, 1):
        a = analytic.d_y(t, kappa * (1 + sign * cut * (1 - 1e-9)), sigma, kappa)
        b = analytic.d_y(t, kappa * (1 + sign * cut * (1 + 1e-9)), sigma, kappa)
        worst = max(worst, np.max(np.abs(a - b)))
    return _le("d_y continuity at gamma=kappa", worst, 1e-8)


def check_zero_time() -> Check:
    vals = [analytic.d_ou(0.0, 0.1, 0.63), analytic.d_rtn(0.0, 0.1), analytic.d_y(0.0, 0.1, 0.63, 1.0)]
    bad = sum(v != 1.0 for v in vals)
    return Check("D(0) = 1 for OU, RTN, Y", bad == 0, float(bad), 0.0,
                 f"values {vals}")


def check_rtn_static_limit() -> Check:
    t = np.linspace(0.0, 40.0, 40001)
    err = max(np.max(np.abs(analytic.d_rtn(t, g) - np.abs(np.cos(2 * t)))) for g in (0.0, 1e-13))
    return _le("d_rtn gamma->0 equals |cos(2 omega0 t)|", err, 1e-10)


def check_rtn_measure() -> Check:
    grid = TimeGrid(30.0, 601)
    curve = DephasingCurve.from_function(lambda t: analytic.d_rtn(t, 0.1), grid)
    err = abs(nm_measure(curve) - RTN_MEASURE_0_30)
    return _le("nm_measure of d_rtn on [0,30] vs high-precision value", err, 1e-9)


def check_rtn_first_onset() -> Check:
    grid = TimeGrid(40.0, 201)
    curve = DephasingCurve.from_function(lambda t: analytic.d_rtn(t, 0.1), grid)
    onset = detect_revivals(curve).first_onset
    err = abs(onset - RTN_FIRST_ZERO) if onset is not None else math.inf
    return _le("first d_rtn revival onset at first zero", err, 1e-9)


def check_ou_monotone() -> Check:
    grid = TimeGrid(40.0, 401)
    found = 0
    for gamma, sigma in ((0.1, 0.63), (1.0, 1.0), (3.0, 0.2)):
        curve = DephasingCurve.from_function(lambda t: analytic.d_ou(t, gamma, sigma), grid)
        found += detect_revivals(curve).verdict is Verdict.NON_MARKOVIAN
    return Check("analytic d_ou is Markovian", found == 0, float(found), 0.0,
                 f"{found} of 3 parameter sets flagged")


def check_y_stationary_corr() -> Check:
    tau = np.linspace(0.0, 10.0, 51)
    a = analytic.corr_y(200.0 + tau, 200.0, 0.1, 1.0, 0.63)
    b = analytic.corr_y_stationary(tau, 0.1, 1.0, 0.63)
    return _le("corr_y reaches its stationary form", np.max(np.abs(a - b)), 1e-10)


# --------------------------------------------------------------------------
# spectra

def _z_spectrum(mu, seed, n_paths=1000):
    spec = NoiseSpec.filtered_rtn(0.5, mu)
    ens = sample(spec, TimeGrid(400.0, 4001), seed, n_paths)
    return periodogram(ens, transient_cut=40.0)


def check_y_spectrum(seed: int = 0, n_paths: int = 2000) -> List[Check]:
    gamma, kappa, sigma = 0.1, 1.0, 0.63
    spec = NoiseSpec.filtered_ou(gamma, sigma, kappa)
    ens = sample(spec, TimeGrid(400.0, 4001), seed, n_paths)
    est = periodogram(ens, transient_cut=40.0)
    band = est.band(0.05, 5.0)
    ref = analytic.spectrum_y(est.omegas[band], gamma, kappa, sigma)
    rel = np.max(np.abs(est.s_values[band] / ref - 1))
    peak = peak_frequency(est)
    var = analytic.corr_y_stationary(0.0, gamma, kappa, sigma)
    return [
        _le("FilteredOU periodogram vs closed form on [0.05, 5]", rel, 0.15,
            f"max relative error {rel:.3f} <= 0.15"),
        _le("FilteredOU peak at sqrt(gamma*kappa)", abs(peak - math.sqrt(gamma * kappa)), est.bin_width,
            f"peak {peak:.4f} vs {math.sqrt(gamma * kappa):.4f}, bin {est.bin_width:.4f}"),
        _le("FilteredOU total power vs stationary variance",
            abs(est.total_power() / var - 1), 0.05),
    ]


def check_z_spectrum(seed: int = 0) -> List[Check]:
    out = []
    for j, mu in enumerate((0.5, 1.0)):
        est = _z_spectrum(mu, derive_seed(seed, 10 + j))
        shape = spectral_shape(est, omega_max=5.0)
        ok = shape["dip_at_zero"] and shape["n_peaks"] == 1
        out.append(Check(f"FilteredRTN mu={mu} spectrum: dip at zero, one peak", bool(ok),
                         float(shape["n_peaks"]), 1.0,
                         f"dip={shape['dip_at_zero']} peaks={[round(w, 3) for w in shape['peak_omegas']]}"))
    return out


def check_ou_lorentzian(seed: int = 0) -> Check:
    ens = sample(NoiseSpec.ou(0.5, 1.0), TimeGrid(400.0, 4001), derive_seed(seed, 20), 500)
    shape = spectral_shape(periodogram(ens, transient_cut=40.0), omega_max=5.0)
    return Check("OU spectrum has no off-zero peak", shape["n_peaks"] == 0 and not shape["dip_at_zero"],
                 float(shape["n_peaks"]), 0.0, f"peaks={shape['n_peaks']} dip={shape['dip_at_zero']}")


# --------------------------------------------------------------------------
# statistics

FIG3_GRID = TimeGrid(40.0, 201)


def verdict_rate(spec: NoiseSpec, seed: int, n_curves: int = 100, n: int = 10_000,
                 significance: float = 3.0, grid: TimeGrid = FIG3_GRID, omega0: float = 1.0,
                 threads: int = 1) -> float:
    """Fraction of independent Monte Carlo curves classified NonMarkovian."""
    hits = 0
    for j in range(n_curves):
        curve = simulate_curve(spec, grid, omega0, n, derive_seed(seed, j), threads=threads)
        hits += detect_revivals(curve, significance).verdict is Verdict.NON_MARKOVIAN
    return hits / n_curves


def agreement_fraction(curve: DephasingCurve, reference: np.ndarray, n_se: float = 4.0) -> float:
    """Share of grid points with ``|D - reference| <= n_se * std_err``.

    ``t = 0`` (where both are exactly one and the error vanishes) counts as agreeing.
    """
    diff = np.abs(curve.d_values - reference)
    ok = diff <= n_se * curve.std_err + 1e-12
    return float(np.mean(ok))


def check_ou_false_positives(seed: int = 0) -> Check:
    rate = verdict_rate(NoiseSpec.ou(0.1, 0.63), derive_seed(seed, 30))
    return _le("OU false NonMarkovian rate (100 curves, N=1e4)", rate, 0.05)


def check_rtn_true_positives(seed: int = 0) -> Check:
    rate = verdict_rate(NoiseSpec.rtn(0.1), derive_seed(seed, 31))
    return _ge("RTN NonMarkovian detection rate (100 curves, N=1e4)", rate, 0.95)


def check_mc_agreement(seed: int = 0, n: int = 20_000) -> List[Check]:
    out = []
    for j, spec in enumerate((NoiseSpec.ou(0.1, 0.63), NoiseSpec.rtn(0.1),
                              NoiseSpec.filtered_ou(0.1, 0.63, 1.0))):
        curve = simulate_curve(spec, FIG3_GRID, 1.0, n, derive_seed(seed, 40 + j))
        ref = analytic.dephasing_for(spec)(FIG3_GRID.times)
        frac = agreement_fraction(curve, ref)
        out.append(_ge(f"{spec.kind.value} Monte Carlo within 4 stderr of closed form", frac, 0.99,
                       f"{100 * frac:.1f}% of points >= 99%"))
    return out


SUITES: Dict[str, Callable[[int], List[Check]]] = {
    "oracles": lambda seed: [check_rtn_continuity(), check_y_continuity(), check_zero_time(),
                             check_rtn_static_limit(), check_rtn_measure(), check_rtn_first_onset(),
                             check_ou_monotone(), check_y_stationary_corr()],
    "spectra": lambda seed: [*check_y_spectrum(seed), *check_z_spectrum(seed), check_ou_lorentzian(seed)],
    "statistics": lambda seed: [*check_mc_agreement(seed), check_ou_false_positives(seed),
                                check_rtn_true_positives(seed)],
}


def run_suite(name: str, seed: int = 0) -> List[Check]:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; expected one of {sorted(SUITES)}")
    return SUITES[name](seed)
