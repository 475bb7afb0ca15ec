"""End-to-end acceptance criteria, each run at its stated size and tolerance."""
import math
import time

import numpy as np
import pytest
from scipy import optimize

from qdephase import analytic
from qdephase.cli import main
from qdephase.dephasing import QubitState, curve_ensemble_stats, evolve_state, simulate_curve, trace_distance
from qdephase.nm_analysis import Verdict, detect_revivals
from qdephase.noise_gen import NoiseSpec, TimeGrid, derive_seed, sample
from qdephase.spectral import peak_frequency, periodogram, spectral_shape
from qdephase.validation import verdict_rate

pytestmark = pytest.mark.acceptance

GRID = TimeGrid(40.0, 201)
N = 100_000


def _within(curve, ref, k=4.0):
    return float(np.mean(np.abs(curve.d_values - ref) <= k * curve.std_err + 1e-12))


def test_1_ou_dephasing(criterion):
    start = time.perf_counter()
    curve = simulate_curve(NoiseSpec.ou(0.1, 0.63), GRID, 1.0, N, 101)
    verdict = detect_revivals(curve).verdict
    elapsed = time.perf_counter() - start
    frac = _within(curve, analytic.d_ou(GRID.times, 0.1, 0.63))
    ok = frac >= 0.99 and verdict is Verdict.MARKOVIAN and elapsed < 60
    criterion("1 (OU, N=1e5)", ok,
              f"{100 * frac:.1f}% within 4 se (>= 99%), verdict {verdict.value}, {elapsed:.1f} s (< 60 s)")


def test_2_rtn_dephasing(criterion):
    gamma = 0.1
    start = time.perf_counter()
    curve = simulate_curve(NoiseSpec.rtn(gamma), GRID, 1.0, N, 102)
    report = detect_revivals(curve)
    elapsed = time.perf_counter() - start
    frac = _within(curve, analytic.d_rtn(GRID.times, gamma))
    nu = math.sqrt(4 - gamma ** 2)
    f = lambda t: math.cos(nu * t) + gamma / nu * math.sin(nu * t)
    t_min = optimize.brentq(f, 0.1, math.pi / nu)
    onset = report.first_onset
    onset_ok = onset is not None and abs(onset - t_min) <= GRID.dt
    ok = frac >= 0.99 and len(report.revivals) >= 3 and onset_ok and elapsed < 60
    criterion("2 (RTN, N=1e5)", ok,
              f"{100 * frac:.1f}% within 4 se, {len(report.revivals)} revivals (>= 3), "
              f"onset {onset} vs root {t_min:.4f} (step {GRID.dt}), {elapsed:.1f} s (< 60 s)")


def test_3_filtered_ou(criterion):
    curve = simulate_curve(NoiseSpec.filtered_ou(0.1, 0.63, 1.0), GRID, 1.0, N, 103)
    verdict = detect_revivals(curve).verdict
    frac = _within(curve, analytic.d_y(GRID.times, 0.1, 0.63, 1.0))
    criterion("3 (Y, N=1e5)", frac >= 0.99 and verdict is Verdict.MARKOVIAN,
              f"{100 * frac:.1f}% within 4 se (>= 99%), verdict {verdict.value}")


def _z_verdicts(gamma, omega0, seeds, n=10_000):
    pairs = []
    for seed in seeds:
        pair = tuple(detect_revivals(simulate_curve(NoiseSpec.filtered_rtn(gamma, mu), GRID, omega0, n,
                                                    derive_seed(seed, j)), 3.0).verdict
                     for j, mu in enumerate((1.0, 0.5)))
        pairs.append(pair)
    return pairs


def test_4_filtered_rtn_verdicts(criterion):
    pairs = _z_verdicts(0.1, 1.0, range(10))
    want = (Verdict.MARKOVIAN, Verdict.NON_MARKOVIAN)
    hits = sum(p == want for p in pairs)
    criterion("4 (Z, gamma=0.1, omega0=1, N=1e4, 10 seeds)", hits == 10,
              f"(mu=1 Markovian, mu=0.5 NonMarkovian) in {hits}/10 seeds; "
              f"mu=0.5 verdicts: {[p[1].value for p in pairs]}")


def test_4_supplement_figure_regime():
    """Verdicts in the regime of the fig4b/fig4c presets (gamma=0.2, omega0=0.5).

    mu=0.5 has a revival of about 0.06 and is flagged in every seed.  mu=1 is
    truly monotone to within 0.005, but its long plateau gives the min-to-max
    scan a false-positive rate near 5% per curve, so one or two flagged seeds
    out of ten are expected noise.
    """
    pairs = _z_verdicts(0.2, 0.5, range(10))
    assert all(p[1] is Verdict.NON_MARKOVIAN for p in pairs)
    assert sum(p[0] is Verdict.MARKOVIAN for p in pairs) >= 8


def test_5_spectral_calibration(criterion):
    gamma, kappa, sigma = 0.1, 1.0, 0.63
    ens = sample(NoiseSpec.filtered_ou(gamma, sigma, kappa), TimeGrid(400.0, 4001), 105, 2000)
    est = periodogram(ens, transient_cut=40.0)
    band = est.band(0.05, 5.0)
    rel = float(np.max(np.abs(est.s_values[band] / analytic.spectrum_y(est.omegas[band], gamma, kappa, sigma) - 1)))
    peak = peak_frequency(est)
    z = periodogram(sample(NoiseSpec.filtered_rtn(0.5, 0.5), TimeGrid(400.0, 4001), 205, 1000), 40.0)
    shape = spectral_shape(z, omega_max=5.0)
    ok = rel <= 0.15 and abs(peak - math.sqrt(gamma * kappa)) <= est.bin_width \
        and shape["dip_at_zero"] and shape["n_peaks"] == 1
    criterion("5 (spectra)", ok,
              f"max rel err {rel:.3f} (<= 0.15); peak {peak:.4f} vs {math.sqrt(gamma * kappa):.4f} "
              f"(bin {est.bin_width:.4f}); Z mu=0.5 dip={shape['dip_at_zero']} peaks={shape['n_peaks']}")


def test_6_band_protocol(criterion):
    stats = curve_ensemble_stats(NoiseSpec.ou(0.1, 0.63), GRID, 1.0, 100, 100, 106)
    cover = float(np.mean(stats.bands.contains(analytic.d_ou(GRID.times, 0.1, 0.63), 2)))
    decay = GRID.times <= 5.0
    cover_decay = float(np.mean(stats.bands.contains(analytic.d_ou(GRID.times, 0.1, 0.63), 2)[decay]))
    criterion("6 (100x100 OU bands)", cover >= 0.90,
              f"closed form inside 2-sigma band at {100 * cover:.1f}% of points (>= 90%); "
              f"{100 * cover_decay:.0f}% for t <= 5, before D reaches the finite-N floor")


def test_7_oracle_limits(criterion):
    t = np.linspace(0.0, 40.0, 40001)
    rtn_jump = max(float(np.max(np.abs(analytic.d_rtn(t, 2 * (1 + s * e)) - analytic.d_rtn(t, 2.0))))
                   for e in (1e-12, 1e-10) for s in (-1, 1))
    y_jump = max(float(np.max(np.abs(analytic.d_y(t, 1 + s * e, 0.63, 1.0) - analytic.d_y(t, 1.0, 0.63, 1.0))))
                 for e in (1e-12, 1e-10) for s in (-1, 1))
    zeros = (analytic.d_ou(0.0, 0.1, 0.63), analytic.d_rtn(0.0, 0.1), analytic.d_y(0.0, 0.1, 0.63, 1.0))
    static = float(np.max(np.abs(analytic.d_rtn(t, 0.0) - np.abs(np.cos(2 * t)))))
    ok = rtn_jump <= 1e-8 and y_jump <= 1e-8 and zeros == (1.0, 1.0, 1.0) and static <= 1e-10
    criterion("7 (oracle limits)", ok,
              f"d_rtn jump {rtn_jump:.1e}, d_y jump {y_jump:.1e} (<= 1e-8); D(0) = {zeros}; "
              f"static RTN error {static:.1e} (<= 1e-10)")


def test_8_maximizing_pair(criterion):
    specs = [NoiseSpec.ou(0.1, 0.63), NoiseSpec.rtn(0.1), NoiseSpec.filtered_ou(0.1, 0.63, 1.0),
             NoiseSpec.filtered_rtn(0.5, 0.5)]
    worst = 0.0
    for j, spec in enumerate(specs):
        curve = simulate_curve(spec, GRID, 1.0, 1000, 108 + j)
        for k in range(GRID.n_out):
            d = trace_distance(evolve_state(QubitState.plus(), curve, k), evolve_state(QubitState.minus(), curve, k))
            worst = max(worst, abs(d - curve.d_values[k]))
    criterion("8 (maximizing pair, 4 kinds, N=1e3)", worst <= 1e-12, f"max deviation {worst:.1e} (<= 1e-12)")


def test_9_error_rates(criterion):
    fp = verdict_rate(NoiseSpec.ou(0.1, 0.63), 109)
    tp = verdict_rate(NoiseSpec.rtn(0.1), 209)
    criterion("9 (100 curves, N=1e4, significance 3)", fp <= 0.05 and tp >= 0.95,
              f"OU false-positive rate {fp:.2f} (<= 0.05), RTN detection rate {tp:.2f} (>= 0.95)")


def test_10_determinism(criterion, tmp_path, capsys):
    same = []
    for name, files in (("fig3a", ["fig3a_curve.csv", "fig3a_analytic.csv"]),
                        ("fig1", ["fig1_mu0.5_spectrum.csv", "fig1_mu1_spectrum.csv"])):
        for threads in (1, 4):
            assert main(["figure", name, "--seed", "110", "--threads", str(threads),
                         "--out", str(tmp_path / f"{name}-{threads}")]) == 0
        same += [(tmp_path / f"{name}-1" / f).read_bytes() == (tmp_path / f"{name}-4" / f).read_bytes()
                 for f in files]
    capsys.readouterr()
    criterion("10 (figure reruns, --threads 1 vs 4)", all(same),
              f"{sum(same)}/{len(same)} CSV files byte-identical")
