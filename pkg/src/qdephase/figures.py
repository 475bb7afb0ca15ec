"""
Preconfigured reproductions of the dephasing and spectrum figures.

Dephasing figures (``fig3a``, ``fig3b``, ``fig4a``, ``fig4b``, ``fig4c``)
produce a Monte Carlo curve on ``t in [0, 40]`` (201 points), the closed form
where one exists, 1-/2-sigma bands from 100 curves of 100 realizations, a
revival report and an SVG plot.  ``fig1`` produces filtered-RTN spectra for
``mu = 0.5`` and ``mu = 1``.

Every output is a pure function of the figure name, the seed and the sizes;
the thread count only changes the schedule.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .analytic import dephasing_for
from .dephasing import curve_ensemble_stats, simulate_curve
from .nm_analysis import DEFAULT_SIGNIFICANCE, detect_revivals
from .noise_gen import NoiseSpec, TimeGrid, derive_seed, sample
from .spectral import periodogram, smoothed, spectral_shape
from .svg import LinePlot

DEPHASING_GRID = TimeGrid(40.0, 201)
SPECTRUM_GRID = TimeGrid(400.0, 4001)
SPECTRUM_CUT = 40.0
DEFAULT_N = 100_000
DEFAULT_SPECTRUM_PATHS = 1000
BAND_CURVES = 100
BAND_REALIZATIONS = 100


@dataclass(frozen=True)
class DephasingPreset:
    spec: NoiseSpec
    omega0: float
    title: str


PRESETS = {
    "fig3a": DephasingPreset(NoiseSpec.ou(0.1, 0.63), 1.0, "OU noise, gamma=0.1, sigma=0.63"),
    "fig3b": DephasingPreset(NoiseSpec.rtn(0.1), 1.0, "RTN, gamma=0.1"),
    "fig4a": DephasingPreset(NoiseSpec.filtered_ou(0.1, 0.63, 1.0), 1.0,
                             "Filtered OU (Y), gamma=0.1, sigma=0.63, kappa=1"),
    # Z panels: RTN rate 0.2 and omega0 = 0.5 put mu = 1 below and mu = 0.5
    # above the revival onset (see the decisions notes)
    "fig4b": DephasingPreset(NoiseSpec.filtered_rtn(0.2, 1.0), 0.5, "Filtered RTN (Z), gamma=0.2, mu=1"),
    "fig4c": DephasingPreset(NoiseSpec.filtered_rtn(0.2, 0.5), 0.5, "Filtered RTN (Z), gamma=0.2, mu=0.5"),
}
SPECTRUM_MUS = (0.5, 1.0)
SPECTRUM_GAMMA = 0.5
FIGURES = tuple(PRESETS) + ("fig1",)


def _write(path: Path, text: str) -> str:
    path.write_text(text)
    return str(path)


def dephasing_figure(name: str, seed: int, out_dir, *, n: int = DEFAULT_N, fmt: str = "csv",
                     significance: float = DEFAULT_SIGNIFICANCE, threads: int = 1,
                     band_curves: int = BAND_CURVES, band_realizations: int = BAND_REALIZATIONS) -> dict:
    """Run one dephasing preset and write its artifacts to ``out_dir``.

    Returns
    -------
    dict
        Summary with the verdict, measure, band coverage and file names.
    """
    preset = PRESETS[name]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec, omega0, grid = preset.spec, preset.omega0, DEPHASING_GRID
    config = {
        "figure": name, "seed": int(seed), "noise": spec.to_dict(), "grid": grid.to_dict(),
        "omega0": omega0, "n_realizations": int(n), "n_curves": int(band_curves),
        "n_real_per_curve": int(band_realizations), "significance": float(significance),
        "scheme": "exact", "curve_stream": [0], "band_seed_key": [1], "version": __version__,
    }

    curve = simulate_curve(spec, grid, omega0, n, seed, stream=(0,), threads=threads)
    stats = curve_ensemble_stats(spec, grid, omega0, band_curves, band_realizations,
                                 derive_seed(seed, 1), threads=threads)
    curve = replace(curve, bands=stats.bands)
    report = detect_revivals(curve, significance)

    exact = dephasing_for(spec, omega0)
    summary = {"figure": name, "verdict": report.verdict.value, "nm_measure": report.nm_measure,
               "n_revivals": len(report.revivals)}
    files = []
    files.append(_write(out / f"{name}_curve.{fmt}",
                        curve.to_csv(metadata={"config": config}) if fmt == "csv"
                        else curve.to_json(metadata={"config": config})))
    if exact is not None:
        d_exact = np.asarray(exact(grid.times))
        summary["band2_coverage"] = float(np.mean(stats.bands.contains(d_exact, 2)))
        summary["within_4se"] = float(np.mean(np.abs(curve.d_values - d_exact) <= 4 * curve.std_err + 1e-12))
        lines = [f"# {line}" for line in json.dumps({"config": config, "form": "closed"},
                                                    sort_keys=True, indent=1).splitlines()]
        lines.append("t,D")
        lines += [f"{t:.17g},{d:.17g}" for t, d in zip(grid.times, d_exact)]
        files.append(_write(out / f"{name}_analytic.csv", "\n".join(lines) + "\n"))
    files.append(_write(out / f"{name}_report.json",
                        report.to_json(metadata={"config": config, "summary": summary})))

    plot = LinePlot(title=preset.title, xlabel="t", ylabel="D(t)", ylim=(0.0, 1.05))
    b = stats.bands
    plot.add_band(grid.times, b.lo2, b.hi2, color="#2ca02c", opacity=0.15, label="2 sigma band")
    plot.add_band(grid.times, b.lo1, b.hi1, color="#2ca02c", opacity=0.3, label="1 sigma band")
    if exact is not None:
        plot.add(grid.times, d_exact, "closed form", color="#d62728")
    plot.add(grid.times, b.mean, f"mean of {band_curves} curves", color="#2ca02c", dash="6,4")
    plot.add(grid.times, curve.d_values, f"Monte Carlo N={n}", color="#1f77b4")
    files.append(str(out / f"{name}.svg"))
    plot.save(files[-1])
    summary["files"] = files
    return summary


def spectrum_figure(seed: int, out_dir, *, n: int = DEFAULT_SPECTRUM_PATHS, fmt: str = "csv",
                    threads: int = 1) -> dict:
    """Filtered-RTN spectra for ``mu = 0.5`` and ``mu = 1`` with shape diagnostics."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    plot = LinePlot(title=f"Filtered RTN spectra, gamma={SPECTRUM_GAMMA}", xlabel="omega",
                    ylabel="S(omega)")
    colors = {0.5: "#d62728", 1.0: "#1f77b4"}
    summary = {"figure": "fig1", "shapes": {}}
    files = []
    for j, mu in enumerate(SPECTRUM_MUS):
        spec = NoiseSpec.filtered_rtn(SPECTRUM_GAMMA, mu)
        config = {"figure": "fig1", "seed": int(seed), "noise": spec.to_dict(),
                  "grid": SPECTRUM_GRID.to_dict(), "n_realizations": int(n), "stream": [j],
                  "transient_cut": SPECTRUM_CUT, "window": "rectangular", "scheme": "exact",
                  "version": __version__}
        ens = sample(spec, SPECTRUM_GRID, seed, n, stream=(j,), threads=threads)
        est = periodogram(ens, transient_cut=SPECTRUM_CUT, threads=threads)
        shape = spectral_shape(est, omega_max=5.0)
        summary["shapes"][f"mu={mu:g}"] = shape
        tag = f"fig1_mu{mu:g}_spectrum.{fmt}"
        text = est.to_csv(metadata={"config": config}) if fmt == "csv" else est.to_json(metadata={"config": config})
        files.append(_write(out / tag, text))
        keep = est.omegas <= 5.0
        plot.add(est.omegas[keep], smoothed(est, 9)[keep], f"mu={mu:g}", color=colors[mu])
    files.append(_write(out / "fig1_report.json",
                        json.dumps({"seed": int(seed), "summary": summary}, indent=2, sort_keys=True) + "\n"))
    files.append(str(out / "fig1.svg"))
    plot.save(files[-1])
    summary["files"] = files
    return summary


def run_figure(name: str, seed: int, out_dir, *, n: Optional[int] = None, fmt: str = "csv",
               significance: float = DEFAULT_SIGNIFICANCE, threads: int = 1) -> dict:
    if name not in FIGURES:
        raise KeyError(f"unknown figure {name!r}; valid names: {', '.join(FIGURES)}")
    if name == "fig1":
        return spectrum_figure(seed, out_dir, n=n or DEFAULT_SPECTRUM_PATHS, fmt=fmt, threads=threads)
    return dephasing_figure(name, seed, out_dir, n=n or DEFAULT_N, fmt=fmt,
                            significance=significance, threads=threads)
