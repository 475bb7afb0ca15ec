"""
Qubit pure dephasing driven by classical noise ensembles.

A realization with integrated noise ``I(t)`` multiplies the coherence
``rho[1, 0]`` by ``exp(-2i omega0 I(t))``; averaging over the ensemble gives
the complex mean phasor ``c(t)`` and the dephasing factor ``D(t) = |c(t)|``.
Index 1 is the ``sigma_z = +1`` eigenstate.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .noise_gen import (
    InvalidParameterError,
    NoiseSpec,
    TimeGrid,
    TrajectoryEnsemble,
    derive_seed,
    sample,
)

STATE_TOL = 1e-12
CURVE_COLUMNS = ("t", "D", "stderr", "band_mean", "band_lo1", "band_hi1", "band_lo2", "band_hi2")


@dataclass(frozen=True)
class IntegratedEnsemble:
    """Running integrals ``values[i, k]`` of realization ``i`` up to ``grid.times[k]``."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != self.grid.n_out or values.shape[0] == 0:
            raise InvalidParameterError("integrated values must be a nonempty (n, n_out) matrix")
        if not np.all(np.isfinite(values)):
            raise InvalidParameterError("integrated values contain non-finite entries")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]


def integrate_paths(ensemble: TrajectoryEnsemble) -> IntegratedEnsemble:
    """Time integral of every path, zero at ``t = 0``.

    Uses the integral accumulated by the sampler when present; otherwise the
    cumulative trapezoid rule on the output grid.
    """
    if ensemble.n == 0:
        raise InvalidParameterError("ensemble is empty")
    if not np.all(np.isfinite(ensemble.values)):
        raise InvalidParameterError("ensemble contains non-finite values")
    if ensemble.integrated is not None:
        return IntegratedEnsemble(ensemble.grid, ensemble.integrated)
    values = cumulative_trapezoid(ensemble.values, dx=ensemble.grid.dt, axis=1, initial=0.0)
    return IntegratedEnsemble(ensemble.grid, values)


@dataclass(frozen=True)
class CurveBands:
    """Pointwise mean and 1-/2-sigma bands over a set of sampled curves."""

    mean: np.ndarray
    sigma: np.ndarray
    lo1: np.ndarray
    hi1: np.ndarray
    lo2: np.ndarray
    hi2: np.ndarray

    @classmethod
    def from_curves(cls, curves: np.ndarray) -> "CurveBands":
        curves = np.asarray(curves, dtype=float)
        mean = curves.mean(axis=0)
        sigma = curves.std(axis=0, ddof=1)
        clip = lambda a: np.clip(a, 0.0, 1.0)
        return cls(mean, sigma, clip(mean - sigma), clip(mean + sigma),
                   clip(mean - 2 * sigma), clip(mean + 2 * sigma))

    def contains(self, values, width: int = 2) -> np.ndarray:
        """Pointwise membership of ``values`` in the 1- or 2-sigma band."""
        lo, hi = (self.lo1, self.hi1) if width == 1 else (self.lo2, self.hi2)
        values = np.asarray(values, dtype=float)
        return (values >= lo) & (values <= hi)


@dataclass(frozen=True)
class DephasingCurve:
    """``D(t)`` on a grid with optional error information.

    ``phasor`` keeps the complex mean ``c(t)`` so that states can be evolved;
    ``exact`` is a callable ``D(t)`` for closed-form curves, which lets revival
    detection locate extrema between grid points.
    """

    grid: TimeGrid
    d_values: np.ndarray
    omega0: float = 1.0
    std_err: Optional[np.ndarray] = None
    bands: Optional[CurveBands] = None
    phasor: Optional[np.ndarray] = None
    exact: Optional[Callable] = field(default=None, compare=False, repr=False)
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        d = np.array(self.d_values, dtype=float)
        if d.shape != (self.grid.n_out,):
            raise InvalidParameterError(f"d_values must have length {self.grid.n_out}")
        if not np.all(np.isfinite(d)):
            raise InvalidParameterError("d_values contain non-finite entries")
        if np.any(d < 0) or np.any(d > 1):
            raise InvalidParameterError("d_values must lie in [0, 1]")
        d.flags.writeable = False
        object.__setattr__(self, "d_values", d)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @classmethod
    def from_function(cls, func, grid: TimeGrid, omega0: float = 1.0, meta=None) -> "DephasingCurve":
        """Noise-free curve from a closed form ``D(t)``."""
        values = np.asarray(func(grid.times), dtype=float)
        return cls(grid, values, omega0=omega0, exact=func, meta=dict(meta or {}))

    def coherence(self, k: int) -> complex:
        if self.phasor is not None:
            return complex(self.phasor[k])
        return complex(self.d_values[k])

    def to_rows(self):
        n = self.grid.n_out
        empty = [""] * n
        se = self.std_err if self.std_err is not None else empty
        b = self.bands
        cols = [self.times, self.d_values, se]
        if b is None:
            cols += [empty] * 5
        else:
            cols += [b.mean, b.lo1, b.hi1, b.lo2, b.hi2]
        for row in zip(*cols):
            yield [v if isinstance(v, str) else f"{float(v):.17g}" for v in row]

    def to_csv(self, path=None, metadata: Optional[dict] = None) -> str:
        """CSV with columns ``t, D, stderr, band_mean, band_lo1, band_hi1, band_lo2, band_hi2``.

        ``metadata`` is embedded as ``#``-prefixed JSON lines ahead of the header.
        """
        buf = io.StringIO()
        meta = {**self.meta, **(metadata or {})}
        if meta:
            for line in json.dumps(meta, sort_keys=True, indent=1).splitlines():
                buf.write(f"# {line}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CURVE_COLUMNS)
        writer.writerows(self.to_rows())
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def to_json(self, path=None, metadata: Optional[dict] = None) -> str:
        data = {"omega0": self.omega0, "grid": self.grid.to_dict(), "metadata": {**self.meta, **(metadata or {})}}
        rows = list(self.to_rows())
        for j, name in enumerate(CURVE_COLUMNS):
            data[name] = [None if r[j] == "" else float(r[j]) for r in rows]
        text = json.dumps(data, sort_keys=True) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text


def _delta_method_stderr(phasors: np.ndarray, mean: np.ndarray) -> np.ndarray:
    """Standard error of ``|mean|`` from the projection on the mean direction."""
    n = phasors.shape[0]
    if n < 2:
        return np.zeros(mean.shape)
    mod = np.abs(mean)
    direction = np.where(mod > 0, mean / np.where(mod > 0, mod, 1.0), 1.0)
    proj = (phasors * np.conj(direction)).real
    var = proj.var(axis=0, ddof=1)
    # at an exactly vanishing mean the modulus is Rayleigh-like: use half the total variance
    iso = 0.5 * (np.abs(phasors - mean) ** 2).sum(axis=0) / (n - 1)
    var = np.where(mod > 0, var, iso)
    return np.sqrt(var / n)


def _bootstrap_stderr(phasors, n_boot, seed):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    n = phasors.shape[0]
    stats = np.empty((n_boot, phasors.shape[1]))
    for b in range(n_boot):
        idx = rng.integers(0, n, size=n)
        stats[b] = np.abs(phasors[idx].mean(axis=0))
    return stats.std(axis=0, ddof=1)


def dephasing_factor(integrated: IntegratedEnsemble, omega0: float = 1.0, *,
                     error: str = "delta", n_boot: int = 200, boot_seed: int = 0,
                     meta: Optional[dict] = None) -> DephasingCurve:
    """Modulus of the ensemble mean of ``exp(-2i omega0 I(t))``.

    Parameters
    ----------
    integrated : IntegratedEnsemble
        Integrated noise of ``N`` realizations.
    omega0 : float
        Qubit frequency scale, ``> 0``.
    error : {"delta", "bootstrap"}
        Standard-error estimator for ``D``.
    n_boot, boot_seed : int
        Resample count and seed of the bootstrap estimator.
    """
    if not (math.isfinite(omega0) and omega0 > 0):
        raise InvalidParameterError(f"omega0 must be > 0, got {omega0}")
    if integrated.n == 0:
        raise InvalidParameterError("empty ensemble")
    phase = -2.0 * omega0 * integrated.values
    phasors = np.cos(phase) + 1j * np.sin(phase)
    mean = phasors.mean(axis=0)
    d = np.clip(np.abs(mean), 0.0, 1.0)
    if error == "delta":
        se = _delta_method_stderr(phasors, mean)
    elif error == "bootstrap":
        se = _bootstrap_stderr(phasors, n_boot, boot_seed)
    else:
        raise InvalidParameterError(f"unknown error estimator {error!r}")
    return DephasingCurve(integrated.grid, d, omega0=omega0, std_err=se,
                          phasor=mean, meta=dict(meta or {}))


def simulate_curve(spec: NoiseSpec, grid: TimeGrid, omega0: float, n: int, master_seed: int, *,
                   scheme: str = "exact", stream=(), threads: int = 1, error: str = "delta") -> DephasingCurve:
    """Sample, integrate and average in one call."""
    ens = sample(spec, grid, master_seed, n, scheme=scheme, stream=stream, threads=threads)
    meta = {"spec": spec.to_dict(), "grid": grid.to_dict(), "omega0": omega0,
            "n_realizations": int(n), "master_seed": int(master_seed),
            "stream": list(stream), "scheme": scheme}
    return dephasing_factor(integrate_paths(ens), omega0, error=error, meta=meta)


def curve_ensemble_stats(spec: NoiseSpec, grid: TimeGrid, omega0: float, n_curves: int,
                         n_real_per_curve: int, master_seed: int, *, scheme: str = "exact",
                         threads: int = 1) -> DephasingCurve:
    """Mean of ``n_curves`` independent ``D(t)`` curves with 1-/2-sigma bands.

    Curve ``j`` uses ``n_real_per_curve`` realizations drawn with the child
    seed ``derive_seed(master_seed, j)``.  ``std_err`` of the returned curve
    is the standard error of the pointwise mean.
    """
    if int(n_curves) != n_curves or n_curves < 2:
        raise InvalidParameterError(f"n_curves must be an integer >= 2, got {n_curves!r}")

    def one(j):
        ens = sample(spec, grid, derive_seed(master_seed, j), n_real_per_curve, scheme=scheme)
        phase = -2.0 * omega0 * integrate_paths(ens).values
        return np.abs(np.exp(1j * phase).mean(axis=0))

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            curves = np.array(list(pool.map(one, range(n_curves))))
    else:
        curves = np.array([one(j) for j in range(n_curves)])
    curves = np.clip(curves, 0.0, 1.0)
    bands = CurveBands.from_curves(curves)
    meta = {"spec": spec.to_dict(), "grid": grid.to_dict(), "omega0": omega0,
            "n_curves": int(n_curves), "n_real_per_curve": int(n_real_per_curve),
            "master_seed": int(master_seed), "scheme": scheme}
    return DephasingCurve(grid, np.clip(bands.mean, 0.0, 1.0), omega0=omega0,
                          std_err=bands.sigma / math.sqrt(n_curves), bands=bands, meta=meta)


# --------------------------------------------------------------------------
# qubit states

class QubitState:
    """2x2 density matrix in the ``sigma_z`` eigenbasis."""

    __slots__ = ("rho",)

    def __init__(self, rho):
        rho = np.array(rho, dtype=complex)
        if rho.shape != (2, 2):
            raise InvalidParameterError("a qubit state is a 2x2 matrix")
        if not np.allclose(rho, rho.conj().T, atol=STATE_TOL, rtol=0):
            raise InvalidParameterError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1) > STATE_TOL:
            raise InvalidParameterError("density matrix does not have unit trace")
        if np.linalg.eigvalsh(rho).min() < -STATE_TOL:
            raise InvalidParameterError("density matrix is not positive semidefinite")
        rho.flags.writeable = False
        self.rho = rho

    def __repr__(self):
        return f"QubitState({self.rho.tolist()!r})"

    @classmethod
    def from_ket(cls, ket) -> "QubitState":
        ket = np.asarray(ket, dtype=complex)
        ket = ket / np.linalg.norm(ket)
        return cls(np.outer(ket, ket.conj()))

    @classmethod
    def zero(cls):
        return cls.from_ket([1, 0])

    @classmethod
    def one(cls):
        return cls.from_ket([0, 1])

    @classmethod
    def plus(cls):
        return cls.from_ket([1, 1])

    @classmethod
    def minus(cls):
        return cls.from_ket([1, -1])


def evolve_state(rho0: QubitState, curve: DephasingCurve, k: int) -> QubitState:
    """State at ``curve.times[k]``: populations kept, ``rho[1, 0]`` times ``c(t_k)``."""
    if not isinstance(rho0, QubitState):
        rho0 = QubitState(rho0)
    if not 0 <= k < curve.grid.n_out:
        raise InvalidParameterError(f"grid index {k} out of range")
    c = curve.coherence(k)
    rho = rho0.rho.copy()
    rho[1, 0] = rho[1, 0] * c
    rho[0, 1] = rho[0, 1] * np.conj(c)
    return QubitState(rho)


def trace_distance(a: QubitState, b: QubitState) -> float:
    """Half the trace norm of ``a - b``."""
    diff = a.rho - b.rho
    return float(0.5 * np.abs(np.linalg.eigvalsh(diff)).sum())
