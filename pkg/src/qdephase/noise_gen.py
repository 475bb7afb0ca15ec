"""
Seeded generation of the four classical noise processes.

Processes
---------
OU
    dX = -gamma X dt + sigma dW, X(0) = 0.
RTN
    X = +-1, switching at Poisson rate gamma, X(0) = +-1 equiprobable.
FilteredOU (Y)
    dY = -kappa Y dt + dX_OU, Y(0) = 0.
FilteredRTN (Z)
    dZ = -mu Z dt + dX_RTN, Z(0) = 0.

Every sampler also returns the time integral of the path on the output grid,
computed inside the sampling loop so that no accuracy is lost to the coarse
output step.  Two schemes exist:

``"exact"`` (default)
    OU and FilteredOU are advanced with the exact Gaussian transition of the
    linear system (process, filter, running integral).  RTN and FilteredRTN are
    event driven: switch times are exponential waiting times and the filter and
    integral are propagated in closed form between switches.  Results do not
    depend on ``substeps``.
``"euler"``
    The driving process is sampled on the substep grid and the filter is
    advanced with ``Y <- Y exp(-kappa h) + dX``; integrals use the cumulative
    trapezoid rule on the substep grid.  Kept for convergence studies.

Reproducibility
---------------
Realizations are grouped in fixed blocks of ``BLOCK_SIZE``.  Block ``b`` draws
from a Philox stream keyed by ``(master_seed, *stream, b)``, so realization
``i`` is the same regardless of ``n``, of the worker count and of scheduling.
"""
from __future__ import annotations

import enum
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import expm

BLOCK_SIZE = 256
# blocks evolved together in one vectorized pass
_CHUNK_BLOCKS = 16
_SUBSTEP_TARGET = 0.05
_SUBSTEP_WARN = 0.1

SCHEMES = ("exact", "euler")


class InvalidParameterError(ValueError):
    """Raised when a noise specification or grid is not admissible."""


class NoiseKind(str, enum.Enum):
    OU = "OU"
    RTN = "RTN"
    FILTERED_OU = "FilteredOU"
    FILTERED_RTN = "FilteredRTN"


_REQUIRED = {
    NoiseKind.OU: {"gamma", "sigma"},
    NoiseKind.RTN: {"gamma"},
    NoiseKind.FILTERED_OU: {"gamma", "sigma", "kappa"},
    NoiseKind.FILTERED_RTN: {"gamma", "mu"},
}


@dataclass(frozen=True)
class NoiseSpec:
    """Tagged description of one of the four processes.

    ``gamma`` is the OU friction or the RTN switching rate, ``sigma`` the OU
    diffusion constant, ``kappa`` and ``mu`` the filter rates of the filtered
    processes.  Fields that do not belong to ``kind`` must be ``None``.

    ``sigma = 0`` and, for the RTN kinds, ``gamma = 0`` are accepted as
    degenerate noiseless limits.
    """

    kind: NoiseKind
    gamma: float
    sigma: Optional[float] = None
    kappa: Optional[float] = None
    mu: Optional[float] = None

    def __post_init__(self):
        try:
            kind = NoiseKind(self.kind)
        except ValueError:
            raise InvalidParameterError(
                f"unknown noise kind {self.kind!r}; expected one of "
                f"{[k.value for k in NoiseKind]}"
            ) from None
        object.__setattr__(self, "kind", kind)
        present = {
            name for name in ("gamma", "sigma", "kappa", "mu")
            if getattr(self, name) is not None
        }
        required = _REQUIRED[kind]
        if present != required:
            missing = sorted(required - present)
            extra = sorted(present - required)
            raise InvalidParameterError(
                f"{kind.value} noise needs exactly {sorted(required)}"
                + (f"; missing {missing}" if missing else "")
                + (f"; unexpected {extra}" if extra else "")
            )
        for name in present:
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float, np.floating, np.integer)):
                raise InvalidParameterError(f"{name} must be a real number, got {value!r}")
            value = float(value)
            if not math.isfinite(value):
                raise InvalidParameterError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)

        rtn_like = kind in (NoiseKind.RTN, NoiseKind.FILTERED_RTN)
        if self.gamma < 0 or (self.gamma == 0 and not rtn_like):
            raise InvalidParameterError(f"gamma must be > 0, got {self.gamma}")
        if self.sigma is not None and self.sigma < 0:
            raise InvalidParameterError(f"sigma must be >= 0, got {self.sigma}")
        if self.kappa is not None and self.kappa <= 0:
            raise InvalidParameterError(f"kappa must be > 0, got {self.kappa}")
        if self.mu is not None and self.mu <= 0:
            raise InvalidParameterError(f"mu must be > 0, got {self.mu}")

    @classmethod
    def ou(cls, gamma: float, sigma: float) -> "NoiseSpec":
        return cls(NoiseKind.OU, gamma, sigma=sigma)

    @classmethod
    def rtn(cls, gamma: float) -> "NoiseSpec":
        return cls(NoiseKind.RTN, gamma)

    @classmethod
    def filtered_ou(cls, gamma: float, sigma: float, kappa: float) -> "NoiseSpec":
        return cls(NoiseKind.FILTERED_OU, gamma, sigma=sigma, kappa=kappa)

    @classmethod
    def filtered_rtn(cls, gamma: float, mu: float) -> "NoiseSpec":
        return cls(NoiseKind.FILTERED_RTN, gamma, mu=mu)

    @property
    def max_rate(self) -> float:
        rates = [self.gamma] + [r for r in (self.kappa, self.mu) if r is not None]
        return max(rates)

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value, "gamma": self.gamma}
        for name in ("sigma", "kappa", "mu"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseSpec":
        return cls(
            data["kind"], data["gamma"], sigma=data.get("sigma"),
            kappa=data.get("kappa"), mu=data.get("mu"),
        )


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on ``[0, t_max]`` with ``n_out`` stored points.

    ``substeps`` integration steps of length ``h = dt / substeps`` are taken
    per output step (only the ``"euler"`` scheme uses them).
    """

    t_max: float
    n_out: int
    substeps: int = 1

    def __post_init__(self):
        if not (isinstance(self.t_max, (int, float)) and math.isfinite(self.t_max) and self.t_max > 0):
            raise InvalidParameterError(f"t_max must be a finite positive number, got {self.t_max!r}")
        if int(self.n_out) != self.n_out or self.n_out < 2:
            raise InvalidParameterError(f"n_out must be an integer >= 2, got {self.n_out!r}")
        if int(self.substeps) != self.substeps or self.substeps < 1:
            raise InvalidParameterError(f"substeps must be an integer >= 1, got {self.substeps!r}")
        object.__setattr__(self, "t_max", float(self.t_max))
        object.__setattr__(self, "n_out", int(self.n_out))
        object.__setattr__(self, "substeps", int(self.substeps))

    @classmethod
    def for_spec(cls, spec: NoiseSpec, t_max: float, n_out: int) -> "TimeGrid":
        """Grid whose substep satisfies ``h <= 0.05 / max rate``."""
        dt = t_max / (n_out - 1)
        rate = spec.max_rate
        substeps = max(1, math.ceil(dt * rate / _SUBSTEP_TARGET - 1e-12)) if rate > 0 else 1
        return cls(t_max, n_out, substeps)

    @property
    def dt(self) -> float:
        return self.t_max / (self.n_out - 1)

    @property
    def h(self) -> float:
        return self.dt / self.substeps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.n_out)

    @property
    def sub_times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, (self.n_out - 1) * self.substeps + 1)

    def to_dict(self) -> dict:
        return {"t_max": self.t_max, "n_out": self.n_out, "substeps": self.substeps}

    @classmethod
    def from_dict(cls, data: dict) -> "TimeGrid":
        return cls(data["t_max"], data["n_out"], data.get("substeps", 1))


def _readonly(a: Optional[np.ndarray]) -> Optional[np.ndarray]:
    if a is not None:
        a.flags.writeable = False
    return a


@dataclass(frozen=True)
class TrajectoryEnsemble:
    """``values[i, k]`` is realization ``i`` at ``grid.times[k]``.

    ``integrated`` holds the running time integral of each path on the same
    grid when the ensemble came out of a sampler.  Arrays are read-only.
    """

    spec: Optional[NoiseSpec]
    grid: TimeGrid
    master_seed: Optional[int]
    values: np.ndarray
    integrated: Optional[np.ndarray] = None
    scheme: str = "exact"
    stream: tuple = field(default=())

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != self.grid.n_out:
            raise InvalidParameterError(
                f"values must have shape (n, {self.grid.n_out}), got {values.shape}"
            )
        object.__setattr__(self, "values", _readonly(values))
        if self.integrated is not None:
            integrated = np.array(self.integrated, dtype=float)
            if integrated.shape != values.shape:
                raise InvalidParameterError("integrated must match values in shape")
            object.__setattr__(self, "integrated", _readonly(integrated))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def metadata(self) -> dict:
        return {
            "spec": None if self.spec is None else self.spec.to_dict(),
            "grid": self.grid.to_dict(),
            "master_seed": self.master_seed,
            "stream": list(self.stream),
            "n": self.n,
            "scheme": self.scheme,
        }

    def to_csv(self, path, metadata_path=None) -> None:
        """Write ``t, x_1, ..., x_N`` rows plus a JSON metadata sidecar."""
        path = Path(path)
        header = "t," + ",".join(f"x_{i + 1}" for i in range(self.n))
        table = np.column_stack([self.times, self.values.T])
        np.savetxt(path, table, delimiter=",", fmt="%.17g", header=header, comments="")
        if metadata_path is None:
            metadata_path = path.with_suffix(".json")
        Path(metadata_path).write_text(json.dumps(self.metadata(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_csv(cls, path, metadata_path=None) -> "TrajectoryEnsemble":
        path = Path(path)
        if metadata_path is None:
            metadata_path = path.with_suffix(".json")
        meta = json.loads(Path(metadata_path).read_text())
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        spec = None if meta.get("spec") is None else NoiseSpec.from_dict(meta["spec"])
        return cls(
            spec, TimeGrid.from_dict(meta["grid"]), meta.get("master_seed"),
            table[:, 1:].T, scheme=meta.get("scheme", "exact"),
            stream=tuple(meta.get("stream", ())),
        )


# --------------------------------------------------------------------------
# random streams

def block_generator(master_seed: int, block: int, stream: Sequence[int] = ()) -> np.random.Generator:
    """Independent counter-based stream for one block of realizations."""
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(*map(int, stream), int(block)))
    return np.random.Generator(np.random.Philox(seq))


def derive_seed(master_seed: int, *key: int) -> int:
    """64-bit child seed of ``master_seed`` for sub-experiment ``key``."""
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


# --------------------------------------------------------------------------
# exact linear Gaussian transitions

def linear_gaussian_transition(drift: np.ndarray, diffusion: np.ndarray, dt: float):
    """Exact one-step law of ``ds = A s dt + b dW``.

    Returns ``(F, L)`` with ``s(t + dt) = F s(t) + L xi``, ``xi`` standard
    normal, via Van Loan's block exponential.
    """
    A = np.asarray(drift, dtype=float)
    b = np.asarray(diffusion, dtype=float).reshape(A.shape[0], -1)
    d = A.shape[0]
    block = np.zeros((2 * d, 2 * d))
    block[:d, :d] = -A
    block[:d, d:] = b @ b.T
    block[d:, d:] = A.T
    E = expm(block * dt)
    F = E[d:, d:].T
    Q = F @ E[:d, d:]
    Q = 0.5 * (Q + Q.T)
    w, V = np.linalg.eigh(Q)
    L = V * np.sqrt(np.clip(w, 0.0, None))
    return F, L


def _ou_system(spec: NoiseSpec):
    g, s = spec.gamma, spec.sigma
    if spec.kind is NoiseKind.OU:
        # state (X, int X)
        A = np.array([[-g, 0.0], [1.0, 0.0]])
        b = np.array([s, 0.0])
        return A, b, 0
    # state (X, Y, int Y); dY = (-gamma X - kappa Y) dt + sigma dW
    k = spec.kappa
    A = np.array([[-g, 0.0, 0.0], [-g, -k, 0.0], [0.0, 1.0, 0.0]])
    b = np.array([s, s, 0.0])
    return A, b, 1


def _gaussian_block(spec, grid, rng, size):
    A, b, out = _ou_system(spec)
    d = A.shape[0]
    F, L = linear_gaussian_transition(A, b, grid.dt)
    n_steps = grid.n_out - 1
    xi = rng.standard_normal((n_steps, size, d))
    values = np.zeros((size, grid.n_out))
    integral = np.zeros((size, grid.n_out))
    state = np.zeros((size, d))
    Ft, Lt = F.T, L.T
    for k in range(n_steps):
        state = state @ Ft + xi[k] @ Lt
        values[:, k + 1] = state[:, out]
        integral[:, k + 1] = state[:, -1]
    return values, integral


def _switch_times(rng, gamma, t_end, size):
    """Cumulative exponential waiting times; every row ends beyond ``t_end``."""
    if gamma == 0:
        return np.full((size, 1), np.inf)
    mean = gamma * t_end
    k = int(math.ceil(mean + 6.0 * math.sqrt(mean) + 8))
    times = np.cumsum(rng.exponential(1.0 / gamma, size=(size, k)), axis=1)
    while np.any(times[:, -1] <= t_end):
        extra = np.cumsum(rng.exponential(1.0 / gamma, size=(size, k)), axis=1)
        times = np.concatenate([times, times[:, -1:] + extra], axis=1)
    return times


def _event_counts(switches: np.ndarray, times: np.ndarray) -> np.ndarray:
    counts = np.empty((switches.shape[0], times.size), dtype=np.intp)
    for i, row in enumerate(switches):
        counts[i] = np.searchsorted(row, times, side="right")
    return counts


def rtn_from_switches(x0, switches, times):
    """Evaluate RTN paths and their exact integrals from switch times.

    Parameters
    ----------
    x0 : array_like, shape (n,)
        Initial values, each +1 or -1.
    switches : array_like, shape (n, k)
        Increasing switch times per path (``inf`` padding allowed).
    times : array_like, shape (m,)
        Nondecreasing evaluation times, ``times[0] >= 0``.

    Returns
    -------
    values, integral : ndarray, shape (n, m)
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1, 1)
    switches = np.atleast_2d(np.asarray(switches, dtype=float))
    times = np.asarray(times, dtype=float)
    counts = _event_counts(switches, times)
    parity = 1.0 - 2.0 * (counts & 1)
    values = x0 * parity

    # integral of the unit-start path up to each switch
    finite = np.where(np.isfinite(switches), switches, 0.0)
    s = np.concatenate([np.zeros((switches.shape[0], 1)), finite], axis=1)
    signs = 1.0 - 2.0 * (np.arange(switches.shape[1]) & 1)
    seg = np.diff(s, axis=1) * signs
    g = np.concatenate([np.zeros((switches.shape[0], 1)), np.cumsum(seg, axis=1)], axis=1)
    last = np.take_along_axis(s, counts, axis=1)
    base = np.take_along_axis(g, counts, axis=1)
    integral = x0 * (base + parity * (times[None, :] - last))
    return values, integral


def _filtered_rtn_from_switches(x0, switches, times, mu):
    """Exact Z = filtered RTN and its integral, event by event."""
    x0 = np.asarray(x0, dtype=float).reshape(-1, 1)
    n, k = switches.shape
    counts = _event_counts(switches, times)
    finite = np.where(np.isfinite(switches), switches, 0.0)
    s = np.concatenate([np.zeros((n, 1)), finite], axis=1)
    z_at = np.zeros((n, k + 1))
    i_at = np.zeros((n, k + 1))
    for j in range(1, k + 1):
        gap = s[:, j] - s[:, j - 1]
        decay = np.exp(-mu * gap)
        # jump of X at switch j: 2 x0 (-1)^j
        jump = 2.0 * x0[:, 0] * (1.0 if j % 2 == 0 else -1.0)
        i_at[:, j] = i_at[:, j - 1] + z_at[:, j - 1] * (-np.expm1(-mu * gap)) / mu
        z_at[:, j] = z_at[:, j - 1] * decay + jump
    last = np.take_along_axis(s, counts, axis=1)
    z0 = np.take_along_axis(z_at, counts, axis=1)
    i0 = np.take_along_axis(i_at, counts, axis=1)
    elapsed = times[None, :] - last
    values = z0 * np.exp(-mu * elapsed)
    integral = i0 + z0 * (-np.expm1(-mu * elapsed)) / mu
    return values, integral


def _rtn_block(spec, grid, rng, size):
    x0 = np.where(rng.random(size) < 0.5, -1.0, 1.0)
    switches = _switch_times(rng, spec.gamma, grid.t_max, size)
    if spec.kind is NoiseKind.RTN:
        return rtn_from_switches(x0, switches, grid.times)
    return _filtered_rtn_from_switches(x0, switches, grid.times, spec.mu)


def _euler_block(spec, grid, rng, size):
    """Pathwise exponential-Euler filter on the substep grid."""
    sub = grid.sub_times
    h = grid.h
    if spec.kind in (NoiseKind.OU, NoiseKind.FILTERED_OU):
        a = math.exp(-spec.gamma * h)
        scale = spec.sigma * math.sqrt(-math.expm1(-2 * spec.gamma * h) / (2 * spec.gamma))
        xi = rng.standard_normal((sub.size - 1, size))
        drive = np.zeros((size, sub.size))
        for k in range(sub.size - 1):
            drive[:, k + 1] = drive[:, k] * a + scale * xi[k]
    else:
        x0 = np.where(rng.random(size) < 0.5, -1.0, 1.0)
        switches = _switch_times(rng, spec.gamma, grid.t_max, size)
        drive, _ = rtn_from_switches(x0, switches, sub)

    if spec.kind in (NoiseKind.OU, NoiseKind.RTN):
        path = drive
    else:
        rate = spec.kappa if spec.kind is NoiseKind.FILTERED_OU else spec.mu
        decay = math.exp(-rate * h)
        increments = np.diff(drive, axis=1)
        path = np.zeros_like(drive)
        for k in range(sub.size - 1):
            path[:, k + 1] = path[:, k] * decay + increments[:, k]

    integral = np.zeros_like(path)
    np.cumsum(0.5 * h * (path[:, 1:] + path[:, :-1]), axis=1, out=integral[:, 1:])
    stride = grid.substeps
    return path[:, ::stride], integral[:, ::stride]


def _sample_block(spec, grid, master_seed, stream, block, scheme):
    rng = block_generator(master_seed, block, stream)
    if scheme == "euler":
        return _euler_block(spec, grid, rng, BLOCK_SIZE)
    if spec.kind in (NoiseKind.OU, NoiseKind.FILTERED_OU):
        return _gaussian_block(spec, grid, rng, BLOCK_SIZE)
    return _rtn_block(spec, grid, rng, BLOCK_SIZE)


def _sample(spec, grid, master_seed, n, *, scheme, stream, threads):
    if int(n) != n or n < 1:
        raise InvalidParameterError(f"n must be a positive integer, got {n!r}")
    if scheme not in SCHEMES:
        raise InvalidParameterError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    if scheme == "euler" and grid.h * spec.max_rate > _SUBSTEP_WARN:
        warnings.warn(
            f"substep h={grid.h:g} is coarse for rate {spec.max_rate:g} "
            f"(h*rate = {grid.h * spec.max_rate:.3g} > {_SUBSTEP_WARN})",
            RuntimeWarning, stacklevel=3,
        )
    n = int(n)
    n_blocks = -(-n // BLOCK_SIZE)
    values = np.empty((n_blocks * BLOCK_SIZE, grid.n_out))
    integral = np.empty_like(values)

    # A chunk groups consecutive blocks; each block still has its own stream.
    def run_chunk(first):
        last = min(first + _CHUNK_BLOCKS, n_blocks)
        for b in range(first, last):
            v, i = _sample_block(spec, grid, master_seed, stream, b, scheme)
            values[b * BLOCK_SIZE:(b + 1) * BLOCK_SIZE] = v
            integral[b * BLOCK_SIZE:(b + 1) * BLOCK_SIZE] = i

    starts = range(0, n_blocks, _CHUNK_BLOCKS)
    if threads and threads > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_chunk, starts))
    else:
        for first in starts:
            run_chunk(first)
    return TrajectoryEnsemble(
        spec, grid, int(master_seed), values[:n], integral[:n],
        scheme=scheme, stream=tuple(int(s) for s in stream),
    )


def _check_kind(spec, allowed):
    if not isinstance(spec, NoiseSpec):
        raise InvalidParameterError("spec must be a NoiseSpec")
    if spec.kind not in allowed:
        raise InvalidParameterError(
            f"expected a {'/'.join(k.value for k in allowed)} spec, got {spec.kind.value}"
        )


def sample_ou(spec: NoiseSpec, grid: TimeGrid, master_seed: int, n: int, *,
              scheme: str = "exact", stream: Sequence[int] = (), threads: int = 1) -> TrajectoryEnsemble:
    """Ornstein-Uhlenbeck paths started at ``X(0) = 0``."""
    _check_kind(spec, (NoiseKind.OU,))
    return _sample(spec, grid, master_seed, n, scheme=scheme, stream=stream, threads=threads)


def sample_rtn(spec: NoiseSpec, grid: TimeGrid, master_seed: int, n: int, *,
               scheme: str = "exact", stream: Sequence[int] = (), threads: int = 1) -> TrajectoryEnsemble:
    """Random telegraph paths; values are exactly +-1."""
    _check_kind(spec, (NoiseKind.RTN,))
    return _sample(spec, grid, master_seed, n, scheme=scheme, stream=stream, threads=threads)


def sample_filtered(spec: NoiseSpec, grid: TimeGrid, master_seed: int, n: int, *,
                    scheme: str = "exact", stream: Sequence[int] = (), threads: int = 1) -> TrajectoryEnsemble:
    """Y (filtered OU) or Z (filtered RTN) paths started at zero."""
    _check_kind(spec, (NoiseKind.FILTERED_OU, NoiseKind.FILTERED_RTN))
    return _sample(spec, grid, master_seed, n, scheme=scheme, stream=stream, threads=threads)


def sample(spec: NoiseSpec, grid: TimeGrid, master_seed: int, n: int, *,
           scheme: str = "exact", stream: Sequence[int] = (), threads: int = 1) -> TrajectoryEnsemble:
    """Dispatch to the sampler matching ``spec.kind``."""
    _check_kind(spec, tuple(NoiseKind))
    return _sample(spec, grid, master_seed, n, scheme=scheme, stream=stream, threads=threads)
