"""
Command-line front end.

    qdephase simulate --config run.cfg [--set noise.sigma=0.5] [--seed 7]
    qdephase figure fig3b --seed 1 --out results/
    qdephase validate oracles
    qdephase tabulate d_rtn --gamma 0.1 --t-max 10 --points 101

Config files hold ``section.key = value`` lines; ``#`` starts a comment.
Exit status: 0 success, 1 failed validation, 2 configuration error,
3 non-finite numerical result.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .analytic import AnalyticParams, DomainError, dephasing_for, tabulate
from .dephasing import curve_ensemble_stats, simulate_curve
from .figures import FIGURES, run_figure
from .nm_analysis import DEFAULT_SIGNIFICANCE, detect_revivals
from .noise_gen import SCHEMES, InvalidParameterError, NoiseKind, NoiseSpec, TimeGrid, derive_seed, sample
from .spectral import WINDOWS, autocorr_estimate, default_transient_cut, periodogram
from .svg import LinePlot
from .validation import SUITES, run_suite

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
ARTIFACTS = ("curve", "bands", "spectrum", "autocorr", "report", "svg")
U64 = 2 ** 64


class ConfigError(Exception):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class NumericalFailure(Exception):
    pass


# key -> (type, default); None default means "unset"
SCHEMA = {
    "noise.kind": (str, "OU"),
    "noise.gamma": (float, 0.1),
    "noise.sigma": (float, None),
    "noise.kappa": (float, None),
    "noise.mu": (float, None),
    "grid.t_max": (float, 40.0),
    "grid.n_out": (int, 201),
    "grid.substeps": (int, None),
    "run.omega0": (float, 1.0),
    "run.n_realizations": (int, 10_000),
    "run.n_curves": (int, 100),
    "run.n_real_per_curve": (int, 100),
    "run.seed": (int, 0),
    "run.scheme": (str, "exact"),
    "run.significance": (float, DEFAULT_SIGNIFICANCE),
    "run.transient_cut": (float, None),
    "run.window": (str, "rectangular"),
    "run.max_lag": (float, 10.0),
    "output.dir": (str, "."),
    "output.format": (str, "csv"),
    "output.artifacts": (str, "curve,report"),
    "output.prefix": (str, "run"),
}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """``section.key = value`` lines to a raw string mapping."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}", f"expected 'section.key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        raw[key] = value
    return raw


def _coerce(key: str, value):
    kind, _ = SCHEMA[key]
    if isinstance(value, str) and value.lower() in ("", "none", "null"):
        return None
    try:
        if kind is int:
            try:
                return int(str(value), 0)
            except ValueError:
                f = float(value)
                if not f.is_integer():
                    raise
                return int(f)
        if kind is float:
            f = float(value)
            if not math.isfinite(f):
                raise ValueError
            return f
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected {'an integer' if kind is int else 'a finite number'}, "
                               f"got {value!r}") from None
    return str(value)


@dataclass
class RunConfig:
    noise: NoiseSpec
    grid: TimeGrid
    omega0: float
    n_realizations: int
    master_seed: int
    n_curves: int = 100
    n_real_per_curve: int = 100
    scheme: str = "exact"
    significance: float = DEFAULT_SIGNIFICANCE
    transient_cut: Optional[float] = None
    window: str = "rectangular"
    max_lag: float = 10.0
    outputs: List[str] = field(default_factory=lambda: ["curve", "report"])
    output_dir: str = "."
    fmt: str = "csv"
    prefix: str = "run"

    def resolved(self) -> dict:
        """Everything needed to regenerate the artifacts (no output location)."""
        return {
            "noise": self.noise.to_dict(), "grid": self.grid.to_dict(), "omega0": self.omega0,
            "n_realizations": self.n_realizations, "master_seed": self.master_seed,
            "n_curves": self.n_curves, "n_real_per_curve": self.n_real_per_curve,
            "scheme": self.scheme, "significance": self.significance,
            "transient_cut": (default_transient_cut(self.noise) if self.transient_cut is None
                              else self.transient_cut),
            "window": self.window, "max_lag": self.max_lag,
            "outputs": list(self.outputs), "version": __version__,
        }


def build_config(raw: dict) -> RunConfig:
    """Validate every key of ``raw`` and assemble a :class:`RunConfig`."""
    for key in raw:
        if key not in SCHEMA:
            raise ConfigError(key, f"unknown key; valid keys are {', '.join(sorted(SCHEMA))}")
    v = {key: (_coerce(key, raw[key]) if key in raw else default) for key, (_, default) in SCHEMA.items()}

    kind = v["noise.kind"]
    try:
        kind = NoiseKind(kind)
    except ValueError:
        raise ConfigError("noise.kind", f"must be one of {[k.value for k in NoiseKind]}, got {kind!r}") from None
    needs = {NoiseKind.OU: ("sigma",), NoiseKind.RTN: (), NoiseKind.FILTERED_OU: ("sigma", "kappa"),
             NoiseKind.FILTERED_RTN: ("mu",)}[kind]
    for name in ("sigma", "kappa", "mu"):
        key = f"noise.{name}"
        if name in needs and v[key] is None:
            raise ConfigError(key, f"required for {kind.value} noise")
        if name not in needs and v[key] is not None:
            raise ConfigError(key, f"not a parameter of {kind.value} noise")
    gamma = v["noise.gamma"]
    if gamma is None or gamma < 0 or (gamma == 0 and kind in (NoiseKind.OU, NoiseKind.FILTERED_OU)):
        raise ConfigError("noise.gamma", f"must be > 0, got {gamma}")
    if v["noise.sigma"] is not None and v["noise.sigma"] < 0:
        raise ConfigError("noise.sigma", f"must be >= 0, got {v['noise.sigma']}")
    for name in ("kappa", "mu"):
        if v[f"noise.{name}"] is not None and v[f"noise.{name}"] <= 0:
            raise ConfigError(f"noise.{name}", f"must be > 0, got {v[f'noise.{name}']}")
    noise = NoiseSpec(kind, gamma, sigma=v["noise.sigma"], kappa=v["noise.kappa"], mu=v["noise.mu"])

    if v["grid.t_max"] is None or v["grid.t_max"] <= 0:
        raise ConfigError("grid.t_max", f"must be > 0, got {v['grid.t_max']}")
    if v["grid.n_out"] is None or v["grid.n_out"] < 2:
        raise ConfigError("grid.n_out", f"must be >= 2, got {v['grid.n_out']}")
    if v["grid.substeps"] is None:
        grid = TimeGrid.for_spec(noise, v["grid.t_max"], v["grid.n_out"])
    elif v["grid.substeps"] < 1:
        raise ConfigError("grid.substeps", f"must be >= 1, got {v['grid.substeps']}")
    else:
        grid = TimeGrid(v["grid.t_max"], v["grid.n_out"], v["grid.substeps"])

    checks = [
        ("run.omega0", lambda x: x is not None and x > 0, "must be > 0"),
        ("run.n_realizations", lambda x: x is not None and x >= 1, "must be >= 1"),
        ("run.n_curves", lambda x: x is not None and x >= 2, "must be >= 2"),
        ("run.n_real_per_curve", lambda x: x is not None and x >= 1, "must be >= 1"),
        ("run.seed", lambda x: x is not None and 0 <= x < U64, "must be an unsigned 64-bit integer"),
        ("run.scheme", lambda x: x in SCHEMES, f"must be one of {list(SCHEMES)}"),
        ("run.significance", lambda x: x is not None and x > 0, "must be > 0"),
        ("run.transient_cut", lambda x: x is None or 0 <= x < grid.t_max, "must lie in [0, grid.t_max)"),
        ("run.window", lambda x: x in WINDOWS, f"must be one of {list(WINDOWS)}"),
        ("run.max_lag", lambda x: x is not None and x >= 0, "must be >= 0"),
        ("output.format", lambda x: x in ("csv", "json"), "must be csv or json"),
    ]
    for key, ok, message in checks:
        if not ok(v[key]):
            raise ConfigError(key, f"{message}, got {v[key]!r}")
    outputs = [s.strip() for s in (v["output.artifacts"] or "").split(",") if s.strip()]
    bad = [s for s in outputs if s not in ARTIFACTS]
    if bad or not outputs:
        raise ConfigError("output.artifacts", f"choose from {list(ARTIFACTS)}, got {bad or outputs}")

    return RunConfig(noise, grid, v["run.omega0"], v["run.n_realizations"], v["run.seed"],
                     v["run.n_curves"], v["run.n_real_per_curve"], v["run.scheme"],
                     v["run.significance"], v["run.transient_cut"], v["run.window"], v["run.max_lag"],
                     outputs, v["output.dir"], v["output.format"], v["output.prefix"])


def load_config(path: Optional[str], overrides: dict) -> RunConfig:
    raw = {}
    if path:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError("--config", str(exc)) from None
        raw = parse_config_text(text, path)
    raw.update(overrides)
    return build_config(raw)


def _finite(name: str, *arrays):
    for a in arrays:
        if a is not None and not np.all(np.isfinite(a)):
            raise NumericalFailure(f"non-finite values in {name}")


def cmd_simulate(cfg: RunConfig, threads: int = 1) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"config": cfg.resolved()}
    ext = cfg.fmt
    base = out / cfg.prefix
    curve = None
    wants = set(cfg.outputs)
    if wants & {"curve", "report", "bands", "svg"}:
        try:
            curve = simulate_curve(cfg.noise, cfg.grid, cfg.omega0, cfg.n_realizations, cfg.master_seed,
                                   scheme=cfg.scheme, stream=(0,), threads=threads)
        except InvalidParameterError as exc:
            raise NumericalFailure(str(exc)) from None
        _finite("dephasing curve", curve.d_values, curve.std_err)
        if "bands" in wants:
            stats = curve_ensemble_stats(cfg.noise, cfg.grid, cfg.omega0, cfg.n_curves,
                                         cfg.n_real_per_curve, derive_seed(cfg.master_seed, 1),
                                         scheme=cfg.scheme, threads=threads)
            curve = replace(curve, bands=stats.bands)
        if wants & {"curve", "bands"}:
            text = curve.to_csv(metadata=meta) if ext == "csv" else curve.to_json(metadata=meta)
            Path(f"{base}_curve.{ext}").write_text(text)
    report = None
    if curve is not None:
        report = detect_revivals(curve, cfg.significance)
        if "report" in wants:
            report.to_json(f"{base}_report.json", metadata=meta)
        if "svg" in wants:
            plot = LinePlot(title=f"{cfg.noise.kind.value} dephasing", xlabel="t", ylabel="D(t)",
                            ylim=(0.0, 1.05))
            if curve.bands is not None:
                plot.add_band(cfg.grid.times, curve.bands.lo2, curve.bands.hi2, opacity=0.15,
                              label="2 sigma band")
            exact = dephasing_for(cfg.noise, cfg.omega0)
            if exact is not None:
                plot.add(cfg.grid.times, exact(cfg.grid.times), "closed form", color="#d62728")
            plot.add(cfg.grid.times, curve.d_values, f"Monte Carlo N={cfg.n_realizations}")
            plot.save(f"{base}.svg")
    if wants & {"spectrum", "autocorr"}:
        try:
            ens = sample(cfg.noise, cfg.grid, cfg.master_seed, cfg.n_realizations,
                         scheme=cfg.scheme, stream=(1,), threads=threads)
            if "spectrum" in wants:
                est = periodogram(ens, cfg.transient_cut, cfg.window, threads=threads)
                _finite("spectrum", est.s_values)
                text = est.to_csv(metadata=meta) if ext == "csv" else est.to_json(metadata=meta)
                Path(f"{base}_spectrum.{ext}").write_text(text)
            if "autocorr" in wants:
                taus, r = autocorr_estimate(ens, cfg.max_lag, cfg.transient_cut, threads=threads)
                _finite("autocorrelation", r)
                if ext == "csv":
                    lines = [f"# {s}" for s in json.dumps(meta, sort_keys=True, indent=1).splitlines()]
                    lines += ["tau,R"] + [f"{a:.17g},{b:.17g}" for a, b in zip(taus, r)]
                    text = "\n".join(lines) + "\n"
                else:
                    text = json.dumps({"metadata": meta, "tau": taus.tolist(), "R": r.tolist()},
                                      sort_keys=True) + "\n"
                Path(f"{base}_autocorr.{ext}").write_text(text)
        except InvalidParameterError as exc:
            raise ConfigError("run", str(exc)) from None
    if report is not None:
        print(f"verdict={report.verdict.value} nm_measure={report.nm_measure:.6g} "
              f"revivals={len(report.revivals)} seed={cfg.master_seed}")
    else:
        print(f"wrote {', '.join(cfg.outputs)} seed={cfg.master_seed}")
    return EXIT_OK


def _parse_sets(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError("--set", f"expected key=value, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        out[key] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdephase", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=str, default=None, help="master seed (unsigned 64-bit)")
    common.add_argument("--threads", type=int, default=1, help="worker threads (does not change results)")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--significance", type=str, default=None,
                        help="revival threshold in combined standard errors")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="run a configured simulation")
    p.add_argument("--config", help="config file with section.key = value lines")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")

    p = sub.add_parser("figure", parents=[common], help="reproduce a figure data set")
    p.add_argument("name", help=f"one of {', '.join(FIGURES)}")
    p.add_argument("-n", "--realizations", type=int, default=None,
                   help="Monte Carlo size of the main curve (spectra: paths per mu)")

    p = sub.add_parser("validate", parents=[common], help="run a validation suite")
    p.add_argument("suite", choices=sorted(SUITES) + ["all"])

    p = sub.add_parser("tabulate", help="print a closed form as CSV")
    p.add_argument("name", choices=["d_ou", "d_rtn", "d_y", "corr_ou", "corr_rtn",
                                    "corr_y_stationary", "spectrum_y"])
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--omega0", type=float, default=1.0)
    p.add_argument("--t-max", type=float, default=40.0, help="upper end of the abscissa")
    p.add_argument("--points", type=int, default=201)
    return parser


def _seed(value) -> Optional[int]:
    if value is None:
        return None
    try:
        seed = int(value, 0)
    except ValueError:
        raise ConfigError("--seed", f"expected an unsigned 64-bit integer, got {value!r}") from None
    if not 0 <= seed < U64:
        raise ConfigError("--seed", f"expected an unsigned 64-bit integer, got {value!r}")
    return seed


def _significance(value) -> Optional[float]:
    if value is None:
        return None
    try:
        s = float(value)
    except ValueError:
        s = float("nan")
    if not (math.isfinite(s) and s > 0):
        raise ConfigError("--significance", f"must be > 0, got {value!r}")
    return s


def _dispatch(args) -> int:
    if getattr(args, "threads", 1) is not None and getattr(args, "threads", 1) < 1:
        raise ConfigError("--threads", f"must be >= 1, got {args.threads}")
    if args.command == "simulate":
        overrides = _parse_sets(args.set)
        for key, value in (("run.seed", _seed(args.seed)), ("output.dir", args.out),
                           ("output.format", args.format),
                           ("run.significance", _significance(args.significance))):
            if value is not None:
                overrides[key] = str(value)
        return cmd_simulate(load_config(args.config, overrides), threads=args.threads)

    if args.command == "figure":
        if args.name not in FIGURES:
            raise ConfigError("figure", f"unknown name {args.name!r}; valid names: {', '.join(FIGURES)}")
        if args.realizations is not None and args.realizations < 1:
            raise ConfigError("--realizations", f"must be >= 1, got {args.realizations}")
        seed = _seed(args.seed) or 0
        sig = _significance(args.significance) or DEFAULT_SIGNIFICANCE
        summary = run_figure(args.name, seed, args.out or ".", n=args.realizations,
                             fmt=args.format or "csv", significance=sig, threads=args.threads)
        if "verdict" in summary:
            extra = f" band2_coverage={summary['band2_coverage']:.3f}" if "band2_coverage" in summary else ""
            print(f"{args.name}: verdict={summary['verdict']} nm_measure={summary['nm_measure']:.6g}"
                  f" revivals={summary['n_revivals']}{extra} seed={seed}")
        else:
            shapes = "; ".join(f"{k} dip={v['dip_at_zero']} peaks={v['n_peaks']}"
                               for k, v in summary["shapes"].items())
            print(f"{args.name}: {shapes} seed={seed}")
        return EXIT_OK

    if args.command == "validate":
        seed = _seed(args.seed) or 0
        suites = sorted(SUITES) if args.suite == "all" else [args.suite]
        failed = 0
        for name in suites:
            for check in run_suite(name, seed):
                print(f"[{name}] {check.line()}", flush=True)
                failed += not check.passed
        print(f"{'FAILED' if failed else 'OK'}: {failed} failed check(s)")
        return EXIT_FAILED if failed else EXIT_OK

    if args.command == "tabulate":
        if args.points < 2 or not args.t_max > 0:
            raise ConfigError("--points/--t-max", "need points >= 2 and t-max > 0")
        xs = np.linspace(0.0, args.t_max, args.points)
        try:
            params = AnalyticParams(gamma=args.gamma, sigma=args.sigma, kappa=args.kappa, omega0=args.omega0)
            table = tabulate(args.name, xs, params)
        except DomainError as exc:
            raise ConfigError(args.name, str(exc)) from None
        print("x,value")
        for x, y in table:
            print(f"{x:.17g},{y:.17g}")
        return EXIT_OK
    raise ConfigError("command", f"unknown command {args.command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"qdephase: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"qdephase: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
