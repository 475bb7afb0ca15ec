"""
Revival detection on dephasing curves.

A revival is a rise of ``D`` from a local minimum to the following local
maximum that exceeds a noise threshold.  For Monte Carlo curves the threshold
is ``significance * sqrt(se_min^2 + se_max^2)``; for curves without standard
errors it is the absolute ``ABS_THRESHOLD``.  Extrema are taken on the grid;
curves that carry a closed form (``curve.exact``) have them polished between
the neighbouring grid points.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np
from scipy import optimize

from .dephasing import DephasingCurve

ABS_THRESHOLD = 1e-9
DEFAULT_SIGNIFICANCE = 3.0


class Verdict(str, enum.Enum):
    MARKOVIAN = "Markovian"
    NON_MARKOVIAN = "NonMarkovian"


@dataclass(frozen=True)
class Revival:
    t_start: float
    t_end: float
    depth: float


@dataclass
class RevivalReport:
    revivals: List[Revival]
    nm_measure: float
    verdict: Verdict
    threshold_policy: dict = field(default_factory=dict)

    @property
    def first_onset(self) -> Optional[float]:
        return self.revivals[0].t_start if self.revivals else None

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "nm_measure": self.nm_measure,
            "revivals": [asdict(r) for r in self.revivals],
            "threshold_policy": self.threshold_policy,
        }

    def to_json(self, path=None, metadata: Optional[dict] = None) -> str:
        data = self.to_dict()
        if metadata:
            data["metadata"] = metadata
        text = json.dumps(data, indent=2, sort_keys=True) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _zigzag(d: np.ndarray, threshold) -> list:
    """Index pairs ``(i_min, i_max)`` of rises exceeding ``threshold(i, j)``."""
    pairs = []
    rising = False
    lo = hi = 0
    for i in range(1, d.size):
        if not rising:
            if d[i] < d[lo]:
                lo = i
            elif d[i] - d[lo] > threshold(lo, i):
                rising, hi = True, i
        else:
            if d[i] > d[hi]:
                hi = i
            elif d[hi] - d[i] > threshold(hi, i):
                pairs.append((lo, hi))
                rising, lo = False, i
    if rising:
        pairs.append((lo, hi))
    return pairs


def _polish(func, t, k, maximize):
    """Extremum of ``func`` between the grid neighbours of index ``k``."""
    a = float(t[max(k - 1, 0)])
    b = float(t[min(k + 1, t.size - 1)])
    sign = -1.0 if maximize else 1.0
    f = lambda x: sign * float(func(x))
    mid = float(t[k])
    if not (a < mid < b and f(mid) < min(f(a), f(b))):
        return mid, float(func(mid))
    # golden section keeps the bracket, so cusps (zeros of |.|) are safe
    res = optimize.minimize_scalar(f, bracket=(a, mid, b), method="golden",
                                   options={"xtol": 1e-15, "maxiter": 200})
    x, v = float(res.x), sign * float(res.fun)
    grid_value = float(func(t[k]))
    # never worse than the grid point itself
    if (maximize and grid_value > v) or (not maximize and grid_value < v):
        return float(t[k]), grid_value
    return x, v


def detect_revivals(curve: DephasingCurve, significance: float = DEFAULT_SIGNIFICANCE) -> RevivalReport:
    """Classify a dephasing curve as Markovian (monotone) or not.

    Parameters
    ----------
    curve : DephasingCurve
        At least three grid points.
    significance : float
        Multiplier of the combined standard error that a rise must exceed.
    """
    if not (significance > 0 and math.isfinite(significance)):
        raise ValueError(f"significance must be > 0, got {significance}")
    d = np.asarray(curve.d_values, dtype=float)
    if d.size < 3:
        raise ValueError("curve needs at least 3 points")
    t = curve.times
    se = curve.std_err
    if se is None:
        policy = {"kind": "absolute", "threshold": ABS_THRESHOLD,
                  "refined": curve.exact is not None}
        threshold = lambda i, j: ABS_THRESHOLD
    else:
        se = np.asarray(se, dtype=float)
        policy = {"kind": "stderr", "significance": float(significance),
                  "combine": "quadrature", "floor": ABS_THRESHOLD}
        threshold = lambda i, j: max(significance * math.hypot(se[i], se[j]), ABS_THRESHOLD)

    revivals = []
    for i, j in _zigzag(d, threshold):
        if curve.exact is not None and se is None:
            t0, v0 = _polish(curve.exact, t, i, maximize=False)
            t1, v1 = _polish(curve.exact, t, j, maximize=True)
        else:
            t0, v0, t1, v1 = float(t[i]), float(d[i]), float(t[j]), float(d[j])
        if v1 - v0 > 0:
            revivals.append(Revival(t0, t1, v1 - v0))
    measure = float(sum(r.depth for r in revivals))
    verdict = Verdict.NON_MARKOVIAN if revivals else Verdict.MARKOVIAN
    return RevivalReport(revivals, measure, verdict, policy)


def nm_measure(curve: DephasingCurve, significance: float = DEFAULT_SIGNIFICANCE) -> float:
    """Sum of the significant rises of ``D``; zero exactly for a Markovian verdict."""
    return detect_revivals(curve, significance).nm_measure
