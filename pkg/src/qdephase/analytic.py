"""
Closed-form dephasing factors, correlation functions and spectra.

All dephasing factors assume the processes start as sampled by
:mod:`qdephase.noise`: OU and Y from zero, RTN from its stationary
(+-1 equiprobable) state.  Functions broadcast over numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate, special

# relative distance below which the degenerate-rate branches are used
DEGENERATE_RTOL = 0.05
_SERIES_TERMS = 16


class DomainError(ValueError):
    """Argument outside the domain of a closed form."""


@dataclass(frozen=True)
class AnalyticParams:
    """Parameter bundle for the closed forms; absent rates stay ``None``."""

    gamma: Optional[float] = None
    sigma: Optional[float] = None
    kappa: Optional[float] = None
    mu: Optional[float] = None
    omega0: float = 1.0

    def __post_init__(self):
        for name in ("gamma", "sigma", "kappa", "mu", "omega0"):
            value = getattr(self, name)
            if value is not None and not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be finite and > 0, got {value}")


def _times(t):
    t = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t < 0):
        raise DomainError("t must be finite and >= 0")
    return t


def _positive(**kw):
    for name, value in kw.items():
        if not (math.isfinite(value) and value > 0):
            raise DomainError(f"{name} must be finite and > 0, got {value}")


def _scalar_or_array(x):
    return x.item() if np.ndim(x) == 0 else x


# --------------------------------------------------------------------------
# dephasing factors

def _ou_bracket(x):
    """``2x - 3 - exp(-2x) + 4 exp(-x)`` without cancellation at small x."""
    shape = np.shape(x)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = 2 * x - 3 - np.exp(-2 * x) + 4 * np.exp(-x)
    small = x < 0.5
    if np.any(small):
        xs = x[small]
        acc = np.zeros_like(xs)
        term_pow = xs ** 3
        for n in range(3, 22):
            acc += (-1) ** n * (4 - 2 ** n) * term_pow / math.factorial(n)
            term_pow = term_pow * xs
        out[small] = acc
    return out.reshape(shape)


def d_ou(t, gamma, sigma, omega0=1.0):
    """Dephasing factor of Ornstein-Uhlenbeck noise started at zero.

    ``exp(-(omega0 sigma / gamma)^2 / gamma * (2 gamma t - 3 - e^{-2 gamma t} + 4 e^{-gamma t}))``
    """
    _positive(gamma=gamma, omega0=omega0)
    if not (math.isfinite(sigma) and sigma >= 0):
        raise DomainError(f"sigma must be finite and >= 0, got {sigma}")
    t = _times(t)
    exponent = (omega0 * sigma) ** 2 / gamma ** 3 * _ou_bracket(gamma * t)
    return _scalar_or_array(np.exp(-exponent))


def d_rtn(t, gamma, omega0=1.0):
    """Dephasing factor of random telegraph noise with switching rate gamma.

    ``e^{-gamma t} |cosh(nu t) + (gamma/nu) sinh(nu t)|`` with
    ``nu^2 = gamma^2 - 4 omega0^2``; the oscillatory regime uses real
    trigonometric functions and the neighbourhood of ``nu = 0`` a Taylor
    series in ``nu^2 t^2``.  ``gamma = 0`` gives ``|cos(2 omega0 t)|``.
    """
    _positive(omega0=omega0)
    if not (math.isfinite(gamma) and gamma >= 0):
        raise DomainError(f"gamma must be finite and >= 0, got {gamma}")
    t = _times(t)
    q = (gamma - 2 * omega0) * (gamma + 2 * omega0)
    x = q * t * t
    out = np.empty_like(t)

    series = np.abs(x) < 1e-3
    if np.any(series):
        xs, ts = x[series], t[series]
        c = 1 + xs / 2 + xs ** 2 / 24 + xs ** 3 / 720 + xs ** 4 / 40320
        sc = 1 + xs / 6 + xs ** 2 / 120 + xs ** 3 / 5040 + xs ** 4 / 362880
        out[series] = np.exp(-gamma * ts) * (c + gamma * ts * sc)
    rest = ~series
    if np.any(rest):
        tr = t[rest]
        if q > 0:
            nu = math.sqrt(q)
            slow = np.exp(-(gamma - nu) * tr)
            fast = np.exp(-(gamma + nu) * tr)
            out[rest] = 0.5 * (slow + fast) + 0.5 * gamma / nu * (slow - fast)
        else:
            nt = math.sqrt(-q)
            out[rest] = np.exp(-gamma * tr) * (np.cos(nt * tr) + gamma / nt * np.sin(nt * tr))
    return _scalar_or_array(np.clip(np.abs(out), 0.0, 1.0))


def _y_variance_series(t, gamma, kappa):
    """Variance of the integrated Y process over sigma^2, expanded in kappa - gamma."""
    delta = kappa - gamma
    c = 2 * gamma
    acc = np.zeros_like(t)
    for n in range(_SERIES_TERMS):
        coef = (-delta) ** n * (2 ** (n + 2) - 2) / c ** (n + 3)
        acc += coef * special.gammainc(n + 3, c * t)
    return acc


def d_y(t, gamma, sigma, kappa, omega0=1.0):
    """Dephasing factor of the OU-driven filtered process Y.

    Evaluates the closed form with denominator
    ``gamma kappa (gamma - kappa)^2 (gamma + kappa)``; when
    ``|gamma - kappa| / max(gamma, kappa) < DEGENERATE_RTOL`` a series in
    ``kappa - gamma`` replaces it.
    """
    _positive(gamma=gamma, kappa=kappa, omega0=omega0)
    if not (math.isfinite(sigma) and sigma >= 0):
        raise DomainError(f"sigma must be finite and >= 0, got {sigma}")
    t = _times(t)
    if abs(gamma - kappa) / max(gamma, kappa) < DEGENERATE_RTOL:
        exponent = 2 * (omega0 * sigma) ** 2 * _y_variance_series(t, gamma, kappa)
    else:
        eg, ek = np.exp(-gamma * t), np.exp(-kappa * t)
        num = ((gamma - kappa) ** 2 - (gamma * ek - kappa * eg) ** 2
               + gamma * kappa * (2 * eg * ek - eg ** 2 - ek ** 2))
        den = gamma * kappa * (gamma - kappa) ** 2 * (gamma + kappa)
        exponent = (omega0 * sigma) ** 2 * num / den
    return _scalar_or_array(np.clip(np.exp(-exponent), 0.0, 1.0))


# --------------------------------------------------------------------------
# correlation functions and spectra

def corr_ou(tau, gamma, sigma):
    """Stationary OU correlation ``sigma^2/(2 gamma) exp(-gamma |tau|)``."""
    tau = np.asarray(tau, dtype=float)
    return _scalar_or_array(sigma ** 2 / (2 * gamma) * np.exp(-gamma * np.abs(tau)))


def corr_rtn(tau, gamma):
    """RTN correlation ``exp(-2 gamma |tau|)``."""
    tau = np.asarray(tau, dtype=float)
    return _scalar_or_array(np.exp(-2 * gamma * np.abs(tau)))


def _y_kernel(u, gamma, kappa):
    # response of Y to dW: (kappa e^{-kappa u} - gamma e^{-gamma u}) / (kappa - gamma)
    delta = kappa - gamma
    if delta == 0:
        return np.exp(-gamma * u) * (1 - gamma * u)
    return np.exp(-gamma * u) * (gamma * np.expm1(-delta * u) / delta + np.exp(-delta * u))


def _corr_y_quad(t, s, gamma, kappa, sigma):
    lo, hi = min(t, s), max(t, s)
    lag = hi - lo
    if lo == 0:
        return 0.0
    val, _ = integrate.quad(
        lambda v: _y_kernel(lag + v, gamma, kappa) * _y_kernel(v, gamma, kappa),
        0.0, lo, epsabs=1e-14, epsrel=1e-12, limit=200,
    )
    return sigma ** 2 * val


def corr_y(t, s, gamma, kappa, sigma):
    """Two-time correlation ``E[Y(t) Y(s)]`` of Y started at zero.

    Symmetric in ``(t, s)``; approaches :func:`corr_y_stationary` of
    ``|t - s|`` once both times exceed several relaxation times.
    """
    _positive(gamma=gamma, kappa=kappa)
    t = _times(t)
    s = _times(s)
    t, s = np.broadcast_arrays(t, s)
    if abs(gamma - kappa) / max(gamma, kappa) < DEGENERATE_RTOL:
        out = np.vectorize(_corr_y_quad, otypes=[float])(t, s, gamma, kappa, sigma)
        return _scalar_or_array(out)
    lag = np.abs(t - s)
    total = t + s
    braces = (
        gamma / 2 * (np.exp(-gamma * lag) - np.exp(-gamma * total))
        + kappa / 2 * (np.exp(-kappa * lag) - np.exp(-kappa * total))
        + gamma * kappa / (gamma + kappa) * (
            np.exp(-kappa * t - gamma * s) + np.exp(-gamma * t - kappa * s)
            - np.exp(-kappa * lag) - np.exp(-gamma * lag)
        )
    )
    return _scalar_or_array((sigma / (gamma - kappa)) ** 2 * braces)


def corr_y_stationary(tau, gamma, kappa, sigma):
    """Large-time limit of :func:`corr_y` at fixed lag ``tau``."""
    _positive(gamma=gamma, kappa=kappa)
    lag = np.abs(np.asarray(tau, dtype=float))
    if abs(gamma - kappa) / max(gamma, kappa) < DEGENERATE_RTOL:
        def one(x):
            val, _ = integrate.quad(
                lambda v: _y_kernel(x + v, gamma, kappa) * _y_kernel(v, gamma, kappa),
                0.0, np.inf, epsabs=1e-14, epsrel=1e-12, limit=200,
            )
            return sigma ** 2 * val
        return _scalar_or_array(np.vectorize(one, otypes=[float])(lag))
    braces = (
        gamma / 2 * np.exp(-gamma * lag) + kappa / 2 * np.exp(-kappa * lag)
        - gamma * kappa / (gamma + kappa) * (np.exp(-kappa * lag) + np.exp(-gamma * lag))
    )
    return _scalar_or_array((sigma / (gamma - kappa)) ** 2 * braces)


def spectrum_y(omega, gamma, kappa, sigma):
    """Power spectrum ``sigma^2/(2 pi) omega^2 / ((gamma^2+omega^2)(kappa^2+omega^2))``.

    Two-sided density in angular frequency: its integral over the whole real
    line is the stationary variance of Y.
    """
    w2 = np.asarray(omega, dtype=float) ** 2
    return _scalar_or_array(
        sigma ** 2 / (2 * np.pi) * w2 / ((gamma ** 2 + w2) * (kappa ** 2 + w2))
    )


def spectrum_ou(omega, gamma, sigma):
    """Lorentzian spectrum of stationary OU noise (same convention as :func:`spectrum_y`)."""
    w2 = np.asarray(omega, dtype=float) ** 2
    return _scalar_or_array(sigma ** 2 / (2 * np.pi) / (gamma ** 2 + w2))


def spectrum_rtn(omega, gamma):
    """Lorentzian spectrum of RTN with switching rate ``gamma``."""
    w2 = np.asarray(omega, dtype=float) ** 2
    return _scalar_or_array(4 * gamma / (2 * np.pi) / (4 * gamma ** 2 + w2))


def peak_frequency_y(gamma, kappa) -> float:
    """Positive maximizer of :func:`spectrum_y`, ``sqrt(gamma kappa)``."""
    return math.sqrt(gamma * kappa)


# --------------------------------------------------------------------------
# tabulation

DEPHASING_FORMS = {
    "OU": ("d_ou", ("gamma", "sigma")),
    "RTN": ("d_rtn", ("gamma",)),
    "FilteredOU": ("d_y", ("gamma", "sigma", "kappa")),
}


def dephasing_for(spec, omega0=1.0):
    """Closed-form ``D(t)`` callable for a noise spec, or ``None`` for Z."""
    kind = getattr(spec.kind, "value", spec.kind)
    if kind == "OU":
        return lambda t: d_ou(t, spec.gamma, spec.sigma, omega0)
    if kind == "RTN":
        return lambda t: d_rtn(t, spec.gamma, omega0)
    if kind == "FilteredOU":
        return lambda t: d_y(t, spec.gamma, spec.sigma, spec.kappa, omega0)
    return None


def tabulate(name: str, xs, params: AnalyticParams) -> np.ndarray:
    """Two-column table ``(x, value)`` for one of the closed forms.

    ``name`` is one of ``d_ou``, ``d_rtn``, ``d_y``, ``corr_ou``,
    ``corr_rtn``, ``corr_y_stationary`` or ``spectrum_y``.
    """
    p = params
    xs = np.asarray(xs, dtype=float)
    table = {
        "d_ou": lambda: d_ou(xs, p.gamma, p.sigma, p.omega0),
        "d_rtn": lambda: d_rtn(xs, p.gamma, p.omega0),
        "d_y": lambda: d_y(xs, p.gamma, p.sigma, p.kappa, p.omega0),
        "corr_ou": lambda: corr_ou(xs, p.gamma, p.sigma),
        "corr_rtn": lambda: corr_rtn(xs, p.gamma),
        "corr_y_stationary": lambda: corr_y_stationary(xs, p.gamma, p.kappa, p.sigma),
        "spectrum_y": lambda: spectrum_y(xs, p.gamma, p.kappa, p.sigma),
    }
    if name not in table:
        raise DomainError(f"unknown closed form {name!r}; choose from {sorted(table)}")
    try:
        values = table[name]()
    except TypeError:
        raise DomainError(f"{name} is missing a required parameter") from None
    return np.column_stack([xs, np.broadcast_to(values, xs.shape)])
