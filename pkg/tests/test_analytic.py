import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy import integrate

from qdephase import analytic as an
from qdephase.analytic import AnalyticParams, DomainError

mp.mp.dps = 40

rates = st.floats(0.02, 5.0)
amps = st.floats(0.0, 3.0)
times = st.floats(0.0, 60.0)


# --- high-precision oracles ----------------------------------------------

def mp_d_ou(t, g, s, w):
    t, g, s, w = map(mp.mpf, (t, g, s, w))
    return mp.exp(-(w * s / g) ** 2 / g * (2 * g * t - 3 - mp.exp(-2 * g * t) + 4 * mp.exp(-g * t)))


def mp_d_rtn(t, g, w):
    t, g, w = map(mp.mpf, (t, g, w))
    nu = mp.sqrt(mp.mpc(g ** 2 - 4 * w ** 2))
    if nu == 0:
        return mp.exp(-g * t) * (1 + g * t)
    return abs(mp.exp(-g * t) * (mp.cosh(nu * t) + g / nu * mp.sinh(nu * t)))


def mp_d_y(t, g, s, k, w):
    """exp(-2 w^2 Var[int Y]) with Var = s^2 int_0^t G(u)^2 du, G the response of int Y."""
    g, s, k, w = map(mp.mpf, (g, s, k, w))
    if g == k:
        G = lambda u: u * mp.exp(-g * u)
    else:
        G = lambda u: (mp.exp(-g * u) - mp.exp(-k * u)) / (k - g)
    var = s ** 2 * mp.quad(lambda u: G(u) ** 2, [0, t])
    return mp.exp(-2 * w ** 2 * var)


def test_d_ou_golden():
    assert an.d_ou(1.0, 1.0, 1.0, 1.0) == pytest.approx(0.7144927122536723, abs=1e-15)
    assert float(mp_d_ou(1, 1, 1, 1)) == pytest.approx(0.7144927122536723, abs=1e-15)


@given(t=times, g=rates, s=amps, w=st.floats(0.1, 2.0))
def test_d_ou_matches_mpmath(t, g, s, w):
    assert an.d_ou(t, g, s, w) == pytest.approx(float(mp_d_ou(t, g, s, w)), rel=1e-10, abs=1e-300)


@given(t=times, g=st.floats(0.0, 6.0), w=st.floats(0.2, 2.0))
def test_d_rtn_matches_mpmath(t, g, w):
    assert an.d_rtn(t, g, w) == pytest.approx(float(mp_d_rtn(t, g, w)), rel=1e-8, abs=1e-12)


@pytest.mark.parametrize("g,k", [(0.1, 1.0), (1.0, 0.1), (0.5, 0.5), (0.5, 0.5000001), (0.5, 0.5004), (2.0, 1.9)])
@pytest.mark.parametrize("t", [0.3, 2.0, 10.0, 40.0])
def test_d_y_matches_quadrature(g, k, t):
    assert an.d_y(t, g, 0.63, k) == pytest.approx(float(mp_d_y(t, g, 0.63, k, 1)), rel=1e-9)


def test_rtn_critical_damping():
    t = np.linspace(0, 20, 201)
    assert np.allclose(an.d_rtn(t, 2.0), np.exp(-2 * t) * (1 + 2 * t), rtol=1e-13, atol=0)
    for eps in (1e-6, -1e-6):
        assert np.max(np.abs(an.d_rtn(t, 2.0 + eps) - an.d_rtn(t, 2.0))) < 1e-5


def test_rtn_static_limit():
    t = np.linspace(0, 40, 4001)
    assert np.max(np.abs(an.d_rtn(t, 0.0) - np.abs(np.cos(2 * t)))) < 1e-12


# --- invariants ----------------------------------------------------------

@given(g=rates, s=amps, k=rates, w=st.floats(0.1, 3.0))
def test_unit_at_zero_and_bounded(g, s, k, w):
    t = np.linspace(0, 50, 301)
    for d in (an.d_ou(t, g, s, w), an.d_rtn(t, g, w), an.d_y(t, g, s, k, w)):
        assert d[0] == 1.0
        assert np.all((d >= 0) & (d <= 1))


@given(g=rates, s=amps, k=rates)
def test_gaussian_forms_nonincreasing(g, s, k):
    t = np.linspace(0, 50, 2001)
    assert np.all(np.diff(an.d_ou(t, g, s)) <= 1e-12)
    assert np.all(np.diff(an.d_y(t, g, s, k)) <= 1e-12)


@given(t=times, g=rates, k=rates)
def test_zero_sigma_is_one(t, g, k):
    assert an.d_ou(t, g, 0.0) == 1.0
    assert an.d_y(t, g, 0.0, k) == 1.0


@given(k=st.floats(0.05, 5.0), rel=st.floats(-0.08, 0.08))
def test_d_y_continuity_around_degenerate(k, rel):
    t = np.linspace(0, 40, 81)
    a = an.d_y(t, k * (1 + rel), 0.63, k)
    b = an.d_y(t, k * (1 + rel * (1 + 1e-9)), 0.63, k)
    assert np.max(np.abs(a - b)) < 1e-8


@given(w=st.floats(0.2, 2.0), rel=st.floats(-1e-3, 1e-3))
def test_d_rtn_continuity_around_critical(w, rel):
    t = np.linspace(0, 40, 81)
    g = 2 * w * (1 + rel)
    assert np.max(np.abs(an.d_rtn(t, g, w) - an.d_rtn(t, g * (1 + 1e-10), w))) < 1e-8


# --- correlations and spectra --------------------------------------------

def test_correlation_values():
    assert an.corr_ou(0.0, 0.1, 0.63) == pytest.approx(0.63 ** 2 / 0.2)
    assert an.corr_rtn(0.0, 0.1) == 1.0
    assert an.corr_rtn(1 / 0.2, 0.1) == pytest.approx(math.exp(-1))
    assert an.corr_y(0.0, 0.0, 0.1, 1.0, 0.63) == 0.0


@given(t=st.floats(0, 30), s=st.floats(0, 30), g=rates, k=rates)
def test_corr_y_symmetric(t, s, g, k):
    assert an.corr_y(t, s, g, k, 0.63) == pytest.approx(an.corr_y(s, t, g, k, 0.63), rel=1e-9, abs=1e-14)


@pytest.mark.parametrize("g,k", [(0.1, 1.0), (0.7, 0.3), (0.5, 0.5), (0.5, 0.50001)])
@pytest.mark.parametrize("t,s", [(1.0, 2.5), (7.0, 3.0), (20.0, 20.0)])
def test_corr_y_matches_kernel_integral(g, k, t, s):
    """sigma^2 int_0^min h(t-r) h(s-r) dr with h the impulse response of Y to dW."""
    g_, k_ = mp.mpf(g), mp.mpf(k)
    if g == k:
        h = lambda u: (1 - g_ * u) * mp.exp(-g_ * u)
    else:
        h = lambda u: (k_ * mp.exp(-k_ * u) - g_ * mp.exp(-g_ * u)) / (k_ - g_)
    ref = 0.63 ** 2 * mp.quad(lambda r: h(t - r) * h(s - r), [0, min(t, s)])
    assert an.corr_y(t, s, g, k, 0.63) == pytest.approx(float(ref), rel=1e-7, abs=1e-12)


@pytest.mark.parametrize("g,k", [(0.1, 1.0), (0.5, 0.5), (2.0, 0.3)])
def test_wiener_khinchin(g, k):
    sigma = 0.63
    for w in np.linspace(0, 20 * max(g, k), 9):
        val, _ = integrate.quad(lambda tau: an.corr_y_stationary(tau, g, k, sigma),
                                0, np.inf, weight="cos", wvar=w) if w > 0 else \
            integrate.quad(lambda tau: an.corr_y_stationary(tau, g, k, sigma), 0, np.inf)
        assert val / math.pi == pytest.approx(an.spectrum_y(w, g, k, sigma), abs=1e-6)


def test_spectrum_y_shape():
    g, k, s = 0.1, 1.0, 0.63
    assert an.spectrum_y(0.0, g, k, s) == 0.0
    w = np.linspace(1e-3, 5, 200001)
    assert w[np.argmax(an.spectrum_y(w, g, k, s))] == pytest.approx(math.sqrt(g * k), abs=1e-4)
    assert an.peak_frequency_y(g, k) == pytest.approx(math.sqrt(g * k))
    big = 1e5
    assert an.spectrum_y(big, g, k, s) * big ** 2 == pytest.approx(s ** 2 / (2 * math.pi), rel=1e-8)


def test_spectrum_ou_integrates_to_variance():
    val, _ = integrate.quad(lambda w: an.spectrum_ou(w, 0.1, 0.63), 0, np.inf)
    assert 2 * val == pytest.approx(an.corr_ou(0.0, 0.1, 0.63), rel=1e-8)


# --- errors and tabulation ------------------------------------------------

@pytest.mark.parametrize("call", [
    lambda: an.d_ou(1.0, 0.0, 1.0),
    lambda: an.d_ou(-1.0, 1.0, 1.0),
    lambda: an.d_ou(1.0, 1.0, -1.0),
    lambda: an.d_rtn(1.0, -0.1),
    lambda: an.d_rtn(math.nan, 0.1),
    lambda: an.d_y(1.0, 0.1, 0.63, 0.0),
    lambda: an.d_rtn(1.0, 0.1, omega0=0.0),
])
def test_domain_errors(call):
    with pytest.raises(DomainError):
        call()


def test_tabulate():
    xs = np.linspace(0, 5, 6)
    table = an.tabulate("d_rtn", xs, AnalyticParams(gamma=0.1))
    assert table.shape == (6, 2)
    assert np.array_equal(table[:, 1], an.d_rtn(xs, 0.1))
    with pytest.raises((KeyError, ValueError)):
        an.tabulate("d_z", xs, AnalyticParams(gamma=0.1))
