import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from qdephase.analytic import dephasing_for
from qdephase.dephasing import simulate_curve
from qdephase.noise_gen import (
    BLOCK_SIZE,
    InvalidParameterError,
    NoiseKind,
    NoiseSpec,
    TimeGrid,
    TrajectoryEnsemble,
    block_generator,
    derive_seed,
    linear_gaussian_transition,
    rtn_from_switches,
    sample,
    sample_filtered,
    sample_ou,
    sample_rtn,
)

OU = NoiseSpec.ou(0.1, 0.63)
RTN = NoiseSpec.rtn(0.1)
Y = NoiseSpec.filtered_ou(0.1, 0.63, 1.0)
Z = NoiseSpec.filtered_rtn(0.5, 0.5)


# --- construction ---------------------------------------------------------

@pytest.mark.parametrize("kwargs", [
    dict(kind="OU", gamma=0.1),                        # missing sigma
    dict(kind="OU", gamma=0.1, sigma=1.0, mu=1.0),     # extra field
    dict(kind="RTN", gamma=0.1, sigma=1.0),
    dict(kind="FilteredOU", gamma=0.1, sigma=1.0),
    dict(kind="FilteredRTN", gamma=0.1),
    dict(kind="OU", gamma=-1.0, sigma=1.0),
    dict(kind="OU", gamma=0.0, sigma=1.0),
    dict(kind="OU", gamma=0.1, sigma=-0.5),
    dict(kind="OU", gamma=math.nan, sigma=1.0),
    dict(kind="FilteredOU", gamma=0.1, sigma=1.0, kappa=0.0),
    dict(kind="FilteredRTN", gamma=0.1, mu=-2.0),
    dict(kind="Brownian", gamma=0.1),
])
def test_spec_rejects_invalid(kwargs):
    with pytest.raises(InvalidParameterError):
        NoiseSpec(**kwargs)


def test_spec_roundtrip_dict():
    for spec in (OU, RTN, Y, Z):
        assert NoiseSpec.from_dict(spec.to_dict()) == spec
    assert Y.kind is NoiseKind.FILTERED_OU


@pytest.mark.parametrize("args", [(0.0, 10), (-1.0, 10), (10.0, 1), (10.0, 2.5), (10.0, 11, 0)])
def test_grid_rejects_invalid(args):
    with pytest.raises(InvalidParameterError):
        TimeGrid(*args)


def test_grid_steps():
    g = TimeGrid(40.0, 201, 4)
    assert g.dt == pytest.approx(0.2)
    assert g.h == pytest.approx(0.05)
    assert g.times[-1] == 40.0 and g.sub_times.size == 801
    auto = TimeGrid.for_spec(NoiseSpec.filtered_rtn(0.5, 1.0), 40.0, 201)
    assert auto.h <= 0.05 / 1.0 + 1e-15


# --- reproducibility ------------------------------------------------------

@pytest.mark.parametrize("spec", [OU, RTN, Y, Z], ids=lambda s: s.kind.value)
def test_bit_identical_across_threads_and_n(spec):
    grid = TimeGrid(10.0, 51)
    a = sample(spec, grid, 42, 3 * BLOCK_SIZE + 17, threads=1)
    b = sample(spec, grid, 42, 3 * BLOCK_SIZE + 17, threads=3)
    c = sample(spec, grid, 42, BLOCK_SIZE + 5)
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.integrated, b.integrated)
    # realization i does not depend on n
    assert np.array_equal(a.values[: c.n], c.values)


def test_streams_and_seeds_differ():
    grid = TimeGrid(5.0, 11)
    a = sample(OU, grid, 1, 10).values
    assert not np.array_equal(a, sample(OU, grid, 2, 10).values)
    assert not np.array_equal(a, sample(OU, grid, 1, 10, stream=(1,)).values)
    assert derive_seed(1, 0) != derive_seed(1, 1)
    assert derive_seed(7, 3) == derive_seed(7, 3)


def test_block_generator_is_philox():
    g = block_generator(0, 3, (1,))
    assert isinstance(g.bit_generator, np.random.Philox)


def test_ensemble_is_read_only():
    ens = sample(OU, TimeGrid(1.0, 5), 0, 3)
    with pytest.raises(ValueError):
        ens.values[0, 0] = 1.0


def test_kind_specific_samplers_check_kind():
    grid = TimeGrid(1.0, 5)
    with pytest.raises(InvalidParameterError):
        sample_ou(RTN, grid, 0, 2)
    with pytest.raises(InvalidParameterError):
        sample_rtn(OU, grid, 0, 2)
    with pytest.raises(InvalidParameterError):
        sample_filtered(OU, grid, 0, 2)
    with pytest.raises(InvalidParameterError):
        sample(OU, grid, 0, 0)
    with pytest.raises(InvalidParameterError):
        sample(OU, grid, 0, 2, scheme="milstein")


def test_csv_roundtrip(tmp_path):
    ens = sample(RTN, TimeGrid(2.0, 6), 9, 4)
    path = tmp_path / "paths.csv"
    ens.to_csv(path)
    assert path.read_text().splitlines()[0] == "t,x_1,x_2,x_3,x_4"
    back = TrajectoryEnsemble.from_csv(path)
    assert np.array_equal(back.values, ens.values)
    assert back.spec == RTN and back.master_seed == 9


# --- trivial limits -------------------------------------------------------

def test_zero_sigma_ou_is_zero():
    ens = sample(NoiseSpec.ou(0.3, 0.0), TimeGrid(5.0, 11), 0, 10)
    assert np.all(ens.values == 0) and np.all(ens.integrated == 0)
    ens = sample(NoiseSpec.filtered_ou(0.3, 0.0, 2.0), TimeGrid(5.0, 11), 0, 10)
    assert np.all(ens.values == 0)


def test_zero_rate_rtn_constant():
    ens = sample(NoiseSpec.rtn(0.0), TimeGrid(5.0, 11), 0, 50)
    assert np.all(ens.values == ens.values[:, :1])
    assert set(np.unique(ens.values[:, 0])) <= {-1.0, 1.0}


@pytest.mark.parametrize("scheme", ["exact", "euler"])
def test_rtn_values_are_signs(scheme):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        ens = sample(NoiseSpec.rtn(2.0), TimeGrid(10.0, 101, 4), 3, 300, scheme=scheme)
    assert set(np.unique(ens.values)) == {-1.0, 1.0}


def test_coarse_euler_warns():
    with pytest.warns(RuntimeWarning):
        sample(NoiseSpec.rtn(5.0), TimeGrid(10.0, 11), 0, 2, scheme="euler")


def test_filtered_rtn_jump_size():
    """Z jumps by exactly the RTN increment (+-2) at each switch."""
    x0, mu = 1.0, 0.7
    from qdephase.noise_gen import _filtered_rtn_from_switches
    t = np.array([0.0, 0.35 - 1e-12, 0.35 + 1e-12, 1.0])
    z, _ = _filtered_rtn_from_switches(np.array([x0]), np.array([[0.35, np.inf]]), t, mu)
    assert z[0, 0] == 0.0
    assert z[0, 2] - z[0, 1] == pytest.approx(-2.0, abs=1e-9)
    assert z[0, 3] == pytest.approx(-2.0 * math.exp(-mu * (1.0 - 0.35)), rel=1e-9)


def test_rtn_single_switch_integral():
    t = np.linspace(0.0, 2.0, 9)
    vals, integ = rtn_from_switches(np.array([1.0]), np.array([[0.6, np.inf]]), t)
    expected = np.where(t <= 0.6, t, 2 * 0.6 - t)
    assert np.allclose(integ[0], expected, atol=1e-14)
    assert np.array_equal(vals[0], np.where(t < 0.6, 1.0, -1.0))


# --- transition operator --------------------------------------------------

@given(gamma=st.floats(0.01, 5.0), sigma=st.floats(0.0, 3.0), dt=st.floats(1e-3, 2.0))
def test_ou_transition_matches_closed_form(gamma, sigma, dt):
    F, L = linear_gaussian_transition(np.array([[-gamma]]), np.array([sigma]), dt)
    assert F[0, 0] == pytest.approx(math.exp(-gamma * dt), rel=1e-12)
    var = sigma ** 2 * (1 - math.exp(-2 * gamma * dt)) / (2 * gamma)
    assert (L @ L.T)[0, 0] == pytest.approx(var, rel=1e-9, abs=1e-300)


# --- statistics -----------------------------------------------------------

def test_ou_stationary_variance_and_correlation():
    grid = TimeGrid(80.0, 161)
    ens = sample(OU, grid, 11, 20_000)
    x = ens.values
    k = np.searchsorted(grid.times, 60.0)
    theory = 0.63 ** 2 / 0.2
    var = x[:, k].var()
    se = theory * math.sqrt(2 / x.shape[0])
    assert abs(var - theory) < 3 * se
    lag = np.searchsorted(grid.times, 5.0)
    prod = x[:, k] * x[:, k + lag]
    assert abs(prod.mean() - theory * math.exp(-0.1 * 5.0)) < 4 * prod.std() / math.sqrt(prod.size)


def test_ou_h_independence():
    """The exact scheme gives the same law whatever the output step."""
    fine = sample(OU, TimeGrid(20.0, 401), 5, 20_000).values[:, -1]
    coarse = sample(OU, TimeGrid(20.0, 3), 6, 20_000).values[:, -1]
    assert stats.ks_2samp(fine, coarse).pvalue > 1e-3


def test_ou_integral_variance():
    gamma, sigma, t = 0.1, 0.63, 40.0
    ens = sample(OU, TimeGrid(t, 41), 21, 20_000)
    b = 2 * gamma * t - 3 - math.exp(-2 * gamma * t) + 4 * math.exp(-gamma * t)
    theory = sigma ** 2 / (2 * gamma ** 3) * b
    v = ens.integrated[:, -1].var()
    assert abs(v / theory - 1) < 4 * math.sqrt(2 / ens.n)


def test_rtn_switch_count_and_correlation():
    gamma, T = 0.1, 50.0
    ens = sample(RTN, TimeGrid(T, 501), 8, 20_000)
    x = ens.values
    # flips of sign between grid points undercount only pairs of switches within dt=0.1
    lag = 10
    prod = x[:, 100] * x[:, 100 + lag]
    tau = lag * 0.1
    assert abs(prod.mean() - math.exp(-2 * gamma * tau)) < 4 * prod.std() / math.sqrt(prod.size)


def test_rtn_switch_count_poisson():
    from qdephase.noise_gen import _switch_times
    rng = block_generator(0, 0)
    sw = _switch_times(rng, 0.1, 50.0, 20_000)
    counts = (sw <= 50.0).sum(axis=1)
    assert abs(counts.mean() - 5.0) < 3 * math.sqrt(5.0 / counts.size)


def test_kurtosis_split():
    grid = TimeGrid(40.0, 41)
    n = 20_000
    k_rtn = stats.kurtosis(sample(RTN, grid, 1, n).values[:, -1])
    assert k_rtn == pytest.approx(-2.0, abs=0.01)
    se = math.sqrt(24 / n)
    for spec in (OU, Y):
        assert abs(stats.kurtosis(sample(spec, grid, 2, n).values[:, -1])) < 4 * se
    z = sample(NoiseSpec.filtered_rtn(0.1, 0.5), grid, 3, n).values[:, -1]
    assert abs(stats.kurtosis(z)) > 3 * se


def test_filtered_substep_doubling_with_euler():
    """Doubling substeps moves the Euler-scheme D(t) by less than one standard error."""
    from qdephase.dephasing import simulate_curve
    spec = NoiseSpec.filtered_rtn(0.5, 0.5)
    g1 = TimeGrid.for_spec(spec, 20.0, 101)
    g2 = TimeGrid(20.0, 101, 2 * g1.substeps)
    a = simulate_curve(spec, g1, 1.0, 4000, 3, scheme="euler")
    b = simulate_curve(spec, g2, 1.0, 4000, 3, scheme="euler")
    assert np.all(np.abs(a.d_values - b.d_values) < np.maximum(a.std_err, 1e-12) + 1e-12)


@pytest.mark.parametrize("spec", [NoiseSpec.filtered_ou(0.5, 1.0, 1.0), NoiseSpec.ou(0.5, 1.0)])
def test_euler_converges_to_closed_form(spec):
    grid = TimeGrid(10.0, 51, 20)
    curve = simulate_curve(spec, grid, 1.0, 20_000, 5, scheme="euler")
    exact = dephasing_for(spec, 1.0)(grid.times)
    assert np.mean(np.abs(curve.d_values - exact) <= 4 * curve.std_err + 1e-12) >= 0.98
