"""Truncated jump-chain simulator and its generator oracles."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special

from fvbeta.errors import (
    EventRateOverflowError,
    InsufficientPathError,
    InvalidParameterError,
)
from fvbeta.fv_simulator import (
    EVENT_BUDGET,
    PathRecord,
    SimConfig,
    ergodic_moment_estimate,
    generator_apply_poly,
    generator_apply_quadrature,
    generator_apply_resolvent,
    simulate_path,
    truncation_rates,
)
from fvbeta.random_measures import MomentFunction
from fvbeta.samplers import RngStream
from fvbeta.stationary1d import ModelParams1D, moment_recursion


def test_truncation_rates_frozen_values():
    lam_rep, lam_mut, drift = truncation_rates(0.5, 2.0, 1e-3)
    assert lam_rep == pytest.approx(13400.9966, abs=1e-3)
    assert lam_mut == pytest.approx(26.8288, abs=1e-3)
    assert drift == pytest.approx(0.026847, abs=1e-5)


def test_truncation_rates_scaling_exponents():
    # rates diverge like eps**-(1+alpha) and eps**-alpha; drift dies like eps**(1-alpha)
    alpha = 0.5
    r1 = truncation_rates(alpha, 2.0, 1e-3)
    r2 = truncation_rates(alpha, 2.0, 1e-4)
    assert r2[0] / r1[0] == pytest.approx(10.0 ** (1.0 + alpha), rel=2e-3)
    assert r2[1] / r1[1] == pytest.approx(10.0**alpha, rel=2e-3)
    assert r1[2] / r2[2] == pytest.approx(10.0 ** (1.0 - alpha), rel=2e-3)


def test_truncation_rate_against_direct_quadrature():
    alpha, eps = 0.3, 1e-2
    lam_rep, _, _ = truncation_rates(alpha, 0.0, eps)
    b = special.beta(1.0 - alpha, 1.0 + alpha)
    val, err = integrate.quad(
        lambda u: u ** (-2.0 - alpha) * (1.0 - u) ** alpha / b, eps, 1.0, limit=200
    )
    assert lam_rep == pytest.approx(val, rel=1e-9)


def test_truncation_rates_validate():
    with pytest.raises(InvalidParameterError):
        truncation_rates(1.2, 1.0, 1e-3)
    with pytest.raises(InvalidParameterError):
        truncation_rates(0.5, -1.0, 1e-3)
    with pytest.raises(InvalidParameterError):
        truncation_rates(0.5, 1.0, 0.7)


@given(
    x=st.floats(min_value=0.01, max_value=0.99),
    alpha=st.floats(min_value=0.1, max_value=0.9),
    c1=st.floats(min_value=0.2, max_value=2.0),
    c2=st.floats(min_value=0.2, max_value=2.0),
)
def test_generator_on_identity_is_mutation_drift(x, alpha, c1, c2):
    # reproduction preserves mass, so L x = (c1(1-x) - c2 x)/(alpha+1)
    p = ModelParams1D(alpha, c1, c2)
    expect = (c1 * (1.0 - x) - c2 * x) / (alpha + 1.0)
    assert generator_apply_poly(1, x, p) == pytest.approx(expect, rel=1e-12, abs=1e-12)


def _poly_pack(n: int):
    def g(y: float) -> float:
        return y**n

    derivs = tuple(
        (lambda y, k=k: math.perm(n, k) * y ** (n - k) if k <= n else 0.0)
        for k in (1, 2, 3, 4)
    )

    def rem2(y: float, h: float) -> float:
        return sum(math.comb(n, j) * y ** (n - j) * h**j for j in range(2, n + 1))

    return g, derivs, rem2


@pytest.mark.parametrize("n", [2, 3, 5])
@pytest.mark.parametrize("x", [0.15, 0.5, 0.85])
def test_generator_poly_matches_quadrature(n, x):
    g, derivs, rem2 = _poly_pack(n)
    for p in (ModelParams1D(0.5, 1.0, 1.0), ModelParams1D(0.3, 0.5, 2.0)):
        closed = generator_apply_poly(n, x, p)
        quad = generator_apply_quadrature(g, derivs, x, p, remainder2=rem2)
        assert quad == pytest.approx(closed, rel=1e-9, abs=1e-11)


def test_generator_resolvent_frozen_endpoints():
    # alpha=1/2, t=1, c1=c2=1: mutation term only, +-(1+t)**(a-1)/(a+1) scaled
    p = ModelParams1D(0.5, 1.0, 1.0)
    assert generator_apply_resolvent(1.0, 0.0, p) == pytest.approx(-0.4714045207910317, rel=1e-12)
    assert generator_apply_resolvent(1.0, 1.0, p) == pytest.approx(0.23570226039551584, rel=1e-12)


@pytest.mark.parametrize("x", [0.0, 0.3, 0.7, 1.0])
@pytest.mark.parametrize("t", [0.5, 2.0])
def test_generator_resolvent_matches_quadrature(x, t):
    p = ModelParams1D(0.4, 1.2, 0.7)

    def g(y: float) -> float:
        return 1.0 / (1.0 + t * y)

    derivs = tuple(
        (lambda y, k=k: math.factorial(k) * (-t) ** k / (1.0 + t * y) ** (k + 1))
        for k in (1, 2, 3, 4)
    )

    def rem2(y: float, h: float) -> float:
        base = 1.0 + t * y
        return t * t * h * h / (base * base * (base + t * h))

    closed = generator_apply_resolvent(t, x, p)
    quad = generator_apply_quadrature(g, derivs, x, p, remainder2=rem2)
    assert quad == pytest.approx(closed, rel=1e-10, abs=1e-12)


def test_sim_config_validates():
    with pytest.raises(InvalidParameterError):
        SimConfig(epsilon=0.6)
    with pytest.raises(InvalidParameterError):
        SimConfig(t_end=-1.0)
    with pytest.raises(InvalidParameterError):
        SimConfig(record_dt=0.0)


def test_point_mass_without_mutation_is_absorbing():
    cfg = SimConfig(epsilon=1e-2, t_end=5.0, record_dt=0.05)
    path = simulate_path([1.0, 0.0], 0.0, [0.5, 0.5], 0.5, cfg, RngStream(3))
    assert np.max(np.abs(path.states[:, 0] - 1.0)) == 0.0


def test_simulate_rejects_off_simplex_start():
    cfg = SimConfig(epsilon=1e-2, t_end=1.0)
    with pytest.raises(InvalidParameterError):
        simulate_path([0.7, 0.7], 1.0, [0.5, 0.5], 0.5, cfg, RngStream(0))
    with pytest.raises(InvalidParameterError):
        simulate_path([1.0], 1.0, [1.0], 0.5, cfg, RngStream(0))


def test_event_budget_guard():
    cfg = SimConfig(epsilon=1e-5, t_end=500.0)
    lam_rep, lam_mut, _ = truncation_rates(0.5, 1.0, 1e-5)
    assert (lam_rep + lam_mut) * cfg.t_end > EVENT_BUDGET
    with pytest.raises(EventRateOverflowError):
        simulate_path([0.5, 0.5], 1.0, [0.5, 0.5], 0.5, cfg, RngStream(0))


def test_ergodic_estimate_needs_records():
    cfg = SimConfig(epsilon=5e-2, t_end=1.0, record_dt=0.05)
    path = simulate_path([0.5, 0.5], 2.0, [0.5, 0.5], 0.5, cfg, RngStream(4))
    with pytest.raises(InsufficientPathError):
        ergodic_moment_estimate(path, MomentFunction.power(np.array([1.0, 0.0]), 1), 0.5)


def test_ergodic_moments_match_recursion():
    # short run; the eps=1e-3 truncation bias is well inside the MC band
    cfg = SimConfig(epsilon=1e-3, t_end=400.0, record_dt=0.05)
    path = simulate_path([0.5, 0.5], 2.0, [0.5, 0.5], 0.5, cfg, RngStream(11, stream=2))
    f = np.array([1.0, 0.0])
    m = moment_recursion(ModelParams1D(0.5, 1.0, 1.0), 2)
    e1 = ergodic_moment_estimate(path, MomentFunction.power(f, 1), 40.0)
    e2 = ergodic_moment_estimate(path, MomentFunction.power(f, 2), 40.0)
    assert abs(e1.mean - m[1]) <= 4.0 * e1.std_error
    assert abs(e2.mean - m[2]) <= 4.0 * e2.std_error


def test_multi_type_path_stays_on_simplex():
    cfg = SimConfig(epsilon=5e-3, t_end=20.0, record_dt=0.05)
    mu0 = [0.4, 0.3, 0.2, 0.1]
    path = simulate_path(mu0, 1.0, [0.25] * 4, 0.5, cfg, RngStream(12))
    assert path.states.shape == (401, 4)
    assert np.all(path.states >= 0.0)
    assert np.max(np.abs(path.states.sum(axis=1) - 1.0)) < 1e-9


def test_path_record_csv_roundtrip(tmp_path):
    times = np.array([0.0, 0.5, 1.0])
    states = np.array([[0.25, 0.75], [0.5, 0.5], [1.0 / 3.0, 2.0 / 3.0]])
    out = tmp_path / "path.csv"
    PathRecord(times, states).write_csv(str(out))
    lines = out.read_text().splitlines()
    assert lines[0] == "time,w_1,w_2"
    data = np.loadtxt(str(out), delimiter=",", skiprows=1)
    np.testing.assert_array_equal(data[:, 0], times)
    np.testing.assert_array_equal(data[:, 1:], states)
