"""Moment machinery for the measure-valued stationary law.

The three independent routes to the same mixed moments (triangular
recursion, set-partition expansion, importance-sampled Monte Carlo) are
cross-checked here at desk scale; the acceptance suite pushes them to the
full grid.
"""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fvbeta.analytic import pochhammer
from fvbeta.errors import InvalidParameterError, SizeLimitError
from fvbeta.random_measures import (
    MomentFunction,
    check_dirichlet_markov_krein,
    check_dirichlet_stable_duality,
    check_stable_tilt_identity,
    dirichlet_moment,
    evaluate_action,
    generator_moment_action,
    partition_moment_coefficient,
    sample_stationary_measure,
    set_partitions,
    stationary_moment,
    stationary_moment_tensors,
)
from fvbeta.samplers import FiniteMeasure, RngStream
from fvbeta.stationary1d import weighted_estimate

BELL = {1: 1, 2: 2, 3: 5, 4: 15, 5: 52, 6: 203}


def test_moment_function_power_evaluate():
    f = np.array([1.0, 0.0])
    phi = MomentFunction.power(f, 3)
    assert phi.n == 3
    mu = np.array([0.4, 0.6])
    assert phi.evaluate(mu) == pytest.approx(0.4**3)
    batch = np.array([[0.4, 0.6], [0.9, 0.1]])
    assert np.allclose(phi.evaluate(batch), [0.4**3, 0.9**3])


def test_moment_function_product_mixed_factors():
    phi = MomentFunction.product([np.array([1.0, 0.0]), np.array([0.0, 1.0])])
    assert phi.evaluate(np.array([0.3, 0.7])) == pytest.approx(0.21)


@pytest.mark.parametrize("n", sorted(BELL))
def test_set_partitions_bell_counts(n):
    parts = list(set_partitions(n))
    assert len(parts) == BELL[n]
    # each partition covers every slot exactly once
    for part in parts:
        flat = sorted(i for block in part for i in block)
        assert flat == list(range(n))


def test_dirichlet_moment_first_and_second():
    m = FiniteMeasure(np.array([1.0, 2.0, 1.0]))
    e0 = np.array([1.0, 0.0, 0.0])
    # E[mu_0] = m_0/|m|, E[mu_0**2] = m_0(m_0+1)/(|m|(|m|+1))
    assert dirichlet_moment(m, [e0]) == pytest.approx(0.25)
    assert dirichlet_moment(m, [e0, e0]) == pytest.approx(1.0 * 2.0 / (4.0 * 5.0))


def test_stationary_moment_frozen_two_type():
    # (alpha, c1, c2) = (0.5, 1, 1): E[x] = 1/2 and E[x**2] = 7/18
    nu = np.array([0.5, 0.5])
    assert stationary_moment(2.0, nu, 0.5, (0,)) == pytest.approx(0.5, abs=1e-14)
    assert stationary_moment(2.0, nu, 0.5, (0, 0)) == pytest.approx(7.0 / 18.0, abs=1e-14)


def test_stationary_moment_tensors_symmetry():
    nu = np.array([0.5, 0.25, 0.25])
    tensors = stationary_moment_tensors(2.0, nu, 0.5, 3)
    t3 = tensors[2].values
    for perm in itertools.permutations((0, 1, 2)):
        assert t3[0, 1, 2] == pytest.approx(t3[perm], abs=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_tensor_vs_partition_route(n):
    theta, alpha = 2.0, 0.5
    nu = np.array([0.5, 0.25, 0.25])
    tensors = stationary_moment_tensors(theta, nu, alpha, n)
    idx = tuple((0, 1, 0, 2, 1, 0)[:n])
    f_list = [np.eye(3)[i] for i in idx]
    pc = partition_moment_coefficient(theta, nu, alpha, f_list)
    assert abs(tensors[n - 1].values[idx] - pc / pochhammer(alpha, n)) < 1e-10


def test_partition_coefficient_caps_size():
    with pytest.raises(SizeLimitError):
        partition_moment_coefficient(1.0, np.array([1.0]), 0.5, [np.ones(1)] * 11)


def test_generator_action_kills_stationary_moments():
    # A applied to a moment monomial integrates to zero at stationarity;
    # each term's expectation comes from the partition route, which never
    # saw the triangular recursion
    theta, alpha = 2.0, 0.5
    nu = np.array([0.5, 0.25, 0.25])
    phi = MomentFunction.product([np.eye(3)[0], np.eye(3)[1], np.eye(3)[0]])
    terms = generator_moment_action(phi, theta, nu, alpha)
    total = 0.0
    for coeff, mono in terms:
        n = len(mono.factors)
        pm = partition_moment_coefficient(theta, nu, alpha, list(mono.factors))
        total += coeff * pm / pochhammer(alpha, n)
    assert abs(total) < 1e-12


def test_evaluate_action_batch_matches_scalar():
    theta, alpha = 1.5, 0.4
    nu = np.array([0.6, 0.4])
    phi = MomentFunction.power(np.array([1.0, 0.0]), 2)
    terms = generator_moment_action(phi, theta, nu, alpha)
    states = np.array([[0.2, 0.8], [0.7, 0.3], [0.5, 0.5]])
    batch = evaluate_action(terms, states)
    for i, row in enumerate(states):
        assert batch[i] == pytest.approx(float(evaluate_action(terms, row)))


def test_sampled_measure_matches_tensors():
    theta, alpha = 2.0, 0.5
    nu = np.array([0.5, 0.25, 0.25])
    m = FiniteMeasure(theta * nu)
    s = sample_stationary_measure(alpha, m, 200_000, RngStream(77, stream=0))
    t2 = stationary_moment_tensors(theta, nu, alpha, 2)[1].values
    est = weighted_estimate(s, lambda w: w[:, 0] * w[:, 1])
    assert abs(est.mean - t2[0, 1]) <= 4.0 * est.std_error


def test_sampled_measure_generator_mean_zero():
    # E[A phi] = 0 under the sampled stationary law
    theta, alpha = 2.0, 0.5
    nu = np.array([0.5, 0.25, 0.25])
    phi = MomentFunction.power(np.eye(3)[0], 2)
    terms = generator_moment_action(phi, theta, nu, alpha)
    s = sample_stationary_measure(alpha, FiniteMeasure(theta * nu), 200_000, RngStream(78, stream=0))
    est = weighted_estimate(s, lambda w: evaluate_action(terms, w))
    assert abs(est.mean) <= 4.0 * est.std_error


@pytest.mark.parametrize(
    "alpha,mw,f",
    [
        (0.5, (1.0, 1.0), (0.3, 0.7)),
        (0.7, (0.8, 0.5, 0.9), (0.2, 0.5, 0.9)),
    ],
)
def test_stable_tilt_identity(alpha, mw, f):
    est, closed = check_stable_tilt_identity(
        alpha, FiniteMeasure(np.array(mw)), np.array(f), 150_000, RngStream(79, stream=0)
    )
    assert abs(est.mean - closed) <= 4.0 * est.std_error


def test_dirichlet_stable_duality():
    est, other = check_dirichlet_stable_duality(
        0.5, FiniteMeasure(np.array([1.0, 1.0])), np.array([0.3, 0.7]), 150_000, RngStream(80, stream=0)
    )
    se = math.hypot(est.std_error, other.std_error)
    assert abs(est.mean - other.mean) <= 4.0 * se


def test_dirichlet_markov_krein():
    est, closed = check_dirichlet_markov_krein(
        FiniteMeasure(np.array([1.0, 2.0])), np.array([0.4, 1.1]), 150_000, RngStream(81, stream=0)
    )
    assert abs(est.mean - closed) <= 4.0 * est.std_error


def test_stationary_moment_requires_positive_theta():
    with pytest.raises(InvalidParameterError):
        stationary_moment(0.0, np.array([0.5, 0.5]), 0.5, (0,))


@given(st.integers(min_value=1, max_value=5))
def test_tensor_entries_in_unit_interval(n):
    tensors = stationary_moment_tensors(1.5, np.array([0.6, 0.4]), 0.4, n)
    vals = tensors[n - 1].values
    assert np.all(vals > 0.0) and np.all(vals < 1.0)
