"""Pathwise simulation of the measure-valued jump process.

Events replace a fraction u of the population: reproduction picks the new
type from the current state (rate density u**(-2-alpha)(1-u)**alpha up to
normalization), mutation picks it from the base distribution nu (density
u**(-1-alpha)(1-u)**(alpha-1), total weight theta/(alpha+1)). Jumps below a
truncation level epsilon are dropped; the dropped mutation jumps act at
first order like a deterministic pull toward nu and are optionally
compensated by the exact exponential drift between events. Dropped
reproduction jumps average to zero at first order, so they get no
compensation; the documented bias is O(epsilon**(1-alpha)).

Closed-form evaluators of the generator on monomials x**n and on resolvent
kernels 1/(1+t*x), plus a direct-quadrature oracle, validate the simulator
and feed the factorization tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy import special

from .analytic import DEFAULT_QUAD, QuadratureSpec, beta_weight_integral, pochhammer
from .errors import (
    EventRateOverflowError,
    InsufficientPathError,
    InvalidParameterError,
)
from .random_measures import MomentFunction
from .samplers import RngStream
from .stationary1d import EstimateWithError, ModelParams1D

__all__ = [
    "SimConfig",
    "PathRecord",
    "EVENT_BUDGET",
    "truncation_rates",
    "generator_apply_poly",
    "generator_apply_resolvent",
    "generator_apply_quadrature",
    "simulate_path",
    "ergodic_moment_estimate",
]

EVENT_BUDGET = 6.0e9


@dataclass(frozen=True)
class SimConfig:
    epsilon: float = 1e-4
    t_end: float = 100.0
    record_dt: float = 0.05
    drift_compensation: bool = True

    def __post_init__(self) -> None:
        if not (0.0 < self.epsilon < 0.5):
            raise InvalidParameterError("epsilon must lie in (0, 0.5)")
        if self.t_end <= 0 or self.record_dt <= 0:
            raise InvalidParameterError("t_end and record_dt must be positive")


@dataclass(frozen=True)
class PathRecord:
    """Recorded path on a uniform time grid; states are simplex rows."""

    times: np.ndarray
    states: np.ndarray

    def write_csv(self, path: str) -> None:
        k = self.states.shape[1]
        header = "time," + ",".join(f"w_{i+1}" for i in range(k))
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for t, row in zip(self.times, self.states):
                cells = ",".join(f"{v:.17g}" for v in row)
                fh.write(f"{t:.17g},{cells}\n")


def truncation_rates(
    alpha: float, theta: float, epsilon: float, spec: QuadratureSpec = DEFAULT_QUAD
) -> tuple[float, float, float]:
    """(reproduction rate, mutation rate, compensated drift rate) at level epsilon.

    The drift rate multiplies (nu - mu); it is theta/(alpha+1) times the
    beta measure's mass below epsilon, available exactly as a regularized
    incomplete beta.
    """
    if not (0.0 < alpha < 1.0):
        raise InvalidParameterError("alpha must lie in (0,1)")
    if theta < 0:
        raise InvalidParameterError("theta must be >= 0")
    if not (0.0 < epsilon < 0.5):
        raise InvalidParameterError("epsilon must lie in (0, 0.5)")
    b_rep = special.beta(1.0 - alpha, 1.0 + alpha)
    lam_rep = beta_weight_integral(
        lambda u: u ** (-2.0 - alpha) / b_rep, 1.0, 1.0 + alpha, spec, lo=epsilon, hi=1.0
    )
    if theta > 0:
        b_mut = special.beta(1.0 - alpha, alpha)
        lam_mut = (
            theta
            / (alpha + 1.0)
            * beta_weight_integral(
                lambda u: u ** (-1.0 - alpha) / b_mut, 1.0, alpha, spec, lo=epsilon, hi=1.0
            )
        )
        drift = theta / (alpha + 1.0) * special.betainc(1.0 - alpha, alpha, epsilon)
    else:
        lam_mut = 0.0
        drift = 0.0
    return lam_rep, lam_mut, drift


# ---------------------------------------------------------------------------
# closed-form generator evaluators (two types, state x = mass of type 1)


def generator_apply_poly(n: int, x: float, p: ModelParams1D, spec=None) -> float:
    """Generator acting on x**n, as a finite sum of gamma-ratio terms.

    Merging k of n slots contributes x**(n-k+1) - x**n with weight
    C(n,k)(1-a)_{k-2}(a+1)_{n-k}/Gamma(n); replacing k slots contributes
    (c1 x**(n-k) - (c1+c2) x**n) with weight
    C(n,k)(1-a)_{k-1}(a)_{n-k}/((a+1)Gamma(n)).
    """
    if n < 1:
        raise InvalidParameterError("n must be >= 1")
    if not (0.0 <= x <= 1.0):
        raise InvalidParameterError("x must lie in [0,1]")
    a, c1, c2 = p.alpha, p.c1, p.c2
    gam_n = math.gamma(n)
    xn = x**n
    out = 0.0
    for k in range(2, n + 1):
        out += (
            math.comb(n, k)
            * pochhammer(1.0 - a, k - 2)
            * pochhammer(a + 1.0, n - k)
            / gam_n
            * (x ** (n - k + 1) - xn)
        )
    for k in range(1, n + 1):
        out += (
            math.comb(n, k)
            * pochhammer(1.0 - a, k - 1)
            * pochhammer(a, n - k)
            / ((a + 1.0) * gam_n)
            * (c1 * x ** (n - k) - (c1 + c2) * xn)
        )
    return out


def generator_apply_resolvent(t: float, x: float, p: ModelParams1D) -> float:
    """Generator acting on G_t(x) = 1/(1+t*x), in closed form.

    The reproduction part carries the x(1-x) factor (vanishes at the
    boundary), the mutation part is first order in the resolvent kernel.
    """
    if t <= 0:
        raise InvalidParameterError("t must be positive")
    if not (0.0 <= x <= 1.0):
        raise InvalidParameterError("x must lie in [0,1]")
    a, c1, c2 = p.alpha, p.c1, p.c2
    base = 1.0 + t * x
    rep = t * ((1.0 + t) ** a - 1.0) / a * x * (1.0 - x) / base ** (2.0 + a)
    mut = (
        -t
        / (a + 1.0)
        * (c1 * (1.0 - x) * (1.0 + t) ** (a - 1.0) - c2 * x)
        / base ** (1.0 + a)
    )
    return rep + mut


def generator_apply_quadrature(
    g,
    derivs,
    x: float,
    p: ModelParams1D,
    spec: QuadratureSpec = DEFAULT_QUAD,
    delta: float = 1e-4,
    remainder2=None,
) -> float:
    """Generator on a smooth G by direct quadrature; independent oracle.

    Splits each jump integral at delta: on [delta, 1] the compensated
    brackets are integrated with the beta endpoint weight; on [0, delta]
    the bracket is replaced by its Taylor terms (orders 2..4 for
    reproduction, 1..4 for mutation), whose beta-weight integrals are
    incomplete-beta closed forms. Truncation error is O(delta**(4-alpha))
    from the first dropped Taylor order.

    The reproduction bracket is O(u**2) but assembled from O(u) pieces, so
    direct evaluation near delta loses ~8 digits and can defeat the
    quadrature tolerance. Passing remainder2(y, h) = g(y+h) - g(y) - h g'(y)
    in a cancellation-free form (available in closed form for resolvent
    kernels and polynomials) removes the problem; without it the brackets
    are evaluated by naive differencing.

    Args:
        g: the test function on [0,1].
        derivs: (g', g'', g''', g'''') callables.
        x: evaluation state.
        p: model parameters.
        spec: quadrature budget for the [delta, 1] pieces.
        delta: split point.
        remainder2: optional stable second-order Taylor remainder of g.
    """
    if not (0.0 <= x <= 1.0):
        raise InvalidParameterError("x must lie in [0,1]")
    a, c1, c2 = p.alpha, p.c1, p.c2
    g1, g2, g3, g4 = derivs
    gx = g(x)
    g1x = g1(x)

    if remainder2 is not None:

        def rep_bracket(u: float) -> float:
            # the O(u) terms cancel exactly: x u(1-x) g' - (1-x) u x g' = 0
            return x * remainder2(x, u * (1.0 - x)) + (1.0 - x) * remainder2(x, -u * x)

        def mut_bracket(u: float) -> float:
            lin = (c1 * (1.0 - x) - c2 * x) * u * g1x
            return lin + c1 * remainder2(x, u * (1.0 - x)) + c2 * remainder2(x, -u * x)

    else:

        def rep_bracket(u: float) -> float:
            return x * (g(x + u * (1.0 - x)) - gx) + (1.0 - x) * (g(x - u * x) - gx)

        def mut_bracket(u: float) -> float:
            return c1 * (g(x + u * (1.0 - x)) - gx) + c2 * (g(x - u * x) - gx)

    b_rep = special.beta(1.0 - a, 1.0 + a)
    b_mut = special.beta(1.0 - a, a)

    rep_tail = beta_weight_integral(
        lambda u: rep_bracket(u) * u ** (-2.0 - a) / b_rep,
        1.0,
        1.0 + a,
        spec,
        lo=delta,
        hi=1.0,
    )
    # Taylor coefficients of the brackets in u
    d2, d3, d4 = g2(x), g3(x), g4(x)
    rep_head = 0.0
    for j, gj in ((2, d2), (3, d3), (4, d4)):
        beta_j = x * (1.0 - x) * ((1.0 - x) ** (j - 1) + (-1.0) ** j * x ** (j - 1)) * gj / math.factorial(j)
        ij = (
            special.beta(j - 1.0 - a, 1.0 + a)
            * special.betainc(j - 1.0 - a, 1.0 + a, delta)
            / b_rep
        )
        rep_head += beta_j * ij
    out = rep_tail + rep_head

    if p.theta > 0:
        mut_tail = beta_weight_integral(
            lambda u: mut_bracket(u) * u ** (-1.0 - a) / (b_mut * (a + 1.0)),
            1.0,
            a,
            spec,
            lo=delta,
            hi=1.0,
        )
        mut_head = 0.0
        for j, gj in ((1, g1(x)), (2, d2), (3, d3), (4, d4)):
            kap = (c1 * (1.0 - x) ** j + c2 * (-x) ** j) * gj / math.factorial(j)
            jj = special.beta(j - a, a) * special.betainc(j - a, a, delta) / b_mut
            mut_head += kap * jj
        out += mut_tail + mut_head / (a + 1.0)
    return out


# ---------------------------------------------------------------------------
# jump-chain kernels


@njit(cache=True)
def _draw_rep_size(alpha, eps_pow):
    while True:
        v = np.random.random()
        u = (eps_pow - v * (eps_pow - 1.0)) ** (-1.0 / (1.0 + alpha))
        if u > 1.0:
            u = 1.0
        if np.random.random() <= (1.0 - u) ** alpha:
            return u


@njit(cache=True)
def _draw_mut_size(alpha, eps_a, q1):
    # two-piece envelope: u**(-1-a) below 1/2, (1-u)**(a-1) above
    two_a = 2.0**alpha
    while True:
        if np.random.random() < q1:
            v = np.random.random()
            u = (eps_a - v * (eps_a - two_a)) ** (-1.0 / alpha)
            if np.random.random() <= (2.0 * (1.0 - u)) ** (alpha - 1.0):
                return u
        else:
            v = np.random.random()
            u = 1.0 - 0.5 * v ** (1.0 / alpha)
            if np.random.random() <= (2.0 * u) ** (-1.0 - alpha):
                return u


@njit(cache=True)
def _run_two_type(
    x0, nu1, alpha, eps, t_end, rec_times, lam_rep, lam_mut, lam_drift, seed
):
    np.random.seed(seed)
    x = x0
    n_rec = rec_times.shape[0]
    out = np.empty(n_rec)
    lam_tot = lam_rep + lam_mut
    p_rep = lam_rep / lam_tot
    eps_pow = eps ** (-(1.0 + alpha))
    eps_a = eps ** (-alpha)
    two_a = 2.0**alpha
    w1 = 0.5 ** (alpha - 1.0) * (eps_a - two_a) / alpha
    q1 = w1 / (w1 + 2.0 / alpha)
    t_cur = 0.0
    rec_i = 0
    while True:
        tau = np.random.exponential() / lam_tot
        t_ev = t_cur + tau
        while rec_i < n_rec and rec_times[rec_i] <= t_ev:
            dt = rec_times[rec_i] - t_cur
            if lam_drift > 0.0 and dt > 0.0:
                w = lam_drift * dt
                e = w - 0.5 * w * w if w < 1e-8 else 1.0 - math.exp(-w)
                out[rec_i] = x + e * (nu1 - x)
            else:
                out[rec_i] = x
            rec_i += 1
        if t_ev >= t_end:
            break
        if lam_drift > 0.0:
            w = lam_drift * tau
            e = w - 0.5 * w * w if w < 1e-8 else 1.0 - math.exp(-w)
            x += e * (nu1 - x)
        if np.random.random() < p_rep:
            u = _draw_rep_size(alpha, eps_pow)
            to_one = np.random.random() < x
        else:
            u = _draw_mut_size(alpha, eps_a, q1)
            to_one = np.random.random() < nu1
        x *= 1.0 - u
        if to_one:
            x += u
        t_cur = t_ev
    return out


@njit(cache=True)
def _run_multi_type(
    x0, nu, alpha, eps, t_end, rec_times, lam_rep, lam_mut, lam_drift, seed
):
    np.random.seed(seed)
    k = x0.shape[0]
    x = x0.copy()
    n_rec = rec_times.shape[0]
    out = np.empty((n_rec, k))
    lam_tot = lam_rep + lam_mut
    p_rep = lam_rep / lam_tot
    eps_pow = eps ** (-(1.0 + alpha))
    eps_a = eps ** (-alpha)
    two_a = 2.0**alpha
    w1 = 0.5 ** (alpha - 1.0) * (eps_a - two_a) / alpha
    q1 = w1 / (w1 + 2.0 / alpha)
    t_cur = 0.0
    rec_i = 0
    n_ev = 0
    while True:
        tau = np.random.exponential() / lam_tot
        t_ev = t_cur + tau
        while rec_i < n_rec and rec_times[rec_i] <= t_ev:
            dt = rec_times[rec_i] - t_cur
            if lam_drift > 0.0 and dt > 0.0:
                w = lam_drift * dt
                e = w - 0.5 * w * w if w < 1e-8 else 1.0 - math.exp(-w)
            else:
                e = 0.0
            for i in range(k):
                out[rec_i, i] = x[i] + e * (nu[i] - x[i])
            rec_i += 1
        if t_ev >= t_end:
            break
        if lam_drift > 0.0:
            w = lam_drift * tau
            e = w - 0.5 * w * w if w < 1e-8 else 1.0 - math.exp(-w)
            for i in range(k):
                x[i] += e * (nu[i] - x[i])
        if np.random.random() < p_rep:
            u = _draw_rep_size(alpha, eps_pow)
            v2 = np.random.random()
            acc = 0.0
            r = k - 1
            for i in range(k):
                acc += x[i]
                if v2 < acc:
                    r = i
                    break
        else:
            u = _draw_mut_size(alpha, eps_a, q1)
            v2 = np.random.random()
            acc = 0.0
            r = k - 1
            for i in range(k):
                acc += nu[i]
                if v2 < acc:
                    r = i
                    break
        fac = 1.0 - u
        for i in range(k):
            x[i] *= fac
        x[r] += u
        t_cur = t_ev
        n_ev += 1
        if n_ev % 1048576 == 0:
            s = 0.0
            for i in range(k):
                s += x[i]
            for i in range(k):
                x[i] /= s
    return out


def simulate_path(mu0, theta: float, nu, alpha: float, cfg: SimConfig, rng: RngStream) -> PathRecord:
    """Run the truncated jump chain and record states on a uniform grid.

    Args:
        mu0: initial simplex state (array or ProbabilityVector).
        theta: total mutation intensity (>= 0).
        nu: base type distribution (ignored when theta = 0 except for shape).
        alpha: reproduction index in (0,1).
        cfg: truncation level, horizon, recording grid, drift switch.
        rng: stream; the kernel is seeded from it, so runs are reproducible.

    Raises:
        EventRateOverflowError: when the expected number of events at this
            epsilon exceeds the module budget.
    """
    mu0 = np.asarray(getattr(mu0, "weights", mu0), dtype=float)
    nu = np.asarray(getattr(nu, "weights", nu), dtype=float)
    if mu0.ndim != 1 or mu0.size < 2 or mu0.size != nu.size:
        raise InvalidParameterError("mu0 and nu must be 1-d with matching size >= 2")
    if np.any(mu0 < 0) or abs(mu0.sum() - 1.0) > 1e-9:
        raise InvalidParameterError("mu0 must lie on the simplex")
    if np.any(nu < 0) or abs(nu.sum() - 1.0) > 1e-9:
        raise InvalidParameterError("nu must lie on the simplex")
    if theta < 0:
        raise InvalidParameterError("theta must be >= 0")
    mu0 = mu0 / mu0.sum()
    nu = nu / nu.sum()
    lam_rep, lam_mut, lam_drift = truncation_rates(alpha, theta, cfg.epsilon)
    if not cfg.drift_compensation:
        lam_drift = 0.0
    expected_events = (lam_rep + lam_mut) * cfg.t_end
    if expected_events > EVENT_BUDGET:
        raise EventRateOverflowError(
            f"expected {expected_events:.3g} events exceeds budget {EVENT_BUDGET:.3g}"
        )
    n_rec = int(math.floor(cfg.t_end / cfg.record_dt)) + 1
    rec_times = np.arange(n_rec) * cfg.record_dt
    seed = rng.integer_seed()
    if mu0.size == 2:
        xs = _run_two_type(
            float(mu0[0]), float(nu[0]), alpha, cfg.epsilon, cfg.t_end,
            rec_times, lam_rep, lam_mut, lam_drift, seed,
        )
        states = np.column_stack([xs, 1.0 - xs])
    else:
        states = _run_multi_type(
            mu0, nu, alpha, cfg.epsilon, cfg.t_end,
            rec_times, lam_rep, lam_mut, lam_drift, seed,
        )
    return PathRecord(rec_times, states)


def ergodic_moment_estimate(
    path: PathRecord, phi: MomentFunction, burn_in: float
) -> EstimateWithError:
    """Time average of phi along the path with batch-means error bars.

    The record grid is uniform, so the time average is the sample mean
    over kept records; the SE comes from 20 contiguous batches, which
    absorbs autocorrelation at lags shorter than a batch.
    """
    keep = path.times >= burn_in
    vals = np.asarray(phi.evaluate(path.states[keep]), dtype=float)
    n_batches = 20
    if vals.size < n_batches:
        raise InsufficientPathError(
            f"only {vals.size} records after burn-in, need >= {n_batches}"
        )
    batches = np.array_split(vals, n_batches)
    means = np.array([b.mean() for b in batches])
    se = float(means.std(ddof=1) / math.sqrt(n_batches))
    return EstimateWithError(float(vals.mean()), se, int(vals.size))
