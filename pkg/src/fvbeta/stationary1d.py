"""Stationary law of the two-type process: samplers, moments, ratio CDF.

The law on [0,1] is realized by importance sampling: draw a beta-mixed pair
of one-sided stable masses (Y1, Y2), keep the ratio Y1/(Y1+Y2) as the value
and (Y1+Y2)**(-alpha) as the weight. Expectations under the law are
self-normalized weighted means. For c1+c2 > 1 an equivalent representation
replaces the stable pair by independent positive Linnik variables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .analytic import DEFAULT_QUAD, QuadratureSpec, beta_weight_integral, pochhammer
from .errors import InvalidParameterError
from .samplers import RngStream, sample_beta, sample_linnik, sample_stable

__all__ = [
    "ModelParams1D",
    "WeightedSample",
    "WeightedSamples",
    "EstimateWithError",
    "weighted_estimate",
    "plain_estimate",
    "sample_stationary_tilted",
    "sample_stationary_linnik",
    "moment_recursion",
    "ratio_cdf",
    "tilted_ratio_expectation",
    "tilted_ratio_closed_form",
]


@dataclass(frozen=True)
class ModelParams1D:
    """Two-type model: reproduction index alpha, mutation weights (c1, c2)."""

    alpha: float
    c1: float
    c2: float

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha < 1.0):
            raise InvalidParameterError(f"alpha must lie in (0,1), got {self.alpha}")
        if self.c1 <= 0 or self.c2 <= 0:
            raise InvalidParameterError("c1, c2 must be positive")

    @property
    def theta(self) -> float:
        return self.c1 + self.c2

    @property
    def nu1(self) -> float:
        return self.c1 / (self.c1 + self.c2)


@dataclass(frozen=True)
class WeightedSample:
    value: object
    weight: float


class WeightedSamples:
    """Array-backed batch of weighted draws; indexing yields WeightedSample."""

    def __init__(self, values: np.ndarray, weights: np.ndarray):
        values = np.asarray(values, dtype=float)
        weights = np.asarray(weights, dtype=float)
        if weights.ndim != 1 or values.shape[0] != weights.shape[0]:
            raise InvalidParameterError("values and weights must share the leading axis")
        self.values = values
        self.weights = weights

    def __len__(self) -> int:
        return self.weights.shape[0]

    def __getitem__(self, i: int) -> WeightedSample:
        v = self.values[i]
        return WeightedSample(float(v) if np.ndim(v) == 0 else v, float(self.weights[i]))


@dataclass(frozen=True)
class EstimateWithError:
    mean: float
    std_error: float
    n: int


def weighted_estimate(samples: WeightedSamples, g=None) -> EstimateWithError:
    """Self-normalized weighted mean of g(value) with a delta-method SE.

    g may be a callable applied to the value array, a precomputed array of
    g-values, or None for the identity.
    """
    w = samples.weights
    if g is None:
        gv = samples.values
    elif callable(g):
        gv = np.asarray(g(samples.values), dtype=float)
    else:
        gv = np.asarray(g, dtype=float)
    if gv.shape[0] != w.shape[0]:
        raise InvalidParameterError("g-values must align with the weights")
    wsum = w.sum()
    if wsum <= 0:
        raise InvalidParameterError("weights sum to zero")
    est = float(np.dot(w, gv) / wsum)
    # w-weighted ratio estimator: Var ~ sum w_i^2 (g_i - est)^2 / (sum w)^2
    se = float(np.sqrt(np.sum((w * (gv - est)) ** 2)) / wsum)
    return EstimateWithError(est, se, int(w.shape[0]))


def plain_estimate(values: np.ndarray) -> EstimateWithError:
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    return EstimateWithError(float(values.mean()), float(values.std(ddof=1) / math.sqrt(n)), n)


def _redraw_degenerate(y1, y2, draw):
    """Redraw pairs whose sum underflows; keeps the estimator well defined."""
    s = y1 + y2
    bad = ~np.isfinite(s) | (s < 1e-300)
    while np.any(bad):
        idx = np.flatnonzero(bad)
        ny1, ny2 = draw(idx.size)
        y1[idx], y2[idx] = ny1, ny2
        s = y1 + y2
        bad = ~np.isfinite(s) | (s < 1e-300)
    return y1, y2, s


def sample_stationary_tilted(p: ModelParams1D, n: int, rng: RngStream) -> WeightedSamples:
    """Importance sample of the stationary law via the stable-pair mixture.

    y ~ Beta(c1, c2); Y1, Y2 one-sided stable with scales y, 1-y;
    value Y1/(Y1+Y2), weight (Y1+Y2)**(-alpha). The weighted normalizer
    has mean 1/Gamma(alpha+1).
    """
    if n < 1:
        raise InvalidParameterError("n must be >= 1")

    def draw(m):
        y = sample_beta(p.c1, p.c2, rng, size=m)
        return sample_stable(p.alpha, y, rng), sample_stable(p.alpha, 1.0 - y, rng)

    y1, y2 = draw(n)
    y1, y2, s = _redraw_degenerate(y1, y2, draw)
    return WeightedSamples(y1 / s, s ** (-p.alpha))


def sample_stationary_linnik(p: ModelParams1D, n: int, rng: RngStream) -> WeightedSamples:
    """Equivalent representation through independent positive Linnik masses.

    Only valid for c1 + c2 > 1: value Z1/(Z1+Z2), weight (Z1+Z2)**(-alpha)
    with Z_i Linnik(alpha, c_i).
    """
    if p.c1 + p.c2 <= 1.0:
        raise InvalidParameterError("linnik representation needs c1 + c2 > 1")
    if n < 1:
        raise InvalidParameterError("n must be >= 1")

    def draw(m):
        return sample_linnik(p.alpha, p.c1, rng, size=m), sample_linnik(p.alpha, p.c2, rng, size=m)

    z1, z2 = draw(n)
    z1, z2, s = _redraw_degenerate(z1, z2, draw)
    return WeightedSamples(z1 / s, s ** (-p.alpha))


def moment_recursion(p: ModelParams1D, n_max: int) -> np.ndarray:
    """Stationary moments E[x**n], n = 1..n_max, by the generator recursion.

    Setting the generator's action on x**n to zero in expectation gives a
    triangular system: the n-th moment is a positive combination of lower
    ones from coalescence (merge) terms and mutation (replacement) terms.

    Returns:
        Array of length n_max + 1 with entry n holding E[x**n] (entry 0 is 1).
    """
    if n_max < 1:
        raise InvalidParameterError("n_max must be >= 1")
    a, c1 = p.alpha, p.c1
    theta = p.theta
    m = np.empty(n_max + 1)
    m[0] = 1.0
    for n in range(1, n_max + 1):
        merge = 0.0
        for k in range(2, n + 1):
            merge += (
                math.comb(n, k)
                * pochhammer(1.0 - a, k - 2)
                * pochhammer(a + 1.0, n - k)
                * m[n - k + 1]
            )
        repl = 0.0
        for k in range(1, n + 1):
            repl += (
                math.comb(n, k)
                * pochhammer(1.0 - a, k - 1)
                * pochhammer(a, n - k)
                * m[n - k]
            )
        diag = pochhammer(a + 1.0, n - 1) * (theta + n - 1.0) / (a + 1.0)
        m[n] = (merge + c1 * repl / (a + 1.0)) / diag
    return m


def ratio_cdf(x: float, y: float, alpha: float, spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Tilted CDF of the stable ratio at mixing weight y.

    Gamma(alpha+1) E_y[(Y1+Y2)**(-alpha); Y1/(Y1+Y2) <= x] equals

        (sin(pi a)/pi) (1-y) int_0^x u**a (x-u)**(a-1) / D(u) du,
        D(u) = ((1-y) u**a)**2 + (y (1-u)**a)**2
               + 2 y (1-y) u**a (1-u)**a cos(pi a),

    computed after u = x*v with the (v**a, (1-v)**(a-1)) weight handled by
    QAWS. At y = 1/2, alpha = 1/2 this reduces to F(x) = x exactly.
    """
    if not (0.0 < alpha < 1.0):
        raise InvalidParameterError("alpha must lie in (0,1)")
    if not (0.0 < y < 1.0):
        raise InvalidParameterError("mixing weight y must lie strictly in (0,1)")
    if x < 0.0 or x > 1.0:
        raise InvalidParameterError("x must lie in [0,1]")
    if x == 0.0:
        return 0.0
    a = alpha
    cpa = math.cos(math.pi * a)

    def g(v: float) -> float:
        u = x * v
        t1 = (1.0 - y) * u**a
        t2 = y * (1.0 - u) ** a
        d = t1 * t1 + t2 * t2 + 2.0 * t1 * t2 * cpa
        return 1.0 / d

    core = beta_weight_integral(g, a + 1.0, a, spec)
    return math.sin(math.pi * a) / math.pi * (1.0 - y) * x ** (2.0 * a) * core


def tilted_ratio_closed_form(t: float, y: float, alpha: float) -> float:
    """E_y[(t Y1 + Y2)**(-alpha)] = 1 / (Gamma(a+1) (1 + (t**a - 1) y))."""
    if t < 0 or not (0.0 <= y <= 1.0):
        raise InvalidParameterError("need t >= 0 and y in [0,1]")
    if t == 0.0 and y == 1.0:
        raise InvalidParameterError("t = 0 with y = 1 degenerates")
    return 1.0 / (special.gamma(alpha + 1.0) * (1.0 + (t**alpha - 1.0) * y))


def tilted_ratio_expectation(
    t: float, y: float, alpha: float, n: int, rng: RngStream
) -> tuple[EstimateWithError, float]:
    """Monte Carlo for E_y[(t Y1 + Y2)**(-alpha)] with its closed form.

    Plain (unweighted) mean over n independent stable pairs; the second
    element is tilted_ratio_closed_form(t, y, alpha).
    """
    closed = tilted_ratio_closed_form(t, y, alpha)
    y1 = sample_stable(alpha, y, rng, size=n) if y > 0 else np.zeros(n)
    y2 = sample_stable(alpha, 1.0 - y, rng, size=n) if y < 1 else np.zeros(n)
    vals = (t * y1 + y2) ** (-alpha)
    return plain_estimate(vals), closed
