"""Moment calculus for the measure-valued process on a finite type space.

Three independent routes to the same stationary mixed moments live here:

* a triangular recursion obtained by killing the generator's action on
  monomials ⟨μ,f_1⟩...⟨μ,f_n⟩ in expectation,
* a set-partition expansion whose blocks carry Dirichlet mixed moments,
* self-normalized Monte Carlo under the normalized stable random measure.

The generator's action itself is exposed symbolically (as a list of
coefficient/monomial pairs), which the irreversibility module evaluates
pathwise and the branching module checks its factorization against.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import InvalidParameterError, SingularSystemError, SizeLimitError
from .analytic import pochhammer
from .samplers import (
    FiniteMeasure,
    RngStream,
    sample_dirichlet,
    sample_stable,
    sample_stable_random_measure,
)
from .stationary1d import EstimateWithError, WeightedSamples, plain_estimate, weighted_estimate

__all__ = [
    "MomentFunction",
    "MomentTensor",
    "generator_moment_action",
    "evaluate_action",
    "stationary_moment_tensors",
    "stationary_moment",
    "sample_stationary_measure",
    "check_stable_tilt_identity",
    "check_dirichlet_stable_duality",
    "check_dirichlet_markov_krein",
    "dirichlet_moment",
    "partition_moment_coefficient",
    "set_partitions",
]


@dataclass(frozen=True)
class MomentFunction:
    """Monomial mu -> prod_i <mu, f_i> over factor vectors f_i.

    An empty factor tuple is the constant function 1.
    """

    factors: tuple

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "factors", tuple(np.asarray(f, dtype=float) for f in self.factors)
        )
        if len({f.shape for f in self.factors}) > 1:
            raise InvalidParameterError("factor vectors must share one length")

    @classmethod
    def power(cls, f, n: int) -> "MomentFunction":
        if n < 0:
            raise InvalidParameterError("power must be >= 0")
        return cls(tuple([np.asarray(f, dtype=float)] * n))

    @classmethod
    def product(cls, fs) -> "MomentFunction":
        return cls(tuple(fs))

    @property
    def n(self) -> int:
        return len(self.factors)

    def evaluate(self, mu: np.ndarray):
        """Value at a state (k,) or a batch (N, k); constant gives 1."""
        mu = np.asarray(mu, dtype=float)
        out = np.ones(mu.shape[:-1]) if mu.ndim > 1 else 1.0
        for f in self.factors:
            out = out * (mu @ f)
        return out


@dataclass(frozen=True)
class MomentTensor:
    """Symmetric tensor of stationary mixed moments of one order."""

    order: int
    values: np.ndarray

    def entry(self, *idx: int) -> float:
        return float(self.values[idx])


def _merge_factors(factors, subset):
    """Pointwise product of the subset's factors, keeping the rest."""
    sub = set(subset)
    merged = factors[subset[0]].copy()
    for i in subset[1:]:
        merged = merged * factors[i]
    rest = [f for j, f in enumerate(factors) if j not in sub]
    return merged, rest


def generator_moment_action(
    phi: MomentFunction, theta: float, nu, alpha: float
) -> list:
    """Action of the jump generator on a moment monomial, symbolically.

    Returns a list of (coefficient, MomentFunction) pairs whose sum over
    evaluation equals A phi(mu). Structure: every subset I of factor slots
    with |I| >= 2 is merged into a single slot carrying the pointwise
    product (coalescence); every subset with |I| >= 1 is removed with its
    nu-average folded into the coefficient (mutation); the diagonal term
    subtracts phi itself so constants are killed exactly.
    """
    if not (0.0 < alpha < 1.0):
        raise InvalidParameterError("alpha must lie in (0,1)")
    if theta < 0:
        raise InvalidParameterError("theta must be >= 0")
    nu = np.asarray(getattr(nu, "weights", nu), dtype=float)
    n = phi.n
    if n == 0:
        return []
    a = alpha
    gam_n = math.gamma(n)
    terms: list = []
    slots = range(n)
    for ksub in range(2, n + 1):
        coeff = pochhammer(1.0 - a, ksub - 2) * pochhammer(a + 1.0, n - ksub) / gam_n
        for subset in itertools.combinations(slots, ksub):
            merged, rest = _merge_factors(phi.factors, subset)
            terms.append((coeff, MomentFunction(tuple([merged] + rest))))
    if theta > 0:
        for ksub in range(1, n + 1):
            base = (
                theta
                * pochhammer(1.0 - a, ksub - 1)
                * pochhammer(a, n - ksub)
                / ((a + 1.0) * gam_n)
            )
            for subset in itertools.combinations(slots, ksub):
                merged, rest = _merge_factors(phi.factors, subset)
                terms.append((base * float(nu @ merged), MomentFunction(tuple(rest))))
    diag = -pochhammer(a + 1.0, n - 1) * (theta + n - 1.0) / ((a + 1.0) * gam_n)
    terms.append((diag, phi))
    return terms


def evaluate_action(terms: list, mu: np.ndarray):
    """Sum coefficient * monomial over a state (k,) or batch (N,k)."""
    mu = np.asarray(mu, dtype=float)
    out = np.zeros(mu.shape[:-1]) if mu.ndim > 1 else 0.0
    for coeff, fn in terms:
        out = out + coeff * fn.evaluate(mu)
    return out


# ---------------------------------------------------------------------------
# stationary moments, route 1: triangular recursion


def _moment_memo(theta: float, nu: np.ndarray, alpha: float):
    a = alpha
    memo: dict = {(): 1.0}

    def rec(idx: tuple) -> float:
        # idx is a sorted tuple of type indices
        if idx in memo:
            return memo[idx]
        n = len(idx)
        counts: dict = {}
        for t in idx:
            counts[t] = counts.get(t, 0) + 1
        merge = 0.0
        repl = 0.0
        for t, ct in counts.items():
            # remove j slots of type t; merging leaves one slot behind
            for j in range(2, ct + 1):
                reduced = _remove_copies(idx, t, j - 1)
                merge += (
                    math.comb(ct, j)
                    * pochhammer(1.0 - a, j - 2)
                    * pochhammer(a + 1.0, n - j)
                    * rec(reduced)
                )
            for j in range(1, ct + 1):
                reduced = _remove_copies(idx, t, j)
                repl += (
                    math.comb(ct, j)
                    * pochhammer(1.0 - a, j - 1)
                    * pochhammer(a, n - j)
                    * float(nu[t])
                    * rec(reduced)
                )
        diag = pochhammer(a + 1.0, n - 1) * (theta + n - 1.0) / (a + 1.0)
        if diag <= 0:
            raise SingularSystemError("vanishing diagonal in the moment system")
        val = (merge + theta * repl / (a + 1.0)) / diag
        memo[idx] = val
        return val

    return rec


def _remove_copies(idx: tuple, t: int, j: int) -> tuple:
    out = list(idx)
    for _ in range(j):
        out.remove(t)
    return tuple(out)


def stationary_moment(theta: float, nu, alpha: float, idx) -> float:
    """Single mixed indicator moment E[mu_{i1} ... mu_{in}] at stationarity."""
    nu = np.asarray(nu, dtype=float)
    if theta <= 0:
        raise InvalidParameterError("theta must be positive for a unique stationary law")
    rec = _moment_memo(theta, nu, alpha)
    return rec(tuple(sorted(int(i) for i in idx)))


def stationary_moment_tensors(theta: float, nu, alpha: float, n_max: int) -> list:
    """Moment tensors of orders 1..n_max for the stationary measure-valued law.

    Entry (i1,...,in) of the order-n tensor is E[mu_{i1}...mu_{in}].
    """
    nu = np.asarray(nu, dtype=float)
    if theta <= 0:
        raise InvalidParameterError("theta must be positive for a unique stationary law")
    if n_max < 1:
        raise InvalidParameterError("n_max must be >= 1")
    k = nu.size
    rec = _moment_memo(theta, nu, alpha)
    out = []
    for order in range(1, n_max + 1):
        vals = np.empty((k,) * order)
        for idx in itertools.product(range(k), repeat=order):
            vals[idx] = rec(tuple(sorted(idx)))
        out.append(MomentTensor(order, vals))
    return out


# ---------------------------------------------------------------------------
# route 2: Monte Carlo under the normalized stable random measure


def sample_stationary_measure(alpha: float, m: FiniteMeasure, n: int, rng: RngStream) -> WeightedSamples:
    """Importance sample of the stationary measure-valued law.

    Scales are first split as gamma ~ Dirichlet(m), then eta gets
    independent stable(alpha, gamma_r) atoms; mu = eta/eta(E) is the value
    (rows of shape (k,)) and eta(E)**(-alpha) the weight. The Dirichlet
    mixing is essential: fixed scales m_r would tilt to a different law
    (at k = 2, m = (1,1) the fixed-scale ratio is uniform, not the
    stationary law).
    """
    if m.total <= 0:
        raise InvalidParameterError("m must have positive total mass")
    if n < 1:
        raise InvalidParameterError("n must be >= 1")

    def draw(sz):
        gam = sample_dirichlet(m, rng, size=sz)
        return sample_stable(alpha, gam, rng)

    eta = draw(n)
    tot = eta.sum(axis=1)
    bad = ~np.isfinite(tot) | (tot < 1e-300)
    while np.any(bad):
        idx = np.flatnonzero(bad)
        eta[idx] = draw(idx.size)
        tot = eta.sum(axis=1)
        bad = ~np.isfinite(tot) | (tot < 1e-300)
    return WeightedSamples(eta / tot[:, None], tot ** (-alpha))


def check_stable_tilt_identity(
    alpha: float, m: FiniteMeasure, f, n: int, rng: RngStream
) -> tuple[EstimateWithError, float]:
    """Tilted Laplace identity under the unnormalized stable random measure.

    Gamma(alpha+1) E[<eta, 1+f>**(-alpha)] = 1 / <m, (1+f)**alpha>.
    Returns (plain MC estimate of the left side, closed-form right side).
    """
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise InvalidParameterError("f must be nonnegative")
    eta = sample_stable_random_measure(alpha, m, rng, size=n)
    base = eta @ (1.0 + f)
    base = np.clip(base, 1e-300, None)
    vals = special.gamma(alpha + 1.0) * base ** (-alpha)
    closed = 1.0 / float(m.weights @ (1.0 + f) ** alpha)
    return plain_estimate(vals), closed


def check_dirichlet_stable_duality(
    alpha: float, m: FiniteMeasure, f, n: int, rng: RngStream
) -> tuple[EstimateWithError, EstimateWithError]:
    """Two sampling routes for the same number.

    Self-normalized MC of <mu, 1+f>**(-alpha) under the stationary measure
    equals plain MC of 1/<mu, (1+f)**alpha> under Dirichlet(m). With f = 0
    both sides are exactly 1.
    """
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise InvalidParameterError("f must be nonnegative")
    ws = sample_stationary_measure(alpha, m, n, rng)
    lhs = weighted_estimate(ws, g=(ws.values @ (1.0 + f)) ** (-alpha))
    mu = sample_dirichlet(m, rng, size=n)
    rhs = plain_estimate(1.0 / (mu @ (1.0 + f) ** alpha))
    return lhs, rhs


def check_dirichlet_markov_krein(
    m: FiniteMeasure, f, n: int, rng: RngStream
) -> tuple[EstimateWithError, float]:
    """Finite-type Markov-Krein identity for the Dirichlet measure.

    E[<mu, 1+f>**(-m(E))] under Dirichlet(m) equals prod_r (1+f_r)**(-m_r).
    """
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise InvalidParameterError("f must be nonnegative")
    mu = sample_dirichlet(m, rng, size=n)
    vals = (mu @ (1.0 + f)) ** (-m.total)
    closed = float(np.prod((1.0 + f) ** (-m.weights)))
    return plain_estimate(vals), closed


# ---------------------------------------------------------------------------
# route 3: set-partition expansion


def set_partitions(n: int):
    """Yield set partitions of {0..n-1} as lists of index lists."""
    if n == 0:
        yield []
        return
    for part in set_partitions(n - 1):
        for i in range(len(part)):
            yield part[:i] + [part[i] + [n - 1]] + part[i + 1 :]
        yield part + [[n - 1]]


def dirichlet_moment(m: FiniteMeasure, f_list) -> float:
    """Mixed moment E[prod_i <mu, f_i>] under the Dirichlet measure D_m.

    Recursive size-biased expansion: conditioning on the slot holding the
    last factor either creates a fresh atom (a nu-average) or merges with
    an earlier factor.
    """
    theta = m.total
    if theta <= 0:
        raise InvalidParameterError("m must have positive total mass")
    nu = m.weights / theta
    memo: dict = {}

    def rec(factors: tuple) -> float:
        n = len(factors)
        if n == 0:
            return 1.0
        key = tuple(sorted(tuple(f) for f in factors))
        if key in memo:
            return memo[key]
        fs = [np.asarray(f, dtype=float) for f in key]
        last = fs[-1]
        rest = fs[:-1]
        out = theta * float(nu @ last) * rec(tuple(tuple(f) for f in rest))
        for j in range(len(rest)):
            merged = rest[:j] + [rest[j] * last] + rest[j + 1 :]
            out += rec(tuple(tuple(f) for f in merged))
        out /= theta + n - 1.0
        memo[key] = out
        return out

    return rec(tuple(tuple(np.asarray(f, dtype=float)) for f in f_list))


def partition_moment_coefficient(theta: float, nu, alpha: float, f_list) -> float:
    """Set-partition expansion of the stationary mixed moment, unnormalized.

    Sums over partitions gamma of the factor slots:

        alpha**|gamma| |gamma|! prod_j (1-alpha)_{|gamma_j|-1}
            * E_Dirichlet(theta*nu)[ prod_j <mu, prod_{i in gamma_j} f_i> ]

    Dividing by (alpha)_n recovers E[prod <mu, f_i>] at stationarity.
    Capped at n = 10 slots (Bell-number growth).
    """
    fs = [np.asarray(f, dtype=float) for f in f_list]
    n = len(fs)
    if n == 0:
        return 1.0
    if n > 10:
        raise SizeLimitError("partition expansion capped at 10 factors")
    if theta <= 0:
        raise InvalidParameterError("theta must be positive")
    nu = np.asarray(nu, dtype=float)
    base = FiniteMeasure(theta * nu)
    total = 0.0
    for part in set_partitions(n):
        kblocks = len(part)
        merged = []
        wpoch = 1.0
        for block in part:
            g = fs[block[0]].copy()
            for i in block[1:]:
                g = g * fs[i]
            merged.append(g)
            wpoch *= pochhammer(1.0 - alpha, len(block) - 1)
        total += (
            alpha**kblocks * math.factorial(kblocks) * wpoch * dirichlet_moment(base, merged)
        )
    return total
