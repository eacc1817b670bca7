"""Measure-valued branching with immigration: generator, Laplace functionals,
and the discrete branching-chain scaling limit.

The unnormalized dual of the measure-valued jump process is a branching
process with stable branching mechanism (lam + lam**(1+alpha))/alpha and
immigration mechanism <m, lam**alpha>. Its generator acts on ratio moment
functionals through one-dimensional beta-weighted integrals; its transition
Laplace functional is an explicit flow; its stationary law is the Linnik
random measure. The discrete chain mirrors the same mechanisms with a
critical offspring law of tail index 1+alpha and an infinite-mean
immigration law of tail index alpha.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy import special
from scipy.signal import fftconvolve

from .analytic import DEFAULT_QUAD, QuadratureSpec, beta_weight_integral, branching_flow, plain_integral
from .errors import HeavyTailWarning, InvalidParameterError
from .random_measures import MomentFunction, evaluate_action, generator_moment_action
from .samplers import FiniteMeasure, RngStream, sample_linnik
from .stationary1d import EstimateWithError, plain_estimate

__all__ = [
    "RatioMomentFunctional",
    "frechet_gradient",
    "mbi_generator_apply",
    "check_generator_factorization",
    "transition_laplace",
    "stationary_laplace",
    "total_mass_neg_moment",
    "GWIConfig",
    "GWILaplace",
    "gwi_chain",
    "gwi_exact_laplace",
    "gwi_limit_parameters",
    "fit_linnik_laplace",
    "offspring_pmf",
]


@dataclass(frozen=True)
class RatioMomentFunctional:
    """Scale-invariant functional eta -> (<eta, f> / eta(E))**n."""

    f: np.ndarray
    n: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "f", np.asarray(self.f, dtype=float))
        if self.n < 1:
            raise InvalidParameterError("order n must be >= 1")
        if np.any(self.f < 0):
            raise InvalidParameterError("f must be nonnegative")

    def evaluate(self, eta: np.ndarray) -> float:
        eta = np.asarray(eta, dtype=float)
        tot = eta.sum(axis=-1)
        return (eta @ self.f / tot) ** self.n


def frechet_gradient(psi: RatioMomentFunctional, eta: FiniteMeasure) -> np.ndarray:
    """Gradient d psi / d eta_r; pairs to zero against eta itself."""
    b = eta.total
    a = float(eta.weights @ psi.f)
    rho = a / b
    return psi.n * rho ** (psi.n - 1) * (psi.f * b - a) / (b * b)


_SERIES_TERMS = 21


def _phi_series(a: float, b: float, fr: float, n: int) -> np.ndarray:
    """Taylor coefficients of ((a + fr z)/(b + z))**n at z = 0.

    rho(z) = fr + (a - fr b)/(b + z) has geometric coefficients; the n-th
    power is a truncated series product. Convergence radius is b, and the
    series branch is only used for z/b < 0.06, so 21 terms reach machine
    precision.
    """
    j = np.arange(_SERIES_TERMS)
    r = (a - fr * b) * (-1.0) ** j / b ** (j + 1)
    r[0] += fr
    c = r
    for _ in range(n - 1):
        c = np.convolve(c, r)[:_SERIES_TERMS]
    return c


def mbi_generator_apply(
    psi,
    eta: FiniteMeasure,
    m: FiniteMeasure,
    alpha: float,
    spec: QuadratureSpec = DEFAULT_QUAD,
) -> float:
    """Generator of the branching-with-immigration process at state eta.

    For a RatioMomentFunctional the three parts are: branching jumps
    (a point mass z*delta_r added at rate density proportional to
    eta_r z**(-2-alpha), twice compensated), a linear drift that vanishes
    exactly on scale-invariant functionals, and immigration jumps at
    density m_r z**(-1-alpha), once compensated. After z = eta(E) u/(1-u)
    both integrals carry the weight u**(-alpha) (1-u)**(alpha-1) handled
    by QAWS.

    A plain MomentFunction is accepted only at order 1, where the action
    is the regularized linear form -<eta,f>/alpha + <m,f>; higher
    unnormalized powers are outside the domain (the branching integral
    diverges) and are rejected.
    """
    if not (0.0 < alpha < 1.0):
        raise InvalidParameterError("alpha must lie in (0,1)")
    if isinstance(psi, MomentFunction):
        if psi.n == 0:
            return 0.0
        if psi.n == 1:
            f = psi.factors[0]
            return -float(eta.weights @ f) / alpha + float(m.weights @ f)
        raise InvalidParameterError(
            "unnormalized moment powers n >= 2 are not in the generator domain"
        )
    if not isinstance(psi, RatioMomentFunctional):
        raise InvalidParameterError("psi must be a RatioMomentFunctional or MomentFunction")

    b = eta.total
    if b <= 0:
        raise InvalidParameterError("eta must have positive total mass")
    n = psi.n
    a = float(eta.weights @ psi.f)
    rho0 = a / b
    gam = special.gamma(1.0 - alpha)
    total = 0.0
    for r in range(eta.k):
        fr = float(psi.f[r])
        w_eta = float(eta.weights[r])
        w_m = float(m.weights[r])
        if w_eta == 0.0 and w_m == 0.0:
            continue
        coeffs = _phi_series(a, b, fr, n)
        p1 = float(coeffs[1])
        c_branch = coeffs[2:]
        c_imm = coeffs[1:]

        def phi(z: float) -> float:
            return ((a + fr * z) / (b + z)) ** n

        phi0 = rho0**n

        if w_eta > 0.0:

            def g_branch(u: float) -> float:
                if u >= 1.0:
                    # z -> inf limit: phi terms die, -z*p1*(1-u)/u**2 -> -b*p1
                    return -b * p1
                z = b * u / (1.0 - u)
                if u <= 0.05:
                    # series kills the phi - phi0 - z p1 cancellation
                    acc = 0.0
                    for ck in c_branch[::-1]:
                        acc = acc * z + ck
                    return b * b * acc / (1.0 - u)
                rem = phi(z) - phi0 - z * p1
                return rem * (1.0 - u) / (u * u)

            total += (
                (alpha + 1.0)
                / gam
                * w_eta
                * b ** (-1.0 - alpha)
                * beta_weight_integral(g_branch, 1.0 - alpha, alpha, spec)
            )

        if w_m > 0.0:

            def g_imm(u: float) -> float:
                if u >= 1.0:
                    return fr**n - phi0
                z = b * u / (1.0 - u)
                if u <= 0.05:
                    acc = 0.0
                    for ck in c_imm[::-1]:
                        acc = acc * z + ck
                    return b * acc / (1.0 - u)
                return (phi(z) - phi0) / u

            total += (
                alpha
                / gam
                * w_m
                * b ** (-alpha)
                * beta_weight_integral(g_imm, 1.0 - alpha, alpha, spec)
            )
    # the drift -(1/alpha)<eta, grad psi> vanishes identically here:
    # <eta, grad> = n rho0**(n-1) (<eta,f> b - a b)/b**2 = 0
    return total


def check_generator_factorization(
    phi: MomentFunction,
    eta: FiniteMeasure,
    m: FiniteMeasure,
    alpha: float,
    spec: QuadratureSpec = DEFAULT_QUAD,
) -> tuple[float, float]:
    """Both sides of the scaling identity tying the two generators.

    For Psi(eta) = Phi(eta/eta(E)) with Phi a power moment monomial,

        L Psi(eta) = Gamma(alpha+2) eta(E)**(-alpha) * A Phi(eta/eta(E)),

    where A is the jump generator of the normalized process with mutation
    intensity m. Returns (left side by quadrature, right side by the
    symbolic moment action).
    """
    if phi.n == 0:
        return 0.0, 0.0
    f0 = phi.factors[0]
    for f in phi.factors[1:]:
        if not np.array_equal(f, f0):
            raise InvalidParameterError("factorization check needs a power monomial")
    psi = RatioMomentFunctional(f0, phi.n)
    lhs = mbi_generator_apply(psi, eta, m, alpha, spec)
    theta = m.total
    nu = m.weights / theta
    mu = eta.weights / eta.total
    terms = generator_moment_action(phi, theta, nu, alpha)
    rhs = special.gamma(alpha + 2.0) * eta.total ** (-alpha) * float(evaluate_action(terms, mu))
    return lhs, rhs


# ---------------------------------------------------------------------------
# Laplace functionals


def transition_laplace(
    eta0: FiniteMeasure,
    f,
    t: float,
    m: FiniteMeasure,
    alpha: float,
    spec: QuadratureSpec = DEFAULT_QUAD,
) -> float:
    """E[exp(-<eta_t, f>) | eta_0] for the branching-immigration semigroup.

    exp(-<eta0, psi_t(f)> - int_0^t <m, psi_s(f)**alpha> ds) with psi the
    branching flow applied componentwise; the time integral is adaptive.
    """
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise InvalidParameterError("f must be nonnegative")
    if t < 0:
        raise InvalidParameterError("t must be >= 0")
    if eta0.k != f.size or m.k != f.size:
        raise InvalidParameterError("dimension mismatch")
    head = float(eta0.weights @ branching_flow(t, f, alpha))
    if t == 0.0:
        return math.exp(-head)

    def integrand(s: float) -> float:
        return float(m.weights @ branching_flow(s, f, alpha) ** alpha)

    tail = plain_integral(integrand, 0.0, t, spec)
    return math.exp(-head - tail)


def stationary_laplace(m: FiniteMeasure, f, alpha: float) -> float:
    """Laplace functional of the stationary (Linnik) random measure."""
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise InvalidParameterError("f must be nonnegative")
    return float(np.exp(-np.sum(m.weights * np.log1p(f**alpha))))


def total_mass_neg_moment(
    alpha: float, m: FiniteMeasure, n: int, rng: RngStream
) -> tuple[EstimateWithError, float]:
    """MC of eta(E)**(-alpha) under the stationary measure vs closed form.

    The total mass is Linnik(alpha, m(E)); the moment is finite only for
    m(E) > 1 and equals 1/(Gamma(alpha+1) (m(E)-1)). Estimator variance
    degrades as m(E) decreases toward 2 (second moment diverges at 2).
    """
    if m.total <= 1.0:
        raise InvalidParameterError("negative-order moment needs m(E) > 1")
    if m.total <= 2.0:
        warnings.warn(
            "m(E) <= 2: estimator variance is heavy-tailed, SE is unreliable",
            HeavyTailWarning,
        )
    tot = np.zeros(n)
    for r in range(m.k):
        if m.weights[r] > 0:
            tot += sample_linnik(alpha, float(m.weights[r]), rng, size=n)
    vals = tot ** (-alpha)
    closed = 1.0 / (special.gamma(alpha + 1.0) * (m.total - 1.0))
    return plain_estimate(vals), closed


# ---------------------------------------------------------------------------
# discrete branching chain with immigration

_TABLE_LEN = 1 << 20
_TABLE_LEVELS = 18  # exact sum tables for up to 2**18 - 1 parents
_BIG_M = 1 << _TABLE_LEVELS
_INT_CAP = 1 << 60


@dataclass(frozen=True)
class GWIConfig:
    """Critical offspring weight c, immigration weight d, scale N, steps."""

    c: float
    d: float
    N: int
    steps: int

    def __post_init__(self) -> None:
        if not (0.0 < self.c < 1.0):
            raise InvalidParameterError("c must lie in (0,1)")
        if not (0.0 < self.d <= 1.0):
            raise InvalidParameterError("d must lie in (0,1]")
        if self.N < 1 or self.steps < 1:
            raise InvalidParameterError("N and steps must be >= 1")


def offspring_pmf(alpha: float, length: int = _TABLE_LEN) -> np.ndarray:
    """Exact many-child law: P(T=k) = (1+alpha)(1-alpha)_{k-2}/k!, k >= 2.

    Normalized offspring count of a parent with at least two children; the
    tail index is 1+alpha, so the returned array misses exactly the mass
    beyond `length`.
    """
    if not (0.0 < alpha < 1.0):
        raise InvalidParameterError("alpha must lie in (0,1)")
    p = np.zeros(length)
    p[2] = (1.0 + alpha) / 2.0
    k = np.arange(2, length - 1, dtype=float)
    # ratio p_{k+1}/p_k = (k-1-alpha)/(k+1)
    p[3:] = p[2] * np.cumprod((k - 1.0 - alpha) / (k + 1.0))
    return p


def _immigration_pmf(alpha: float, length: int = _TABLE_LEN) -> np.ndarray:
    """P(I=k | I>=1) = alpha (1-alpha)_{k-1} / k!, tail index alpha."""
    r = np.zeros(length)
    r[1] = alpha
    k = np.arange(1, length - 1, dtype=float)
    r[2:] = alpha * np.cumprod((k - alpha) / (k + 1.0))
    return r


def _alias_from_pmf(pmf: np.ndarray):
    """Vose alias tables for the kept mass; overflow handled by the caller."""
    kept = pmf.sum()
    prob = pmf / kept * pmf.size
    alias = np.zeros(pmf.size, dtype=np.int64)
    small = [i for i in range(pmf.size) if prob[i] < 1.0]
    large = [i for i in range(pmf.size) if prob[i] >= 1.0]
    prob = prob.copy()
    while small and large:
        s = small.pop()
        l = large.pop()
        alias[s] = l
        prob[l] = prob[l] - (1.0 - prob[s])
        (small if prob[l] < 1.0 else large).append(l)
    for i in large:
        prob[i] = 1.0
    for i in small:
        prob[i] = 1.0
    return prob, alias, float(kept)


_table_cache: dict = {}


def _gwi_tables(alpha: float):
    key = round(alpha, 12)
    if key in _table_cache:
        return _table_cache[key]
    base = offspring_pmf(alpha)
    probs = np.empty((_TABLE_LEVELS, _TABLE_LEN))
    aliases = np.empty((_TABLE_LEVELS, _TABLE_LEN), dtype=np.int64)
    overflow = np.empty(_TABLE_LEVELS)
    pmf = base
    for lvl in range(_TABLE_LEVELS):
        prob, alias, kept = _alias_from_pmf(pmf)
        probs[lvl] = prob
        aliases[lvl] = alias
        overflow[lvl] = max(0.0, 1.0 - kept)
        if lvl < _TABLE_LEVELS - 1:
            # exact below the cap: truncated-mass products always land beyond it
            pmf = np.clip(fftconvolve(pmf, pmf)[:_TABLE_LEN], 0.0, None)
    imm = _immigration_pmf(alpha)
    iprob, ialias, ikept = _alias_from_pmf(imm)
    ioverflow = max(0.0, 1.0 - ikept)
    out = (probs, aliases, overflow, iprob, ialias, ioverflow)
    _table_cache[key] = out
    return out


@njit(cache=True)
def _gwi_step_kernel(
    m_parents,
    n_imm_on,
    probs,
    aliases,
    overflow,
    iprob,
    ialias,
    ioverflow,
    alpha,
    mu_t,
    seed,
):
    """Sum of many-child offspring per replica plus immigration draws.

    m_parents: int64 parents with >= 2 children; n_imm_on: bool per replica
    (immigration event happens). Overflow buckets use the exact leftover
    mass with a Pareto tail of the matching index.
    """
    np.random.seed(seed)
    nrep = m_parents.shape[0]
    L = probs.shape[1]
    out = np.zeros(nrep, dtype=np.int64)
    inv_b = 1.0 / (1.0 + alpha)
    for i in range(nrep):
        m = m_parents[i]
        acc = 0.0
        if m >= _BIG_M:
            # beyond the exact tables: advance by the exact conditional mean;
            # only reachable for states already invisible to exp(-lam Z/N)
            acc += mu_t * m
            m = 0
        lvl = 0
        while m > 0:
            if m & 1:
                u = np.random.random()
                if u < overflow[lvl]:
                    # Pareto tail beyond the table cap, exact bucket mass
                    v = np.random.random()
                    acc += L * v ** (-inv_b)
                else:
                    j = int(np.random.random() * L)
                    if np.random.random() < probs[lvl, j]:
                        acc += j
                    else:
                        acc += aliases[lvl, j]
            m >>= 1
            lvl += 1
        if n_imm_on[i]:
            u = np.random.random()
            if u < ioverflow:
                v = np.random.random()
                acc += L * v ** (-1.0 / alpha)
            else:
                j = int(np.random.random() * L)
                if np.random.random() < iprob[j]:
                    acc += j
                else:
                    acc += ialias[j]
        if acc > _INT_CAP:
            acc = _INT_CAP
        out[i] = np.int64(acc + 0.5)
    return out


class GWILaplace:
    """Empirical Laplace transform of the scaled terminal ensemble."""

    def __init__(self, states: np.ndarray, N: int):
        self.states = states
        self.N = int(N)

    def scaled(self) -> np.ndarray:
        return self.states / self.N

    def __call__(self, lam: float) -> float:
        return float(np.mean(np.exp(-lam * self.states / self.N)))

    def std_error(self, lam: float) -> float:
        v = np.exp(-lam * self.states / self.N)
        return float(v.std(ddof=1) / math.sqrt(v.size))


def gwi_chain(
    cfg: GWIConfig, alpha: float, rng: RngStream, n_replicas: int = 200_000
) -> GWILaplace:
    """Ensemble of critical branching chains with heavy immigration.

    Offspring pgf s + c(1-s)**(1+alpha) (critical, tail 1+alpha) and
    immigration pgf 1 - d(1-s)**alpha (infinite mean, tail alpha), started
    from 0. There is no stationary law; run for cfg.steps generations and
    return the empirical Laplace transform of Z/N. Over steps ~ t N**alpha
    the scaled state converges to Linnik(alpha) with scale (c alpha t)**(1/alpha)
    and shape d/(c alpha).
    """
    if not (0.0 < alpha < 1.0):
        raise InvalidParameterError("alpha must lie in (0,1)")
    if cfg.c * (1.0 + alpha) > 1.0:
        raise InvalidParameterError("offspring weights need c(1+alpha) <= 1")
    if n_replicas < 2:
        raise InvalidParameterError("need at least 2 replicas")
    probs, aliases, overflow, iprob, ialias, ioverflow = _gwi_tables(alpha)
    g = rng.generator
    p1 = 1.0 - cfg.c * (1.0 + alpha)
    mu_t = (1.0 + alpha) / alpha
    z = np.zeros(n_replicas, dtype=np.int64)
    for _ in range(cfg.steps):
        n0 = g.binomial(z, cfg.c)
        rest = z - n0
        n1 = g.binomial(rest, p1 / (1.0 - cfg.c)) if p1 > 0.0 else np.zeros_like(rest)
        m_parents = rest - n1
        imm_on = g.random(n_replicas) < cfg.d
        extra = _gwi_step_kernel(
            m_parents,
            imm_on,
            probs,
            aliases,
            overflow,
            iprob,
            ialias,
            ioverflow,
            alpha,
            mu_t,
            rng.integer_seed(),
        )
        z = np.minimum(n1 + extra, _INT_CAP)
    return GWILaplace(z, cfg.N)


def gwi_exact_laplace(cfg: GWIConfig, alpha: float, lam: float) -> float:
    """Exact E[exp(-lam Z_steps / N)] by iterating the generating functions.

    E[s**Z_T] from Z_0 = 0 is the product over j < T of q(p_iter_j(s)) with
    s = exp(-lam/N); a deterministic scalar recursion, used to separate
    finite-size systematic error from Monte Carlo noise.
    """
    if cfg.c * (1.0 + alpha) > 1.0:
        raise InvalidParameterError("offspring weights need c(1+alpha) <= 1")
    s = math.exp(-lam / cfg.N)
    out = 1.0
    for _ in range(cfg.steps):
        out *= 1.0 - cfg.d * (1.0 - s) ** alpha
        s = s + cfg.c * (1.0 - s) ** (1.0 + alpha)
    return out


def gwi_limit_parameters(cfg: GWIConfig, alpha: float) -> tuple[float, float]:
    """Limit Linnik (scale kappa, shape gamma) at scaled time steps/N**alpha."""
    t = cfg.steps / cfg.N**alpha
    ca = cfg.c * alpha
    return (ca * t) ** (1.0 / alpha), cfg.d / ca


def fit_linnik_laplace(lams, values, alpha: float) -> tuple[float, float]:
    """Fit (kappa, gamma) so (1+(kappa lam)**alpha)**(-gamma) matches values.

    Exact two-point solve on the first and last (lam, value) pairs by a
    bracketed root in x = kappa**alpha; values must lie in (0, 1).
    """
    lams = np.asarray(lams, dtype=float)
    values = np.asarray(values, dtype=float)
    if lams.size < 2 or lams.size != values.size:
        raise InvalidParameterError("need matching lams/values with >= 2 points")
    if np.any(values <= 0) or np.any(values >= 1):
        raise InvalidParameterError("values must lie strictly in (0,1)")
    l1, l2 = float(lams[0]), float(lams[-1])
    L1, L2 = -math.log(values[0]), -math.log(values[-1])

    def h(logx: float) -> float:
        x = math.exp(logx)
        return L1 * math.log1p(x * l2**alpha) - L2 * math.log1p(x * l1**alpha)

    from scipy.optimize import brentq

    lo, hi = -40.0, 40.0
    if h(lo) * h(hi) > 0:
        raise InvalidParameterError("no Linnik fit brackets these values")
    logx = brentq(h, lo, hi, xtol=1e-13)
    x = math.exp(logx)
    gamma = L1 / math.log1p(x * l1**alpha)
    return x ** (1.0 / alpha), gamma
