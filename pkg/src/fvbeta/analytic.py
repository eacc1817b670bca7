"""Closed forms and quadrature for beta-weighted integrals.

The recurring objects are integrals against beta weights u**(p-1) (1-u)**(q-1)
with endpoint singularities, the generalized Stieltjes transform of the
stationary one-dimensional law, and the branching flow driving the
measure-valued dual. All adaptive quadrature with endpoint weights goes
through QUADPACK's algebraic-weight rule so singular exponents are handled
analytically, never by sampling near the endpoint.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, special

from .errors import InvalidParameterError, QuadratureFailure

__all__ = [
    "QuadratureSpec",
    "StieltjesTransform",
    "pochhammer",
    "beta_weight_integral",
    "markov_krein_identity",
    "beta_two_pole_identity",
    "branching_flow",
    "apply_flow",
    "flow_ode_residual",
    "flow_time_integral",
    "stieltjes_closed_form",
    "make_stieltjes_transform",
    "stieltjes_ode_residual",
    "hypergeom_ode_residual",
    "beta_reduction_gap",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerance and effort budget for one adaptive quadrature call."""

    abs_tol: float = 1e-12
    rel_tol: float = 1e-12
    max_subdivisions: int = 200

    def __post_init__(self) -> None:
        if self.abs_tol <= 0 or self.rel_tol <= 0 or self.max_subdivisions < 1:
            raise InvalidParameterError("quadrature tolerances must be positive")


DEFAULT_QUAD = QuadratureSpec()


def pochhammer(a: float, n) -> float:
    """Rising factorial (a)_n = a (a+1) ... (a+n-1).

    Integer n >= 0 is evaluated as an exact product; real n through the
    gamma function (requires a > 0 and a + n > 0).
    """
    if isinstance(n, (int, np.integer)):
        if n < 0:
            raise InvalidParameterError("integer pochhammer order must be >= 0")
        out = 1.0
        for j in range(int(n)):
            out *= a + j
        return out
    if a <= 0 or a + n <= 0:
        raise InvalidParameterError("real pochhammer needs a > 0 and a + n > 0")
    return math.exp(special.gammaln(a + n) - special.gammaln(a))


def beta_weight_integral(
    g: Callable[[float], float],
    p: float,
    q: float,
    spec: QuadratureSpec = DEFAULT_QUAD,
    lo: float = 0.0,
    hi: float = 1.0,
) -> float:
    """Integral of g(u) * (u-lo)**(p-1) * (hi-u)**(q-1) over [lo, hi].

    g must be smooth on (lo, hi); the endpoint exponents are passed to the
    QAWS rule, so p, q > 0 may be arbitrarily close to 0.
    """
    if not (hi > lo):
        raise InvalidParameterError("empty integration interval")
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(
                g,
                lo,
                hi,
                weight="alg",
                wvar=(p - 1.0, q - 1.0),
                epsabs=spec.abs_tol,
                epsrel=spec.rel_tol,
                limit=spec.max_subdivisions,
            )
        except integrate.IntegrationWarning as exc:
            raise QuadratureFailure(str(exc)) from exc
    if not np.isfinite(val):
        raise QuadratureFailure("weighted quadrature returned a non-finite value")
    return val


def plain_integral(
    g: Callable[[float], float],
    lo: float,
    hi: float,
    spec: QuadratureSpec = DEFAULT_QUAD,
) -> float:
    """Adaptive quadrature without endpoint weights (finite or infinite hi)."""
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(
                g, lo, hi,
                epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                limit=spec.max_subdivisions,
            )
        except integrate.IntegrationWarning as exc:
            raise QuadratureFailure(str(exc)) from exc
    if not np.isfinite(val):
        raise QuadratureFailure("quadrature returned a non-finite value")
    return val


def markov_krein_identity(
    a: float, b: float, theta1: float, theta2: float, spec: QuadratureSpec = DEFAULT_QUAD
) -> tuple[float, float]:
    """Mean of (a*u+b)**-(theta1+theta2) under Beta(theta1, theta2), two routes.

    Returns (quadrature value, closed form (a+b)**-theta1 * b**-theta2).
    Requires b > 0 and a + b > 0 so the integrand stays positive.
    """
    if theta1 <= 0 or theta2 <= 0:
        raise InvalidParameterError("beta exponents must be positive")
    if b <= 0 or a + b <= 0:
        raise InvalidParameterError("need b > 0 and a + b > 0")
    s = theta1 + theta2
    norm = special.beta(theta1, theta2)
    lhs = beta_weight_integral(lambda u: (a * u + b) ** (-s) / norm, theta1, theta2, spec)
    rhs = (a + b) ** (-theta1) * b ** (-theta2)
    return lhs, rhs


def beta_two_pole_identity(
    a: float, a_prime: float, b: float, alpha: float, spec: QuadratureSpec = DEFAULT_QUAD
) -> tuple[float, float]:
    """Beta(1-alpha, 1+alpha) integral of 1/((a*u+b)(a'*u+b)), two routes.

    Closed form ((a+b)**alpha - (a'+b)**alpha) / (alpha (a-a') b**(1+alpha)).
    a == a_prime is rejected (the closed form degenerates to a derivative).
    """
    if not (0.0 < alpha < 1.0):
        raise InvalidParameterError("alpha must lie in (0,1)")
    if a == a_prime:
        raise InvalidParameterError("poles must be distinct")
    if b <= 0 or a + b <= 0 or a_prime + b <= 0:
        raise InvalidParameterError("need b > 0 and both poles off [0,1]")
    norm = special.beta(1.0 - alpha, 1.0 + alpha)
    lhs = beta_weight_integral(
        lambda u: 1.0 / ((a * u + b) * (a_prime * u + b)) / norm,
        1.0 - alpha,
        1.0 + alpha,
        spec,
    )
    rhs = ((a + b) ** alpha - (a_prime + b) ** alpha) / (alpha * (a - a_prime) * b ** (1.0 + alpha))
    return lhs, rhs


# ---------------------------------------------------------------------------
# branching flow


def branching_flow(t, lam, alpha: float):
    """Flow of the stable-with-drift branching mechanism.

    psi(t, lam) = exp(-t/alpha) * lam / (1 + (1-exp(-t)) lam**alpha)**(1/alpha)

    solves d/dt psi = -(psi + psi**(1+alpha))/alpha with psi(0) = lam.
    Vectorized in lam; lam = 0 maps to 0 for all t.
    """
    if not (0.0 < alpha < 1.0):
        raise InvalidParameterError("alpha must lie in (0,1)")
    if t < 0:
        raise InvalidParameterError("flow time must be >= 0")
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise InvalidParameterError("flow argument must be >= 0")
    decay = math.exp(-t / alpha)
    mix = -math.expm1(-t)  # 1 - e^{-t}, accurate for small t
    out = decay * lam / (1.0 + mix * lam**alpha) ** (1.0 / alpha)
    return float(out) if out.ndim == 0 else out


def apply_flow(t: float, f, alpha: float) -> np.ndarray:
    """Componentwise branching flow acting on a nonnegative vector f."""
    return np.asarray(branching_flow(t, np.asarray(f, dtype=float), alpha))


def flow_ode_residual(t: float, lam: float, alpha: float, h: float = 1.2e-3) -> float:
    """Defect of the flow in its own evolution equation at (t, lam).

    Central 4th-order stencil in t; requires t >= 2h.
    """
    if t < 2 * h:
        raise InvalidParameterError("need t >= 2h for the centered stencil")
    vals = [branching_flow(t + j * h, lam, alpha) for j in (-2, -1, 0, 1, 2)]
    dpsi = (vals[0] - 8 * vals[1] + 8 * vals[3] - vals[4]) / (12 * h)
    psi = vals[2]
    return dpsi + (psi + psi ** (1.0 + alpha)) / alpha


def flow_time_integral(lam: float, alpha: float, spec: QuadratureSpec = DEFAULT_QUAD) -> tuple[float, float]:
    """Time integral of psi(s, lam)**alpha over [0, inf), two routes.

    Returns (quadrature, log(1 + lam**alpha)).
    """
    if lam < 0:
        raise InvalidParameterError("lam must be >= 0")
    lhs = plain_integral(lambda s: branching_flow(s, lam, alpha) ** alpha, 0.0, np.inf, spec)
    rhs = math.log1p(lam**alpha)
    return lhs, rhs


# ---------------------------------------------------------------------------
# generalized Stieltjes transform of the stationary one-dimensional law


@dataclass(frozen=True)
class StieltjesTransform:
    """Transform t -> E[(1 + t X)**-alpha] for a [0,1]-valued law."""

    alpha: float
    evaluator: Callable[[float], float]

    def __call__(self, t: float) -> float:
        return self.evaluator(t)


def stieltjes_closed_form(
    t: float, alpha: float, c1: float, c2: float, spec: QuadratureSpec = DEFAULT_QUAD
) -> float:
    """Stationary transform as a Beta(c1, c2) mixture of geometric kernels.

    S(t) = int B_{c1,c2}(dy) / (1 + z y) with z = (1+t)**alpha - 1.
    Defined for t > -1; S(0) = 1 exactly.
    """
    if not (0.0 < alpha < 1.0):
        raise InvalidParameterError("alpha must lie in (0,1)")
    if c1 <= 0 or c2 <= 0:
        raise InvalidParameterError("c1, c2 must be positive")
    if t <= -1.0:
        raise InvalidParameterError("transform argument must exceed -1")
    if t == 0.0:
        return 1.0
    z = (1.0 + t) ** alpha - 1.0
    norm = special.beta(c1, c2)
    return beta_weight_integral(lambda y: 1.0 / ((1.0 + z * y) * norm), c1, c2, spec)


def make_stieltjes_transform(
    alpha: float, c1: float, c2: float, spec: QuadratureSpec = DEFAULT_QUAD
) -> StieltjesTransform:
    return StieltjesTransform(alpha, lambda t: stieltjes_closed_form(t, alpha, c1, c2, spec))


def stieltjes_ode_residual(
    transform, t: float, alpha: float, c1: float, c2: float, h: float | None = None
) -> float:
    """Defect of the transform in the second-order stationarity ODE at t > 0.

    The equation, with w = (1+t)**alpha - 1:

        (w/alpha)(1+t) S'' + ((c1 + 1 + 1/alpha) w + c1 + c2) S'
            + alpha c1 (1+t)**(alpha-1) S  =  0.

    Derivatives are 4th-order central finite differences; the default step
    balances stencil rounding against truncation for evaluator noise ~1e-12.
    """
    S = transform.evaluator if isinstance(transform, StieltjesTransform) else transform
    if h is None:
        h = 6e-3 * math.sqrt(1.0 + t)
    if t - 2 * h <= -1.0:
        raise InvalidParameterError("stencil leaves the transform domain")
    v = [S(t + j * h) for j in (-2, -1, 0, 1, 2)]
    d1 = (v[0] - 8 * v[1] + 8 * v[3] - v[4]) / (12 * h)
    d2 = (-v[0] + 16 * v[1] - 30 * v[2] + 16 * v[3] - v[4]) / (12 * h * h)
    w = (1.0 + t) ** alpha - 1.0
    A = w / alpha * (1.0 + t)
    B = (c1 + 1.0 + 1.0 / alpha) * w + c1 + c2
    C = alpha * c1 * (1.0 + t) ** (alpha - 1.0)
    return A * d2 + B * d1 + C * v[2]


def hypergeom_ode_residual(
    transform, u: float, alpha: float, c1: float, c2: float, h: float | None = None
) -> float:
    """Defect of T(u) = S((1+u)**(1/alpha) - 1) in its hypergeometric ODE.

        u(1+u) T'' + ((c1+c2) + (c1+2) u) T' + c1 T = 0,  u > 0.
    """
    S = transform.evaluator if isinstance(transform, StieltjesTransform) else transform
    if u <= 0:
        raise InvalidParameterError("the substituted equation lives on u > 0")
    if h is None:
        # truncation ~ h**4 T''''' dominates quadrature noise down to this step
        h = 0.03 * min(u, 1.0)

    def T(x: float) -> float:
        return S((1.0 + x) ** (1.0 / alpha) - 1.0)

    v = [T(u + j * h) for j in (-2, -1, 0, 1, 2)]
    d1 = (v[0] - 8 * v[1] + 8 * v[3] - v[4]) / (12 * h)
    d2 = (-v[0] + 16 * v[1] - 30 * v[2] + 16 * v[3] - v[4]) / (12 * h * h)
    return u * (1.0 + u) * d2 + ((c1 + c2) + (c1 + 2.0) * u) * d1 + c1 * v[2]


def beta_reduction_gap(
    t: float, alpha: float, c1: float, c2: float, spec: QuadratureSpec = DEFAULT_QUAD
) -> float:
    """Gap between the transform and its reduced-order representation.

    For c1 + c2 > 1 the Beta(c1, c2) geometric mixture equals
    int B_{1, c1+c2-1}(dy) (1 + z y)**-c1  with the same z; returns the
    absolute difference of the two quadratures (should vanish to tolerance).
    """
    if c1 + c2 <= 1.0:
        raise InvalidParameterError("reduction requires c1 + c2 > 1")
    full = stieltjes_closed_form(t, alpha, c1, c2, spec)
    if t == 0.0:
        return abs(full - 1.0)
    z = (1.0 + t) ** alpha - 1.0
    s = c1 + c2 - 1.0
    norm = special.beta(1.0, s)
    reduced = beta_weight_integral(
        lambda y: (1.0 + z * y) ** (-c1) / norm, 1.0, s, spec
    )
    return abs(full - reduced)
