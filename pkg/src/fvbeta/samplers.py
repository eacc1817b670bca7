"""Primitive samplers: one-sided stable, beta, Dirichlet, Linnik, and
completely random measures on a finite type space.

Every draw consumes an explicit :class:`RngStream`, so each experiment is a
pure function of (seed, stream) and replicas parallelize by stream id.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError

__all__ = [
    "RngStream",
    "FiniteMeasure",
    "ProbabilityVector",
    "sample_stable",
    "sample_beta",
    "sample_dirichlet",
    "sample_linnik",
    "sample_stable_random_measure",
    "sample_gamma_random_measure",
]


@dataclass
class RngStream:
    """Deterministic random stream addressed by (seed, stream).

    A fresh ``RngStream(seed, stream)`` always reproduces the same draw
    sequence; distinct stream ids give statistically independent streams.
    The underlying generator is stateful, so successive calls on one
    instance continue the sequence.
    """

    seed: int
    stream: int = 0
    path: tuple = ()

    def __post_init__(self) -> None:
        entropy = (int(self.seed), int(self.stream)) + tuple(int(p) for p in self.path)
        self._gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def child(self, index: int) -> "RngStream":
        """Independent substream; child(i) never collides with a root stream."""
        return RngStream(self.seed, self.stream, self.path + (index,))

    def integer_seed(self) -> int:
        # consumes state, so successive calls yield fresh kernel seeds
        return int(self._gen.integers(0, 2**32 - 1))


@dataclass
class FiniteMeasure:
    """Nonnegative weights on a finite type space {0, ..., k-1}."""

    weights: np.ndarray
    total: float = field(init=False)

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.ndim != 1 or self.weights.size == 0:
            raise InvalidParameterError("weights must be a nonempty 1-d array")
        if np.any(self.weights < 0) or not np.all(np.isfinite(self.weights)):
            raise InvalidParameterError("weights must be finite and nonnegative")
        self.total = float(self.weights.sum())

    @property
    def k(self) -> int:
        return self.weights.size

    def normalized(self) -> "ProbabilityVector":
        if self.total <= 0:
            raise InvalidParameterError("cannot normalize the zero measure")
        return ProbabilityVector(self.weights / self.total)


@dataclass
class ProbabilityVector:
    """Point on the probability simplex."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.ndim != 1 or self.weights.size == 0:
            raise InvalidParameterError("weights must be a nonempty 1-d array")
        if np.any(self.weights < 0):
            raise InvalidParameterError("weights must be nonnegative")
        s = self.weights.sum()
        if abs(s - 1.0) > 1e-8:
            raise InvalidParameterError(f"weights sum to {s}, not 1")
        self.weights = self.weights / s

    @property
    def k(self) -> int:
        return self.weights.size


def _check_alpha(alpha: float) -> None:
    if not (0.0 < alpha < 1.0):
        raise InvalidParameterError(f"alpha must lie in (0,1), got {alpha}")


def sample_stable(alpha: float, scale, rng: RngStream, size=None) -> np.ndarray:
    """One-sided stable draw with E[exp(-lam*Y)] = exp(-scale*lam**alpha).

    Uses the Kanter representation
        log S = log sin(a*U) + ((1-a)/a) log sin((1-a)*U)
                - (1/a) log sin U - ((1-a)/a) log W,
    U uniform on (0, pi), W standard exponential, then Y = scale**(1/a) * S.

    Args:
        alpha: stability index in (0, 1).
        scale: nonnegative scale, scalar or array broadcastable with size.
            scale == 0 yields exactly 0.
        rng: stream to draw from.
        size: output shape; None gives the broadcast shape of scale.

    Returns:
        Array (or scalar for size=None and scalar scale) of positive draws.
    """
    _check_alpha(alpha)
    scale = np.asarray(scale, dtype=float)
    if np.any(scale < 0) or not np.all(np.isfinite(scale)):
        raise InvalidParameterError("scale must be finite and nonnegative")
    if size is None:
        shape = scale.shape
    else:
        shape = (size,) if np.isscalar(size) else tuple(size)
    g = rng.generator
    # 1-u keeps U strictly positive; sin(pi) underflows to 1.2e-16, never 0
    u = (1.0 - g.random(shape)) * np.pi
    w = np.clip(g.standard_exponential(shape), 1e-300, None)
    a = alpha
    logs = (
        np.log(np.sin(a * u))
        + ((1.0 - a) / a) * np.log(np.sin((1.0 - a) * u))
        - (1.0 / a) * np.log(np.sin(u))
        - ((1.0 - a) / a) * np.log(w)
    )
    std = np.exp(logs)
    out = np.where(scale > 0, scale ** (1.0 / a) * std, 0.0)
    if size is None and scale.ndim == 0:
        return float(out)
    return out


def sample_beta(a: float, b: float, rng: RngStream, size=None):
    if a <= 0 or b <= 0:
        raise InvalidParameterError("beta parameters must be positive")
    return rng.generator.beta(a, b, size=size)


def sample_dirichlet(m, rng: RngStream, size=None) -> np.ndarray:
    """Dirichlet draw as normalized independent Gamma(m_i, 1) variables.

    m may be a FiniteMeasure or a weight array; zero components are allowed
    (they stay exactly 0) as long as the total is positive.
    """
    w = m.weights if isinstance(m, FiniteMeasure) else np.asarray(m, dtype=float)
    if np.any(w < 0) or w.sum() <= 0:
        raise InvalidParameterError("dirichlet weights must be >= 0 with positive total")
    n = 1 if size is None else int(size)
    g = rng.generator.standard_gamma(w, size=(n, w.size))
    out = g / g.sum(axis=1, keepdims=True)
    return out[0] if size is None else out


def sample_linnik(alpha: float, c: float, rng: RngStream, size=None) -> np.ndarray:
    """Positive Linnik draw with E[exp(-lam*Y)] = (1 + lam**alpha)**(-c).

    Composition: Y = stable(alpha, scale=G) with G ~ Gamma(c, 1).
    """
    _check_alpha(alpha)
    if c <= 0:
        raise InvalidParameterError("shape c must be positive")
    n = 1 if size is None else size
    gshape = rng.generator.standard_gamma(c, size=n)
    out = sample_stable(alpha, gshape, rng)
    return out[0] if size is None else out


def sample_stable_random_measure(alpha: float, m: FiniteMeasure, rng: RngStream, size=None) -> np.ndarray:
    """Atoms of the stable completely random measure directed by m.

    Rows eta with independent eta_r ~ stable(alpha, m_r); the Laplace
    functional is E[exp(-<eta, f>)] = exp(-<m, f**alpha>).
    """
    _check_alpha(alpha)
    n = 1 if size is None else int(size)
    scales = np.broadcast_to(m.weights, (n, m.k))
    out = sample_stable(alpha, scales, rng)
    return out[0] if size is None else out


def sample_gamma_random_measure(m: FiniteMeasure, rng: RngStream, size=None) -> np.ndarray:
    """Atoms eta_r ~ Gamma(m_r, 1), so E[exp(-<eta,f>)] = prod (1+f_r)**(-m_r)."""
    n = 1 if size is None else int(size)
    out = rng.generator.standard_gamma(np.broadcast_to(m.weights, (n, m.k)))
    return out[0] if size is None else out
