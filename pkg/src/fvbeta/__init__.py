"""Simulation and verification toolkit for a family of measure-valued jump
processes with heavy-tailed reproduction and mutation, together with their
unnormalized branching-with-immigration duals.

Layout:

* :mod:`fvbeta.samplers` - stable/Linnik/Dirichlet primitives and RNG streams
* :mod:`fvbeta.analytic` - beta-weighted quadrature, closed forms, the flow
* :mod:`fvbeta.stationary1d` - two-type stationary law: samplers, moments, CDF
* :mod:`fvbeta.random_measures` - moment calculus on a finite type space
* :mod:`fvbeta.fv_simulator` - pathwise jump-chain simulation
* :mod:`fvbeta.mbi` - branching generator, Laplace functionals, discrete chain
* :mod:`fvbeta.irreversibility` - time-asymmetry statistic and verdicts
* :mod:`fvbeta.cli` - `fvbeta` command-line runner
"""

from .errors import (
    EventRateOverflowError,
    HeavyTailWarning,
    InsufficientPathError,
    InvalidParameterError,
    QuadratureFailure,
    SingularSystemError,
    SizeLimitError,
)
from .samplers import (
    FiniteMeasure,
    ProbabilityVector,
    RngStream,
    sample_beta,
    sample_dirichlet,
    sample_gamma_random_measure,
    sample_linnik,
    sample_stable,
    sample_stable_random_measure,
)
from .analytic import (
    DEFAULT_QUAD,
    QuadratureSpec,
    StieltjesTransform,
    beta_weight_integral,
    branching_flow,
    make_stieltjes_transform,
    pochhammer,
    stieltjes_closed_form,
)
from .stationary1d import (
    EstimateWithError,
    ModelParams1D,
    WeightedSample,
    WeightedSamples,
    moment_recursion,
    plain_estimate,
    ratio_cdf,
    sample_stationary_linnik,
    sample_stationary_tilted,
    weighted_estimate,
)
from .random_measures import (
    MomentFunction,
    MomentTensor,
    dirichlet_moment,
    evaluate_action,
    generator_moment_action,
    partition_moment_coefficient,
    sample_stationary_measure,
    stationary_moment,
    stationary_moment_tensors,
)
from .fv_simulator import (
    PathRecord,
    SimConfig,
    ergodic_moment_estimate,
    generator_apply_poly,
    generator_apply_quadrature,
    generator_apply_resolvent,
    simulate_path,
    truncation_rates,
)
from .mbi import (
    GWIConfig,
    GWILaplace,
    RatioMomentFunctional,
    check_generator_factorization,
    fit_linnik_laplace,
    gwi_chain,
    gwi_exact_laplace,
    gwi_limit_parameters,
    mbi_generator_apply,
    stationary_laplace,
    total_mass_neg_moment,
    transition_laplace,
)
from .irreversibility import (
    AsymmetryVerdict,
    CenteredFunction,
    assess_irreversibility,
    asymmetry_closed_form,
    asymmetry_monte_carlo,
    centered_indicator,
)

__version__ = "0.1.0"
