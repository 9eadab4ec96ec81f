"""Linearized Wang-Landau sampling with deterministic step sizes."""

__version__ = "0.1.0"

from .errors import (
    CLTInapplicableError,
    DegenerateStratumError,
    DomainError,
    ModelValidationError,
    NumericError,
    ObserverError,
    UnsupportedOperation,
)
from .model import (
    FourierPotential,
    QuadratureSpec,
    StateSpace,
    Stratification,
    TargetModel,
    WeightVector,
    biased_density,
    biased_pmf,
    builtin_model,
    compute_theta_star,
    stratum_index,
    unnormalized_density,
)
from .kernel import (
    ProposalSpec,
    acceptance_prob,
    mh_chain,
    mh_step,
    proposal_matrix,
    propose,
    transition_matrix,
)
from .wl import (
    ChainState,
    ScheduleSpec,
    Trace,
    field_H,
    gamma,
    run_chain,
    update_linearized,
    update_standard,
    wl_iterate,
)
from .analysis import (
    ExactSolution,
    asymptotic_covariance,
    clt_sigma2,
    compute_U_star,
    ergodic_average,
    lyapunov,
    lyapunov_descent,
    mean_field,
    minorization_constant,
    polyak_average,
    replicate_covariance,
    solve_poisson,
    stratified_estimator,
)
