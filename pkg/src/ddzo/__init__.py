"""Zeroth-order optimisation under decision-dependent distributions."""

from .core import (
    NoisyValueOracle,
    OracleError,
    ProblemSpec,
    QueryCounter,
    StochasticOracle,
    make_rng,
    noisy_value_oracle,
)
from .estimators import (
    GradientEstimate,
    ResidualState,
    baseline_estimator,
    init_residual_state,
    minibatch_two_point,
    one_point_residual,
    two_point,
)
from .o2nc import O2NCConfig, RunTrace, ZOO2NC, goldstein_certificate, project_ball, run_o2nc
from .schedules import (
    Schedule,
    clamp_budget,
    schedule_goldstein,
    schedule_sgd,
    schedule_smooth,
    schedule_theorem2,
)
from .sgd import SGDConfig, ZOSGD, run_sgd
from .smoothing import (
    SmoothingParams,
    mc_smoothed_gradient,
    mc_smoothed_value,
    sample_ball,
    sample_sphere,
    variance_on_sphere,
)

__version__ = "0.1.0"
