"""
Proximal dynamics for multi-agent network games.

Agents repeatedly reply through their proximal maps to a weighted average
of their neighbors' states. The package provides the graph tools
(validation, Perron-Frobenius weights, averagedness checks), a library of
proximal maps, synchronous / relaxed / time-varying / asynchronous
dynamics, the Prox-GNWE iteration for affine coupling constraints, and
builders for opinion-dynamics and distributed-LASSO examples.
"""

from netgame.async_sim import (
    AsyncConfig,
    DelayBuffer,
    delay_bound,
    psi_bound,
    run_async,
    skewed_probabilities,
    step_async,
)
from netgame.dynamics import (
    GameSpec,
    modified_mixing_matrix,
    residual,
    run_sync,
    run_tv,
    step_krasnoselskii,
    step_sync,
    step_tv_modified,
    verify_nwe,
    verify_pnwe,
)
from netgame.errors import (
    ConfigError,
    DimensionError,
    IterationLimitError,
    NetgameError,
    ParameterError,
    PreconditionError,
    UnsupportedKindError,
)
from netgame.gnwe import (
    CouplingConstraints,
    GnweParams,
    GnweState,
    feasible_params,
    monotonicity_check_G,
    preconditioner,
    radii,
    run_prox_gnwe,
    step_prox_gnwe,
    verify_gnwe,
)
from netgame.graph import (
    RowStochasticMatrix,
    averagedness_check,
    doubly_stochastic_transform,
    left_pf_eigenvector,
    mix,
    random_row_stochastic,
    validate_standing_assumption,
)
from netgame.models import (
    FjProfile,
    LassoInstance,
    build_degroot_bounded,
    build_distributed_lasso,
    build_friedkin_johnsen,
    centralized_lasso_oracle,
    mse_curve,
)
from netgame.prox import (
    BoxIndicator,
    CustomProx,
    FJQuadratic,
    L1Norm,
    LeastSquaresL1,
    ProximalMap,
    block_prox,
    prox_eval,
    subgradient_residual,
)
from netgame.trajectory import TrajectoryRecord

__version__ = "0.1.0"

__all__ = [
    "AsyncConfig",
    "averagedness_check",
    "block_prox",
    "BoxIndicator",
    "build_degroot_bounded",
    "build_distributed_lasso",
    "build_friedkin_johnsen",
    "centralized_lasso_oracle",
    "ConfigError",
    "CouplingConstraints",
    "CustomProx",
    "delay_bound",
    "DelayBuffer",
    "DimensionError",
    "doubly_stochastic_transform",
    "feasible_params",
    "FjProfile",
    "FJQuadratic",
    "GameSpec",
    "GnweParams",
    "GnweState",
    "IterationLimitError",
    "L1Norm",
    "LassoInstance",
    "LeastSquaresL1",
    "left_pf_eigenvector",
    "mix",
    "modified_mixing_matrix",
    "monotonicity_check_G",
    "mse_curve",
    "NetgameError",
    "ParameterError",
    "preconditioner",
    "PreconditionError",
    "prox_eval",
    "ProximalMap",
    "psi_bound",
    "radii",
    "random_row_stochastic",
    "residual",
    "RowStochasticMatrix",
    "run_async",
    "run_prox_gnwe",
    "run_sync",
    "run_tv",
    "skewed_probabilities",
    "step_async",
    "step_krasnoselskii",
    "step_prox_gnwe",
    "step_sync",
    "step_tv_modified",
    "subgradient_residual",
    "TrajectoryRecord",
    "UnsupportedKindError",
    "validate_standing_assumption",
    "verify_gnwe",
    "verify_nwe",
    "verify_pnwe",
]
