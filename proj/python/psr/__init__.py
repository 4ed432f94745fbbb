"""Stable observer-predictor and sampling planner, from C++."""

from ._core import (
    __version__,
    bezier_eval,
    collision_cost,
    contraction_factor,
    cv_rollout,
    default_config,
    fk_occupancy,
    load_model,
    random_model,
    lipschitz_upper_bound,
    mppi_weights,
    nominal_joints,
    plan_trial,
    simulate,
    spectral_norm,
    Model,
)

__all__ = [
    "__version__",
    "bezier_eval",
    "collision_cost",
    "contraction_factor",
    "cv_rollout",
    "default_config",
    "fk_occupancy",
    "load_model",
    "random_model",
    "lipschitz_upper_bound",
    "mppi_weights",
    "nominal_joints",
    "plan_trial",
    "simulate",
    "spectral_norm",
    "Model",
]
