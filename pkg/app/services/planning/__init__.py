"""
Cross-entropy-method planning over skill parameters and plan skeletons.
"""

from app.services.planning.cem import (
    CemConfig,
    CemResult,
    cem_optimize,
    sample_within_3sigma,
    select_elites,
)
from app.services.planning.planner_service import (
    Readout,
    StepPlan,
    conjunct_probabilities,
    execute_and_verify,
    goal_log_probability,
    learned_goal_satisfied,
    plan_skeleton,
    plan_step,
    score_action,
)

__all__ = [
    "CemConfig",
    "CemResult",
    "Readout",
    "StepPlan",
    "cem_optimize",
    "conjunct_probabilities",
    "execute_and_verify",
    "goal_log_probability",
    "learned_goal_satisfied",
    "plan_skeleton",
    "plan_step",
    "sample_within_3sigma",
    "score_action",
    "select_elites",
]
