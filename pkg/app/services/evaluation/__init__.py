"""
Metrics, goal sampling, planning sweeps and report figures.
"""

from app.services.evaluation.f1_service import F1Evaluation, PathCounts, f1_eval, tally_episode
from app.services.evaluation.goal_sampler import (
    SampledGoal,
    SampledSkeleton,
    goal_from_transition,
    goal_sampler,
    sample_skeleton,
)
from app.services.evaluation.metrics import THRESHOLD, ConfusionCounts, F1Report, f1_from
from app.services.evaluation.sweep_service import (
    SweepResult,
    SweepSpec,
    TrialRow,
    read_sweep_csv,
    run_sweep,
    run_trial,
    trial_seed,
    write_sweep_csv,
)

__all__ = [
    "THRESHOLD",
    "ConfusionCounts",
    "F1Evaluation",
    "F1Report",
    "PathCounts",
    "SampledGoal",
    "SampledSkeleton",
    "SweepResult",
    "SweepSpec",
    "TrialRow",
    "f1_eval",
    "f1_from",
    "goal_from_transition",
    "goal_sampler",
    "read_sweep_csv",
    "run_sweep",
    "run_trial",
    "sample_skeleton",
    "tally_episode",
    "write_sweep_csv",
]
