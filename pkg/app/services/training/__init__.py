"""
Multi-step training of relational dynamics models.
"""

from app.services.training.ablations import ABLATIONS, Ablation, get_ablation
from app.services.training.losses import (
    EpisodeForward,
    LossWeights,
    episode_losses,
    loss_dyn,
    loss_pose,
    loss_rel,
    loss_rel_prime,
    rollout_indices,
)
from app.services.training.training_service import (
    EpochMetrics,
    TrainConfig,
    TrainingDivergedError,
    TrainResult,
    train,
)

__all__ = [
    "ABLATIONS",
    "Ablation",
    "EpisodeForward",
    "EpochMetrics",
    "LossWeights",
    "TrainConfig",
    "TrainResult",
    "TrainingDivergedError",
    "episode_losses",
    "get_ablation",
    "loss_dyn",
    "loss_pose",
    "loss_rel",
    "loss_rel_prime",
    "rollout_indices",
    "train",
]
