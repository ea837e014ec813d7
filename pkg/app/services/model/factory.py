"""
Model construction and checkpoint round trips.
"""

import logging
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from app.services.model.base import RelationalModel
from app.services.model.config import ModelConfig
from app.services.model.graph_model import GraphRelationalModel
from app.services.model.pairwise_model import PairwiseRelationalModel
from app.stores.checkpoint_store import CheckpointFormatError, load_checkpoint, save_checkpoint

logger = logging.getLogger(__name__)

_ARCHITECTURES: dict[str, type[RelationalModel]] = {
    "gnn": GraphRelationalModel,
    "pairwise_mlp": PairwiseRelationalModel,
}


def build_model(config: ModelConfig, seed: int = 0) -> RelationalModel:
    """
    Freshly initialized model for config, weights drawn from seed.

    A pairwise_mlp model has no pose head: its regress_pose raises MissingHeadError,
    and ModelConfig already refuses it an analytic readout.
    """
    model = _ARCHITECTURES[config.architecture](config, np.random.default_rng(seed))
    logger.debug(f"Built {config.architecture} model with {model.param_count()} parameters")
    return model


def save_model(path: Path, model: RelationalModel, metadata: dict | None = None) -> None:
    """Write model weights and config to a checkpoint archive."""
    save_checkpoint(
        path,
        [(name, t.data) for name, t in model.named_parameters()],
        model.config.model_dump(),
        metadata,
    )


def load_model(path: Path) -> tuple[RelationalModel, dict]:
    """
    Rebuild a model from a checkpoint.

    Returns:
        (model, checkpoint metadata)

    Raises:
        CheckpointFormatError: If the archive or its embedded config is invalid
    """
    checkpoint = load_checkpoint(path)
    try:
        config = ModelConfig.model_validate(checkpoint.model_config)
    except ValidationError as e:
        raise CheckpointFormatError(f"{path} has an invalid model config: {e}") from e
    model = build_model(config)
    try:
        model.load_state_dict(checkpoint.params)
    except ValueError as e:
        raise CheckpointFormatError(f"{path} does not match its model config: {e}") from e
    return model, checkpoint.metadata
