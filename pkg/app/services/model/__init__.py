"""
Relational dynamics models.
"""

from app.services.model.base import (
    InputGraph,
    LatentGraph,
    MissingHeadError,
    RelationalModel,
    evaluation_ids,
    graph_selectors,
    training_ids,
)
from app.services.model.config import ModelConfig
from app.services.model.factory import build_model, load_model, save_model
from app.services.model.graph_model import GraphRelationalModel
from app.services.model.pairwise_model import PairwiseRelationalModel

__all__ = [
    "GraphRelationalModel",
    "InputGraph",
    "LatentGraph",
    "MissingHeadError",
    "ModelConfig",
    "PairwiseRelationalModel",
    "RelationalModel",
    "build_model",
    "evaluation_ids",
    "graph_selectors",
    "load_model",
    "save_model",
    "training_ids",
]
