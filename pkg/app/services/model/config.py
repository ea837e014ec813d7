"""
Model hyperparameters, stored inside every checkpoint.
"""

from typing import Literal

from pydantic import BaseModel, Field, model_validator

from models import MAX_OBJECTS, N_RELATIONS, POINTS_PER_OBJECT

Architecture = Literal["gnn", "pairwise_mlp"]
Readout = Literal["learned", "analytic"]


class ModelConfig(BaseModel):
    """Widths and structure of a relational dynamics model."""

    point_feature_width: int = Field(default=128, gt=0)
    point_hidden: int = Field(default=64, gt=0)
    id_width: int = Field(default=MAX_OBJECTS, gt=0)
    latent_width: int = Field(default=128, gt=0)
    graph_hidden: int = Field(default=64, gt=0)
    relation_hidden: int = Field(default=64, gt=0)
    pose_hidden: int = Field(default=64, gt=0)
    action_hidden: int = Field(default=128, gt=0)
    n_relations: int = N_RELATIONS
    architecture: Architecture = "gnn"
    readout: Readout = "learned"
    message_rounds: int = Field(default=1, ge=1)
    push_bound: float = Field(default=0.3, gt=0.0)
    pick_place_bound: float = Field(default=0.4, gt=0.0)
    points_per_object: int = POINTS_PER_OBJECT

    @model_validator(mode="after")
    def _check(self):
        if self.n_relations != N_RELATIONS:
            raise ValueError(f"n_relations must be {N_RELATIONS} to match the relation order")
        if self.id_width != MAX_OBJECTS:
            raise ValueError(f"id_width must be {MAX_OBJECTS}")
        if self.architecture == "pairwise_mlp" and self.readout == "analytic":
            raise ValueError("the pairwise baseline has no pose head for an analytic readout")
        return self

    @property
    def node_input_width(self) -> int:
        return self.point_feature_width + self.id_width

    @property
    def action_input_width(self) -> int:
        # skill one-hot (2) + target one-hot + normalized (dx, dy)
        return 2 + self.id_width + 2
