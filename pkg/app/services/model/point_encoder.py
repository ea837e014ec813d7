"""
Per-object point-set encoder: shared per-point MLP, max-pool, then a global MLP.
"""

from collections.abc import Sequence

import numpy as np

from app.autodiff import MlpParams, Tensor, constant, init_mlp, max_rows, mlp_forward
from app.autodiff.tensor import ShapeError
from app.services.model.config import ModelConfig


def point_features(clouds: Sequence[np.ndarray], points_per_object: int) -> np.ndarray:
    """
    Center each object's points on its centroid and append the centroid.

    Returns:
        Array [N * points_per_object x 6] of (p - c) concatenated with c
    """
    rows = []
    for points in clouds:
        points = np.asarray(points, dtype=np.float64)
        if points.shape != (points_per_object, 3):
            raise ShapeError("encode_points", points.shape, (points_per_object, 3))
        centroid = points.mean(axis=0)
        rows.append(np.hstack([points - centroid, np.broadcast_to(centroid, points.shape)]))
    if not rows:
        return np.zeros((0, 6))
    return np.vstack(rows)


class PointCloudEncoder:
    """Maps each [128 x 3] object cloud to a point-feature vector."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        self.config = config
        self.point_mlp: MlpParams = init_mlp(
            [6, config.point_hidden, config.point_feature_width], rng
        )
        self.global_mlp: MlpParams = init_mlp(
            [config.point_feature_width, config.point_feature_width], rng
        )

    def named_mlps(self) -> dict[str, MlpParams]:
        return {"phi_pc.point_mlp": self.point_mlp, "phi_pc.global_mlp": self.global_mlp}

    def encode(self, clouds: Sequence[np.ndarray]) -> Tensor:
        """Encode N clouds at once into [N x point_feature_width]."""
        if not clouds:
            raise ShapeError("encode_points", (0,), (1,), "need at least one object")
        features = constant(point_features(clouds, self.config.points_per_object))
        per_point = mlp_forward(self.point_mlp, features)
        pooled = max_rows(per_point, len(clouds))
        return mlp_forward(self.global_mlp, pooled)
