"""
Relation readout: the learned classifier, or the analytic labeler applied to
predicted poses.
"""

import numpy as np

from app.autodiff import PROB_EPS
from app.services.model.base import LatentGraph, RelationalModel
from app.services.relation_labeler import label_boxes
from app.utils.geometry import box_corners, to_camera_frame
from models import N_RELATIONS, Camera, Scene, SegmentedCloud, ordered_pairs

# Smallest half extent used when estimating boxes from partial clouds
MIN_HALF_EXTENT = 1e-3


def analytic_relations(centroids: np.ndarray, half_extents: np.ndarray, camera: Camera) -> np.ndarray:
    """
    Label axis-aligned boxes around predicted centroids.

    Returns:
        Probabilities [E x 7]: 1 - 1e-7 where the labeler says true, 1e-7 otherwise
    """
    n = len(centroids)
    boxes = []
    for center, half in zip(centroids, half_extents, strict=True):
        corners = to_camera_frame(box_corners(center, half), camera)
        boxes.append((corners.min(axis=0), corners.max(axis=0)))
    rows = [label_boxes(*boxes[i], *boxes[j]) for i, j in ordered_pairs(range(n))]
    labels = np.array(rows, dtype=bool).reshape(-1, N_RELATIONS)
    return np.where(labels, 1.0 - PROB_EPS, PROB_EPS)


def scene_half_extents(scene: Scene) -> np.ndarray:
    """True half extents in sorted object order [N x 3]."""
    return np.array([c.half_extents for c in scene.objects]).reshape(-1, 3)


def cloud_half_extents(cloud: SegmentedCloud) -> np.ndarray:
    """Half extents estimated from each object's observed point bounds [N x 3]."""
    rows = []
    for object_id in cloud.ids:
        points = cloud.per_object[object_id]
        rows.append(np.maximum((points.max(axis=0) - points.min(axis=0)) / 2.0, MIN_HALF_EXTENT))
    return np.array(rows).reshape(-1, 3)


def read_relations(
    model: RelationalModel,
    latent: LatentGraph,
    half_extents: np.ndarray | None,
    camera: Camera,
) -> np.ndarray:
    """
    Relation probabilities [E x 7] for a latent graph, using the model's readout.

    Analytic readout needs the half extents of the objects in node order.
    """
    if model.config.readout == "learned":
        return model.classify_relations(latent).data
    if half_extents is None:
        raise ValueError("analytic readout needs object half extents")
    centroids, _ = model.regress_pose(latent)
    return analytic_relations(centroids.data, half_extents, camera)
