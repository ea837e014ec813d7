"""
Analytic spatial relations between ordered object pairs, in camera-aligned axes.

These rules are the single definition of every relation: training labels,
goal checks and evaluation metrics all come from here.
"""

import logging

import numpy as np

from app.utils.geometry import camera_aabb, interval_overlap
from models import (
    N_RELATIONS,
    RELATIONS,
    Camera,
    Cuboid,
    Goal,
    GoalError,
    RelationMatrix,
    Scene,
    ordered_pairs,
)

logger = logging.getLogger(__name__)

CONTACT_TOLERANCE = 1e-3

_COLUMN = {name: k for k, name in enumerate(RELATIONS)}


def label_boxes(lo_a: np.ndarray, hi_a: np.ndarray, lo_b: np.ndarray, hi_b: np.ndarray) -> np.ndarray:
    """
    Relation vector for two camera-frame boxes given by their min/max corners.

    Returns:
        Boolean vector in RELATIONS order
    """
    tol = CONTACT_TOLERANCE
    overlap = interval_overlap(lo_a, hi_a, lo_b, hi_b)
    footprint = overlap[0] > 0.0 and overlap[1] > 0.0
    out = np.zeros(N_RELATIONS, dtype=bool)
    out[_COLUMN["left"]] = hi_a[0] <= lo_b[0] + tol
    out[_COLUMN["right"]] = hi_b[0] <= lo_a[0] + tol
    out[_COLUMN["behind"]] = lo_a[1] >= hi_b[1] - tol
    out[_COLUMN["in_front"]] = lo_b[1] >= hi_a[1] - tol
    out[_COLUMN["above"]] = footprint and lo_a[2] >= hi_b[2] - tol
    out[_COLUMN["below"]] = footprint and lo_b[2] >= hi_a[2] - tol
    out[_COLUMN["in_contact"]] = bool(np.all(-overlap <= tol))
    return out


def label_pair(a: Cuboid, b: Cuboid, camera: Camera) -> np.ndarray:
    """
    Relation vector of the ordered pair (a, b) as seen from camera.

    Raises:
        ValueError: If a and b are the same object
    """
    if a.object_id == b.object_id:
        raise ValueError(f"cannot relate object {a.object_id} to itself")
    lo_a, hi_a = camera_aabb(a, camera)
    lo_b, hi_b = camera_aabb(b, camera)
    return label_boxes(lo_a, hi_a, lo_b, hi_b)


def label_scene(scene: Scene, off_view: frozenset[int] = frozenset()) -> RelationMatrix:
    """
    Label every ordered pair of the scene.

    Off-view objects get all-false vectors against every partner.
    """
    ids = scene.ids
    boxes = {c.object_id: camera_aabb(c, scene.camera) for c in scene.objects}
    rows = []
    for a, b in ordered_pairs(ids):
        if a in off_view or b in off_view:
            rows.append(np.zeros(N_RELATIONS, dtype=bool))
        else:
            rows.append(label_boxes(*boxes[a], *boxes[b]))
    values = np.array(rows, dtype=bool).reshape(-1, N_RELATIONS)
    return RelationMatrix(tuple(ids), values)


def goal_satisfied(matrix: RelationMatrix, goal: Goal) -> bool:
    """
    True iff every conjunct of goal holds in matrix.

    Raises:
        GoalError: If the goal names a pair the matrix does not contain
    """
    verdict = True
    for conjunct in goal.conjuncts:
        # Look up every pair first so unknown ids always raise
        if matrix.get(*conjunct.pair, conjunct.relation) != conjunct.value:
            verdict = False
    return verdict
