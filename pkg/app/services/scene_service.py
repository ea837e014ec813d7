"""
Scene synthesis and segmented point-cloud rendering.
"""

import logging

import numpy as np

from app.services.kinematics import SUPPORT_RATIO, settle
from app.utils.geometry import (
    farthest_point_sample,
    footprint_area,
    footprint_overlap,
    pixel_rays,
    ray_box_entry,
)
from models import MAX_OBJECTS, POINTS_PER_OBJECT, Camera, Cuboid, Scene, SegmentedCloud

logger = logging.getLogger(__name__)

HALF_EXTENT_RANGE = (0.015, 0.06)
WORKSPACE_X = (-0.2, 0.2)
WORKSPACE_Y = (-0.15, 0.15)
STACK_GAP = 0.01
MAX_ATTEMPTS = 100

_MAX_PLACEMENT_TRIES = 20


class SceneSamplingError(ValueError):
    """Raised when rejection sampling cannot produce a valid scene."""


def render_cloud(scene: Scene, rng: np.random.Generator | None = None) -> SegmentedCloud:
    """
    Ray-cast one ray per pixel and keep the first cuboid each ray hits.

    Each object's hits are resampled to exactly 128 points by farthest-point
    sampling. Objects with no visible points are flagged off-view and get an
    all-zero placeholder cloud.

    Args:
        scene: Settled scene to render
        rng: Optional generator choosing the first farthest-point seed; index 0 otherwise

    Returns:
        SegmentedCloud in world coordinates
    """
    camera = scene.camera
    per_object: dict[int, np.ndarray] = {}
    off_view: set[int] = set()
    if not scene.objects:
        return SegmentedCloud(per_object={}, camera=camera)

    origin = np.array(camera.position)
    rays = pixel_rays(camera)
    lows = np.stack([c.min_corner for c in scene.objects])
    highs = np.stack([c.max_corner for c in scene.objects])
    entry = ray_box_entry(origin, rays, lows, highs)
    nearest = np.argmin(entry, axis=1)
    distance = entry[np.arange(len(rays)), nearest]
    hit = np.isfinite(distance)
    points = origin + distance[hit, None] * rays[hit]
    owners = nearest[hit]

    for k, cuboid in enumerate(scene.objects):
        visible = points[owners == k]
        if len(visible) == 0:
            off_view.add(cuboid.object_id)
            per_object[cuboid.object_id] = np.zeros((POINTS_PER_OBJECT, 3))
            logger.warning(f"Object {cuboid.object_id} has no visible points, flagged off-view")
            continue
        start = int(rng.integers(len(visible))) if rng is not None else 0
        per_object[cuboid.object_id] = farthest_point_sample(visible, POINTS_PER_OBJECT, start)
    return SegmentedCloud(per_object=per_object, camera=camera, off_view=frozenset(off_view))


def _random_extents(rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(*HALF_EXTENT_RANGE, size=3)


def _stack_sizes(rng: np.random.Generator, n_objects: int, n_stacks: int) -> list[int]:
    sizes = [1] * n_stacks
    for _ in range(n_objects - n_stacks):
        sizes[int(rng.integers(n_stacks))] += 1
    return sizes


def _build_stack(
    rng: np.random.Generator, ids: list[int], base_xy: np.ndarray
) -> list[Cuboid] | None:
    extents = _random_extents(rng)
    stack = [Cuboid(ids[0], (base_xy[0], base_xy[1], extents[2]), extents)]
    for object_id in ids[1:]:
        below = stack[-1]
        top = below.center[2] + below.half_extents[2]
        for _ in range(_MAX_PLACEMENT_TRIES):
            extents = _random_extents(rng)
            reach = np.minimum(below.half_extents[:2], extents[:2])
            offset = rng.uniform(-reach, reach)
            xy = np.array(below.center[:2]) + offset
            candidate = Cuboid(object_id, (xy[0], xy[1], top + extents[2]), extents)
            if footprint_overlap(candidate, below) / footprint_area(candidate) >= SUPPORT_RATIO:
                stack.append(candidate)
                break
        else:
            return None
    return stack


def _stacks_separated(stacks: list[list[Cuboid]]) -> bool:
    for i, first in enumerate(stacks):
        for second in stacks[i + 1 :]:
            for a in first:
                for b in second:
                    gap = np.maximum(
                        a.min_corner[:2] - b.max_corner[:2], b.min_corner[:2] - a.max_corner[:2]
                    )
                    if gap.max() < STACK_GAP:
                        return False
    return True


def sample_scene(
    rng: np.random.Generator,
    n_objects: int,
    n_stacks: int,
    camera: Camera | None = None,
) -> Scene:
    """
    Sample random cuboids arranged in one or more vertical stacks.

    Object ids are 0..n_objects-1. Every stacked object covers at least a quarter
    of its footprint with the object below it, and stacks do not touch.

    Raises:
        SceneSamplingError: If 100 attempts fail to produce a valid arrangement
    """
    if not 1 <= n_objects <= MAX_OBJECTS:
        raise ValueError(f"n_objects must be in [1, {MAX_OBJECTS}], got {n_objects}")
    if not 1 <= n_stacks <= n_objects:
        raise ValueError(f"n_stacks must be in [1, {n_objects}], got {n_stacks}")
    camera = camera or Camera()

    for attempt in range(MAX_ATTEMPTS):
        ids = [int(i) for i in rng.permutation(n_objects)]
        stacks = []
        cursor = 0
        for size in _stack_sizes(rng, n_objects, n_stacks):
            base_xy = np.array([rng.uniform(*WORKSPACE_X), rng.uniform(*WORKSPACE_Y)])
            stack = _build_stack(rng, ids[cursor : cursor + size], base_xy)
            cursor += size
            if stack is None:
                break
            stacks.append(stack)
        if len(stacks) != n_stacks or not _stacks_separated(stacks):
            continue
        objects = [c for stack in stacks for c in stack]
        logger.debug(f"Scene sampled after {attempt + 1} attempt(s)")
        return settle(Scene(tuple(objects), camera))

    raise SceneSamplingError(
        f"could not place {n_objects} objects in {n_stacks} stack(s) after {MAX_ATTEMPTS} attempts"
    )
