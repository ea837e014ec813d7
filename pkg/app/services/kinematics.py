"""
Kinematic blocks-world: settling, chained pushing and rigid pick-and-place.

There is no friction, toppling or rotation. An object rests on the highest
surfaces under its footprint when those cover at least SUPPORT_RATIO of its
footprint; otherwise it slides off and drops.
"""

import logging
import math

import numpy as np

from app.utils.geometry import footprint_area, footprint_overlap, penetration_depth
from models import Cuboid, Scene, Skill, SkillAction

logger = logging.getLogger(__name__)

SUPPORT_RATIO = 0.25
PUSH_SUBSTEP = 0.001
PICK_CLEARANCE = 0.01

# Heights closer than this count as the same resting surface
SURFACE_TOLERANCE = 1e-9
# Overlap deeper than this is interpenetration
PENETRATION_TOLERANCE = 1e-9
# Extra slide past exact clearance so footprints stop overlapping after rounding
SLIDE_MARGIN = 1e-9

_MAX_SLIDES = 64
_MAX_CHAIN_PASSES = 256


class SimulationError(ValueError):
    """Raised when an action targets an object that is missing or not visible."""

    def __init__(self, object_id: int, reason: str):
        self.object_id = object_id
        super().__init__(f"cannot act on object {object_id}: {reason}")


def _xy(cuboid: Cuboid) -> np.ndarray:
    return np.array(cuboid.center[:2])


def _top(cuboid: Cuboid) -> float:
    return cuboid.center[2] + cuboid.half_extents[2]


def _bottom(cuboid: Cuboid) -> float:
    return cuboid.center[2] - cuboid.half_extents[2]


def _at_height(cuboid: Cuboid, base: float) -> Cuboid:
    x, y, _ = cuboid.center
    return cuboid.with_center((x, y, base + cuboid.half_extents[2]))


def _planar_clearance(mover: Cuboid, other: Cuboid, direction: np.ndarray) -> float:
    """Distance other must travel along direction so its footprint clears mover's."""
    best = math.inf
    for k in range(2):
        d = direction[k]
        if d > 0:
            best = min(best, (mover.max_corner[k] - other.min_corner[k]) / d)
        elif d < 0:
            best = min(best, (mover.min_corner[k] - other.max_corner[k]) / d)
    return max(best, 0.0)


def _slide_clear(cuboid: Cuboid, obstacles: list[Cuboid], direction: np.ndarray) -> Cuboid:
    shift = max(_planar_clearance(o, cuboid, direction) for o in obstacles) + SLIDE_MARGIN
    return cuboid.translated((direction[0] * shift, direction[1] * shift, 0.0))


def _drop(cuboid: Cuboid, placed: list[Cuboid], ground_z: float) -> Cuboid:
    """Rest one object on the placed ones, sliding it off weak supports."""
    for _ in range(_MAX_SLIDES):
        overlaps = [(p, footprint_overlap(cuboid, p)) for p in placed]
        overlaps = [(p, area) for p, area in overlaps if area > 0.0]
        if not overlaps:
            return _at_height(cuboid, ground_z)
        top = max(_top(p) for p, _ in overlaps)
        support = [(p, area) for p, area in overlaps if _top(p) >= top - SURFACE_TOLERANCE]
        covered = sum(area for _, area in support)
        if covered / footprint_area(cuboid) >= SUPPORT_RATIO:
            return _at_height(cuboid, top)

        weights = np.array([area for _, area in support])
        centroid = np.average([_xy(p) for p, _ in support], axis=0, weights=weights)
        direction = _xy(cuboid) - centroid
        norm = np.linalg.norm(direction)
        direction = direction / norm if norm > 1e-12 else np.array([1.0, 0.0])
        logger.debug(
            f"Object {cuboid.object_id} has support ratio "
            f"{covered / footprint_area(cuboid):.3f}, sliding off"
        )
        cuboid = _slide_clear(cuboid, [p for p, _ in support], direction)

    # Give up on resting: slide until nothing is underneath, then drop to the ground
    direction = np.array([1.0, 0.0])
    for _ in range(_MAX_SLIDES):
        under = [p for p in placed if footprint_overlap(cuboid, p) > 0.0]
        if not under:
            break
        cuboid = _slide_clear(cuboid, under, direction)
    return _at_height(cuboid, ground_z)


def settle(scene: Scene) -> Scene:
    """
    Drop every object onto the ground or the objects below it, bottom-up.

    Objects are processed by (bottom height, id). Settling a settled scene
    returns it unchanged.
    """
    order = sorted(scene.objects, key=lambda c: (_bottom(c), c.object_id))
    placed: list[Cuboid] = []
    for cuboid in order:
        placed.append(_drop(cuboid, placed, scene.ground_z))
    return scene.with_objects(placed)


def riders(objects: dict[int, Cuboid], base_ids: set[int]) -> set[int]:
    """Ids resting (transitively) on any of base_ids, excluding base_ids."""
    group = set(base_ids)
    frontier = list(base_ids)
    while frontier:
        base = objects[frontier.pop()]
        for other in objects.values():
            if other.object_id in group:
                continue
            resting = abs(_bottom(other) - _top(base)) <= 1e-6
            if resting and footprint_overlap(other, base) > 0.0:
                group.add(other.object_id)
                frontier.append(other.object_id)
    return group - set(base_ids)


def _check_target(scene: Scene, action: SkillAction, skill: Skill, off_view) -> None:
    if action.skill != skill:
        raise ValueError(f"expected a {skill.value} action, got {action.skill.value}")
    if scene.get(action.target) is None:
        raise SimulationError(action.target, "no such object in the scene")
    if action.target in off_view:
        raise SimulationError(action.target, "object is off-view")


def _resolve_chain(
    objects: dict[int, Cuboid], movers: set[int], direction: np.ndarray
) -> None:
    """Shove every object penetrated by a mover along direction, recursively."""
    for _ in range(_MAX_CHAIN_PASSES):
        shoved = False
        for other_id in sorted(set(objects) - movers):
            other = objects[other_id]
            shift = 0.0
            for mover_id in movers:
                if penetration_depth(objects[mover_id], other) > PENETRATION_TOLERANCE:
                    shift = max(shift, _planar_clearance(objects[mover_id], other, direction))
            if shift <= 0.0:
                continue
            group = {other_id} | riders(objects, {other_id})
            for member in group - movers:
                objects[member] = objects[member].translated(
                    (direction[0] * shift, direction[1] * shift, 0.0)
                )
            movers |= group
            shoved = True
            logger.debug(f"Push chain moved object {other_id} by {shift:.4f} m")
        if not shoved:
            return
    logger.warning("Push chain did not resolve within the pass limit")


def apply_push(
    scene: Scene, action: SkillAction, off_view: frozenset[int] = frozenset()
) -> Scene:
    """
    Sweep the target along (dx, dy) in 1 mm substeps, shoving what it meets.

    Objects resting on anything that moves travel with it. The result is settled.

    Raises:
        SimulationError: If the target is missing or off-view
    """
    _check_target(scene, action, Skill.PUSH, off_view)
    delta = np.array(action.params)
    distance = float(np.linalg.norm(delta))
    if distance == 0.0:
        return settle(scene)
    direction = delta / distance

    objects = {c.object_id: c for c in scene.objects}
    group = {action.target} | riders(objects, {action.target})
    start = {i: objects[i] for i in group}
    n_sub = max(1, math.ceil(distance / PUSH_SUBSTEP))
    for k in range(1, n_sub + 1):
        travelled = distance if k == n_sub else distance * k / n_sub
        step = (direction[0] * travelled, direction[1] * travelled, 0.0)
        for i in group:
            objects[i] = start[i].translated(step)
        _resolve_chain(objects, set(group), direction)

    return settle(scene.with_objects(objects.values()))


def apply_pick_place(
    scene: Scene, action: SkillAction, off_view: frozenset[int] = frozenset()
) -> Scene:
    """
    Lift the target and everything stacked on it, move it by (dx, dy) and set it down.

    Raises:
        SimulationError: If the target is missing or off-view
    """
    _check_target(scene, action, Skill.PICK_PLACE, off_view)
    objects = {c.object_id: c for c in scene.objects}
    group = {action.target} | riders(objects, {action.target})
    others = [c for i, c in objects.items() if i not in group]
    ceiling = max((_top(c) for c in others), default=scene.ground_z)
    lift = max(0.0, ceiling + PICK_CLEARANCE - min(_bottom(objects[i]) for i in group))
    dx, dy = action.params
    for i in group:
        objects[i] = objects[i].translated((dx, dy, lift))
    return settle(scene.with_objects(objects.values()))


def apply_action(
    scene: Scene, action: SkillAction, off_view: frozenset[int] = frozenset()
) -> Scene:
    """Dispatch to the skill's kinematic model."""
    if action.skill == Skill.PUSH:
        return apply_push(scene, action, off_view)
    if action.skill == Skill.PICK_PLACE:
        return apply_pick_place(scene, action, off_view)
    raise ValueError(f"unknown skill {action.skill}")
