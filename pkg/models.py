"""
Domain data model: cuboid scenes, segmented clouds, relations, goals and actions.

Every type converts to and from plain JSON-ready dicts (to_dict / from_dict).
Floats go through Python's shortest round-trip repr, so a value written and
read back is bit-identical.
"""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np

# Relation order is fixed; every RelationVector and model output uses it
RELATIONS: tuple[str, ...] = (
    "left",
    "right",
    "behind",
    "in_front",
    "above",
    "below",
    "in_contact",
)
N_RELATIONS = len(RELATIONS)

CONVERSE: dict[str, str] = {
    "left": "right",
    "right": "left",
    "behind": "in_front",
    "in_front": "behind",
    "above": "below",
    "below": "above",
    "in_contact": "in_contact",
}

# Relations that cannot hold together on the same ordered pair
EXCLUSIVE_PAIRS: tuple[tuple[str, str], ...] = (
    ("left", "right"),
    ("behind", "in_front"),
    ("above", "below"),
)

MAX_OBJECTS = 16
POINTS_PER_OBJECT = 128
MAX_PLANAR_DISPLACEMENT = 1.2


class GoalError(ValueError):
    """Raised for contradictory goals or goals naming pairs that do not exist."""


def ordered_pairs(ids: Iterable[int]) -> list[tuple[int, int]]:
    """All ordered pairs (i, j), i != j, in row-major order of the given ids."""
    ids = list(ids)
    return [(i, j) for i in ids for j in ids if i != j]


def _vec3(values) -> tuple[float, float, float]:
    x, y, z = (float(v) for v in values)
    return (x, y, z)


# ===== Geometry =====


@dataclass(frozen=True)
class Cuboid:
    """Axis-aligned box in the world frame."""

    object_id: int
    center: tuple[float, float, float]
    half_extents: tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "center", _vec3(self.center))
        object.__setattr__(self, "half_extents", _vec3(self.half_extents))
        if not 0 <= self.object_id < MAX_OBJECTS:
            raise ValueError(f"object_id must be in [0, {MAX_OBJECTS}), got {self.object_id}")
        if min(self.half_extents) <= 0:
            raise ValueError(f"half_extents must be positive, got {self.half_extents}")

    @property
    def min_corner(self) -> np.ndarray:
        return np.array(self.center) - np.array(self.half_extents)

    @property
    def max_corner(self) -> np.ndarray:
        return np.array(self.center) + np.array(self.half_extents)

    def with_center(self, center) -> Cuboid:
        return Cuboid(self.object_id, _vec3(center), self.half_extents)

    def translated(self, delta) -> Cuboid:
        return self.with_center(np.array(self.center) + np.asarray(delta, dtype=float))

    def to_dict(self) -> dict:
        return {
            "id": self.object_id,
            "center": list(self.center),
            "half_extents": list(self.half_extents),
        }

    @classmethod
    def from_dict(cls, data: dict) -> Cuboid:
        return cls(int(data["id"]), data["center"], data["half_extents"])


@dataclass(frozen=True)
class Camera:
    """Pinhole depth camera with +z up."""

    position: tuple[float, float, float] = (0.0, -0.9, 0.55)
    look_at: tuple[float, float, float] = (0.0, 0.0, 0.05)
    horizontal_fov: float = math.radians(60.0)
    resolution: tuple[int, int] = (160, 120)

    def __post_init__(self):
        object.__setattr__(self, "position", _vec3(self.position))
        object.__setattr__(self, "look_at", _vec3(self.look_at))
        width, height = self.resolution
        object.__setattr__(self, "resolution", (int(width), int(height)))
        view = np.array(self.look_at) - np.array(self.position)
        if np.linalg.norm(view) == 0:
            raise ValueError("camera position must differ from look_at")
        if np.hypot(view[0], view[1]) == 0:
            raise ValueError("camera view direction needs a horizontal component")
        if not 0 < self.horizontal_fov < math.pi:
            raise ValueError(f"horizontal_fov must be in (0, pi), got {self.horizontal_fov}")
        if width <= 0 or height <= 0:
            raise ValueError(f"resolution must be positive, got {self.resolution}")

    def to_dict(self) -> dict:
        return {
            "position": list(self.position),
            "look_at": list(self.look_at),
            "horizontal_fov": self.horizontal_fov,
            "resolution": list(self.resolution),
        }

    @classmethod
    def from_dict(cls, data: dict) -> Camera:
        defaults = cls()
        return cls(
            position=data.get("position", defaults.position),
            look_at=data.get("look_at", defaults.look_at),
            horizontal_fov=float(data.get("horizontal_fov", defaults.horizontal_fov)),
            resolution=tuple(data.get("resolution", defaults.resolution)),
        )


@dataclass(frozen=True)
class Scene:
    """World state: cuboids resting on the ground plane, seen by one camera."""

    objects: tuple[Cuboid, ...]
    camera: Camera = field(default_factory=Camera)
    ground_z: float = 0.0

    def __post_init__(self):
        ordered = tuple(sorted(self.objects, key=lambda c: c.object_id))
        object.__setattr__(self, "objects", ordered)
        ids = [c.object_id for c in ordered]
        if len(set(ids)) != len(ids):
            raise ValueError(f"object ids must be unique, got {ids}")

    @property
    def ids(self) -> list[int]:
        return [c.object_id for c in self.objects]

    def __len__(self):
        return len(self.objects)

    def get(self, object_id: int) -> Cuboid | None:
        for cuboid in self.objects:
            if cuboid.object_id == object_id:
                return cuboid
        return None

    def with_objects(self, objects: Iterable[Cuboid]) -> Scene:
        return Scene(tuple(objects), self.camera, self.ground_z)

    def to_dict(self) -> dict:
        return {
            "objects": [c.to_dict() for c in self.objects],
            "camera": self.camera.to_dict(),
            "ground_z": self.ground_z,
        }

    @classmethod
    def from_dict(cls, data: dict) -> Scene:
        return cls(
            objects=tuple(Cuboid.from_dict(o) for o in data["objects"]),
            camera=Camera.from_dict(data.get("camera", {})),
            ground_z=float(data.get("ground_z", 0.0)),
        )


@dataclass
class SegmentedCloud:
    """Per-object partial-view point sets in the world frame."""

    per_object: dict[int, np.ndarray]
    camera: Camera
    off_view: frozenset[int] = frozenset()

    def __post_init__(self):
        self.per_object = {
            int(k): np.asarray(v, dtype=np.float64).reshape(-1, 3)
            for k, v in sorted(self.per_object.items())
        }
        for object_id, points in self.per_object.items():
            if points.shape != (POINTS_PER_OBJECT, 3):
                raise ValueError(
                    f"object {object_id} has {points.shape[0]} points, expected {POINTS_PER_OBJECT}"
                )
        self.off_view = frozenset(int(i) for i in self.off_view)

    @property
    def ids(self) -> list[int]:
        return sorted(self.per_object)

    @property
    def visible_ids(self) -> list[int]:
        return [i for i in self.ids if i not in self.off_view]

    def __eq__(self, other):
        if not isinstance(other, SegmentedCloud):
            return NotImplemented
        return (
            self.camera == other.camera
            and self.off_view == other.off_view
            and self.ids == other.ids
            and all(np.array_equal(self.per_object[i], other.per_object[i]) for i in self.ids)
        )

    def to_dict(self) -> dict:
        return {
            "per_object": {str(k): v.tolist() for k, v in self.per_object.items()},
            "camera": self.camera.to_dict(),
            "off_view": sorted(self.off_view),
        }

    @classmethod
    def from_dict(cls, data: dict) -> SegmentedCloud:
        return cls(
            per_object={int(k): np.array(v) for k, v in data["per_object"].items()},
            camera=Camera.from_dict(data["camera"]),
            off_view=frozenset(data.get("off_view", [])),
        )


# ===== Relations =====


@dataclass
class RelationMatrix:
    """Seven binary relations for every ordered pair of objects.

    Rows follow ordered_pairs(object_ids); columns follow RELATIONS.
    """

    object_ids: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        self.object_ids = tuple(int(i) for i in self.object_ids)
        self.values = np.asarray(self.values, dtype=bool).reshape(-1, N_RELATIONS)
        expected = len(self.object_ids) * (len(self.object_ids) - 1)
        if self.values.shape[0] != expected:
            raise ValueError(f"expected {expected} pair rows, got {self.values.shape[0]}")
        self._index = {pair: row for row, pair in enumerate(ordered_pairs(self.object_ids))}

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return ordered_pairs(self.object_ids)

    def pair_index(self, a: int, b: int) -> int:
        try:
            return self._index[(a, b)]
        except KeyError:
            raise GoalError(f"pair ({a}, {b}) is not in the relation matrix") from None

    def vector(self, a: int, b: int) -> np.ndarray:
        return self.values[self.pair_index(a, b)]

    def get(self, a: int, b: int, relation: str) -> bool:
        return bool(self.vector(a, b)[RELATIONS.index(relation)])

    def __eq__(self, other):
        if not isinstance(other, RelationMatrix):
            return NotImplemented
        return self.object_ids == other.object_ids and np.array_equal(self.values, other.values)

    def to_dict(self) -> dict:
        return {
            "ids": list(self.object_ids),
            "pairs": {
                f"{a},{b}": [int(v) for v in self.values[row]]
                for row, (a, b) in enumerate(self.pairs)
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> RelationMatrix:
        parsed = {
            tuple(int(x) for x in key.split(",")): row for key, row in data["pairs"].items()
        }
        ids = [int(i) for i in data["ids"]]
        values = [parsed[pair] for pair in ordered_pairs(ids)]
        return cls(tuple(ids), np.array(values, dtype=bool).reshape(-1, N_RELATIONS))


@dataclass(frozen=True)
class GoalConjunct:
    """One required truth value: relation(pair[0], pair[1]) == value."""

    pair: tuple[int, int]
    relation: str
    value: bool = True

    def __post_init__(self):
        a, b = self.pair
        object.__setattr__(self, "pair", (int(a), int(b)))
        if a == b:
            raise GoalError(f"goal pair needs two distinct objects, got {self.pair}")
        if self.relation not in RELATIONS:
            raise GoalError(f"unknown relation '{self.relation}'")

    def canonical(self) -> tuple[tuple[int, int], str, bool]:
        """Rewrite so the smaller id comes first, using the converse relation."""
        a, b = self.pair
        if a < b:
            return (a, b), self.relation, self.value
        return (b, a), CONVERSE[self.relation], self.value

    def to_dict(self) -> dict:
        return {"pair": list(self.pair), "rel": self.relation, "value": self.value}

    @classmethod
    def from_dict(cls, data: dict) -> GoalConjunct:
        return cls(tuple(data["pair"]), data["rel"], bool(data.get("value", True)))


@dataclass(frozen=True)
class Goal:
    """Conjunction of relation requirements."""

    conjuncts: tuple[GoalConjunct, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "conjuncts", tuple(self.conjuncts))
        required: dict[tuple[tuple[int, int], str], bool] = {}
        positives: dict[tuple[int, int], set[str]] = {}
        for conjunct in self.conjuncts:
            pair, relation, value = conjunct.canonical()
            key = (pair, relation)
            if required.get(key, value) != value:
                raise GoalError(f"goal requires {relation}{pair} to be both true and false")
            required[key] = value
            if value:
                positives.setdefault(pair, set()).add(relation)
        for pair, relations in positives.items():
            for first, second in EXCLUSIVE_PAIRS:
                if first in relations and second in relations:
                    raise GoalError(f"goal asks for both {first} and {second} on pair {pair}")

    def __len__(self):
        return len(self.conjuncts)

    @property
    def object_ids(self) -> set[int]:
        return {i for c in self.conjuncts for i in c.pair}

    def to_dict(self) -> dict:
        return {"conjuncts": [c.to_dict() for c in self.conjuncts]}

    @classmethod
    def from_dict(cls, data: dict) -> Goal:
        return cls(tuple(GoalConjunct.from_dict(c) for c in data.get("conjuncts", [])))


# ===== Actions and episodes =====


class Skill(StrEnum):
    PUSH = "push"
    PICK_PLACE = "pick_place"


SKILLS: tuple[Skill, ...] = (Skill.PUSH, Skill.PICK_PLACE)


@dataclass(frozen=True)
class SkillAction:
    """A skill applied to one target object with a planar displacement (dx, dy)."""

    skill: Skill
    target: int
    params: tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "skill", Skill(self.skill))
        dx, dy = (float(p) for p in self.params)
        object.__setattr__(self, "params", (dx, dy))
        if not 0 <= self.target < MAX_OBJECTS:
            raise ValueError(f"target must be in [0, {MAX_OBJECTS}), got {self.target}")
        if math.hypot(dx, dy) > MAX_PLANAR_DISPLACEMENT:
            raise ValueError(f"displacement {self.params} exceeds {MAX_PLANAR_DISPLACEMENT} m")

    def target_one_hot(self) -> np.ndarray:
        one_hot = np.zeros(MAX_OBJECTS)
        one_hot[self.target] = 1.0
        return one_hot

    def to_dict(self) -> dict:
        return {"skill": self.skill.value, "target": self.target, "params": list(self.params)}

    @classmethod
    def from_dict(cls, data: dict) -> SkillAction:
        return cls(Skill(data["skill"]), int(data["target"]), tuple(data["params"]))


@dataclass
class Observation:
    """Everything recorded at one timestep: poses, cloud and labels."""

    scene: Scene
    cloud: SegmentedCloud
    relations: RelationMatrix

    def to_dict(self) -> dict:
        return {
            "scene": self.scene.to_dict(),
            "cloud": self.cloud.to_dict(),
            "relations": self.relations.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> Observation:
        return cls(
            scene=Scene.from_dict(data["scene"]),
            cloud=SegmentedCloud.from_dict(data["cloud"]),
            relations=RelationMatrix.from_dict(data["relations"]),
        )


@dataclass
class Episode:
    """H+1 observations interleaved with H actions."""

    observations: list[Observation]
    actions: list[SkillAction]

    def __post_init__(self):
        if len(self.observations) != len(self.actions) + 1:
            raise ValueError(
                f"an episode needs one more observation than actions, "
                f"got {len(self.observations)} and {len(self.actions)}"
            )

    @property
    def horizon(self) -> int:
        return len(self.actions)

    @property
    def n_objects(self) -> int:
        return len(self.observations[0].scene)

    def to_dict(self) -> dict:
        return {
            "observations": [o.to_dict() for o in self.observations],
            "actions": [a.to_dict() for a in self.actions],
        }

    @classmethod
    def from_dict(cls, data: dict) -> Episode:
        return cls(
            observations=[Observation.from_dict(o) for o in data["observations"]],
            actions=[SkillAction.from_dict(a) for a in data["actions"]],
        )


# ===== Planning =====


@dataclass(frozen=True)
class PlanSkeleton:
    """Ordered subgoals, one per plan step."""

    subgoals: tuple[Goal, ...]

    def __post_init__(self):
        object.__setattr__(self, "subgoals", tuple(self.subgoals))
        if not self.subgoals:
            raise GoalError("a plan skeleton needs at least one subgoal")

    def __len__(self):
        return len(self.subgoals)

    def to_dict(self) -> dict:
        return {"subgoals": [g.to_dict() for g in self.subgoals]}

    @classmethod
    def from_dict(cls, data: dict) -> PlanSkeleton:
        return cls(tuple(Goal.from_dict(g) for g in data["subgoals"]))


@dataclass
class PlanStep:
    """One planned action plus what happened when it ran."""

    action: SkillAction
    predicted_score: float
    predicted_probabilities: list[float]
    param_std: tuple[float, float] = (0.0, 0.0)
    executed_params: tuple[float, float] | None = None
    achieved: bool | None = None
    achieved_learned: bool | None = None

    def to_dict(self) -> dict:
        return {
            "action": self.action.to_dict(),
            "predicted_score": self.predicted_score,
            "predicted_probabilities": list(self.predicted_probabilities),
            "param_std": list(self.param_std),
            "executed_params": list(self.executed_params) if self.executed_params else None,
            "achieved": self.achieved,
            "achieved_learned": self.achieved_learned,
        }


@dataclass
class PlanResult:
    """Planned actions for a skeleton, and verdicts once executed."""

    steps: list[PlanStep]
    executed: bool = False
    final_scene: Scene | None = None

    @property
    def actions(self) -> list[SkillAction]:
        return [s.action for s in self.steps]

    @property
    def scores(self) -> list[float]:
        return [s.predicted_score for s in self.steps]

    @property
    def achieved(self) -> list[bool | None]:
        return [s.achieved for s in self.steps]

    @property
    def success(self) -> bool:
        return self.executed and all(s.achieved for s in self.steps)

    def to_dict(self) -> dict:
        return {
            "steps": [s.to_dict() for s in self.steps],
            "executed": self.executed,
            "success": self.success,
            "final_scene": self.final_scene.to_dict() if self.final_scene else None,
        }
