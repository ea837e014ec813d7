"""
Validated file formats read and written by the command line.

Each file model checks the JSON shape and converts to the domain types in
models.py; domain rules (distinct ids, consistent goals) are enforced there.
"""

import json
import logging
import math
from pathlib import Path
from typing import TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from app.services.evaluation.sweep_service import SweepSpec
from app.services.model import ModelConfig
from app.services.planning import CemConfig
from app.services.simulation_service import GenerationConfig
from app.services.training import TrainConfig
from models import (
    RELATIONS,
    Camera,
    Cuboid,
    Goal,
    GoalConjunct,
    PlanResult,
    PlanSkeleton,
    Scene,
)

logger = logging.getLogger(__name__)

Vec3 = tuple[float, float, float]


class CuboidFile(BaseModel):
    """An axis-aligned box in a scene file."""

    id: int = Field(ge=0, lt=16)
    center: Vec3
    half_extents: Vec3

    def to_domain(self) -> Cuboid:
        return Cuboid(self.id, self.center, self.half_extents)


class CameraFile(BaseModel):
    position: Vec3 = (0.0, -0.9, 0.55)
    look_at: Vec3 = (0.0, 0.0, 0.05)
    horizontal_fov: float = Field(default=math.radians(60.0), gt=0.0, lt=math.pi)
    resolution: tuple[int, int] = (160, 120)

    def to_domain(self) -> Camera:
        return Camera(self.position, self.look_at, self.horizontal_fov, self.resolution)


class SceneFile(BaseModel):
    """`scene.json`: cuboids plus an optional camera."""

    objects: list[CuboidFile] = Field(min_length=1)
    camera: CameraFile = Field(default_factory=CameraFile)
    ground_z: float = 0.0

    def to_domain(self) -> Scene:
        return Scene(
            tuple(o.to_domain() for o in self.objects), self.camera.to_domain(), self.ground_z
        )


class ConjunctFile(BaseModel):
    pair: tuple[int, int]
    rel: str
    value: bool = True

    def to_domain(self) -> GoalConjunct:
        if self.rel not in RELATIONS:
            raise ValueError(f"unknown relation '{self.rel}', expected one of {list(RELATIONS)}")
        return GoalConjunct(self.pair, self.rel, self.value)


class GoalFile(BaseModel):
    conjuncts: list[ConjunctFile] = Field(default_factory=list)

    def to_domain(self) -> Goal:
        return Goal(tuple(c.to_domain() for c in self.conjuncts))


class SkeletonFile(BaseModel):
    """`goals.json`: ordered subgoals, one per plan step."""

    subgoals: list[GoalFile] = Field(min_length=1)

    def to_domain(self) -> PlanSkeleton:
        return PlanSkeleton(tuple(g.to_domain() for g in self.subgoals))


class PlanReport(BaseModel):
    """`plan --report` output."""

    model_config = ConfigDict(protected_namespaces=())

    checkpoint: str
    seed: int
    execution_mode: str
    skeleton: dict
    plan: dict

    @classmethod
    def build(
        cls, checkpoint: Path, seed: int, mode: str, skeleton: PlanSkeleton, result: PlanResult
    ) -> "PlanReport":
        return cls(
            checkpoint=str(checkpoint),
            seed=seed,
            execution_mode=mode,
            skeleton=skeleton.to_dict(),
            plan=result.to_dict(),
        )


class RunConfigFile(BaseModel):
    """`--config` file: every section is optional and overrides the defaults."""

    model_config = ConfigDict(extra="forbid", protected_namespaces=())

    generation: GenerationConfig | None = None
    model: ModelConfig | None = None
    train: TrainConfig | None = None
    cem: CemConfig | None = None
    sweep: SweepSpec | None = None


FileModel = TypeVar("FileModel", bound=BaseModel)


def load_json_file(path: Path, schema: type[FileModel]) -> FileModel:
    """
    Read and validate a JSON file.

    Raises:
        ValueError: If the file is not JSON or does not match the schema
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ValueError(f"{path} is not valid JSON: {e.msg} at line {e.lineno}") from e
    try:
        return schema.model_validate(raw)
    except ValidationError as e:
        raise ValueError(f"{path} does not match the {schema.__name__} format: {e}") from e


def write_json_file(path: Path, payload: BaseModel | dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = payload.model_dump(mode="json") if isinstance(payload, BaseModel) else payload
    path.write_text(json.dumps(data, indent=2, allow_nan=False) + "\n", encoding="utf-8")
    logger.debug(f"Wrote {path}")
