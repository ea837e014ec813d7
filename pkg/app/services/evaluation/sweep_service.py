"""
Planning-success sweeps over object count, goal size or plan length.
"""

import csv
import logging
import time
from collections.abc import Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field, field_validator

from app.services.evaluation.goal_sampler import sample_skeleton
from app.services.model import RelationalModel
from app.services.planning import CemConfig, execute_and_verify, plan_skeleton
from app.services.scene_service import render_cloud, sample_scene
from app.services.simulation_service import GenerationConfig

logger = logging.getLogger(__name__)

SweepAxis = Literal["n_objects", "n_goal_relations", "n_steps"]


class SweepSpec(BaseModel):
    """One axis varied over values; the other two held at their base settings."""

    axis: SweepAxis = "n_objects"
    values: list[int] = Field(default_factory=lambda: [2, 3, 4])
    trials: int = Field(default=20, ge=1)
    seed: int = 0
    n_objects: int = Field(default=3, ge=2, le=16)
    n_goal_relations: int = Field(default=2, ge=0)
    n_steps: int = Field(default=1, ge=1)
    max_stacks: int = Field(default=2, ge=1)
    push_fraction: float = Field(default=1.0, ge=0.0, le=1.0)

    @field_validator("values")
    @classmethod
    def _check_values(cls, values: list[int]) -> list[int]:
        if not values:
            raise ValueError("sweep values must not be empty")
        return values

    def setting(self, value: int) -> dict[str, int]:
        """Object count, goal size and plan length for one swept value."""
        setting = {
            "n_objects": self.n_objects,
            "n_goal_relations": self.n_goal_relations,
            "n_steps": self.n_steps,
        }
        setting[self.axis] = value
        return setting


@dataclass
class TrialRow:
    """One planning trial; seed regenerates its scene, goals and plan."""

    model: str
    axis: str
    value: int
    trial: int
    seed: int
    n_objects: int
    n_goal_relations: int
    n_steps: int
    trivial: bool
    success: bool
    n_achieved: int
    learned_agreement: float
    predicted_score: float


CSV_COLUMNS = tuple(TrialRow.__dataclass_fields__)


@dataclass
class SweepResult:
    rows: list[TrialRow]

    def success_rates(self) -> dict[str, dict[int, float]]:
        """Mean success per model and swept value, in first-seen order."""
        grouped: dict[str, dict[int, list[bool]]] = {}
        for row in self.rows:
            grouped.setdefault(row.model, {}).setdefault(row.value, []).append(row.success)
        return {
            model: {value: float(np.mean(hits)) for value, hits in values.items()}
            for model, values in grouped.items()
        }


def trial_seed(seed: int, value: int, trial: int) -> int:
    """Seed for one trial, derived from the sweep seed, the swept value and the trial index."""
    return int(np.random.SeedSequence([seed, value, trial]).generate_state(1, np.uint64)[0] >> 1)


def run_trial(
    spec: SweepSpec,
    value: int,
    trial: int,
    model_name: str,
    model: RelationalModel,
    cem: CemConfig,
) -> TrialRow:
    """Sample a scene and a reachable skeleton, plan on the rendered cloud, execute in mean mode."""
    seed = trial_seed(spec.seed, value, trial)
    rng = np.random.default_rng(seed)
    setting = spec.setting(value)
    n_objects = setting["n_objects"]
    n_stacks = int(rng.integers(1, min(spec.max_stacks, n_objects) + 1))
    scene = sample_scene(rng, n_objects, n_stacks)
    sampled = sample_skeleton(
        scene,
        setting["n_steps"],
        setting["n_goal_relations"],
        rng,
        GenerationConfig(push_fraction=spec.push_fraction),
    )

    plan_config = cem.model_copy(update={"threads": 1, "execution_mode": "mean"})
    plan = plan_skeleton(render_cloud(scene), sampled.skeleton, plan_config, model, rng)
    plan = execute_and_verify(scene, plan, sampled.skeleton, model, plan_config)
    agreement = np.mean([s.achieved == s.achieved_learned for s in plan.steps])
    return TrialRow(
        model=model_name,
        axis=spec.axis,
        value=value,
        trial=trial,
        seed=seed,
        n_objects=n_objects,
        n_goal_relations=setting["n_goal_relations"],
        n_steps=setting["n_steps"],
        trivial=sampled.trivial,
        success=plan.success,
        n_achieved=sum(bool(a) for a in plan.achieved),
        learned_agreement=float(agreement),
        predicted_score=float(sum(plan.scores)),
    )


def run_sweep(
    spec: SweepSpec,
    models: Mapping[str, RelationalModel],
    cem: CemConfig | None = None,
    threads: int = 1,
) -> SweepResult:
    """
    Run spec.trials planning trials per swept value for every model.

    Every model sees the same scenes and goals. Trials run on up to `threads`
    workers; rows come back in (model, value, trial) order regardless.
    Success is the analytic verdict on every subgoal.
    """
    cem = cem or CemConfig()
    started = time.perf_counter()
    rows: list[TrialRow] = []
    jobs = [
        (name, value, trial)
        for name in models
        for value in spec.values
        for trial in range(spec.trials)
    ]

    def _run(job: tuple[str, int, int]) -> TrialRow:
        name, value, trial = job
        return run_trial(spec, value, trial, name, models[name], cem)

    if threads <= 1:
        rows = [_run(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_run, jobs))

    result = SweepResult(rows)
    for name, rates in result.success_rates().items():
        for value, rate in rates.items():
            logger.info(f"{name}: {spec.axis}={value} success rate {rate:.2f}")
    logger.info(f"Ran {len(rows)} trials in {time.perf_counter() - started:.1f}s")
    return result


def write_sweep_csv(result: SweepResult, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in result.rows:
            record = asdict(row)
            record["learned_agreement"] = f"{row.learned_agreement:.6g}"
            record["predicted_score"] = f"{row.predicted_score:.6g}"
            writer.writerow(record)


def read_sweep_csv(path: Path) -> SweepResult:
    """
    Raises:
        ValueError: If a required column is missing
    """
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        missing = set(CSV_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path} is missing sweep columns {sorted(missing)}")
        rows = [
            TrialRow(
                model=r["model"],
                axis=r["axis"],
                value=int(r["value"]),
                trial=int(r["trial"]),
                seed=int(r["seed"]),
                n_objects=int(r["n_objects"]),
                n_goal_relations=int(r["n_goal_relations"]),
                n_steps=int(r["n_steps"]),
                trivial=r["trivial"] == "True",
                success=r["success"] == "True",
                n_achieved=int(r["n_achieved"]),
                learned_agreement=float(r["learned_agreement"]),
                predicted_score=float(r["predicted_score"]),
            )
            for r in reader
        ]
    return SweepResult(rows)
