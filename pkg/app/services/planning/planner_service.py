"""
Greedy skeleton planning in latent space, then execution in the kinematic simulator.
"""

import logging
import time
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from app.autodiff import PROB_EPS
from app.services.kinematics import SimulationError, apply_action
from app.services.model import LatentGraph, RelationalModel, evaluation_ids
from app.services.model.readout import cloud_half_extents, read_relations
from app.services.planning.cem import CemConfig, CemResult, cem_optimize, sample_within_3sigma
from app.services.relation_labeler import goal_satisfied, label_scene
from app.services.scene_service import render_cloud
from models import (
    RELATIONS,
    SKILLS,
    Camera,
    Goal,
    GoalError,
    PlanResult,
    PlanSkeleton,
    PlanStep,
    Scene,
    SegmentedCloud,
    Skill,
    SkillAction,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Readout:
    """What relation probabilities are read with: the model plus analytic-readout inputs."""

    model: RelationalModel
    camera: Camera
    half_extents: np.ndarray | None = None

    @classmethod
    def for_cloud(cls, model: RelationalModel, cloud: SegmentedCloud) -> "Readout":
        extents = cloud_half_extents(cloud) if model.config.readout == "analytic" else None
        return cls(model=model, camera=cloud.camera, half_extents=extents)

    def relations(self, latent: LatentGraph) -> np.ndarray:
        return read_relations(self.model, latent, self.half_extents, self.camera)


@dataclass
class StepPlan:
    """Winner of one plan step across every (skill, target) search."""

    action: SkillAction
    score: float
    next_latent: LatentGraph
    probabilities: list[float]
    std: tuple[float, float]
    candidates: list[tuple[Skill, int, CemResult]]


def conjunct_probabilities(probs: np.ndarray, latent: LatentGraph, goal: Goal) -> np.ndarray:
    """
    Probability that each conjunct's relation holds, in goal order.

    Raises:
        GoalError: If the goal names an object that is not in the graph
    """
    values = []
    for conjunct in goal.conjuncts:
        try:
            row = latent.edge_index(*conjunct.pair)
        except ValueError as e:
            raise GoalError(str(e)) from e
        values.append(probs[row, RELATIONS.index(conjunct.relation)])
    return np.array(values, dtype=np.float64)


def goal_log_probability(probs: np.ndarray, latent: LatentGraph, goal: Goal) -> float:
    """Sum of log p for required-true conjuncts and log(1 - p) for required-false ones."""
    p = np.clip(conjunct_probabilities(probs, latent, goal), PROB_EPS, 1.0 - PROB_EPS)
    wanted = np.array([c.value for c in goal.conjuncts], dtype=bool)
    return float(np.sum(np.where(wanted, np.log(p), np.log(1.0 - p))))


def score_action(latent: LatentGraph, action: SkillAction, goal: Goal, readout: Readout) -> float:
    """Log-probability that goal holds after rolling latent forward by action."""
    rolled = readout.model.dynamics(latent, action)
    return goal_log_probability(readout.relations(rolled), latent, goal)


def _batch_objective(
    latent: LatentGraph,
    skill: Skill,
    target: int,
    goal: Goal,
    readout: Readout,
    pool: ThreadPoolExecutor | None,
):
    def score_row(row: np.ndarray) -> float:
        return score_action(latent, SkillAction(skill, target, tuple(row)), goal, readout)

    def objective(samples: np.ndarray) -> np.ndarray:
        if pool is None:
            return np.array([score_row(row) for row in samples])
        # map keeps sample order, so results match sequential scoring
        return np.array(list(pool.map(score_row, samples)))

    return objective


def plan_step(
    latent: LatentGraph,
    goal: Goal,
    config: CemConfig,
    readout: Readout,
    rng: np.random.Generator,
    targets: Sequence[int] | None = None,
    pool: ThreadPoolExecutor | None = None,
) -> StepPlan:
    """
    Run CEM for every (skill, target) pair and keep the highest-scoring final mean.

    Ties go to the earlier pair in (skill, target) enumeration order.
    """
    targets = list(latent.object_ids if targets is None else targets)
    if not targets:
        raise ValueError("no object can be targeted")
    seeds = rng.integers(0, 2**63 - 1, size=len(SKILLS) * len(targets))
    candidates: list[tuple[Skill, int, CemResult]] = []
    for k, (skill, target) in enumerate((s, t) for s in SKILLS for t in targets):
        low, high = config.bounds(skill)
        result = cem_optimize(
            _batch_objective(latent, skill, target, goal, readout, pool),
            np.zeros(2),
            config.initial_std(skill),
            low,
            high,
            config,
            np.random.default_rng(int(seeds[k])),
        )
        candidates.append((skill, target, result))

    best_skill, best_target, best = max(candidates, key=lambda c: c[2].score)
    action = SkillAction(best_skill, best_target, tuple(best.mean))
    next_latent = readout.model.dynamics(latent, action)
    probabilities = conjunct_probabilities(readout.relations(next_latent), latent, goal)
    logger.debug(
        f"Plan step: {action.skill.value} object {action.target} by {action.params} "
        f"scores {best.score:.4f} over {len(candidates)} searches"
    )
    return StepPlan(
        action=action,
        score=best.score,
        next_latent=next_latent,
        probabilities=[float(p) for p in probabilities],
        std=(float(best.std[0]), float(best.std[1])),
        candidates=candidates,
    )


def plan_skeleton(
    cloud: SegmentedCloud,
    skeleton: PlanSkeleton,
    config: CemConfig,
    model: RelationalModel,
    rng: np.random.Generator,
) -> PlanResult:
    """
    Plan one action per subgoal, feeding each predicted latent into the next step.

    Only the initial cloud is observed; later steps never see a scene.
    """
    started = time.perf_counter()
    readout = Readout.for_cloud(model, cloud)
    latent = model.encode(cloud, evaluation_ids(cloud.ids))
    targets = cloud.visible_ids or cloud.ids
    steps: list[PlanStep] = []
    pool = ThreadPoolExecutor(max_workers=config.threads) if config.threads > 1 else None
    try:
        for k, subgoal in enumerate(skeleton.subgoals):
            chosen = plan_step(latent, subgoal, config, readout, rng, targets, pool)
            steps.append(
                PlanStep(
                    action=chosen.action,
                    predicted_score=chosen.score,
                    predicted_probabilities=chosen.probabilities,
                    param_std=chosen.std,
                )
            )
            latent = chosen.next_latent
            logger.info(
                f"Step {k + 1}/{len(skeleton)}: {chosen.action.skill.value} object "
                f"{chosen.action.target}, predicted log-probability {chosen.score:.4f}"
            )
    finally:
        if pool is not None:
            pool.shutdown()
    logger.info(f"Planned {len(steps)} steps in {time.perf_counter() - started:.1f}s")
    return PlanResult(steps=steps)


def learned_goal_satisfied(
    model: RelationalModel, cloud: SegmentedCloud, goal: Goal
) -> bool:
    """Goal verdict from relations detected on cloud, thresholded at 0.5."""
    readout = Readout.for_cloud(model, cloud)
    latent = model.encode(cloud, evaluation_ids(cloud.ids))
    p = conjunct_probabilities(readout.relations(latent), latent, goal)
    wanted = np.array([c.value for c in goal.conjuncts], dtype=bool)
    return bool(np.all((p >= 0.5) == wanted))


def execute_and_verify(
    scene: Scene,
    result: PlanResult,
    skeleton: PlanSkeleton,
    model: RelationalModel,
    config: CemConfig,
    rng: np.random.Generator | None = None,
) -> PlanResult:
    """
    Run the planned actions in the simulator and check each subgoal afterwards.

    In mean mode the planned parameters run unchanged; in sample_3sigma mode each
    is redrawn within three standard deviations of the final CEM mean. Every step
    records the analytic verdict (the success metric) and the learned one. An
    action whose target has become off-view (or does not exist) is not run; its
    executed_params stay None and the subgoal is checked on the unchanged scene.

    Raises:
        ValueError: If result was already executed or its length differs from skeleton
    """
    if result.executed:
        raise ValueError("plan result was already executed")
    if len(result.steps) != len(skeleton):
        raise ValueError(f"plan has {len(result.steps)} steps for {len(skeleton)} subgoals")
    if config.execution_mode == "sample_3sigma" and rng is None:
        raise ValueError("sample_3sigma execution needs a random generator")

    cloud = render_cloud(scene)
    for step, subgoal in zip(result.steps, skeleton.subgoals, strict=True):
        action = step.action
        if config.execution_mode == "sample_3sigma":
            low, high = config.bounds(action.skill)
            params = sample_within_3sigma(
                np.array(action.params), np.array(step.param_std), low, high, rng
            )
            action = SkillAction(action.skill, action.target, tuple(params))
        try:
            scene = apply_action(scene, action, cloud.off_view)
        except SimulationError as e:
            logger.warning(f"Skipping planned {action.skill.value}: {e}")
        else:
            cloud = render_cloud(scene)
            step.executed_params = action.params
        step.achieved = goal_satisfied(label_scene(scene, cloud.off_view), subgoal)
        step.achieved_learned = learned_goal_satisfied(model, cloud, subgoal)

    result.executed = True
    result.final_scene = scene
    logger.info(
        f"Executed {len(result.steps)} steps: "
        f"{sum(bool(a) for a in result.achieved)}/{len(result.steps)} subgoals achieved"
    )
    return result
