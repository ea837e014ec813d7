"""
Reachable goals built by running random actions forward and reading the result.
"""

import logging
from dataclasses import dataclass

import numpy as np

from app.services.kinematics import apply_action
from app.services.relation_labeler import label_scene
from app.services.scene_service import render_cloud
from app.services.simulation_service import GenerationConfig, sample_action
from models import RELATIONS, Goal, GoalConjunct, PlanSkeleton, RelationMatrix, Scene, SkillAction

logger = logging.getLogger(__name__)


@dataclass
class SampledGoal:
    """A goal, the actions that reach it, and whether it needed current-state filler."""

    goal: Goal
    actions: list[SkillAction]
    n_changed: int
    trivial: bool


@dataclass
class SampledSkeleton:
    skeleton: PlanSkeleton
    actions: list[SkillAction]
    goals: list[SampledGoal]

    @property
    def trivial(self) -> bool:
        return any(g.trivial for g in self.goals)


def _candidates(
    before: RelationMatrix, after: RelationMatrix, visible: set[int]
) -> tuple[list[GoalConjunct], list[GoalConjunct]]:
    """(conjuncts whose value the actions changed, conjuncts true before and after)."""
    changed, kept = [], []
    for a, b in after.pairs:
        if a > b or a not in visible or b not in visible:
            continue
        for k, relation in enumerate(RELATIONS):
            now, then = bool(before.vector(a, b)[k]), bool(after.vector(a, b)[k])
            if now != then:
                changed.append(GoalConjunct((a, b), relation, then))
            elif then:
                kept.append(GoalConjunct((a, b), relation, True))
    return changed, kept


def goal_from_transition(
    before: RelationMatrix,
    after: RelationMatrix,
    n_relations: int,
    rng: np.random.Generator,
    visible: set[int] | None = None,
) -> tuple[Goal, int, bool]:
    """
    Pick n_relations conjuncts that hold in after, preferring ones that differ from before.

    Returns:
        (goal, number of changed conjuncts used, trivial flag)
    """
    visible = set(after.object_ids) if visible is None else visible
    changed, kept = _candidates(before, after, visible)
    order = rng.permutation(len(changed))
    chosen = [changed[i] for i in order[:n_relations]]
    n_changed = len(chosen)
    if n_changed < n_relations:
        filler = rng.permutation(len(kept))
        chosen.extend(kept[i] for i in filler[: n_relations - n_changed])
    trivial = n_changed < n_relations or n_relations == 0
    return Goal(tuple(chosen)), n_changed, trivial


def goal_sampler(
    scene: Scene,
    n_relations: int,
    rng: np.random.Generator,
    n_actions: int = 1,
    generation: GenerationConfig | None = None,
) -> SampledGoal:
    """
    Sample a goal that n_actions random feasible actions are known to reach.

    Raises:
        ValueError: If the scene has fewer than two objects or n_relations is negative
    """
    skeleton = sample_skeleton(scene, 1, n_relations, rng, generation, actions_per_step=n_actions)
    sampled = skeleton.goals[0]
    return SampledGoal(
        goal=sampled.goal,
        actions=skeleton.actions,
        n_changed=sampled.n_changed,
        trivial=sampled.trivial,
    )


def sample_skeleton(
    scene: Scene,
    n_steps: int,
    n_relations: int,
    rng: np.random.Generator,
    generation: GenerationConfig | None = None,
    actions_per_step: int = 1,
) -> SampledSkeleton:
    """
    Sample one subgoal per step; subgoal k is read after the k-th block of random actions.

    Raises:
        ValueError: If the scene has fewer than two objects, n_steps < 1 or n_relations < 0
    """
    if len(scene) < 2:
        raise ValueError("goal sampling needs at least two objects")
    if n_steps < 1 or n_relations < 0:
        raise ValueError(f"need n_steps >= 1 and n_relations >= 0, got {n_steps}, {n_relations}")
    generation = generation or GenerationConfig()

    cloud = render_cloud(scene)
    before = label_scene(scene, cloud.off_view)
    actions: list[SkillAction] = []
    goals: list[SampledGoal] = []
    for _ in range(n_steps):
        step_actions = []
        for _ in range(actions_per_step):
            action = sample_action(rng, generation, cloud.visible_ids or scene.ids)
            scene = apply_action(scene, action, cloud.off_view - {action.target})
            cloud = render_cloud(scene)
            step_actions.append(action)
        after = label_scene(scene, cloud.off_view)
        goal, n_changed, trivial = goal_from_transition(
            before, after, n_relations, rng, set(cloud.visible_ids)
        )
        if trivial:
            logger.warning(
                f"Only {n_changed} of {n_relations} goal relations change, goal is trivial"
            )
        goals.append(SampledGoal(goal, step_actions, n_changed, trivial))
        actions.extend(step_actions)
        before = after
    return SampledSkeleton(
        skeleton=PlanSkeleton(tuple(g.goal for g in goals)), actions=actions, goals=goals
    )
