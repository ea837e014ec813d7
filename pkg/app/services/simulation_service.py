"""
Episode generation: random scenes, random feasible skills, rendered and labeled.
"""

import logging
import math
from collections.abc import Iterator
from concurrent.futures import ThreadPoolExecutor
from itertools import islice

import numpy as np
from pydantic import BaseModel, Field, model_validator

from app.services.kinematics import apply_action
from app.services.relation_labeler import label_scene
from app.services.scene_service import render_cloud, sample_scene
from models import Episode, Observation, Scene, Skill, SkillAction

logger = logging.getLogger(__name__)


class GenerationConfig(BaseModel):
    """Corpus generation knobs."""

    episodes: int = Field(default=100, ge=0)
    min_objects: int = Field(default=2, ge=1, le=16)
    max_objects: int = Field(default=5, ge=1, le=16)
    min_horizon: int = Field(default=1, ge=1)
    max_horizon: int = Field(default=3, ge=1)
    max_stacks: int = Field(default=2, ge=1)
    push_fraction: float = Field(default=0.5, ge=0.0, le=1.0)
    push_distance: tuple[float, float] = (0.03, 0.3)
    pick_place_range: float = Field(default=0.4, gt=0.0)
    seed: int = 0

    @model_validator(mode="after")
    def _check_ranges(self):
        if self.min_objects > self.max_objects:
            raise ValueError("min_objects must not exceed max_objects")
        if self.min_horizon > self.max_horizon:
            raise ValueError("min_horizon must not exceed max_horizon")
        low, high = self.push_distance
        if not 0.0 <= low <= high:
            raise ValueError("push_distance must be an ordered non-negative range")
        return self


def parse_horizon(text: str) -> tuple[int, int]:
    """Parse '2' or '1..3' into an inclusive (min, max) horizon range."""
    parts = text.split("..")
    try:
        bounds = [int(p) for p in parts]
    except ValueError:
        raise ValueError(f"horizon must look like '2' or '1..3', got '{text}'") from None
    if len(bounds) == 1:
        return bounds[0], bounds[0]
    if len(bounds) != 2 or bounds[0] > bounds[1] or bounds[0] < 1:
        raise ValueError(f"horizon must look like '2' or '1..3', got '{text}'")
    return bounds[0], bounds[1]


def episode_rng(seed: int, index: int) -> np.random.Generator:
    """Independent generator for one episode, derived from (seed, index)."""
    return np.random.default_rng([seed, index])


def observe(scene: Scene, rng: np.random.Generator | None = None) -> Observation:
    """Render and label a scene."""
    cloud = render_cloud(scene, rng)
    return Observation(scene=scene, cloud=cloud, relations=label_scene(scene, cloud.off_view))


def sample_action(
    rng: np.random.Generator, config: GenerationConfig, targets: list[int]
) -> SkillAction:
    """Draw a uniformly random skill, target and displacement within the config bounds."""
    target = int(targets[int(rng.integers(len(targets)))])
    if rng.random() < config.push_fraction:
        distance = rng.uniform(*config.push_distance)
        angle = rng.uniform(0.0, 2.0 * math.pi)
        params = (distance * math.cos(angle), distance * math.sin(angle))
        return SkillAction(Skill.PUSH, target, params)
    bound = config.pick_place_range
    params = (rng.uniform(-bound, bound), rng.uniform(-bound, bound))
    return SkillAction(Skill.PICK_PLACE, target, params)


def generate_episode(config: GenerationConfig, index: int) -> Episode:
    """Generate episode number index of the corpus described by config."""
    rng = episode_rng(config.seed, index)
    n_objects = int(rng.integers(config.min_objects, config.max_objects + 1))
    n_stacks = int(rng.integers(1, min(config.max_stacks, n_objects) + 1))
    horizon = int(rng.integers(config.min_horizon, config.max_horizon + 1))

    scene = sample_scene(rng, n_objects, n_stacks)
    observations = [observe(scene, rng)]
    actions = []
    for _ in range(horizon):
        current = observations[-1]
        targets = current.cloud.visible_ids or scene.ids
        action = sample_action(rng, config, targets)
        scene = apply_action(scene, action, current.cloud.off_view - {action.target})
        actions.append(action)
        observations.append(observe(scene, rng))
    return Episode(observations=observations, actions=actions)


def generate_dataset(config: GenerationConfig, threads: int = 1) -> Iterator[Episode]:
    """
    Stream config.episodes episodes in index order.

    Episodes are independent, so they are generated on up to `threads` worker
    threads; output order and content do not depend on the thread count.
    """
    indices = iter(range(config.episodes))
    if threads <= 1:
        for index in indices:
            yield generate_episode(config, index)
        return

    chunk = threads * 4
    with ThreadPoolExecutor(max_workers=threads) as pool:
        while batch := list(islice(indices, chunk)):
            yield from pool.map(lambda i: generate_episode(config, i), batch)
