"""
Cross-entropy method over the continuous skill parameters (dx, dy).
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field, model_validator

from models import MAX_PLANAR_DISPLACEMENT, Skill

logger = logging.getLogger(__name__)

ExecutionMode = Literal["mean", "sample_3sigma"]

# Scores every row of a [S x 2] parameter batch; higher is better
BatchObjective = Callable[[np.ndarray], np.ndarray]


class CemConfig(BaseModel):
    """Sampling budget, initial spread and parameter bounds per skill."""

    n_samples: int = Field(default=200, ge=1)
    n_elites: int = Field(default=3, ge=1)
    n_iterations: int = Field(default=2, ge=0)
    push_std: tuple[float, float] = (0.05, 0.3)
    pick_place_std: tuple[float, float] = (0.3, 1.1)
    push_bound: float = Field(default=0.3, gt=0.0)
    pick_place_bound: float = Field(default=0.4, gt=0.0)
    min_std: float = Field(default=1e-4, gt=0.0)
    execution_mode: ExecutionMode = "mean"
    threads: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check(self):
        if self.n_elites > self.n_samples:
            raise ValueError("n_elites must not exceed n_samples")
        if min(*self.push_std, *self.pick_place_std) <= 0.0:
            raise ValueError("initial standard deviations must be positive")
        # a corner of the [-bound, bound]^2 box must still be a valid SkillAction
        for name in ("push_bound", "pick_place_bound"):
            bound = getattr(self, name)
            if math.hypot(bound, bound) > MAX_PLANAR_DISPLACEMENT:
                raise ValueError(
                    f"{name} {bound} allows displacements beyond {MAX_PLANAR_DISPLACEMENT} m"
                )
        return self

    def initial_std(self, skill: Skill) -> np.ndarray:
        return np.array(self.push_std if skill == Skill.PUSH else self.pick_place_std)

    def bounds(self, skill: Skill) -> tuple[np.ndarray, np.ndarray]:
        """(low, high) per parameter axis."""
        bound = self.push_bound if skill == Skill.PUSH else self.pick_place_bound
        return np.full(2, -bound), np.full(2, bound)


@dataclass
class CemResult:
    """Final Gaussian, the score of its mean, and the best sample seen."""

    mean: np.ndarray
    std: np.ndarray
    score: float
    best_sample: np.ndarray
    best_sample_score: float
    best_so_far: list[float] = field(default_factory=list)


def select_elites(scores: np.ndarray, n_elites: int) -> np.ndarray:
    """Indices of the n_elites highest scores; ties go to the lower sample index."""
    ranked = np.nan_to_num(np.asarray(scores, dtype=np.float64), nan=-np.inf)
    return np.argsort(-ranked, kind="stable")[:n_elites]


def cem_optimize(
    objective: BatchObjective,
    mean: np.ndarray,
    std: np.ndarray,
    low: np.ndarray,
    high: np.ndarray,
    config: CemConfig,
    rng: np.random.Generator,
) -> CemResult:
    """
    Maximize objective with a diagonal Gaussian refitted to the elites each iteration.

    Samples are clamped to [low, high]. Elite standard deviations are floored at
    config.min_std. With zero iterations the initial mean is returned unchanged.
    """
    mean = np.clip(np.asarray(mean, dtype=np.float64), low, high)
    std = np.asarray(std, dtype=np.float64).copy()
    best_sample = mean.copy()
    best_sample_score = -np.inf
    best_so_far: list[float] = []

    for iteration in range(config.n_iterations):
        samples = rng.normal(mean, std, size=(config.n_samples, mean.size))
        samples = np.clip(samples, low, high)
        scores = np.asarray(objective(samples), dtype=np.float64)
        elites = select_elites(scores, config.n_elites)
        if scores[elites[0]] > best_sample_score:
            best_sample_score = float(scores[elites[0]])
            best_sample = samples[elites[0]].copy()
        best_so_far.append(best_sample_score)

        mean = samples[elites].mean(axis=0)
        fitted = samples[elites].std(axis=0)
        if np.any(fitted < config.min_std):
            logger.warning(
                f"CEM elites collapsed at iteration {iteration}, flooring std at {config.min_std}"
            )
        std = np.maximum(fitted, config.min_std)
        logger.debug(
            f"CEM iteration {iteration}: best {best_sample_score:.4f}, mean {mean.round(4)}"
        )

    score = float(np.asarray(objective(mean[None, :]), dtype=np.float64)[0])
    if best_sample_score == -np.inf:
        best_sample, best_sample_score = mean.copy(), score
    return CemResult(
        mean=mean,
        std=std,
        score=score,
        best_sample=best_sample,
        best_sample_score=best_sample_score,
        best_so_far=best_so_far,
    )


def sample_within_3sigma(
    mean: np.ndarray, std: np.ndarray, low: np.ndarray, high: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """One draw from N(mean, std) truncated to 3 sigma, then clamped to bounds."""
    z = rng.standard_normal(mean.shape)
    outside = np.abs(z) > 3.0
    while np.any(outside):
        z[outside] = rng.standard_normal(int(outside.sum()))
        outside = np.abs(z) > 3.0
    return np.clip(mean + z * std, low, high)
