"""
Multi-step training losses.

For an episode with H actions, every start t in 0..H-1 is rolled forward
through the dynamics for k+1 actions, k in 0..H-1-t, and compared against the
encoding (or labels) of observation t+k+1. That gives 1, 3 and 6 comparisons
for H = 1, 2 and 3.
"""

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, Field, model_validator

from app.autodiff import Tensor, add, bce, constant, scale, squared_l2
from app.services.model import LatentGraph, RelationalModel
from models import Episode

IDENTITY_ROTATION = np.eye(3).reshape(1, 9)


class LossWeights(BaseModel):
    """Non-negative weights of the four loss terms."""

    w_rel: float = Field(default=1.0, ge=0.0)
    w_dyn: float = Field(default=1.0, ge=0.0)
    w_rel_prime: float = Field(default=1.0, ge=0.0)
    w_pose: float = Field(default=0.0, ge=0.0)

    @model_validator(mode="after")
    def _check_positive(self):
        if max(self.w_rel, self.w_dyn, self.w_rel_prime, self.w_pose) <= 0.0:
            raise ValueError("at least one loss weight must be positive")
        return self

    def as_dict(self) -> dict[str, float]:
        return {
            "rel": self.w_rel,
            "dyn": self.w_dyn,
            "rel_prime": self.w_rel_prime,
            "pose": self.w_pose,
        }


def rollout_indices(horizon: int) -> list[tuple[int, int]]:
    """(start, offset) pairs compared by the multi-step losses."""
    return [(t, k) for t in range(horizon) for k in range(horizon - t)]


@dataclass
class EpisodeForward:
    """Encodings of every observation and every dynamics rollout of one episode."""

    episode: Episode
    latents: list[LatentGraph]
    rollouts: dict[tuple[int, int], LatentGraph] = field(default_factory=dict)

    @classmethod
    def run(
        cls, model: RelationalModel, episode: Episode, ids: Sequence[int], with_rollouts: bool = True
    ) -> "EpisodeForward":
        latents = [model.encode(obs.cloud, ids) for obs in episode.observations]
        forward = cls(episode=episode, latents=latents)
        if with_rollouts:
            horizon = episode.horizon
            for t in range(horizon):
                current = latents[t]
                for k in range(horizon - t):
                    current = model.dynamics(current, episode.actions[t + k])
                    forward.rollouts[(t, k)] = current
        return forward

    def target_index(self, start: int, offset: int) -> int:
        return start + offset + 1


def _sum(terms: list[Tensor]) -> Tensor:
    total = terms[0]
    for term in terms[1:]:
        total = add(total, term)
    return total


def _zero() -> Tensor:
    return constant(np.asarray(0.0))


def loss_rel(model: RelationalModel, forward: EpisodeForward) -> Tensor:
    """BCE of relations read from every observation against its labels."""
    terms = [
        bce(model.classify_relations(latent), obs.relations.values.astype(float))
        for latent, obs in zip(forward.latents, forward.episode.observations, strict=True)
        if obs.relations.values.size
    ]
    return _sum(terms) if terms else _zero()


def _latent_distance(a: LatentGraph, b: LatentGraph) -> Tensor:
    distance = squared_l2(a.edges, b.edges)
    if a.nodes is not None and b.nodes is not None:
        distance = add(squared_l2(a.nodes, b.nodes), distance)
    return distance


def loss_dyn(model: RelationalModel, forward: EpisodeForward) -> Tensor:
    """Squared distance between rolled latents and direct encodings, nodes and edges."""
    terms = [
        _latent_distance(rolled, forward.latents[forward.target_index(t, k)])
        for (t, k), rolled in forward.rollouts.items()
    ]
    return _sum(terms) if terms else _zero()


def loss_rel_prime(model: RelationalModel, forward: EpisodeForward) -> Tensor:
    """BCE of relations read from rolled latents against post-action labels."""
    observations = forward.episode.observations
    terms = []
    for (t, k), rolled in forward.rollouts.items():
        labels = observations[forward.target_index(t, k)].relations.values
        if labels.size:
            terms.append(bce(model.classify_relations(rolled), labels.astype(float)))
    return _sum(terms) if terms else _zero()


def _pose_error(model: RelationalModel, latent: LatentGraph, centers: np.ndarray) -> Tensor:
    centroids, rotations = model.regress_pose(latent)
    identity = np.repeat(IDENTITY_ROTATION, len(centers), axis=0)
    return add(squared_l2(centroids, constant(centers)), squared_l2(rotations, constant(identity)))


def loss_pose(model: RelationalModel, forward: EpisodeForward) -> Tensor:
    """
    Squared centroid error plus squared Frobenius distance to the identity rotation,
    on both the detect and the predict path.
    """
    observations = forward.episode.observations
    terms = [
        _pose_error(model, latent, _centers(obs))
        for latent, obs in zip(forward.latents, observations, strict=True)
    ]
    for (t, k), rolled in forward.rollouts.items():
        terms.append(_pose_error(model, rolled, _centers(observations[forward.target_index(t, k)])))
    return _sum(terms)


def _centers(observation) -> np.ndarray:
    return np.array([c.center for c in observation.scene.objects]).reshape(-1, 3)


LOSS_TERMS = {
    "rel": loss_rel,
    "dyn": loss_dyn,
    "rel_prime": loss_rel_prime,
    "pose": loss_pose,
}


def episode_losses(
    model: RelationalModel, episode: Episode, ids: Sequence[int], weights: LossWeights
) -> tuple[Tensor, dict[str, float]]:
    """
    Weighted total loss of one episode plus the unweighted value of each term.

    Terms with zero weight are not computed, so they contribute no gradient.
    """
    active = {name: w for name, w in weights.as_dict().items() if w > 0.0}
    needs_rollouts = any(name in active for name in ("dyn", "rel_prime", "pose"))
    forward = EpisodeForward.run(model, episode, ids, with_rollouts=needs_rollouts)
    values: dict[str, float] = {}
    weighted = []
    for name, w in active.items():
        term = LOSS_TERMS[name](model, forward)
        values[name] = term.item()
        weighted.append(scale(term, w))
    return _sum(weighted), values
