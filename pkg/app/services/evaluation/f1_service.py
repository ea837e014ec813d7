"""
Detection and prediction F1 of a model over a corpus split.
"""

import logging
import time
from collections.abc import Iterable
from dataclasses import dataclass, field

from app.services.evaluation.metrics import ConfusionCounts, F1Report
from app.services.model import RelationalModel, evaluation_ids
from app.services.model.readout import read_relations, scene_half_extents
from models import Episode

logger = logging.getLogger(__name__)


@dataclass
class PathCounts:
    """Confusion counts for the detect and predict paths."""

    detect: ConfusionCounts = field(default_factory=ConfusionCounts)
    predict: ConfusionCounts = field(default_factory=ConfusionCounts)


@dataclass
class F1Evaluation:
    """Overall detect/predict reports plus a breakdown by object count."""

    detect: F1Report
    predict: F1Report
    by_object_count: dict[int, tuple[F1Report, F1Report]]
    n_episodes: int
    n_transitions: int

    def to_dict(self) -> dict:
        return {
            "n_episodes": self.n_episodes,
            "n_transitions": self.n_transitions,
            "detect": self.detect.to_dict(),
            "predict": self.predict.to_dict(),
            "by_object_count": {
                str(n): {"detect": d.to_dict(), "predict": p.to_dict()}
                for n, (d, p) in sorted(self.by_object_count.items())
            },
        }


def tally_episode(model: RelationalModel, episode: Episode, counts: PathCounts) -> int:
    """
    Add every transition of one episode to counts.

    For transition t both paths are scored against the labels of observation t+1:
    detect re-encodes that observation, predict rolls observation t forward by action t.

    Returns:
        Number of transitions tallied
    """
    for t, action in enumerate(episode.actions):
        before, after = episode.observations[t], episode.observations[t + 1]
        ids = evaluation_ids(before.cloud.ids)
        extents = scene_half_extents(before.scene)
        labels = after.relations.values

        detected = read_relations(
            model, model.encode(after.cloud, ids), extents, after.cloud.camera
        )
        rolled = model.dynamics(model.encode(before.cloud, ids), action)
        predicted = read_relations(model, rolled, extents, before.cloud.camera)
        counts.detect.add(detected, labels)
        counts.predict.add(predicted, labels)
    return len(episode.actions)


def f1_eval(model: RelationalModel, episodes: Iterable[Episode]) -> F1Evaluation:
    """
    Score detection and one-step prediction over episodes at threshold 0.5.

    Counts are pooled per relation across all pairs and transitions; macro F1 is
    the unweighted mean of the seven per-relation F1 values.
    """
    started = time.perf_counter()
    overall = PathCounts()
    by_count: dict[int, PathCounts] = {}
    n_episodes = 0
    n_transitions = 0
    for episode in episodes:
        bucket = by_count.setdefault(episode.n_objects, PathCounts())
        local = PathCounts()
        n_transitions += tally_episode(model, episode, local)
        for target in (overall, bucket):
            target.detect = target.detect.merge(local.detect)
            target.predict = target.predict.merge(local.predict)
        n_episodes += 1

    result = F1Evaluation(
        detect=F1Report.from_counts(overall.detect),
        predict=F1Report.from_counts(overall.predict),
        by_object_count={
            n: (F1Report.from_counts(c.detect), F1Report.from_counts(c.predict))
            for n, c in by_count.items()
        },
        n_episodes=n_episodes,
        n_transitions=n_transitions,
    )
    logger.info(
        f"Evaluated {n_transitions} transitions from {n_episodes} episodes in "
        f"{time.perf_counter() - started:.1f}s: detect F1 {result.detect.macro_f1:.3f}, "
        f"predict F1 {result.predict.macro_f1:.3f}"
    )
    return result
