"""
Training loop: one Adam step per episode, per-epoch validation, checkpoints and a metrics log.
"""

import csv
import logging
import math
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from pydantic import BaseModel, Field

from app.autodiff import AdamState, Tape, adam_step
from app.config import config as app_config
from app.services.evaluation.f1_service import PathCounts, tally_episode
from app.services.evaluation.metrics import F1Report
from app.services.model import (
    ModelConfig,
    RelationalModel,
    build_model,
    evaluation_ids,
    save_model,
    training_ids,
)
from app.services.training.ablations import AblationName, get_ablation
from app.services.training.losses import LossWeights, episode_losses
from app.stores.corpus_store import Corpus
from models import Episode

logger = logging.getLogger(__name__)

METRICS_COLUMNS = (
    "epoch",
    "split",
    "loss_total",
    "loss_rel",
    "loss_dyn",
    "loss_rel_prime",
    "loss_pose",
    "f1_detect",
    "f1_predict",
)


class TrainingDivergedError(ValueError):
    """Raised when a training loss becomes NaN or infinite."""

    def __init__(self, epoch: int, step: int, loss_terms: dict[str, float]):
        self.epoch = epoch
        self.step = step
        self.loss_terms = dict(loss_terms)
        terms = ", ".join(f"{k}={v:.4g}" for k, v in self.loss_terms.items())
        super().__init__(f"Training diverged at epoch {epoch}, step {step}: {terms}")


class TrainConfig(BaseModel):
    """Optimization settings for one training run."""

    learning_rate: float = Field(default_factory=lambda: app_config.LEARNING_RATE, gt=0.0)
    batch_size: int = Field(default=1, ge=1, le=1)
    epochs: int = Field(default_factory=lambda: app_config.EPOCHS, ge=1)
    seed: int = 0
    ablation: AblationName = "rd_gnn"
    loss_weights: LossWeights | None = None

    def effective_weights(self) -> LossWeights:
        """The ablation's weights, or the override masked to the ablation's active terms."""
        ablation = get_ablation(self.ablation)
        if self.loss_weights is None:
            return ablation.weights
        return ablation.mask(self.loss_weights)


@dataclass
class EpochMetrics:
    """Mean loss terms of one split, plus macro F1 on validation."""

    epoch: int
    split: str
    losses: dict[str, float]
    f1_detect: float | None = None
    f1_predict: float | None = None

    @property
    def total(self) -> float:
        return self.losses.get("total", math.nan)

    def row(self) -> list:
        return [
            self.epoch,
            self.split,
            *(_fmt(self.losses.get(name)) for name in ("total", "rel", "dyn", "rel_prime", "pose")),
            _fmt(self.f1_detect),
            _fmt(self.f1_predict),
        ]


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.6g}"


@dataclass
class TrainResult:
    """Outcome of a training run."""

    model: RelationalModel
    steps: int
    best_epoch: int
    best_checkpoint: Path
    last_checkpoint: Path
    metrics_path: Path
    history: list[EpochMetrics] = field(default_factory=list)


def _mean_terms(per_episode: list[dict[str, float]]) -> dict[str, float]:
    if not per_episode:
        return {}
    names = per_episode[0].keys()
    return {name: float(np.mean([terms[name] for terms in per_episode])) for name in names}


def validate(
    model: RelationalModel, episodes: list[Episode], weights: LossWeights, epoch: int
) -> EpochMetrics:
    """Mean loss terms and detect/predict macro F1 with identities 0..N-1."""
    counts = PathCounts()
    per_episode = []
    for episode in episodes:
        ids = evaluation_ids(episode.observations[0].cloud.ids)
        total, terms = episode_losses(model, episode, ids, weights)
        per_episode.append({"total": total.item(), **terms})
        tally_episode(model, episode, counts)
    return EpochMetrics(
        epoch=epoch,
        split="val",
        losses=_mean_terms(per_episode),
        f1_detect=F1Report.from_counts(counts.detect).macro_f1,
        f1_predict=F1Report.from_counts(counts.predict).macro_f1,
    )


def train(
    corpus: Corpus,
    config: TrainConfig,
    out_dir: Path,
    model_config: ModelConfig | None = None,
    on_epoch: Callable[[EpochMetrics], None] | None = None,
) -> TrainResult:
    """
    Train a model on the corpus train split with batch size 1.

    Every epoch visits the train episodes in a seeded random order, drawing fresh
    model identities per episode, then scores the val split. `best.ckpt` holds the
    epoch with the lowest mean val loss (the last epoch when there is no val split),
    `last.ckpt` the final weights, and `metrics.csv` one row per epoch and split.

    Raises:
        ValueError: If the train split is empty
        TrainingDivergedError: If a loss becomes NaN or infinite
    """
    started = time.perf_counter()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    ablation = get_ablation(config.ablation)
    weights = config.effective_weights()
    model = build_model(ablation.model_config(model_config), seed=config.seed)
    params = model.parameters()
    adam = AdamState.for_parameters(params, learning_rate=config.learning_rate)
    rng = np.random.default_rng(config.seed)

    train_indices = corpus.indices("train")
    if not train_indices:
        raise ValueError(f"{corpus.path} has no training episodes")
    train_episodes = corpus.load(train_indices)
    val_episodes = list(corpus.iter_split("val")) if "val" in corpus.manifest.splits else []
    logger.info(
        f"Training {config.ablation} ({model.architecture}, {model.param_count()} parameters) on "
        f"{len(train_episodes)} episodes, {len(val_episodes)} for validation, weights {weights.as_dict()}"
    )

    metadata = {"ablation": config.ablation, "seed": config.seed, "corpus": str(corpus.path)}
    best_path = out_dir / "best.ckpt"
    last_path = out_dir / "last.ckpt"
    metrics_path = out_dir / "metrics.csv"
    history: list[EpochMetrics] = []
    best_loss = math.inf
    best_epoch = 0
    steps = 0

    with open(metrics_path, "w", newline="", encoding="utf-8") as metrics_file:
        writer = csv.writer(metrics_file)
        writer.writerow(METRICS_COLUMNS)

        for epoch in range(1, config.epochs + 1):
            epoch_started = time.perf_counter()
            per_episode = []
            for index in rng.permutation(train_indices):
                episode = train_episodes[int(index)]
                ids = training_ids(episode.n_objects, rng)
                for p in params:
                    p.grad = None
                with Tape() as tape:
                    loss, terms = episode_losses(model, episode, ids, weights)
                    value = loss.item()
                    if not math.isfinite(value):
                        raise TrainingDivergedError(epoch, steps + 1, {"total": value, **terms})
                    if loss.tape_id is not None:
                        tape.backward(loss)
                adam_step(adam, params, [p.grad for p in params])
                steps += 1
                per_episode.append({"total": value, **terms})

            train_metrics = EpochMetrics(epoch, "train", _mean_terms(per_episode))
            epoch_rows = [train_metrics]
            if val_episodes:
                val_metrics = validate(model, val_episodes, weights, epoch)
                epoch_rows.append(val_metrics)
                score = val_metrics.total
            else:
                score = -epoch

            if score <= best_loss:
                best_loss = score
                best_epoch = epoch
                save_model(best_path, model, {**metadata, "epoch": epoch})

            for metrics in epoch_rows:
                writer.writerow(metrics.row())
                history.append(metrics)
                if on_epoch is not None:
                    on_epoch(metrics)
            metrics_file.flush()
            logger.info(
                f"Epoch {epoch}/{config.epochs}: train loss {train_metrics.total:.4f}"
                + (
                    f", val loss {epoch_rows[1].total:.4f}, detect F1 {epoch_rows[1].f1_detect:.3f}, "
                    f"predict F1 {epoch_rows[1].f1_predict:.3f}"
                    if len(epoch_rows) > 1
                    else ""
                )
                + f" ({time.perf_counter() - epoch_started:.1f}s)"
            )

    save_model(last_path, model, {**metadata, "epoch": config.epochs})
    logger.info(
        f"Finished {steps} steps in {time.perf_counter() - started:.1f}s, best epoch {best_epoch}"
    )
    return TrainResult(
        model=model,
        steps=steps,
        best_epoch=best_epoch,
        best_checkpoint=best_path,
        last_checkpoint=last_path,
        metrics_path=metrics_path,
        history=history,
    )
