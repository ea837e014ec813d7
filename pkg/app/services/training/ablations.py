"""
Named training configurations for the model and its baselines.

| name            | architecture  | w_rel | w_dyn | w_rel' | w_pose | readout  |
|-----------------|---------------|-------|-------|--------|--------|----------|
| rd_gnn          | gnn           | 1     | 1     | 1      | 0      | learned  |
| rd_pe_gnn       | gnn           | 1     | 1     | 1      | 1      | learned  |
| pe_gnn          | gnn           | 0     | 1     | 0      | 1      | analytic |
| dpd_gnn         | gnn           | 0     | 0     | 0      | 1      | analytic |
| mlp             | pairwise_mlp  | 1     | 1     | 1      | 0      | learned  |
| rd_gnn_wo_lr    | gnn           | 1     | 0     | 1      | 0      | learned  |
| relations_only  | gnn           | 1     | 0     | 0      | 0      | learned  |
"""

from dataclasses import dataclass
from typing import Literal

from app.services.model import ModelConfig
from app.services.model.config import Architecture, Readout
from app.services.training.losses import LossWeights

AblationName = Literal[
    "rd_gnn", "rd_pe_gnn", "pe_gnn", "dpd_gnn", "mlp", "rd_gnn_wo_lr", "relations_only"
]


@dataclass(frozen=True)
class Ablation:
    architecture: Architecture
    weights: LossWeights
    readout: Readout

    def model_config(self, base: ModelConfig | None = None) -> ModelConfig:
        """base (or the defaults) with this ablation's architecture and readout."""
        base = base or ModelConfig()
        return ModelConfig.model_validate(
            {**base.model_dump(), "architecture": self.architecture, "readout": self.readout}
        )

    def mask(self, weights: LossWeights) -> LossWeights:
        """Keep only the terms this ablation trains; the others are forced to zero."""
        own = self.weights.as_dict()
        given = weights.as_dict()
        masked = {name: given[name] if own[name] > 0.0 else 0.0 for name in own}
        return LossWeights(
            w_rel=masked["rel"],
            w_dyn=masked["dyn"],
            w_rel_prime=masked["rel_prime"],
            w_pose=masked["pose"],
        )


def _weights(rel: float, dyn: float, rel_prime: float, pose: float) -> LossWeights:
    return LossWeights(w_rel=rel, w_dyn=dyn, w_rel_prime=rel_prime, w_pose=pose)


ABLATIONS: dict[str, Ablation] = {
    "rd_gnn": Ablation("gnn", _weights(1, 1, 1, 0), "learned"),
    "rd_pe_gnn": Ablation("gnn", _weights(1, 1, 1, 1), "learned"),
    "pe_gnn": Ablation("gnn", _weights(0, 1, 0, 1), "analytic"),
    "dpd_gnn": Ablation("gnn", _weights(0, 0, 0, 1), "analytic"),
    "mlp": Ablation("pairwise_mlp", _weights(1, 1, 1, 0), "learned"),
    "rd_gnn_wo_lr": Ablation("gnn", _weights(1, 0, 1, 0), "learned"),
    "relations_only": Ablation("gnn", _weights(1, 0, 0, 0), "learned"),
}


def get_ablation(name: str) -> Ablation:
    """
    Raises:
        ValueError: If name is not a known ablation
    """
    try:
        return ABLATIONS[name]
    except KeyError:
        raise ValueError(f"Unknown ablation '{name}', expected one of {sorted(ABLATIONS)}") from None
