"""
Precision, recall and F1 over binary relation predictions.
"""

from dataclasses import dataclass, field

import numpy as np

from models import N_RELATIONS, RELATIONS

THRESHOLD = 0.5


def _ratio(num: float, den: float) -> float:
    return float(num / den) if den else 0.0


def f1_from(precision: float, recall: float) -> float:
    """2PR / (P + R), with 0/0 defined as 0."""
    return _ratio(2.0 * precision * recall, precision + recall)


@dataclass
class ConfusionCounts:
    """Per-relation true/false positive and false negative counts."""

    tp: np.ndarray = field(default_factory=lambda: np.zeros(N_RELATIONS, dtype=np.int64))
    fp: np.ndarray = field(default_factory=lambda: np.zeros(N_RELATIONS, dtype=np.int64))
    fn: np.ndarray = field(default_factory=lambda: np.zeros(N_RELATIONS, dtype=np.int64))

    def add(self, probabilities: np.ndarray, labels: np.ndarray, threshold: float = THRESHOLD):
        """Tally one [pairs x 7] block of predictions against labels."""
        predicted = np.asarray(probabilities).reshape(-1, N_RELATIONS) >= threshold
        actual = np.asarray(labels, dtype=bool).reshape(-1, N_RELATIONS)
        self.tp += np.sum(predicted & actual, axis=0)
        self.fp += np.sum(predicted & ~actual, axis=0)
        self.fn += np.sum(~predicted & actual, axis=0)
        return self

    def merge(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


@dataclass
class F1Report:
    """Per-relation and averaged scores for one prediction path."""

    precision: list[float]
    recall: list[float]
    f1: list[float]
    macro_f1: float
    micro_f1: float
    tp: list[int]
    fp: list[int]
    fn: list[int]

    @classmethod
    def from_counts(cls, counts: ConfusionCounts) -> "F1Report":
        precision = [_ratio(t, t + f) for t, f in zip(counts.tp, counts.fp, strict=True)]
        recall = [_ratio(t, t + f) for t, f in zip(counts.tp, counts.fn, strict=True)]
        f1 = [f1_from(p, r) for p, r in zip(precision, recall, strict=True)]
        tp, fp, fn = int(counts.tp.sum()), int(counts.fp.sum()), int(counts.fn.sum())
        micro = f1_from(_ratio(tp, tp + fp), _ratio(tp, tp + fn))
        return cls(
            precision=precision,
            recall=recall,
            f1=f1,
            macro_f1=float(np.mean(f1)),
            micro_f1=micro,
            tp=[int(x) for x in counts.tp],
            fp=[int(x) for x in counts.fp],
            fn=[int(x) for x in counts.fn],
        )

    def to_dict(self) -> dict:
        return {
            "macro_f1": self.macro_f1,
            "micro_f1": self.micro_f1,
            "per_relation": {
                name: {
                    "precision": self.precision[k],
                    "recall": self.recall[k],
                    "f1": self.f1[k],
                    "tp": self.tp[k],
                    "fp": self.fp[k],
                    "fn": self.fn[k],
                }
                for k, name in enumerate(RELATIONS)
            },
        }
