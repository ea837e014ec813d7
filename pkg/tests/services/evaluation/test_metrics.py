"""
Tests for precision, recall and F1.
"""

import numpy as np
import pytest

from app.services.evaluation import ConfusionCounts, F1Report, f1_eval, f1_from
from models import N_RELATIONS


def _block(column0_probs, column0_labels):
    probs = np.zeros((len(column0_probs), N_RELATIONS))
    labels = np.zeros((len(column0_labels), N_RELATIONS), dtype=bool)
    probs[:, 0] = column0_probs
    labels[:, 0] = column0_labels
    return probs, labels


class TestConfusionCounts:
    """Tests for ConfusionCounts and F1Report."""

    def test_hand_tally(self):
        """Test one TP, one FP and one FN give precision, recall and F1 of 0.5."""
        counts = ConfusionCounts().add(*_block([0.9, 0.6, 0.1, 0.4], [1, 0, 1, 0]))
        assert (counts.tp[0], counts.fp[0], counts.fn[0]) == (1, 1, 1)
        report = F1Report.from_counts(counts)
        assert report.precision[0] == pytest.approx(0.5)
        assert report.recall[0] == pytest.approx(0.5)
        assert report.f1[0] == pytest.approx(0.5)

    def test_threshold_inclusive(self):
        """Test a probability of exactly 0.5 counts as positive."""
        counts = ConfusionCounts().add(*_block([0.5], [1]))
        assert counts.tp[0] == 1

    def test_perfect(self):
        """Test predictions equal to labels score 1 on every relation with positives."""
        labels = np.eye(N_RELATIONS, dtype=bool)
        report = F1Report.from_counts(ConfusionCounts().add(labels.astype(float), labels))
        assert report.f1 == [1.0] * N_RELATIONS
        assert report.macro_f1 == 1.0
        assert report.micro_f1 == 1.0

    def test_all_negative(self):
        """Test no positives anywhere scores 0 rather than NaN."""
        zeros = np.zeros((4, N_RELATIONS))
        report = F1Report.from_counts(ConfusionCounts().add(zeros, zeros))
        assert report.macro_f1 == 0.0
        assert report.micro_f1 == 0.0

    def test_macro_is_mean(self):
        """Test macro F1 is the unweighted mean of per-relation F1."""
        rng = np.random.default_rng(0)
        counts = ConfusionCounts().add(rng.random((50, N_RELATIONS)), rng.random((50, N_RELATIONS)) > 0.5)
        report = F1Report.from_counts(counts)
        assert report.macro_f1 == pytest.approx(np.mean(report.f1))

    def test_merge(self):
        """Test merging adds counts."""
        first = ConfusionCounts().add(*_block([0.9], [1]))
        second = ConfusionCounts().add(*_block([0.9], [0]))
        merged = first.merge(second)
        assert (merged.tp[0], merged.fp[0]) == (1, 1)

    def test_f1_from_zero(self):
        """Test 0/0 is defined as 0."""
        assert f1_from(0.0, 0.0) == 0.0


class TestF1Eval:
    """Tests for f1_eval."""

    def test_counts_transitions(self, small_model, tiny_corpus):
        """Test every transition is scored and reports stay in [0, 1]."""
        episodes = list(tiny_corpus.iter_episodes())
        result = f1_eval(small_model, episodes)
        assert result.n_episodes == 10
        assert result.n_transitions == sum(e.horizon for e in episodes)
        for report in (result.detect, result.predict):
            assert 0.0 <= report.macro_f1 <= 1.0
        assert set(result.by_object_count) <= {2, 3}

    def test_both_paths_tallied(self, small_model, tiny_corpus):
        """Test detect and predict both see every label block."""
        result = f1_eval(small_model, tiny_corpus.iter_episodes())
        for report in (result.detect, result.predict):
            assert sum(report.tp) + sum(report.fp) + sum(report.fn) > 0

    def test_to_dict(self, small_model, tiny_corpus):
        """Test the JSON summary lists every relation."""
        summary = f1_eval(small_model, tiny_corpus.iter_episodes()).to_dict()
        assert set(summary["detect"]["per_relation"]) == {
            "left", "right", "behind", "in_front", "above", "below", "in_contact"
        }
        assert summary["n_episodes"] == 10
