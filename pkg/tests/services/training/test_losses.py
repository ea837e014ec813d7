"""
Tests for the multi-step training losses.
"""

import math
from types import SimpleNamespace

import numpy as np
import pytest
from pydantic import ValidationError

from app.autodiff import Tape, constant
from app.autodiff.gradcheck import sampled_relative_error
from app.services.model import build_model
from app.services.simulation_service import GenerationConfig, generate_episode
from app.services.training import (
    EpisodeForward,
    LossWeights,
    episode_losses,
    loss_dyn,
    loss_pose,
    loss_rel,
    loss_rel_prime,
    rollout_indices,
)
from models import N_RELATIONS


def _episode(horizon: int, n_objects: int = 2, seed: int = 0):
    config = GenerationConfig(
        min_objects=n_objects,
        max_objects=n_objects,
        min_horizon=horizon,
        max_horizon=horizon,
        seed=seed,
    )
    return generate_episode(config, 0)


class TestRollouts:
    """Tests for the rollout schedule."""

    @pytest.mark.parametrize("horizon,expected", [(1, 1), (2, 3), (3, 6)])
    def test_term_counts(self, horizon, expected):
        """Test H = 1, 2, 3 give 1, 3 and 6 rollout comparisons."""
        assert len(rollout_indices(horizon)) == expected

    def test_horizon_two_schedule(self):
        """Test the (start, offset) pairs for H = 2."""
        assert rollout_indices(2) == [(0, 0), (0, 1), (1, 0)]

    def test_forward_builds_every_rollout(self, small_model):
        """Test EpisodeForward rolls out every (start, offset) pair."""
        episode = _episode(3)
        forward = EpisodeForward.run(small_model, episode, (0, 1))
        assert sorted(forward.rollouts) == rollout_indices(3)
        assert len(forward.latents) == 4
        assert forward.target_index(1, 1) == 3


class TestLossValues:
    """Tests for individual loss terms."""

    def test_bce_at_one_half(self, small_model):
        """Test a classifier that always says 0.5 scores ln 2 per label."""
        episode = _episode(2, n_objects=3)
        forward = EpisodeForward.run(small_model, episode, (0, 1, 2), with_rollouts=False)
        halves = SimpleNamespace(
            classify_relations=lambda latent: constant(
                np.full((latent.edges.shape[0], N_RELATIONS), 0.5)
            )
        )
        n_labels = len(episode.observations) * 6 * N_RELATIONS
        assert loss_rel(halves, forward).item() == pytest.approx(n_labels * math.log(2))

    def test_reported_terms_follow_weights(self, small_model):
        """Test only terms with positive weight are computed and reported."""
        episode = _episode(1)
        _, terms = episode_losses(small_model, episode, (0, 1), LossWeights(w_dyn=0.0))
        assert set(terms) == {"rel", "rel_prime"}
        _, terms = episode_losses(small_model, episode, (0, 1), LossWeights(w_pose=0.5))
        assert set(terms) == {"rel", "dyn", "rel_prime", "pose"}

    def test_total_is_weighted_sum(self, small_model):
        """Test the total equals the weighted sum of the reported terms."""
        episode = _episode(2)
        weights = LossWeights(w_rel=0.5, w_dyn=2.0, w_rel_prime=1.0, w_pose=0.1)
        total, terms = episode_losses(small_model, episode, (3, 9), weights)
        expected = sum(weights.as_dict()[name] * value for name, value in terms.items())
        assert total.item() == pytest.approx(expected)


class TestGradients:
    """Tests for gradient flow through the losses."""

    def test_zero_weight_term_has_no_gradient(self, small_model):
        """Test the pose head receives no gradient when w_pose is zero."""
        episode = _episode(1)
        with Tape() as tape:
            loss, _ = episode_losses(small_model, episode, (0, 1), LossWeights())
            tape.backward(loss)
        assert small_model.pose_mlp.layers[0].weight.grad is None
        assert small_model.relation_classifier.layers[0].weight.grad is not None

    def test_relations_only_skips_dynamics(self, small_model):
        """Test the dynamics networks get no gradient from the relation loss alone."""
        episode = _episode(1)
        weights = LossWeights(w_rel=1.0, w_dyn=0.0, w_rel_prime=0.0)
        with Tape() as tape:
            loss, _ = episode_losses(small_model, episode, (0, 1), weights)
            tape.backward(loss)
        for pair in small_model.dynamics_mlps.values():
            assert pair["node_mlp"].layers[0].weight.grad is None

    def test_pushed_skill_gets_gradient(self, small_model):
        """Test the dynamics of the executed skill are trained by the prediction losses."""
        episode = _episode(1)
        skill = episode.actions[0].skill.value
        with Tape() as tape:
            loss, _ = episode_losses(small_model, episode, (0, 1), LossWeights())
            tape.backward(loss)
        assert small_model.dynamics_mlps[skill]["edge_mlp"].layers[-1].weight.grad is not None


class TestLossWeights:
    """Tests for LossWeights validation."""

    def test_all_zero_rejected(self):
        """Test at least one weight must be positive."""
        with pytest.raises(ValidationError):
            LossWeights(w_rel=0.0, w_dyn=0.0, w_rel_prime=0.0, w_pose=0.0)

    def test_negative_rejected(self):
        """Test weights cannot be negative."""
        with pytest.raises(ValidationError):
            LossWeights(w_rel=-1.0)


class TestLossFiniteDifferences:
    """Loss gradients on sampled parameter entries agree with central differences."""

    @pytest.fixture
    def jittered_model(self, small_model_config):
        model = build_model(small_model_config, seed=5)
        rng = np.random.default_rng(6)
        for _, tensor in model.named_parameters():
            tensor.data += rng.normal(scale=0.3, size=tensor.data.shape)
        return model

    @pytest.mark.parametrize("term", [loss_rel, loss_dyn, loss_rel_prime, loss_pose])
    def test_term(self, jittered_model, term):
        """Test each loss term over a two-step episode."""
        episode = _episode(2, seed=4)

        def fn():
            return term(jittered_model, EpisodeForward.run(jittered_model, episode, (7, 2)))

        check = sampled_relative_error(
            fn, jittered_model.parameters(), np.random.default_rng(8), per_param=1, min_magnitude=1e-3
        )
        assert check.checked > 0
        assert check.worst < 1e-4

    def test_weighted_total(self, jittered_model):
        """Test the weighted total with every term switched on."""
        episode = _episode(1, seed=4)
        weights = LossWeights(w_rel=1.0, w_dyn=0.5, w_rel_prime=1.0, w_pose=0.2)

        def fn():
            return episode_losses(jittered_model, episode, (3, 1), weights)[0]

        check = sampled_relative_error(
            fn, jittered_model.parameters(), np.random.default_rng(9), per_param=1, min_magnitude=1e-3
        )
        assert check.checked > 0
        assert check.worst < 1e-4
