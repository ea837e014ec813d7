"""
Tests for model checkpoints.
"""

import numpy as np
import pytest

from app.services.model import build_model, load_model, save_model
from app.services.scene_service import render_cloud
from app.stores.checkpoint_store import CheckpointFormatError, save_checkpoint
from models import Skill, SkillAction


class TestModelCheckpoint:
    """Tests for save_model and load_model."""

    def test_roundtrip_predictions(self, tmp_path, small_model, stacked_scene):
        """Test a reloaded model predicts exactly what the saved one did."""
        path = tmp_path / "model.ckpt"
        save_model(path, small_model, {"epoch": 3})
        loaded, metadata = load_model(path)

        cloud = render_cloud(stacked_scene)
        action = SkillAction(Skill.PUSH, 2, (0.1, 0.0))
        assert metadata == {"epoch": 3}
        assert loaded.config == small_model.config
        np.testing.assert_array_equal(
            loaded.predict(cloud, (0, 1, 2), action).data,
            small_model.predict(cloud, (0, 1, 2), action).data,
        )

    def test_seed_changes_weights(self, small_model_config):
        """Test different seeds give different initial weights."""
        first = build_model(small_model_config, seed=0).state_dict()
        second = build_model(small_model_config, seed=1).state_dict()
        assert any(not np.array_equal(first[k], second[k]) for k in first)

    def test_invalid_config(self, tmp_path):
        """Test an unknown architecture in the archive is reported."""
        path = tmp_path / "bad.ckpt"
        save_checkpoint(path, [], {"architecture": "transformer"})
        with pytest.raises(CheckpointFormatError, match="invalid model config"):
            load_model(path)

    def test_missing_parameter(self, tmp_path, small_model):
        """Test an archive lacking weights for its config is reported."""
        path = tmp_path / "partial.ckpt"
        params = [(name, t.data) for name, t in small_model.named_parameters()][:-1]
        save_checkpoint(path, params, small_model.config.model_dump())
        with pytest.raises(CheckpointFormatError, match="does not match"):
            load_model(path)
