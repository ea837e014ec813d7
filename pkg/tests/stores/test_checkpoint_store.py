"""
Tests for the checkpoint archive.
"""

import numpy as np
import pytest

from app.stores.checkpoint_store import (
    MAGIC,
    CheckpointFormatError,
    load_checkpoint,
    save_checkpoint,
)


class TestCheckpointStore:
    """Tests for save_checkpoint and load_checkpoint."""

    def test_roundtrip_is_bit_exact(self, tmp_path):
        """Test parameters, config and metadata come back unchanged."""
        rng = np.random.default_rng(0)
        params = [("a.weight", rng.normal(size=(3, 4))), ("a.bias", rng.normal(size=4))]
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, params, {"latent_width": 4}, {"epoch": 2})

        loaded = load_checkpoint(path)
        assert loaded.model_config == {"latent_width": 4}
        assert loaded.metadata == {"epoch": 2}
        for name, array in params:
            np.testing.assert_array_equal(loaded.params[name], array)

    def test_file_starts_with_magic(self, tmp_path):
        """Test the archive is tagged."""
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, [("w", np.ones(2))], {})
        assert path.read_bytes().startswith(MAGIC)

    def test_duplicate_path_rejected(self, tmp_path):
        """Test two parameters may not share a name."""
        with pytest.raises(ValueError, match="duplicate"):
            save_checkpoint(tmp_path / "x.ckpt", [("w", np.ones(1)), ("w", np.ones(1))], {})

    def test_bad_magic(self, tmp_path):
        """Test a foreign file is rejected."""
        path = tmp_path / "x.ckpt"
        path.write_bytes(b"not a checkpoint at all")
        with pytest.raises(CheckpointFormatError, match="bad magic"):
            load_checkpoint(path)

    def test_truncated_data(self, tmp_path):
        """Test chopping the float payload is detected."""
        path = tmp_path / "x.ckpt"
        save_checkpoint(path, [("w", np.arange(10.0))], {})
        raw = path.read_bytes()
        path.write_bytes(raw[:-16])
        with pytest.raises(CheckpointFormatError, match="truncated"):
            load_checkpoint(path)

    def test_partial_float(self, tmp_path):
        """Test a payload that is not a whole number of floats is rejected."""
        path = tmp_path / "x.ckpt"
        save_checkpoint(path, [("w", np.arange(3.0))], {})
        path.write_bytes(path.read_bytes()[:-3])
        with pytest.raises(CheckpointFormatError, match="partial float"):
            load_checkpoint(path)
