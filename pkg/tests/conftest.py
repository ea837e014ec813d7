"""
Pytest configuration and shared fixtures.
"""

import numpy as np
import pytest

from app.services.model import ModelConfig, build_model
from app.services.simulation_service import GenerationConfig, generate_dataset
from app.stores.corpus_store import read_corpus, write_corpus
from models import Camera, Cuboid, Scene


def box(object_id: int, x: float, y: float, half=(0.03, 0.03, 0.03), base: float = 0.0) -> Cuboid:
    """A cuboid whose bottom face sits at height base."""
    return Cuboid(object_id, (x, y, base + half[2]), half)


@pytest.fixture
def rng():
    """Seeded generator."""
    return np.random.default_rng(1234)


@pytest.fixture
def camera():
    """Default camera in front of the workspace looking along +y."""
    return Camera()


@pytest.fixture
def two_box_scene(camera):
    """Two separated boxes on the ground, object 0 left of object 1."""
    return Scene((box(0, -0.1, 0.0), box(1, 0.1, 0.0)), camera)


@pytest.fixture
def stacked_scene(camera):
    """Object 1 resting on object 0, object 2 on the ground to the right."""
    return Scene(
        (
            box(0, 0.0, 0.0),
            box(1, 0.0, 0.0, half=(0.02, 0.02, 0.02), base=0.06),
            box(2, 0.15, 0.0),
        ),
        camera,
    )


@pytest.fixture
def small_model_config():
    """Narrow widths so model tests run fast."""
    return ModelConfig(
        point_feature_width=8,
        point_hidden=8,
        latent_width=8,
        graph_hidden=8,
        relation_hidden=8,
        pose_hidden=8,
        action_hidden=8,
    )


@pytest.fixture
def small_model(small_model_config):
    """Untrained graph model with narrow widths."""
    return build_model(small_model_config, seed=0)


@pytest.fixture
def tiny_generation():
    """Ten short episodes with two or three objects."""
    return GenerationConfig(
        episodes=10, min_objects=2, max_objects=3, min_horizon=1, max_horizon=2, seed=3
    )


@pytest.fixture
def tiny_corpus(tmp_path, tiny_generation):
    """A written and reopened corpus of the tiny generation config, all episodes in train."""
    path = tmp_path / "corpus.jsonl"
    write_corpus(
        generate_dataset(tiny_generation),
        path,
        seed=tiny_generation.seed,
        generation=tiny_generation.model_dump(),
        fractions=(1.0, 0.0, 0.0),
    )
    return read_corpus(path)


@pytest.fixture
def tiny_split_corpus(tmp_path, tiny_generation):
    """The tiny corpus with a 6/2/2 split."""
    path = tmp_path / "split.jsonl"
    write_corpus(
        generate_dataset(tiny_generation),
        path,
        seed=tiny_generation.seed,
        fractions=(0.6, 0.2, 0.2),
    )
    return read_corpus(path)
