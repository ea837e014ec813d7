"""
Shared model plumbing: graph containers, selection matrices and the
RelationalModel base class that both architectures implement.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from collections.abc import Sequence
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from app.autodiff import MlpParams, Tensor, concat, constant, init_mlp, matmul, mlp_forward
from app.autodiff.tensor import ShapeError
from app.services.model.config import ModelConfig
from app.services.model.point_encoder import PointCloudEncoder
from models import MAX_OBJECTS, SKILLS, SegmentedCloud, Skill, SkillAction, ordered_pairs

logger = logging.getLogger(__name__)


class MissingHeadError(ValueError):
    """The model architecture has no network for the requested head."""


@dataclass
class InputGraph:
    """Fully connected directed graph over the objects of one cloud.

    Row k of nodes describes object_ids[k] with model identity ids[k]. Input
    edges carry no features.
    """

    nodes: Tensor
    ids: tuple[int, ...]
    object_ids: tuple[int, ...]

    @property
    def n_nodes(self) -> int:
        return len(self.object_ids)

    @property
    def n_edges(self) -> int:
        return self.n_nodes * (self.n_nodes - 1)


@dataclass
class LatentGraph:
    """Latent node and directed-edge features.

    Edge rows follow ordered_pairs(range(n_nodes)). The pairwise baseline has
    no node latents (nodes is None).
    """

    nodes: Tensor | None
    edges: Tensor
    ids: tuple[int, ...]
    object_ids: tuple[int, ...]

    @property
    def n_nodes(self) -> int:
        return len(self.object_ids)

    def node_index(self, object_id: int) -> int:
        try:
            return self.object_ids.index(object_id)
        except ValueError:
            raise ValueError(f"object {object_id} is not in the graph") from None

    def edge_index(self, a: int, b: int) -> int:
        """Edge row of the ordered object pair (a, b)."""
        i, j = self.node_index(a), self.node_index(b)
        if i == j:
            raise ValueError(f"no edge from object {a} to itself")
        return i * (self.n_nodes - 1) + (j if j < i else j - 1)


@dataclass(frozen=True)
class GraphSelectors:
    """Constant matrices that gather edge endpoints and average incoming messages."""

    source: Tensor  # [E x N], row e picks the first node of pair e
    target: Tensor  # [E x N], row e picks the second node of pair e
    incoming_mean: Tensor  # [N x E], mean over edges ending at each node
    edge_ones: Tensor  # [E x 1]
    node_ones: Tensor  # [N x 1]


@lru_cache(maxsize=MAX_OBJECTS + 1)
def graph_selectors(n_nodes: int) -> GraphSelectors:
    """Selection matrices for a complete directed graph; y is zero when n_nodes == 1."""
    pairs = ordered_pairs(range(n_nodes))
    n_edges = len(pairs)
    source = np.zeros((n_edges, n_nodes))
    target = np.zeros((n_edges, n_nodes))
    incoming = np.zeros((n_nodes, n_edges))
    for e, (i, j) in enumerate(pairs):
        source[e, i] = 1.0
        target[e, j] = 1.0
        incoming[j, e] = 1.0 / (n_nodes - 1)
    return GraphSelectors(
        source=constant(source),
        target=constant(target),
        incoming_mean=constant(incoming),
        edge_ones=constant(np.ones((n_edges, 1))),
        node_ones=constant(np.ones((n_nodes, 1))),
    )


def evaluation_ids(object_ids: Sequence[int]) -> tuple[int, ...]:
    """Model identities 0..N-1 assigned in sorted object order."""
    return tuple(range(len(object_ids)))


def training_ids(n_objects: int, rng: np.random.Generator) -> tuple[int, ...]:
    """Model identities drawn uniformly without replacement from 0..15."""
    return tuple(int(i) for i in rng.choice(MAX_OBJECTS, size=n_objects, replace=False))


class RelationalModel(ABC):
    """Encoder, relation head, pose head and per-skill latent dynamics."""

    architecture: str = ""

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        self.config = config
        self.point_encoder = PointCloudEncoder(config, rng)
        self.action_mlp: MlpParams = init_mlp(
            [config.action_input_width, config.action_hidden, config.latent_width], rng
        )

    # ===== Parameters =====

    @abstractmethod
    def named_mlps(self) -> dict[str, MlpParams]:
        """Every MLP keyed by its parameter path prefix."""

    def _shared_mlps(self) -> dict[str, MlpParams]:
        mlps = dict(self.point_encoder.named_mlps())
        mlps["phi_a.action_mlp"] = self.action_mlp
        return mlps

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        named = []
        for prefix, mlp in self.named_mlps().items():
            named.extend(mlp.named_parameters(prefix))
        return named

    def parameters(self) -> list[Tensor]:
        return [t for _, t in self.named_parameters()]

    def param_count(self) -> int:
        return sum(mlp.parameter_count() for mlp in self.named_mlps().values())

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        """
        Copy parameter values in by path.

        Raises:
            ValueError: If a path is missing or a shape differs
        """
        for name, tensor in self.named_parameters():
            if name not in state:
                raise ValueError(f"checkpoint is missing parameter '{name}'")
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != tensor.shape:
                raise ShapeError("load_state_dict", tensor.shape, value.shape, name)
            tensor.data[...] = value

    # ===== Inputs =====

    def build_input_graph(self, cloud: SegmentedCloud, ids: Sequence[int]) -> InputGraph:
        """
        Node k = point feature of object k (sorted id order) concatenated with onehot(ids[k]).

        Raises:
            ValueError: If ids are duplicated, out of range or the wrong count
        """
        object_ids = tuple(cloud.ids)
        ids = tuple(int(i) for i in ids)
        if len(ids) != len(object_ids):
            raise ValueError(f"need {len(object_ids)} ids, got {len(ids)}")
        if len(set(ids)) != len(ids):
            raise ValueError(f"model ids must be distinct, got {ids}")
        if any(not 0 <= i < MAX_OBJECTS for i in ids):
            raise ValueError(f"model ids must be in [0, {MAX_OBJECTS}), got {ids}")
        features = self.point_encoder.encode([cloud.per_object[i] for i in object_ids])
        one_hot = np.zeros((len(ids), self.config.id_width))
        one_hot[np.arange(len(ids)), ids] = 1.0
        nodes = concat([features, constant(one_hot)], axis=1)
        return InputGraph(nodes=nodes, ids=ids, object_ids=object_ids)

    def action_input(self, action: SkillAction, latent: LatentGraph) -> np.ndarray:
        """
        Layout: skill one-hot (push, pick_place), target one-hot over model ids, (dx, dy)
        divided by the skill's bound and clipped to [-1, 1].
        """
        row = np.zeros((1, self.config.action_input_width))
        row[0, SKILLS.index(action.skill)] = 1.0
        row[0, 2 + latent.ids[latent.node_index(action.target)]] = 1.0
        bound = (
            self.config.push_bound if action.skill == Skill.PUSH else self.config.pick_place_bound
        )
        row[0, -2:] = np.clip(np.array(action.params) / bound, -1.0, 1.0)
        return row

    def encode_action(self, action: SkillAction, latent: LatentGraph) -> Tensor:
        """phi_A of the action, [1 x latent_width]."""
        return mlp_forward(self.action_mlp, constant(self.action_input(action, latent)))

    @staticmethod
    def repeat_rows(row: Tensor, ones: Tensor) -> Tensor:
        """Tile a [1 x w] row to [n x w] with a constant ones column."""
        return matmul(ones, row)

    # ===== Heads =====

    @abstractmethod
    def graph_encode(self, graph: InputGraph) -> LatentGraph:
        """Input graph to latent graph."""

    @abstractmethod
    def classify_relations(self, latent: LatentGraph) -> Tensor:
        """Relation probabilities [E x 7] for every ordered pair."""

    @abstractmethod
    def dynamics(self, latent: LatentGraph, action: SkillAction) -> LatentGraph:
        """Latent graph after applying action."""

    @abstractmethod
    def regress_pose(self, latent: LatentGraph) -> tuple[Tensor, Tensor]:
        """Per-node centroid [N x 3] and row-major rotation [N x 9]."""

    # ===== Composite paths =====

    def encode(self, cloud: SegmentedCloud, ids: Sequence[int]) -> LatentGraph:
        return self.graph_encode(self.build_input_graph(cloud, ids))

    def detect(self, cloud: SegmentedCloud, ids: Sequence[int]) -> Tensor:
        """Relations read from the current observation."""
        return self.classify_relations(self.encode(cloud, ids))

    def predict(self, cloud: SegmentedCloud, ids: Sequence[int], action: SkillAction) -> Tensor:
        """Relations read from the latent rolled forward by one action."""
        return self.classify_relations(self.dynamics(self.encode(cloud, ids), action))

    def _check_skill(self, action: SkillAction) -> str:
        if action.skill not in SKILLS:
            raise ValueError(f"unknown skill {action.skill}")
        return Skill(action.skill).value
