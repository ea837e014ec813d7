"""
Pairwise-MLP baseline: each ordered pair is encoded on its own, with no
message passing between pairs.
"""

import numpy as np

from app.autodiff import MlpParams, Tensor, add, concat, init_mlp, matmul, mlp_forward
from app.services.model.base import (
    InputGraph,
    LatentGraph,
    MissingHeadError,
    RelationalModel,
    graph_selectors,
)
from app.services.model.config import ModelConfig
from models import SKILLS, SkillAction


class PairwiseRelationalModel(RelationalModel):
    """Pair latent = MLP(node_i ⊕ node_j); relation head and residual dynamics act per pair."""

    architecture = "pairwise_mlp"

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        super().__init__(config, rng)
        latent = config.latent_width
        hidden = config.graph_hidden
        self.pair_mlp = init_mlp([2 * config.node_input_width, hidden, latent], rng)
        self.relation_classifier = init_mlp(
            [latent, config.relation_hidden, config.n_relations], rng, output_activation="sigmoid"
        )
        self.dynamics_mlps: dict[str, MlpParams] = {}
        for skill in SKILLS:
            edge_mlp = init_mlp([2 * latent, hidden, latent], rng)
            edge_mlp.zero_output_layer()
            self.dynamics_mlps[skill.value] = edge_mlp

    def named_mlps(self) -> dict[str, MlpParams]:
        mlps = self._shared_mlps()
        mlps["pair.encoder_mlp"] = self.pair_mlp
        mlps["psi_r.classifier"] = self.relation_classifier
        for skill, mlp in self.dynamics_mlps.items():
            mlps[f"delta.{skill}.edge_mlp"] = mlp
        return mlps

    def graph_encode(self, graph: InputGraph) -> LatentGraph:
        sel = graph_selectors(graph.n_nodes)
        pairs = concat([matmul(sel.source, graph.nodes), matmul(sel.target, graph.nodes)])
        edges = mlp_forward(self.pair_mlp, pairs)
        return LatentGraph(nodes=None, edges=edges, ids=graph.ids, object_ids=graph.object_ids)

    def classify_relations(self, latent: LatentGraph) -> Tensor:
        return mlp_forward(self.relation_classifier, latent.edges)

    def dynamics(self, latent: LatentGraph, action: SkillAction) -> LatentGraph:
        mlp = self.dynamics_mlps[self._check_skill(action)]
        sel = graph_selectors(latent.n_nodes)
        edge_action = self.repeat_rows(self.encode_action(action, latent), sel.edge_ones)
        edges = add(latent.edges, mlp_forward(mlp, concat([latent.edges, edge_action])))
        return LatentGraph(nodes=None, edges=edges, ids=latent.ids, object_ids=latent.object_ids)

    def regress_pose(self, latent: LatentGraph) -> tuple[Tensor, Tensor]:
        """
        Raises:
            MissingHeadError: Always; pairs carry no per-object latent to regress from
        """
        raise MissingHeadError("the pairwise baseline has no per-object pose head")
