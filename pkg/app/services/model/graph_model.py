"""
The graph relational dynamics model.

Message passing follows one pattern everywhere: gather both endpoints of every
directed edge with constant selection matrices, run an edge MLP, then average
the messages arriving at each node.
"""

import logging

import numpy as np

from app.autodiff import (
    MlpParams,
    Tensor,
    add,
    concat,
    constant,
    init_mlp,
    matmul,
    mlp_forward,
    rotation_6d,
)
from app.services.model.base import InputGraph, LatentGraph, RelationalModel, graph_selectors
from app.services.model.config import ModelConfig
from models import SKILLS, SkillAction

logger = logging.getLogger(__name__)

# Columns of the 9-wide pose output: centroid first, then the 6-D rotation code
_POSITION = constant(np.eye(9)[:, :3])
_ROTATION = constant(np.eye(9)[:, 3:])


class GraphRelationalModel(RelationalModel):
    """Point encoder + graph encoder + relation/pose heads + per-skill residual dynamics."""

    architecture = "gnn"

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        super().__init__(config, rng)
        node_in = config.node_input_width
        latent = config.latent_width
        hidden = config.graph_hidden

        self.graph_mlps: dict[str, MlpParams] = {
            "phi_g.message_mlp": init_mlp([2 * node_in, hidden, latent], rng),
            "phi_g.node_mlp": init_mlp([node_in + latent, hidden, latent], rng),
            "phi_g.edge_mlp": init_mlp([2 * node_in + 2 * latent, hidden, latent], rng),
        }
        for k in range(1, config.message_rounds):
            prefix = f"phi_g.round{k}"
            self.graph_mlps[f"{prefix}.message_mlp"] = init_mlp([3 * latent, hidden, latent], rng)
            self.graph_mlps[f"{prefix}.node_mlp"] = init_mlp([2 * latent, hidden, latent], rng)
            self.graph_mlps[f"{prefix}.edge_mlp"] = init_mlp([5 * latent, hidden, latent], rng)

        self.relation_message_mlp = init_mlp([3 * latent, config.relation_hidden, latent], rng)
        self.relation_classifier = init_mlp(
            [5 * latent, config.relation_hidden, config.n_relations], rng, output_activation="sigmoid"
        )
        self.pose_message_mlp = init_mlp([3 * latent, config.pose_hidden, latent], rng)
        self.pose_mlp = init_mlp([2 * latent, config.pose_hidden, 9], rng)

        self.dynamics_mlps: dict[str, dict[str, MlpParams]] = {}
        for skill in SKILLS:
            node_mlp = init_mlp([2 * latent, hidden, latent], rng)
            edge_mlp = init_mlp([2 * latent, hidden, latent], rng)
            node_mlp.zero_output_layer()
            edge_mlp.zero_output_layer()
            self.dynamics_mlps[skill.value] = {"node_mlp": node_mlp, "edge_mlp": edge_mlp}

    def named_mlps(self) -> dict[str, MlpParams]:
        mlps = self._shared_mlps()
        mlps.update(self.graph_mlps)
        mlps["psi_r.message_mlp"] = self.relation_message_mlp
        mlps["psi_r.classifier"] = self.relation_classifier
        mlps["psi_p.message_mlp"] = self.pose_message_mlp
        mlps["psi_p.pose_mlp"] = self.pose_mlp
        for skill, pair in self.dynamics_mlps.items():
            for name, mlp in pair.items():
                mlps[f"delta.{skill}.{name}"] = mlp
        return mlps

    @staticmethod
    def _aggregate(
        nodes: Tensor, edges: Tensor | None, message: MlpParams
    ) -> tuple[Tensor, Tensor, Tensor]:
        """Messages over every directed edge, averaged per receiving node.

        Returns:
            (source node rows [E x w], target node rows [E x w], y [N x latent])
        """
        sel = graph_selectors(nodes.shape[0])
        src = matmul(sel.source, nodes)
        dst = matmul(sel.target, nodes)
        parts = [src, dst] if edges is None else [src, dst, edges]
        messages = mlp_forward(message, concat(parts))
        return src, dst, matmul(sel.incoming_mean, messages)

    def graph_encode(self, graph: InputGraph) -> LatentGraph:
        sel = graph_selectors(graph.n_nodes)
        src, dst, y = self._aggregate(graph.nodes, None, self.graph_mlps["phi_g.message_mlp"])
        nodes = mlp_forward(self.graph_mlps["phi_g.node_mlp"], concat([graph.nodes, y]))
        edge_in = concat([src, dst, matmul(sel.source, y), matmul(sel.target, y)])
        edges = mlp_forward(self.graph_mlps["phi_g.edge_mlp"], edge_in)

        for k in range(1, self.config.message_rounds):
            prefix = f"phi_g.round{k}"
            src, dst, y = self._aggregate(nodes, edges, self.graph_mlps[f"{prefix}.message_mlp"])
            edge_in = concat([edges, src, dst, matmul(sel.source, y), matmul(sel.target, y)])
            edges = mlp_forward(self.graph_mlps[f"{prefix}.edge_mlp"], edge_in)
            nodes = mlp_forward(self.graph_mlps[f"{prefix}.node_mlp"], concat([nodes, y]))
        return LatentGraph(nodes=nodes, edges=edges, ids=graph.ids, object_ids=graph.object_ids)

    def classify_relations(self, latent: LatentGraph) -> Tensor:
        sel = graph_selectors(latent.n_nodes)
        src, dst, y = self._aggregate(latent.nodes, latent.edges, self.relation_message_mlp)
        classifier_in = concat(
            [src, dst, matmul(sel.source, y), matmul(sel.target, y), latent.edges]
        )
        return mlp_forward(self.relation_classifier, classifier_in)

    def regress_pose(self, latent: LatentGraph) -> tuple[Tensor, Tensor]:
        """Centroid [N x 3] and Gram-Schmidt rotation [N x 9] for every node."""
        _, _, y = self._aggregate(latent.nodes, latent.edges, self.pose_message_mlp)
        out = mlp_forward(self.pose_mlp, concat([latent.nodes, y]))
        return matmul(out, _POSITION), rotation_6d(matmul(out, _ROTATION))

    def dynamics(self, latent: LatentGraph, action: SkillAction) -> LatentGraph:
        """
        Residual update v' = v + delta_v(v, a), e' = e + delta_e(e, a) with the
        networks of action.skill.

        Raises:
            ValueError: If the skill is unknown
        """
        mlps = self.dynamics_mlps[self._check_skill(action)]
        sel = graph_selectors(latent.n_nodes)
        encoded = self.encode_action(action, latent)
        node_action = self.repeat_rows(encoded, sel.node_ones)
        edge_action = self.repeat_rows(encoded, sel.edge_ones)
        nodes = add(latent.nodes, mlp_forward(mlps["node_mlp"], concat([latent.nodes, node_action])))
        edges = add(latent.edges, mlp_forward(mlps["edge_mlp"], concat([latent.edges, edge_action])))
        return LatentGraph(nodes=nodes, edges=edges, ids=latent.ids, object_ids=latent.object_ids)
