"""
Multi-layer perceptrons over autodiff tensors.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from app.autodiff.tensor import ShapeError, Tensor, add, matmul, parameter, relu, sigmoid

logger = logging.getLogger(__name__)

OutputActivation = Literal["none", "sigmoid"]


@dataclass
class Layer:
    """One affine layer: weight [out x in], bias [out]."""

    weight: Tensor
    bias: Tensor

    @property
    def in_features(self) -> int:
        return self.weight.shape[1]

    @property
    def out_features(self) -> int:
        return self.weight.shape[0]


@dataclass
class MlpParams:
    """Weights of a rectifier MLP with an optional sigmoid output."""

    layers: list[Layer]
    output_activation: OutputActivation = "none"
    hidden_activation: str = field(default="relu", init=False)

    def __post_init__(self):
        if not self.layers:
            raise ValueError("an MLP needs at least one layer")
        for prev, nxt in zip(self.layers, self.layers[1:], strict=False):
            if nxt.in_features != prev.out_features:
                raise ShapeError(
                    "mlp", prev.weight.shape, nxt.weight.shape, "layer widths do not chain"
                )

    @property
    def in_features(self) -> int:
        return self.layers[0].in_features

    @property
    def out_features(self) -> int:
        return self.layers[-1].out_features

    def named_parameters(self, prefix: str) -> list[tuple[str, Tensor]]:
        """Parameter tensors keyed by path, e.g. 'phi_g.node_mlp.layer0.weight'."""
        named = []
        for i, layer in enumerate(self.layers):
            named.append((f"{prefix}.layer{i}.weight", layer.weight))
            named.append((f"{prefix}.layer{i}.bias", layer.bias))
        return named

    def parameter_count(self) -> int:
        return sum(layer.weight.size + layer.bias.size for layer in self.layers)

    def zero_output_layer(self) -> None:
        """Zero the last layer so the network outputs exactly zero (residual identity)."""
        last = self.layers[-1]
        last.weight.data[...] = 0.0
        last.bias.data[...] = 0.0


def init_mlp(
    widths: list[int],
    rng: np.random.Generator,
    output_activation: OutputActivation = "none",
) -> MlpParams:
    """
    Build an MLP with Glorot-uniform weights and zero biases.

    Args:
        widths: Layer widths including input and output, e.g. [6, 64, 128]
        rng: Generator that draws the weights
        output_activation: Activation applied after the last layer

    Returns:
        Freshly initialized MlpParams
    """
    if len(widths) < 2:
        raise ValueError(f"need at least input and output widths, got {widths}")
    layers = []
    for fan_in, fan_out in zip(widths, widths[1:], strict=False):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weight = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        layers.append(Layer(weight=parameter(weight), bias=parameter(np.zeros(fan_out))))
    return MlpParams(layers=layers, output_activation=output_activation)


def mlp_forward(params: MlpParams, x: Tensor) -> Tensor:
    """
    Apply the MLP to a batch of rows.

    Args:
        params: Network weights
        x: Input batch [B x in]

    Returns:
        Output batch [B x out]

    Raises:
        ShapeError: If the input width does not match the first layer
    """
    if x.data.ndim != 2 or x.shape[1] != params.in_features:
        raise ShapeError("mlp_forward", x.shape, params.layers[0].weight.shape)
    h = x
    last = len(params.layers) - 1
    for i, layer in enumerate(params.layers):
        h = add(matmul(h, layer.weight, transpose_b=True), layer.bias)
        if i < last:
            h = relu(h)
    if params.output_activation == "sigmoid":
        h = sigmoid(h)
    return h
