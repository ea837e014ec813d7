"""
Reverse-mode automatic differentiation over dense float64 arrays.
"""

from app.autodiff.mlp import Layer, MlpParams, init_mlp, mlp_forward
from app.autodiff.optim import AdamState, adam_step
from app.autodiff.tensor import (
    PROB_EPS,
    ROTATION_EPS,
    GradientError,
    ShapeError,
    Tape,
    Tensor,
    add,
    backward,
    bce,
    concat,
    constant,
    gram_schmidt,
    matmul,
    max_rows,
    mean_rows,
    parameter,
    relu,
    rotation_6d,
    scale,
    sigmoid,
    squared_l2,
    sum_all,
)

__all__ = [
    "PROB_EPS",
    "ROTATION_EPS",
    "AdamState",
    "GradientError",
    "Layer",
    "MlpParams",
    "ShapeError",
    "Tape",
    "Tensor",
    "adam_step",
    "add",
    "backward",
    "bce",
    "concat",
    "constant",
    "gram_schmidt",
    "init_mlp",
    "matmul",
    "max_rows",
    "mean_rows",
    "mlp_forward",
    "parameter",
    "relu",
    "rotation_6d",
    "scale",
    "sigmoid",
    "squared_l2",
    "sum_all",
]
