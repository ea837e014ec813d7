"""
Adam optimizer over autodiff parameters.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from app.autodiff.tensor import ShapeError, Tensor


@dataclass
class AdamState:
    """Moment estimates and hyperparameters for Adam."""

    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = field(default=0)

    @classmethod
    def for_parameters(cls, params: Sequence[Tensor], learning_rate: float = 1e-4) -> AdamState:
        return cls(
            first_moment=[np.zeros_like(p.data) for p in params],
            second_moment=[np.zeros_like(p.data) for p in params],
            learning_rate=learning_rate,
        )


def adam_step(
    state: AdamState, params: Sequence[Tensor], grads: Sequence[np.ndarray | None]
) -> None:
    """
    Apply one bias-corrected Adam update to params in place.

    A missing gradient (None) is treated as zero.

    Raises:
        ShapeError: If params, grads and moments disagree in count or shape
    """
    if not (len(params) == len(grads) == len(state.first_moment) == len(state.second_moment)):
        raise ShapeError(
            "adam_step",
            (len(params),),
            (len(grads), len(state.first_moment)),
            "parameter, gradient and moment counts differ",
        )
    resolved = []
    for i, (param, grad) in enumerate(zip(params, grads, strict=True)):
        if grad is None:
            grad = np.zeros_like(param.data)
        if grad.shape != param.shape:
            raise ShapeError("adam_step", param.shape, grad.shape, f"gradient {i}")
        if state.first_moment[i].shape != param.shape or state.second_moment[i].shape != param.shape:
            raise ShapeError(
                "adam_step", param.shape, state.first_moment[i].shape, f"moment {i}"
            )
        resolved.append(grad)

    # every shape checked; nothing below can fail halfway
    state.step_count += 1
    t = state.step_count
    correction1 = 1.0 - state.beta1**t
    correction2 = 1.0 - state.beta2**t
    for i, (param, grad) in enumerate(zip(params, resolved, strict=True)):
        m = state.first_moment[i]
        v = state.second_moment[i]
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * grad * grad
        m_hat = m / correction1
        v_hat = v / correction2
        param.data -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
