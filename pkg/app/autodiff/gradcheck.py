"""
Finite-difference gradient checking.
"""

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from app.autodiff.tensor import Tape, Tensor

RELATIVE_FLOOR = 1e-8


def _central_difference(fn: Callable[[], Tensor], flat: np.ndarray, i: int, step: float) -> float:
    original = flat[i]
    flat[i] = original + step
    plus = fn().item()
    flat[i] = original - step
    minus = fn().item()
    flat[i] = original
    return (plus - minus) / (2.0 * step)


def _relative(analytic, numeric, floor: float):
    return np.abs(analytic - numeric) / np.maximum(np.abs(analytic) + np.abs(numeric), floor)


def numeric_gradient(fn: Callable[[], Tensor], param: Tensor, step: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of the scalar fn() with respect to param."""
    grad = np.zeros_like(param.data)
    flat = param.data.reshape(-1)
    grad_flat = grad.reshape(-1)
    for i in range(flat.size):
        grad_flat[i] = _central_difference(fn, flat, i, step)
    return grad


def analytic_gradients(fn: Callable[[], Tensor], params: Sequence[Tensor]) -> list[np.ndarray]:
    """Gradients of fn() from one taped forward/backward pass."""
    for p in params:
        p.grad = None
    with Tape() as tape:
        loss = fn()
    tape.backward(loss)
    return [p.grad if p.grad is not None else np.zeros_like(p.data) for p in params]


def max_relative_error(
    fn: Callable[[], Tensor],
    params: Sequence[Tensor],
    step: float = 1e-5,
    floor: float = RELATIVE_FLOOR,
) -> float:
    """
    Largest relative disagreement between tape and finite-difference gradients.

    Relative error is |a - n| / max(|a| + |n|, floor) per element. Entries where
    both gradients are exactly zero score zero.
    """
    worst = 0.0
    for p, analytic in zip(params, analytic_gradients(fn, params), strict=True):
        numeric = numeric_gradient(fn, p, step)
        worst = max(worst, float(np.max(_relative(analytic, numeric, floor), initial=0.0)))
    return worst


@dataclass
class SampledCheck:
    """Outcome of a gradient check on sampled parameter entries."""

    worst: float
    checked: int
    skipped_kinks: int


def sampled_relative_error(
    fn: Callable[[], Tensor],
    params: Sequence[Tensor],
    rng: np.random.Generator,
    per_param: int = 3,
    step: float = 1e-5,
    min_magnitude: float = 1e-5,
    floor: float = RELATIVE_FLOOR,
) -> SampledCheck:
    """
    Relative gradient error on a few random entries of each parameter.

    Only entries whose tape gradient is at least min_magnitude are drawn, since
    smaller values sit at the round-off level of a central difference. An entry
    whose difference quotient changes between step and step / 2 straddles a
    rectifier or max kink and is skipped.
    """
    worst, checked, kinks = 0.0, 0, 0
    for p, analytic in zip(params, analytic_gradients(fn, params), strict=True):
        candidates = np.flatnonzero(np.abs(analytic.reshape(-1)) >= min_magnitude)
        if candidates.size == 0:
            continue
        picks = rng.choice(candidates, size=min(per_param, candidates.size), replace=False)
        flat = p.data.reshape(-1)
        a_flat = analytic.reshape(-1)
        for i in picks:
            coarse = _central_difference(fn, flat, int(i), step)
            fine = _central_difference(fn, flat, int(i), step / 2.0)
            if _relative(coarse, fine, floor) > 1e-3:
                kinks += 1
                continue
            worst = max(worst, float(_relative(a_flat[i], coarse, floor)))
            checked += 1
    return SampledCheck(worst=worst, checked=checked, skipped_kinks=kinks)
