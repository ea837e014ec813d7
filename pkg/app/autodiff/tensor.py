"""
Dense float64 tensors with reverse-mode automatic differentiation.

Operations record themselves on the active Tape whenever a Tape is open on the
current thread and at least one input requires a gradient. Without an open
Tape the same functions are plain numpy arithmetic, so inference never pays for
bookkeeping and untaped tensors can be shared freely between threads.

Only 1-D and 2-D arrays are supported (plus 0-D scalars produced by reductions).
"""

from __future__ import annotations

import logging
import threading
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

# Probabilities are clipped to [PROB_EPS, 1 - PROB_EPS] before any log
PROB_EPS = 1e-7

# Gram-Schmidt inputs shorter than this fall back to the identity rotation
ROTATION_EPS = 1e-8

_local = threading.local()


class ShapeError(ValueError):
    """Raised when operand shapes do not fit an operation."""

    def __init__(self, op: str, left_shape, right_shape, detail: str = ""):
        self.op = op
        self.left_shape = tuple(left_shape)
        self.right_shape = tuple(right_shape)
        message = f"{op}: incompatible shapes {self.left_shape} and {self.right_shape}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)


class GradientError(ValueError):
    """Raised when backward() is asked for something it cannot differentiate."""


class Tensor:
    """A float64 array plus gradient bookkeeping."""

    __slots__ = ("data", "grad", "requires_grad", "tape_id")

    def __init__(self, data, requires_grad: bool = False):
        array = np.asarray(data, dtype=np.float64)
        if array.ndim > 2:
            raise ShapeError("tensor", array.shape, (), "at most 2 dimensions are supported")
        self.data: np.ndarray = array
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.tape_id: int | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return int(self.data.size)

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def __matmul__(self, other: Tensor) -> Tensor:
        return matmul(self, other)

    def __add__(self, other: Tensor) -> Tensor:
        return add(self, other)

    def __repr__(self):
        return f"<Tensor(shape={self.shape}, requires_grad={self.requires_grad})>"


def constant(data) -> Tensor:
    """Wrap data as a tensor that never receives a gradient."""
    return Tensor(data, requires_grad=False)


def parameter(data) -> Tensor:
    """Wrap data as a trainable leaf tensor (copied, so callers keep their array)."""
    return Tensor(np.array(data, dtype=np.float64), requires_grad=True)


@dataclass
class TapeNode:
    """One recorded operation."""

    kind: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    backward: Callable[[np.ndarray], Sequence[np.ndarray | None]]


class Tape:
    """Ordered record of operations for one forward pass.

    Use as a context manager; operations executed inside the block on the same
    thread are recorded. Nodes are appended in execution order, which is a
    topological order of the computation graph.
    """

    def __init__(self):
        self.nodes: list[TapeNode] = []

    def __enter__(self) -> Tape:
        stack = getattr(_local, "stack", None)
        if stack is None:
            stack = []
            _local.stack = stack
        stack.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _local.stack.pop()

    def __len__(self):
        return len(self.nodes)

    def record(self, kind: str, inputs: tuple[Tensor, ...], output: Tensor, backward) -> None:
        output.tape_id = len(self.nodes)
        self.nodes.append(TapeNode(kind=kind, inputs=inputs, output=output, backward=backward))

    def backward(self, loss: Tensor) -> None:
        """Populate .grad on every leaf tensor that requires a gradient.

        Raises:
            GradientError: If loss is not a scalar or was not recorded on this tape
        """
        if loss.size != 1:
            raise GradientError(f"loss must be a scalar, got shape {loss.shape}")
        if (
            loss.tape_id is None
            or loss.tape_id >= len(self.nodes)
            or self.nodes[loss.tape_id].output is not loss
        ):
            raise GradientError("loss was not recorded on this tape")

        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        leaves: dict[int, Tensor] = {}
        for node in reversed(self.nodes[: loss.tape_id + 1]):
            out_grad = grads.pop(id(node.output), None)
            if out_grad is None:
                continue
            input_grads = node.backward(out_grad)
            for tensor, grad in zip(node.inputs, input_grads, strict=True):
                if grad is None or not tensor.requires_grad:
                    continue
                key = id(tensor)
                grads[key] = grads[key] + grad if key in grads else grad
                if tensor.tape_id is None:
                    leaves[key] = tensor

        for key, tensor in leaves.items():
            tensor.grad = grads[key]


def active_tape() -> Tape | None:
    """Return the innermost open tape on this thread, if any."""
    stack = getattr(_local, "stack", None)
    return stack[-1] if stack else None


def backward(tape: Tape, loss: Tensor) -> None:
    """Run reverse-mode differentiation of loss over tape."""
    tape.backward(loss)


def _emit(kind: str, inputs: tuple[Tensor, ...], data: np.ndarray, backward) -> Tensor:
    tape = active_tape()
    needs_grad = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor(data, requires_grad=needs_grad)
    if needs_grad:
        tape.record(kind, inputs, out, backward)
    return out


def _require_2d(op: str, a: Tensor, b: Tensor | None = None) -> None:
    if a.data.ndim != 2 or (b is not None and b.data.ndim != 2):
        raise ShapeError(op, a.shape, b.shape if b is not None else (), "2-D operands required")


# ===== Linear algebra =====


def matmul(a: Tensor, b: Tensor, transpose_b: bool = False) -> Tensor:
    """a @ b, or a @ b.T when transpose_b is set."""
    _require_2d("matmul", a, b)
    inner_b = b.shape[1] if transpose_b else b.shape[0]
    if a.shape[1] != inner_b:
        raise ShapeError("matmul", a.shape, b.shape, f"transpose_b={transpose_b}")
    right = b.data.T if transpose_b else b.data
    left = a.data

    def _backward(g):
        grad_a = g @ right.T
        grad_right = left.T @ g
        return grad_a, grad_right.T if transpose_b else grad_right

    return _emit("matmul", (a, b), left @ right, _backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; b may be a 1-D row broadcast over the rows of a 2-D a."""
    if a.shape == b.shape:
        broadcast = False
    elif a.data.ndim == 2 and b.data.ndim == 1 and a.shape[1] == b.shape[0]:
        broadcast = True
    else:
        raise ShapeError("add", a.shape, b.shape)

    def _backward(g):
        return g, g.sum(axis=0) if broadcast else g

    return _emit("add", (a, b), a.data + b.data, _backward)


def concat(tensors: Sequence[Tensor], axis: int = 1) -> Tensor:
    """Concatenate 2-D tensors along axis (columns by default)."""
    if not tensors:
        raise ShapeError("concat", (), (), "nothing to concatenate")
    first = tensors[0]
    for t in tensors:
        _require_2d("concat", t)
        if t.shape[1 - axis] != first.shape[1 - axis]:
            raise ShapeError("concat", first.shape, t.shape, f"axis={axis}")
    sizes = [t.shape[axis] for t in tensors]
    cuts = np.cumsum(sizes)[:-1]

    def _backward(g):
        return np.split(g, cuts, axis=axis)

    data = np.concatenate([t.data for t in tensors], axis=axis)
    return _emit("concat", tuple(tensors), data, _backward)


# ===== Activations =====


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0

    def _backward(g):
        return (g * mask,)

    return _emit("relu", (a,), np.where(mask, a.data, 0.0), _backward)


def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    # Split by sign so exp never overflows
    e = np.exp(-np.abs(x))
    out = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))

    def _backward(g):
        return (g * out * (1.0 - out),)

    return _emit("sigmoid", (a,), out, _backward)


# ===== Reductions =====


def mean_rows(a: Tensor) -> Tensor:
    """Mean over rows: [m x n] -> [1 x n]."""
    _require_2d("mean_rows", a)
    rows = a.shape[0]
    if rows == 0:
        raise ShapeError("mean_rows", a.shape, (), "cannot average zero rows")

    def _backward(g):
        return (np.repeat(g / rows, rows, axis=0),)

    return _emit("mean_rows", (a,), a.data.mean(axis=0, keepdims=True), _backward)


def max_rows(a: Tensor, groups: int) -> Tensor:
    """Column-wise max within equal contiguous row groups: [g*r x n] -> [g x n]."""
    _require_2d("max_rows", a)
    if groups <= 0 or a.shape[0] % groups or a.shape[0] == 0:
        raise ShapeError("max_rows", a.shape, (groups,), "rows must split evenly into groups")
    rows = a.shape[0] // groups
    blocks = a.data.reshape(groups, rows, a.shape[1])
    idx = np.argmax(blocks, axis=1)[:, None, :]
    out = np.take_along_axis(blocks, idx, axis=1)[:, 0, :]

    def _backward(g):
        grad = np.zeros_like(blocks)
        np.put_along_axis(grad, idx, g[:, None, :], axis=1)
        return (grad.reshape(a.shape),)

    return _emit("max_rows", (a,), out, _backward)


def sum_all(a: Tensor) -> Tensor:
    """Sum of every element, as a 0-D scalar."""

    def _backward(g):
        return (np.full(a.shape, float(g)),)

    return _emit("sum", (a,), np.asarray(a.data.sum()), _backward)


def scale(a: Tensor, factor: float) -> Tensor:
    """Multiply by a constant factor."""

    def _backward(g):
        return (g * factor,)

    return _emit("scale", (a,), a.data * factor, _backward)


# ===== Losses =====


def squared_l2(a: Tensor, b: Tensor) -> Tensor:
    """Sum of squared differences, as a 0-D scalar."""
    if a.shape != b.shape:
        raise ShapeError("squared_l2", a.shape, b.shape)
    diff = a.data - b.data

    def _backward(g):
        grad = 2.0 * diff * g
        return grad, -grad

    return _emit("squared_l2", (a, b), np.asarray(np.sum(diff * diff)), _backward)


def bce(probs: Tensor, labels) -> Tensor:
    """Summed binary cross-entropy of probabilities against 0/1 labels.

    Probabilities are clipped to [PROB_EPS, 1 - PROB_EPS]; the clip passes no
    gradient outside that range.
    """
    y = np.asarray(labels, dtype=np.float64)
    if y.shape != probs.shape:
        raise ShapeError("bce", probs.shape, y.shape)
    raw = probs.data
    p = np.clip(raw, PROB_EPS, 1.0 - PROB_EPS)
    inside = (raw >= PROB_EPS) & (raw <= 1.0 - PROB_EPS)
    loss = -np.sum(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))

    def _backward(g):
        return (np.where(inside, (-y / p + (1.0 - y) / (1.0 - p)) * g, 0.0),)

    return _emit("bce", (probs,), np.asarray(loss), _backward)


# ===== Rotation =====


def gram_schmidt(six: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map [n x 6] rows to [n x 3 x 3] rotations plus a per-row degenerate flag."""
    a1, a2 = six[:, :3], six[:, 3:]
    n1 = np.linalg.norm(a1, axis=1, keepdims=True)
    b1 = a1 / np.maximum(n1, ROTATION_EPS)
    u = a2 - np.sum(b1 * a2, axis=1, keepdims=True) * b1
    nu = np.linalg.norm(u, axis=1, keepdims=True)
    b2 = u / np.maximum(nu, ROTATION_EPS)
    b3 = np.cross(b1, b2)
    rot = np.stack([b1, b2, b3], axis=-1)
    degenerate = (n1[:, 0] < ROTATION_EPS) | (nu[:, 0] < ROTATION_EPS)
    rot[degenerate] = np.eye(3)
    return rot, degenerate


def rotation_6d(a: Tensor) -> Tensor:
    """Continuous 6-D rotation representation to row-major 3x3 matrices: [n x 6] -> [n x 9].

    Columns are b1 = a1/|a1|, b2 = the normalized part of a2 orthogonal to b1,
    b3 = b1 x b2. Degenerate rows return the identity and pass no gradient.
    """
    _require_2d("rotation_6d", a)
    if a.shape[1] != 6:
        raise ShapeError("rotation_6d", a.shape, (a.shape[0], 6))
    rot, degenerate = gram_schmidt(a.data)
    a1, a2 = a.data[:, :3], a.data[:, 3:]
    n1 = np.maximum(np.linalg.norm(a1, axis=1, keepdims=True), ROTATION_EPS)
    b1, b2, b3 = rot[:, :, 0], rot[:, :, 1], rot[:, :, 2]
    s = np.sum(b1 * a2, axis=1, keepdims=True)
    nu = np.maximum(np.linalg.norm(a2 - s * b1, axis=1, keepdims=True), ROTATION_EPS)

    def _dot(x, y):
        return np.sum(x * y, axis=1, keepdims=True)

    def _backward(g):
        grid = g.reshape(-1, 3, 3)
        g1, g2, g3 = grid[:, :, 0], grid[:, :, 1], grid[:, :, 2]
        g_b1 = g1 + np.cross(b2, g3)
        g_b2 = g2 + np.cross(g3, b1)
        g_u = (g_b2 - b2 * _dot(b2, g_b2)) / nu
        g_a2 = g_u - b1 * _dot(g_u, b1)
        g_b1 = g_b1 - _dot(g_u, b1) * a2 - s * g_u
        g_a1 = (g_b1 - b1 * _dot(b1, g_b1)) / n1
        grad = np.concatenate([g_a1, g_a2], axis=1)
        grad[degenerate] = 0.0
        return (grad,)

    return _emit("rotation_6d", (a,), rot.reshape(-1, 9), _backward)
