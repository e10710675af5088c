"""Dense float64 matrices with a recorded-operation gradient tape.

Every value is a 2-D matrix. Operations executed while any operand belongs
to a :class:`Tape` append a backward closure to that tape; replaying the
closures in reverse yields exact gradients for every watched leaf. Tensors
created without a tape compute values only, which is the inference path.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np


class ShapeError(ValueError):
    """Operand shapes violate an operation's contract."""


class TapeError(RuntimeError):
    """Tape misuse: mixed tapes, non-scalar loss, or repeated backward."""


def as_matrix(values) -> np.ndarray:
    """Coerce to a C-contiguous 2-D float64 array, rejecting NaN/Inf."""
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"matrix must be 2-D, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("matrix entries must be finite (NaN/Inf rejected)")
    return arr


class Tensor:
    """A 2-D float64 matrix, optionally attached to a gradient tape."""

    __slots__ = ("value", "grad", "tape")

    def __init__(self, values, tape: "Tape | None" = None):
        self.value = as_matrix(values)
        self.grad: np.ndarray | None = None
        self.tape = tape

    @classmethod
    def _wrap(cls, value: np.ndarray, tape: "Tape | None") -> "Tensor":
        # Internal fast path for op outputs: skips the finite scan. Overflow
        # in intermediate results is caught by the trainer's loss check.
        out = cls.__new__(cls)
        out.value = value
        out.grad = None
        out.tape = tape
        return out

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape

    def __repr__(self) -> str:
        return f"Tensor(shape={self.value.shape}, taped={self.tape is not None})"

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)

    def __add__(self, other: "Tensor") -> "Tensor":
        return add(self, other)

    def __sub__(self, other: "Tensor") -> "Tensor":
        return sub(self, other)

    def __mul__(self, other: "Tensor") -> "Tensor":
        return mul(self, other)


class Tape:
    """Ordered record of executed primitives; replayed backward for grads."""

    def __init__(self):
        self._ops: list[Callable[[], None]] = []
        self._watched: list[Tensor] = []
        self._consumed = False

    def watch(self, values) -> Tensor:
        """Register a leaf whose gradient is guaranteed after backward."""
        leaf = Tensor(values, tape=self)
        self._watched.append(leaf)
        return leaf

    def _record(self, backward_fn: Callable[[], None]) -> None:
        self._ops.append(backward_fn)

    def __len__(self) -> int:
        return len(self._ops)


def _result_tape(*tensors: Tensor) -> Tape | None:
    tape = None
    for t in tensors:
        if t.tape is None:
            continue
        if tape is None:
            tape = t.tape
        elif tape is not t.tape:
            raise TapeError("operands belong to different tapes")
    return tape


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    # Only tensors on a tape carry gradients; constants are skipped.
    if t.tape is None:
        return
    t.grad = g if t.grad is None else t.grad + g


def backward(loss: Tensor) -> None:
    """Populate ``.grad`` on every participating tensor of the loss tape.

    Watched leaves that did not participate get an exact zero gradient.
    """
    tape = loss.tape
    if tape is None:
        raise TapeError("loss is not attached to a tape")
    if loss.value.shape != (1, 1):
        raise TapeError(f"loss must be 1x1, got shape {loss.value.shape}")
    if tape._consumed:
        raise TapeError("tape already replayed; build a fresh forward pass")
    tape._consumed = True
    loss.grad = np.ones((1, 1))
    for op in reversed(tape._ops):
        op()
    for leaf in tape._watched:
        if leaf.grad is None:
            leaf.grad = np.zeros_like(leaf.value)


# ---------------------------------------------------------------------------
# Primitives


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.value.shape[1] != b.value.shape[0]:
        raise ShapeError(
            f"matmul inner dimensions differ: {a.value.shape} @ {b.value.shape}"
        )
    tape = _result_tape(a, b)
    out = Tensor._wrap(a.value @ b.value, tape)
    if tape is not None:
        def grad_fn():
            if out.grad is None:
                return
            _accumulate(a, out.grad @ b.value.T)
            _accumulate(b, a.value.T @ out.grad)
        tape._record(grad_fn)
    return out


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; the second operand may be a broadcast 1xN row (bias)."""
    row_bias = b.value.shape == (1, a.value.shape[1]) and a.value.shape[0] != 1
    if not row_bias and a.value.shape != b.value.shape:
        raise ShapeError(f"add shapes differ: {a.value.shape} + {b.value.shape}")
    tape = _result_tape(a, b)
    out = Tensor._wrap(a.value + b.value, tape)
    if tape is not None:
        def grad_fn():
            if out.grad is None:
                return
            _accumulate(a, out.grad)
            if row_bias:
                _accumulate(b, out.grad.sum(axis=0, keepdims=True))
            else:
                _accumulate(b, out.grad)
        tape._record(grad_fn)
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.value.shape != b.value.shape:
        raise ShapeError(f"sub shapes differ: {a.value.shape} - {b.value.shape}")
    tape = _result_tape(a, b)
    out = Tensor._wrap(a.value - b.value, tape)
    if tape is not None:
        def grad_fn():
            if out.grad is None:
                return
            _accumulate(a, out.grad)
            _accumulate(b, -out.grad)
        tape._record(grad_fn)
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product; either operand may be a broadcast Nx1 column."""
    sa, sb = a.value.shape, b.value.shape
    ok = (
        sa == sb
        or (sb == (sa[0], 1))
        or (sa == (sb[0], 1))
    )
    if not ok:
        raise ShapeError(f"mul shapes incompatible: {sa} * {sb}")
    tape = _result_tape(a, b)
    out = Tensor._wrap(a.value * b.value, tape)
    if tape is not None:
        def grad_fn():
            if out.grad is None:
                return
            ga = out.grad * b.value
            gb = out.grad * a.value
            if sa == (out.value.shape[0], 1) and sa != out.value.shape:
                ga = ga.sum(axis=1, keepdims=True)
            if sb == (out.value.shape[0], 1) and sb != out.value.shape:
                gb = gb.sum(axis=1, keepdims=True)
            _accumulate(a, ga)
            _accumulate(b, gb)
        tape._record(grad_fn)
    return out


def scale(a: Tensor, factor: float) -> Tensor:
    """Multiply by a Python float constant."""
    tape = a.tape
    out = Tensor._wrap(a.value * factor, tape)
    if tape is not None:
        def grad_fn():
            if out.grad is None:
                return
            _accumulate(a, out.grad * factor)
        tape._record(grad_fn)
    return out


def relu(a: Tensor) -> Tensor:
    tape = a.tape
    out = Tensor._wrap(np.maximum(a.value, 0.0), tape)
    if tape is not None:
        mask = a.value > 0.0
        def grad_fn():
            if out.grad is None:
                return
            _accumulate(a, out.grad * mask)
        tape._record(grad_fn)
    return out


def sigmoid_values(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function on a plain array."""
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(a: Tensor) -> Tensor:
    tape = a.tape
    s = sigmoid_values(a.value)
    out = Tensor._wrap(s, tape)
    if tape is not None:
        def grad_fn():
            if out.grad is None:
                return
            _accumulate(a, out.grad * s * (1.0 - s))
        tape._record(grad_fn)
    return out


def softmax_values(x: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max-subtraction overflow guard."""
    shifted = x - x.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_rows(a: Tensor) -> Tensor:
    tape = a.tape
    p = softmax_values(a.value)
    out = Tensor._wrap(p, tape)
    if tape is not None:
        def grad_fn():
            if out.grad is None:
                return
            inner = (out.grad * p).sum(axis=1, keepdims=True)
            _accumulate(a, p * (out.grad - inner))
        tape._record(grad_fn)
    return out


def sum_all(a: Tensor) -> Tensor:
    tape = a.tape
    out = Tensor._wrap(np.array([[a.value.sum()]]), tape)
    if tape is not None:
        def grad_fn():
            if out.grad is None:
                return
            _accumulate(a, np.full_like(a.value, out.grad[0, 0]))
        tape._record(grad_fn)
    return out


def mean_all(a: Tensor) -> Tensor:
    tape = a.tape
    out = Tensor._wrap(np.array([[a.value.mean()]]), tape)
    if tape is not None:
        n = a.value.size
        def grad_fn():
            if out.grad is None:
                return
            _accumulate(a, np.full_like(a.value, out.grad[0, 0] / n))
        tape._record(grad_fn)
    return out


def square_norm(a: Tensor) -> Tensor:
    """Sum of squared entries, as a 1x1 matrix."""
    tape = a.tape
    out = Tensor._wrap(np.array([[float(np.sum(a.value * a.value))]]), tape)
    if tape is not None:
        def grad_fn():
            if out.grad is None:
                return
            _accumulate(a, 2.0 * a.value * out.grad[0, 0])
        tape._record(grad_fn)
    return out


def softmax_cross_entropy(
    logits: Tensor, labels: np.ndarray, mask: np.ndarray
) -> Tensor:
    """Mean cross-entropy of row-wise softmax over the masked rows.

    Fused primitive: the gradient is (softmax - onehot) / n_masked on masked
    rows and exactly zero elsewhere.
    """
    labels = np.asarray(labels, dtype=np.int64)
    mask = np.asarray(mask, dtype=bool)
    n, c = logits.value.shape
    if labels.shape != (n,) or mask.shape != (n,):
        raise ShapeError("labels and mask must be 1-D with one entry per row")
    if not mask.any():
        raise ValueError("cross-entropy mask selects no rows")
    if labels[mask].min() < 0 or labels[mask].max() >= c:
        raise ValueError("labels out of class range on masked rows")
    shifted = logits.value - logits.value.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - logsumexp
    rows = np.flatnonzero(mask)
    n_masked = rows.size
    loss = -logp[rows, labels[rows]].mean()
    tape = logits.tape
    out = Tensor._wrap(np.array([[loss]]), tape)
    if tape is not None:
        probs = np.exp(logp)
        def grad_fn():
            if out.grad is None:
                return
            g = np.zeros_like(logits.value)
            g[rows] = probs[rows]
            g[rows, labels[rows]] -= 1.0
            _accumulate(logits, g * (out.grad[0, 0] / n_masked))
        tape._record(grad_fn)
    return out


def gather_rows(a: Tensor, indices: np.ndarray) -> Tensor:
    """Select rows by index; the gradient scatter-adds back."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.ndim != 1:
        raise ShapeError("gather indices must be 1-D")
    if idx.size and (idx.min() < 0 or idx.max() >= a.value.shape[0]):
        raise ShapeError("gather index out of range")
    tape = a.tape
    out = Tensor._wrap(a.value[idx], tape)
    if tape is not None:
        def grad_fn():
            if out.grad is None:
                return
            buf = np.zeros_like(a.value)
            np.add.at(buf, idx, out.grad)
            _accumulate(a, buf)
        tape._record(grad_fn)
    return out


def scatter_add_rows(a: Tensor, indices: np.ndarray, num_rows: int) -> Tensor:
    """Accumulate row i of ``a`` into output row ``indices[i]``."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.shape != (a.value.shape[0],):
        raise ShapeError("scatter indices must match the input row count")
    if idx.size and (idx.min() < 0 or idx.max() >= num_rows):
        raise ShapeError("scatter index out of range")
    tape = a.tape
    buf = np.zeros((num_rows, a.value.shape[1]))
    np.add.at(buf, idx, a.value)
    out = Tensor._wrap(buf, tape)
    if tape is not None:
        def grad_fn():
            if out.grad is None:
                return
            _accumulate(a, out.grad[idx])
        tape._record(grad_fn)
    return out


def concat_cols(a: Tensor, b: Tensor) -> Tensor:
    if a.value.shape[0] != b.value.shape[0]:
        raise ShapeError("concat operands must have equal row counts")
    tape = _result_tape(a, b)
    out = Tensor._wrap(np.hstack([a.value, b.value]), tape)
    if tape is not None:
        split = a.value.shape[1]
        def grad_fn():
            if out.grad is None:
                return
            _accumulate(a, out.grad[:, :split])
            _accumulate(b, out.grad[:, split:])
        tape._record(grad_fn)
    return out


def glorot_uniform(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Uniform init in +-sqrt(6/(fan_in+fan_out)) for a rows x cols matrix."""
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))
