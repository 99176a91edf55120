"""Dense float64 matrices with a replayable reverse-mode gradient tape.

Everything the models need is built from a small set of primitives, each with
an explicit hand-written backward rule. An op takes the tape as its first
argument; passing ``tape=None`` runs forward-only (evaluation mode). The tape
records one closure per op, and ``GradTape.backward`` replays them in exact
reverse order, accumulating into ``Tensor.grad``.

All tensors are 2-D (row vectors are 1 x n). There is no general broadcasting:
the only mixed-shape ops are ``add_bias`` (1 x w bias over B x w rows) and
``scale_rows`` (B x 1 scales over B x d rows), which is all the models use.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import ShapeError


class Tensor:
    """A 2-D float64 array plus an optional gradient of the same shape."""

    __slots__ = ("data", "grad")

    def __init__(self, data) -> None:
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise ShapeError(f"tensors are 2-D; got shape {arr.shape}")
        self.data = arr
        self.grad: np.ndarray | None = None

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "Tensor":
        return cls(np.zeros((rows, cols)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape  # type: ignore[return-value]

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate_grad(self, g: np.ndarray) -> None:
        # First contribution copies: g may be a view into another grad buffer.
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64)
        else:
            self.grad += g

    def copy(self) -> "Tensor":
        return Tensor(self.data.copy())

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape})"


class GradTape:
    """Ordered record of backward closures for one forward pass."""

    __slots__ = ("_steps",)

    def __init__(self) -> None:
        self._steps: list[Callable[[], None]] = []

    def record(self, step: Callable[[], None]) -> None:
        self._steps.append(step)

    def __len__(self) -> int:
        return len(self._steps)

    def backward(self, loss: Tensor) -> None:
        """Seed d(loss)/d(loss) = 1 and replay all steps in reverse order."""
        if loss.shape != (1, 1):
            raise ShapeError(f"backward needs a 1x1 loss; got {loss.shape}")
        loss.accumulate_grad(np.ones((1, 1)))
        for step in reversed(self._steps):
            step()


def _record(tape: GradTape | None, step: Callable[[], None]) -> None:
    if tape is not None:
        tape.record(step)


def matmul(tape: GradTape | None, a: Tensor, b: Tensor) -> Tensor:
    """Matrix product a @ b."""
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dims disagree: {a.shape} @ {b.shape}")
    out = Tensor(a.data @ b.data)

    def back() -> None:
        g = out.grad
        if g is None:
            return
        a.accumulate_grad(g @ b.data.T)
        b.accumulate_grad(a.data.T @ g)

    _record(tape, back)
    return out


def add(tape: GradTape | None, a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum of two same-shape tensors."""
    if a.shape != b.shape:
        raise ShapeError(f"add: shapes disagree: {a.shape} + {b.shape}")
    out = Tensor(a.data + b.data)

    def back() -> None:
        g = out.grad
        if g is None:
            return
        a.accumulate_grad(g)
        b.accumulate_grad(g)

    _record(tape, back)
    return out


def add_bias(tape: GradTape | None, x: Tensor, bias: Tensor) -> Tensor:
    """Add a 1 x w bias row to every row of a B x w tensor."""
    if bias.shape[0] != 1 or bias.shape[1] != x.shape[1]:
        raise ShapeError(f"add_bias: bias {bias.shape} does not fit {x.shape}")
    out = Tensor(x.data + bias.data)

    def back() -> None:
        g = out.grad
        if g is None:
            return
        x.accumulate_grad(g)
        bias.accumulate_grad(g.sum(axis=0, keepdims=True))

    _record(tape, back)
    return out


def relu(tape: GradTape | None, x: Tensor) -> Tensor:
    """max(x, 0); gradient passes only where x > 0."""
    mask = x.data > 0.0
    out = Tensor(np.where(mask, x.data, 0.0))

    def back() -> None:
        g = out.grad
        if g is None:
            return
        x.accumulate_grad(g * mask)

    _record(tape, back)
    return out


def sigmoid(tape: GradTape | None, x: Tensor) -> Tensor:
    """Logistic function, computed without overflow for large |x|."""
    e = np.exp(-np.abs(x.data))
    out_data = np.where(x.data >= 0.0, 1.0 / (1.0 + e), e / (1.0 + e))
    out = Tensor(out_data)

    def back() -> None:
        g = out.grad
        if g is None:
            return
        x.accumulate_grad(g * out.data * (1.0 - out.data))

    _record(tape, back)
    return out


def elementwise_mul(tape: GradTape | None, a: Tensor, b: Tensor) -> Tensor:
    """Hadamard product of two same-shape tensors."""
    if a.shape != b.shape:
        raise ShapeError(f"elementwise_mul: shapes disagree: {a.shape} * {b.shape}")
    out = Tensor(a.data * b.data)

    def back() -> None:
        g = out.grad
        if g is None:
            return
        a.accumulate_grad(g * b.data)
        b.accumulate_grad(g * a.data)

    _record(tape, back)
    return out


def scale_rows(tape: GradTape | None, scales: Tensor, x: Tensor) -> Tensor:
    """Multiply row i of a B x d tensor by the scalar scales[i, 0]."""
    if scales.shape != (x.shape[0], 1):
        raise ShapeError(
            f"scale_rows: scales {scales.shape} do not fit rows of {x.shape}"
        )
    out = Tensor(scales.data * x.data)

    def back() -> None:
        g = out.grad
        if g is None:
            return
        scales.accumulate_grad((g * x.data).sum(axis=1, keepdims=True))
        x.accumulate_grad(scales.data * g)

    _record(tape, back)
    return out


def concat_cols(tape: GradTape | None, parts: Sequence[Tensor]) -> Tensor:
    """Stack tensors side by side; all parts must share the row count."""
    if not parts:
        raise ShapeError("concat_cols: empty part list")
    if len(parts) == 1:
        return parts[0]
    rows = parts[0].shape[0]
    for p in parts:
        if p.shape[0] != rows:
            raise ShapeError(
                f"concat_cols: row counts disagree: {[p.shape for p in parts]}"
            )
    out = Tensor(np.concatenate([p.data for p in parts], axis=1))
    offsets = np.cumsum([0] + [p.shape[1] for p in parts])

    def back() -> None:
        g = out.grad
        if g is None:
            return
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            p.accumulate_grad(g[:, lo:hi])

    _record(tape, back)
    return out


def concat_rows(tape: GradTape | None, parts: Sequence[Tensor]) -> Tensor:
    """Stack tensors vertically; all parts must share the column count."""
    if not parts:
        raise ShapeError("concat_rows: empty part list")
    if len(parts) == 1:
        return parts[0]
    cols = parts[0].shape[1]
    for p in parts:
        if p.shape[1] != cols:
            raise ShapeError(
                f"concat_rows: column counts disagree: {[p.shape for p in parts]}"
            )
    out = Tensor(np.concatenate([p.data for p in parts], axis=0))
    offsets = np.cumsum([0] + [p.shape[0] for p in parts])

    def back() -> None:
        g = out.grad
        if g is None:
            return
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            p.accumulate_grad(g[lo:hi, :])

    _record(tape, back)
    return out


def reshape(tape: GradTape | None, x: Tensor, rows: int, cols: int) -> Tensor:
    """Row-major reshape; element count must be preserved."""
    if rows * cols != x.shape[0] * x.shape[1]:
        raise ShapeError(f"reshape: {x.shape} cannot become ({rows}, {cols})")
    out = Tensor(x.data.reshape(rows, cols))

    def back() -> None:
        g = out.grad
        if g is None:
            return
        x.accumulate_grad(g.reshape(x.shape))

    _record(tape, back)
    return out


def flatten(tape: GradTape | None, x: Tensor) -> Tensor:
    """Row-major flatten to a single 1 x (rows*cols) row."""
    return reshape(tape, x, 1, x.shape[0] * x.shape[1])


def slice_cols(tape: GradTape | None, x: Tensor, start: int, stop: int) -> Tensor:
    """Columns [start, stop) of x."""
    if not (0 <= start < stop <= x.shape[1]):
        raise ShapeError(f"slice_cols: [{start}, {stop}) out of range for {x.shape}")
    out = Tensor(x.data[:, start:stop])

    def back() -> None:
        g = out.grad
        if g is None:
            return
        if x.grad is None:
            x.grad = np.zeros_like(x.data)
        x.grad[:, start:stop] += g

    _record(tape, back)
    return out


def gather_rows(tape: GradTape | None, table: Tensor, indices) -> Tensor:
    """Select rows of a table by index; duplicates allowed.

    Backward scatter-adds into the table, so gradients of rows gathered more
    than once accumulate. Out-of-range indices are a hard error.
    """
    idx = np.asarray(indices, dtype=np.intp)
    if idx.ndim != 1:
        raise ShapeError(f"gather_rows: indices must be 1-D; got shape {idx.shape}")
    n = table.shape[0]
    if idx.size:
        lo, hi = int(idx.min()), int(idx.max())
        if lo < 0 or hi >= n:
            bad = lo if lo < 0 else hi
            raise ShapeError(f"gather_rows: index {bad} out of range for table of {n} rows")
    out = Tensor(table.data[idx])

    def back() -> None:
        g = out.grad
        if g is None:
            return
        if table.grad is None:
            table.grad = np.zeros_like(table.data)
        np.add.at(table.grad, idx, g)

    _record(tape, back)
    return out


def clamp(tape: GradTape | None, x: Tensor, lo: float, hi: float) -> Tensor:
    """Clip into [lo, hi]; gradient passes only strictly inside the interval."""
    if not lo < hi:
        raise ShapeError(f"clamp: empty interval [{lo}, {hi}]")
    out = Tensor(np.clip(x.data, lo, hi))
    inside = (x.data > lo) & (x.data < hi)

    def back() -> None:
        g = out.grad
        if g is None:
            return
        x.accumulate_grad(g * inside)

    _record(tape, back)
    return out


def bce_mean(tape: GradTape | None, probs: Tensor, labels: np.ndarray) -> Tensor:
    """Mean binary cross-entropy of a B x 1 probability column vs 0/1 labels.

    The closed-form backward is d/dp_i = (p_i - y_i) / (p_i (1 - p_i) B);
    callers must clamp probs away from {0, 1} first.
    """
    y = np.asarray(labels, dtype=np.float64).reshape(-1, 1)
    if probs.shape != y.shape or probs.shape[1] != 1:
        raise ShapeError(f"bce_mean: probs {probs.shape} vs labels {y.shape}")
    p = probs.data
    n = p.shape[0]
    value = -np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))
    out = Tensor([[value]])

    def back() -> None:
        g = out.grad
        if g is None:
            return
        probs.accumulate_grad(g[0, 0] * (p - y) / (p * (1.0 - p) * n))

    _record(tape, back)
    return out
