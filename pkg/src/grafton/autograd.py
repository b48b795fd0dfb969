"""Reverse-mode automatic differentiation over dense numpy arrays.

Operations record their inputs on a tape as they execute; ``Tensor.backward()``
replays the tape once in reverse topological order. Gradients accumulate into
``.grad`` until explicitly cleared, so repeated backward passes add up (the
optimizer owns zeroing).

Arrays default to double precision; ``set_default_dtype("single")`` switches
new tensors to float32 for faster training runs.
"""

from __future__ import annotations

import contextlib
import math

import numpy as np

from .errors import ContractError, DimensionError

_DTYPES = {"double": np.float64, "single": np.float32}
_default_dtype = np.float64
_grad_enabled = True


def set_default_dtype(name: str) -> None:
    global _default_dtype
    if name not in _DTYPES:
        raise ContractError(f"unknown precision {name!r}; choose from {sorted(_DTYPES)}")
    _default_dtype = _DTYPES[name]


def default_dtype() -> np.dtype:
    return np.dtype(_default_dtype)


@contextlib.contextmanager
def no_grad():
    """Suspend tape recording, e.g. for evaluation passes."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Tensor:
    """Dense row-major value, optionally wired into the differentiation tape."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=_default_dtype)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data.reshape(()))

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        """Populate ``.grad`` along the tape by reverse accumulation."""
        if self.data.size != 1:
            raise ContractError(f"backward() expects a scalar loss, got shape {self.shape}")
        tape = _toposort(self)
        pending: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        for node in reversed(tape):
            out_g = pending.pop(id(node), None)
            if out_g is None:
                continue
            if node.grad is None:
                node.grad = np.zeros_like(node.data)
            node.grad += out_g
            if node._backward is None:
                continue
            for parent, g in zip(node._parents, node._backward(out_g)):
                if g is None or not parent.requires_grad:
                    continue
                got = pending.get(id(parent))
                pending[id(parent)] = g if got is None else got + g

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


class Parameter(Tensor):
    """Trainable tensor with a model-unique name."""

    __slots__ = ("name",)

    def __init__(self, name: str, data):
        super().__init__(data, requires_grad=True)
        self.name = name

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.shape})"


def xavier_uniform(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    """Symmetric uniform init scaled by the two axis sizes of a 2-D weight."""
    if len(shape) != 2:
        raise ContractError(f"xavier init expects a 2-D shape, got {shape}")
    limit = math.sqrt(6.0 / (shape[0] + shape[1]))
    return rng.uniform(-limit, limit, size=shape).astype(_default_dtype)


def _toposort(root: Tensor) -> list[Tensor]:
    out: list[Tensor] = []
    seen = {id(root)}
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, ready = stack.pop()
        if ready:
            out.append(node)
            continue
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                seen.add(id(p))
                stack.append((p, False))
    return out


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _record(data: np.ndarray, parents: tuple[Tensor, ...], backward) -> Tensor:
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def matmul(a, b) -> Tensor:
    """2-D matrix product; adjoints are g·bᵀ and aᵀ·g."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul shapes do not compose: {a.shape} @ {b.shape}")

    def backward(g):
        return g @ b.data.T, a.data.T @ g

    return _record(a.data @ b.data, (a, b), backward)


def transpose(x) -> Tensor:
    x = _as_tensor(x)
    if x.data.ndim != 2:
        raise DimensionError(f"transpose expects 2-D, got {x.shape}")

    def backward(g):
        return (g.T,)

    return _record(x.data.T, (x,), backward)


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        data = a.data + b.data
    except ValueError as exc:
        raise DimensionError(f"add cannot broadcast {a.shape} with {b.shape}") from exc

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _record(data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        data = a.data * b.data
    except ValueError as exc:
        raise DimensionError(f"mul cannot broadcast {a.shape} with {b.shape}") from exc

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _record(data, (a, b), backward)


def relu(x) -> Tensor:
    x = _as_tensor(x)
    mask = x.data > 0

    def backward(g):
        return (g * mask,)

    return _record(np.where(mask, x.data, 0.0), (x,), backward)


def reshape(x, shape) -> Tensor:
    x = _as_tensor(x)
    old = x.shape

    def backward(g):
        return (g.reshape(old),)

    return _record(x.data.reshape(shape), (x,), backward)


def concat_last(parts) -> Tensor:
    """Concatenate 2-D blocks along the last axis."""
    ts = [_as_tensor(p) for p in parts]
    rows = {t.shape[0] for t in ts}
    if not ts or any(t.data.ndim != 2 for t in ts) or len(rows) != 1:
        raise DimensionError(f"concat_last expects 2-D blocks with equal row counts, got {[t.shape for t in ts]}")
    widths = [t.shape[1] for t in ts]
    offsets = np.cumsum([0] + widths)

    def backward(g):
        return tuple(g[:, offsets[i]:offsets[i + 1]] for i in range(len(ts)))

    return _record(np.concatenate([t.data for t in ts], axis=1), tuple(ts), backward)


def concat_rows(parts) -> Tensor:
    """Stack 2-D blocks along the row axis."""
    ts = [_as_tensor(p) for p in parts]
    cols = {t.shape[1] for t in ts if t.data.ndim == 2}
    if not ts or any(t.data.ndim != 2 for t in ts) or len(cols) != 1:
        raise DimensionError(f"concat_rows expects 2-D blocks with equal widths, got {[t.shape for t in ts]}")
    heights = [t.shape[0] for t in ts]
    offsets = np.cumsum([0] + heights)

    def backward(g):
        return tuple(g[offsets[i]:offsets[i + 1]] for i in range(len(ts)))

    return _record(np.concatenate([t.data for t in ts], axis=0), tuple(ts), backward)


def sum_rows(x) -> Tensor:
    """Column-wise sum of a 2-D tensor, i.e. the sum over all rows."""
    x = _as_tensor(x)
    if x.data.ndim != 2:
        raise DimensionError(f"sum_rows expects 2-D, got {x.shape}")
    n = x.shape[0]

    def backward(g):
        return (np.broadcast_to(g, (n,) + g.shape),)

    return _record(x.data.sum(axis=0), (x,), backward)


def sum_all(x) -> Tensor:
    x = _as_tensor(x)

    def backward(g):
        return (np.broadcast_to(g, x.shape),)

    return _record(np.asarray(x.data.sum()), (x,), backward)


def gather_rows(x, indices) -> Tensor:
    """Select rows by integer index; backward scatter-adds."""
    x = _as_tensor(x)
    idx = np.asarray(indices, dtype=np.int64)
    if x.data.ndim != 2:
        raise DimensionError(f"gather_rows expects 2-D, got {x.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= x.shape[0]):
        raise ContractError(f"gather index out of range for {x.shape[0]} rows")

    def backward(g):
        gx = np.zeros_like(x.data)
        np.add.at(gx, idx, g)
        return (gx,)

    return _record(x.data[idx], (x,), backward)


def rowwise_dot(a, b) -> Tensor:
    """Per-row inner product of two equally shaped 2-D tensors."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape != b.shape or a.data.ndim != 2:
        raise DimensionError(f"rowwise_dot expects matching 2-D shapes, got {a.shape} and {b.shape}")

    def backward(g):
        col = g[:, None]
        return col * b.data, col * a.data

    return _record((a.data * b.data).sum(axis=1), (a, b), backward)


def softmax_rows(x) -> Tensor:
    """Row-stabilized softmax of a 2-D tensor; each output row sums to 1."""
    x = _as_tensor(x)
    if x.data.ndim != 2:
        raise DimensionError(f"softmax_rows expects 2-D, got {x.shape}")
    if np.isnan(x.data).any():
        raise FloatingPointError("softmax input contains NaN")
    z = np.exp(x.data - x.data.max(axis=1, keepdims=True))
    y = z / z.sum(axis=1, keepdims=True)

    def backward(g):
        return (y * (g - (g * y).sum(axis=1, keepdims=True)),)

    return _record(y, (x,), backward)


def segment_softmax(scores, seg_starts, seg_ids) -> Tensor:
    """Softmax over contiguous segments of a 1-D score vector.

    ``seg_starts`` holds the first offset of each segment (all non-empty),
    ``seg_ids`` maps every entry back to its segment.
    """
    scores = _as_tensor(scores)
    if scores.data.ndim != 1:
        raise DimensionError(f"segment_softmax expects 1-D scores, got {scores.shape}")
    if np.isnan(scores.data).any():
        raise FloatingPointError("segment softmax input contains NaN")
    starts = np.asarray(seg_starts, dtype=np.int64)
    ids = np.asarray(seg_ids, dtype=np.int64)
    peak = np.maximum.reduceat(scores.data, starts)
    z = np.exp(scores.data - peak[ids])
    denom = np.add.reduceat(z, starts)
    y = z / denom[ids]

    def backward(g):
        dot = np.add.reduceat(g * y, starts)
        return (y * (g - dot[ids]),)

    return _record(y, (scores,), backward)


def segment_weighted_rowsum(weights, rows, seg_starts, seg_ids) -> Tensor:
    """Per-segment sum of ``weights[e] * rows[e]``; one output row per segment."""
    weights, rows = _as_tensor(weights), _as_tensor(rows)
    if weights.data.ndim != 1 or rows.data.ndim != 2 or weights.shape[0] != rows.shape[0]:
        raise DimensionError(
            f"segment_weighted_rowsum expects 1-D weights matching 2-D rows, got {weights.shape} and {rows.shape}"
        )
    starts = np.asarray(seg_starts, dtype=np.int64)
    ids = np.asarray(seg_ids, dtype=np.int64)
    out = np.add.reduceat(weights.data[:, None] * rows.data, starts, axis=0)

    def backward(g):
        gseg = g[ids]
        return (gseg * rows.data).sum(axis=1), weights.data[:, None] * gseg

    return _record(out, (weights, rows), backward)


def layer_norm(x, gamma, beta, eps: float = 1e-5) -> Tensor:
    """Standardize each row (population variance) then apply affine gamma/beta."""
    x, gamma, beta = _as_tensor(x), _as_tensor(gamma), _as_tensor(beta)
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = centered * inv_std

    def backward(g):
        d_gamma = _unbroadcast(g * x_hat, gamma.shape)
        d_beta = _unbroadcast(g, beta.shape)
        d_hat = g * gamma.data
        m1 = d_hat.mean(axis=-1, keepdims=True)
        m2 = (d_hat * x_hat).mean(axis=-1, keepdims=True)
        return inv_std * (d_hat - m1 - x_hat * m2), d_gamma, d_beta

    return _record(x_hat * gamma.data + beta.data, (x, gamma, beta), backward)


def cross_entropy_with_logits(logits, labels) -> Tensor:
    """Mean negative log-likelihood with a fused, stabilized log-softmax."""
    logits = _as_tensor(logits)
    y = np.asarray(labels, dtype=np.int64)
    if logits.data.ndim != 2 or y.ndim != 1 or y.shape[0] != logits.shape[0]:
        raise DimensionError(f"cross entropy expects [batch, classes] logits and [batch] labels, got {logits.shape} and {y.shape}")
    n, c = logits.shape
    if y.size == 0:
        raise ContractError("cross entropy needs at least one example")
    if y.min() < 0 or y.max() >= c:
        raise ContractError(f"label out of range for {c} classes")
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    ez = np.exp(z)
    total = ez.sum(axis=1)
    probs = ez / total[:, None]
    nll = np.log(total) - z[np.arange(n), y]

    def backward(g):
        d = probs.copy()
        d[np.arange(n), y] -= 1.0
        return (d * (g / n),)

    return _record(np.asarray(nll.mean()), (logits,), backward)
