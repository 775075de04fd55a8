"""Reverse-mode automatic differentiation on dense float64 arrays.

A :class:`Tape` records every op applied to tensors that require gradients;
records are appended in execution order, which is already a topological
order, and the backward pass walks them once in reverse.  Backward rules are
themselves written in terms of tensor ops, so calling
``tape.gradients(..., create_graph=True)`` records the backward computation
and makes gradients-of-gradients available (used by the second-order mode of
the meta-learning loop).

Everything is float64 and single-threaded-deterministic: identical inputs
give bit-identical forward and backward results.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

from ..errors import AutodiffError, DimensionError

# Stack of recording targets: a Tape, or None meaning "suppress recording".
_TAPE_STACK: list["Tape | None"] = []


def _active_tape():
    return _TAPE_STACK[-1] if _TAPE_STACK else None


@contextmanager
def _push(tape):
    _TAPE_STACK.append(tape)
    try:
        yield
    finally:
        _TAPE_STACK.pop()


@contextmanager
def no_grad():
    """Suppress recording inside the block (forward values only)."""
    with _push(None):
        yield


class Tensor:
    """A dense float64 array plus its position in the recording graph."""

    __slots__ = ("data", "requires_grad", "grad", "_tape", "_rec_index")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self._tape: Tape | None = None
        self._rec_index: int = -1

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    # arithmetic sugar; wraps scalars/arrays as constant tensors
    def __add__(self, other):
        return add(self, _as_tensor(other))

    def __radd__(self, other):
        return add(_as_tensor(other), self)

    def __sub__(self, other):
        return sub(self, _as_tensor(other))

    def __rsub__(self, other):
        return sub(_as_tensor(other), self)

    def __mul__(self, other):
        return mul(self, _as_tensor(other))

    def __rmul__(self, other):
        return mul(_as_tensor(other), self)

    def __truediv__(self, other):
        return div(self, _as_tensor(other))

    def __rtruediv__(self, other):
        return div(_as_tensor(other), self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, _as_tensor(other))

    def __pow__(self, p):
        return power(self, p)

    def __getitem__(self, idx):
        return take(self, idx)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        return transpose(self, axes or None)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


class _Record:
    __slots__ = ("inputs", "output", "backward", "name")

    def __init__(self, inputs, output, backward, name):
        self.inputs = inputs
        self.output = output
        self.backward = backward
        self.name = name


class Tape:
    """Ordered op records; append order is a topological order of the graph."""

    def __init__(self):
        self.records: list[_Record] = []
        self._backward_done = False

    def __enter__(self):
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _TAPE_STACK.pop()
        return False

    def __len__(self):
        return len(self.records)

    def _append(self, rec: _Record):
        rec.output._tape = self
        rec.output._rec_index = len(self.records)
        self.records.append(rec)

    def gradients(self, loss: Tensor, sources, create_graph: bool = False) -> list[Tensor]:
        """Gradients of a scalar loss for each source tensor.

        Functional: does not touch ``.grad``.  With ``create_graph`` the
        backward ops are recorded on this tape so the result is itself
        differentiable.  Unreached sources get zero gradients.
        """
        grads = self._walk(loss, create_graph)
        out = []
        for s in sources:
            g = grads.get(id(s))
            if g is None:
                g = Tensor(np.zeros_like(s.data))
            out.append(g)
        return out

    def backward(self, loss: Tensor):
        """Accumulate ``.grad`` on every requires-grad tensor reachable from loss.

        May be called once per tape; rerunning without a fresh tape raises,
        so gradients are never silently double-accumulated.
        """
        if self._backward_done:
            raise AutodiffError(
                "backward already ran on this tape; build a new tape to recompute"
            )
        grads = self._walk(loss, create_graph=False)
        self._backward_done = True
        for rec in self.records:
            for t in rec.inputs:
                g = grads.get(id(t))
                if g is not None and t.requires_grad:
                    t.grad = g.data if t.grad is None else t.grad + g.data
                    grads.pop(id(t))
        g = grads.get(id(loss))
        if g is not None and loss.requires_grad:
            loss.grad = g.data

    def _walk(self, loss: Tensor, create_graph: bool) -> dict[int, Tensor]:
        if not isinstance(loss, Tensor):
            raise AutodiffError("loss must be a Tensor")
        if loss.data.ndim != 0:
            raise AutodiffError(f"loss must be scalar, got shape {loss.shape}")
        if loss._tape is not None and loss._tape is not self:
            raise AutodiffError("loss was recorded on a different tape (detached graph)")
        grads: dict[int, Tensor] = {id(loss): Tensor(np.asarray(1.0))}
        start = loss._rec_index
        if start < 0:  # loss is a leaf; nothing to walk
            return grads
        target = self if create_graph else None
        with _push(target):
            for i in range(start, -1, -1):
                rec = self.records[i]
                g = grads.pop(id(rec.output), None)
                if g is None:
                    continue
                parts = rec.backward(g, *rec.inputs)
                if not isinstance(parts, tuple):
                    parts = (parts,)
                for inp, part in zip(rec.inputs, parts):
                    if part is None or not inp.requires_grad:
                        continue
                    prior = grads.get(id(inp))
                    grads[id(inp)] = part if prior is None else add(prior, part)
        return grads


def backward(loss: Tensor):
    """Convenience wrapper: run ``backward`` on the tape that recorded loss."""
    if loss._tape is None:
        raise AutodiffError("loss is not attached to any tape")
    loss._tape.backward(loss)


def _apply(name, inputs, out_data, backward_rule) -> Tensor:
    tape = _active_tape()
    track = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor(out_data, requires_grad=track)
    if track:
        tape._append(_Record(tuple(inputs), out, backward_rule, name))
    return out


# ---------------------------------------------------------------------------
# shape plumbing
# ---------------------------------------------------------------------------


def _unbroadcast(g: Tensor, shape: tuple) -> Tensor:
    """Reduce a broadcast gradient back to ``shape`` by summing."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = tsum(g, axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = tsum(g, axis=axes, keepdims=True)
    if g.shape != shape:
        raise DimensionError(f"cannot reduce gradient {g.shape} to {shape}")
    return g


def reshape(a: Tensor, shape) -> Tensor:
    a = _as_tensor(a)
    shape = tuple(shape)
    old = a.shape

    def bw(g, a_in):
        return (reshape(g, old),)

    return _apply("reshape", [a], a.data.reshape(shape), bw)


def transpose(a: Tensor, axes=None) -> Tensor:
    a = _as_tensor(a)
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))

    def bw(g, a_in):
        return (transpose(g, inverse),)

    return _apply("transpose", [a], np.transpose(a.data, axes), bw)


def broadcast_to(a: Tensor, shape) -> Tensor:
    a = _as_tensor(a)
    shape = tuple(shape)
    old = a.shape

    def bw(g, a_in):
        return (_unbroadcast(g, old),)

    return _apply("broadcast_to", [a], np.broadcast_to(a.data, shape).copy(), bw)


def tsum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    a = _as_tensor(a)
    if isinstance(axis, int):
        axis = (axis,)
    in_shape = a.shape

    def bw(g, a_in):
        if axis is None:
            expand = reshape(g, (1,) * len(in_shape)) if in_shape else g
            return (broadcast_to(expand, in_shape),)
        if not keepdims:
            kd = list(in_shape)
            for ax in axis:
                kd[ax % len(in_shape)] = 1
            g = reshape(g, tuple(kd))
        return (broadcast_to(g, in_shape),)

    return _apply("sum", [a], np.sum(a.data, axis=axis, keepdims=keepdims), bw)


def tmean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    a = _as_tensor(a)
    if axis is None:
        count = a.size
    else:
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        count = int(np.prod([a.shape[ax] for ax in axes]))
    return tsum(a, axis=axis, keepdims=keepdims) * (1.0 / count)


# ---------------------------------------------------------------------------
# arithmetic primitives
# ---------------------------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)

    def bw(g, a_in, b_in):
        return (_unbroadcast(g, a_in.shape), _unbroadcast(g, b_in.shape))

    return _apply("add", [a, b], a.data + b.data, bw)


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)

    def bw(g, a_in, b_in):
        return (_unbroadcast(g, a_in.shape), _unbroadcast(neg(g), b_in.shape))

    return _apply("sub", [a, b], a.data - b.data, bw)


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)

    def bw(g, a_in, b_in):
        return (_unbroadcast(mul(g, b_in), a_in.shape),
                _unbroadcast(mul(g, a_in), b_in.shape))

    return _apply("mul", [a, b], a.data * b.data, bw)


def div(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)

    def bw(g, a_in, b_in):
        ga = div(g, b_in)
        gb = neg(div(mul(g, a_in), mul(b_in, b_in)))
        return (_unbroadcast(ga, a_in.shape), _unbroadcast(gb, b_in.shape))

    return _apply("div", [a, b], a.data / b.data, bw)


def neg(a) -> Tensor:
    a = _as_tensor(a)

    def bw(g, a_in):
        return (neg(g),)

    return _apply("neg", [a], -a.data, bw)


def power(a, p: float) -> Tensor:
    """Elementwise a**p with a constant (non-differentiated) exponent."""
    a = _as_tensor(a)
    p = float(p)

    def bw(g, a_in):
        return (mul(g, mul(power(a_in, p - 1.0), p)),)

    return _apply("power", [a], a.data**p, bw)


def texp(a) -> Tensor:
    a = _as_tensor(a)
    out_data = np.exp(a.data)

    def bw(g, a_in):
        return (mul(g, texp(a_in)),)

    return _apply("exp", [a], out_data, bw)


def tlog(a) -> Tensor:
    a = _as_tensor(a)

    def bw(g, a_in):
        return (div(g, a_in),)

    return _apply("log", [a], np.log(a.data), bw)


def tsqrt(a) -> Tensor:
    return power(a, 0.5)


def tsin(a) -> Tensor:
    a = _as_tensor(a)

    def bw(g, a_in):
        return (mul(g, tcos(a_in)),)

    return _apply("sin", [a], np.sin(a.data), bw)


def tcos(a) -> Tensor:
    a = _as_tensor(a)

    def bw(g, a_in):
        return (neg(mul(g, tsin(a_in))),)

    return _apply("cos", [a], np.cos(a.data), bw)


def tanh(a) -> Tensor:
    a = _as_tensor(a)

    def bw(g, a_in):
        y = tanh(a_in)
        return (mul(g, sub(1.0, mul(y, y))),)

    return _apply("tanh", [a], np.tanh(a.data), bw)


def relu(a) -> Tensor:
    a = _as_tensor(a)
    mask = (a.data > 0).astype(np.float64)

    def bw(g, a_in):
        return (mul(g, Tensor(mask)),)

    return _apply("relu", [a], a.data * mask, bw)


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError(
            f"matmul needs ndim >= 2 operands, got {a.shape} @ {b.shape}"
        )
    try:
        out_data = np.matmul(a.data, b.data)
    except ValueError as err:
        raise DimensionError(f"matmul shape mismatch {a.shape} @ {b.shape}") from err

    def bw(g, a_in, b_in):
        ga = matmul(g, _swap_last(b_in))
        gb = matmul(_swap_last(a_in), g)
        return (_unbroadcast(ga, a_in.shape), _unbroadcast(gb, b_in.shape))

    return _apply("matmul", [a, b], out_data, bw)


def _swap_last(a: Tensor) -> Tensor:
    axes = list(range(a.ndim))
    axes[-1], axes[-2] = axes[-2], axes[-1]
    return transpose(a, axes)


# ---------------------------------------------------------------------------
# indexing and gathering
# ---------------------------------------------------------------------------


def take(a: Tensor, idx) -> Tensor:
    """Basic slicing/indexing; the adjoint scatters into zeros."""
    a = _as_tensor(a)
    in_shape = a.shape

    def bw(g, a_in):
        return (scatter(g, idx, in_shape),)

    return _apply("take", [a], a.data[idx].copy(), bw)


def scatter(g: Tensor, idx, shape) -> Tensor:
    """Adjoint of :func:`take`: place g into a zero array at idx."""
    g = _as_tensor(g)

    def bw(gg, g_in):
        return (take(gg, idx),)

    out = np.zeros(shape, dtype=np.float64)
    np.add.at(out, idx, g.data)
    return _apply("scatter", [g], out, bw)


def gather_rows(table: Tensor, ids: np.ndarray) -> Tensor:
    """Embedding lookup: rows of ``table`` selected by an integer array."""
    table = _as_tensor(table)
    ids = np.asarray(ids)
    if not np.issubdtype(ids.dtype, np.integer):
        raise DimensionError("gather_rows needs integer ids")
    n_rows = table.shape[0]

    def bw(g, table_in):
        return (scatter_rows(g, ids, n_rows),)

    return _apply("gather_rows", [table], table.data[ids], bw)


def scatter_rows(g: Tensor, ids: np.ndarray, n_rows: int) -> Tensor:
    """Adjoint of :func:`gather_rows`: sum g rows into an n_rows table."""
    g = _as_tensor(g)
    out = np.zeros((n_rows,) + g.shape[ids.ndim:], dtype=np.float64)
    np.add.at(out, ids.reshape(-1), g.data.reshape((-1,) + g.shape[ids.ndim:]))

    def bw(gg, g_in):
        return (gather_rows(gg, ids),)

    return _apply("scatter_rows", [g], out, bw)


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = [_as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]

    def bw(g, *ins):
        parts = []
        start = 0
        for t, size in zip(ins, sizes):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(start, start + size)
            parts.append(take(g, tuple(sl)))
            start += size
        return tuple(parts)

    return _apply("concat", tensors, np.concatenate([t.data for t in tensors], axis=axis), bw)


# ---------------------------------------------------------------------------
# composite neural-net ops (differentiable to any order for free)
# ---------------------------------------------------------------------------


def max_detached(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    """Constant tensor holding max(a); used as a stabilizing shift."""
    return Tensor(np.max(_as_tensor(a).data, axis=axis, keepdims=keepdims))


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    """Numerically stable softmax; the constant shift does not bias gradients
    because softmax is invariant to additive constants along ``axis``."""
    a = _as_tensor(a)
    z = sub(a, max_detached(a, axis=axis, keepdims=True))
    e = texp(z)
    return div(e, tsum(e, axis=axis, keepdims=True))


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then scale-shift."""
    m = tmean(x, axis=-1, keepdims=True)
    centered = sub(x, m)
    var = tmean(mul(centered, centered), axis=-1, keepdims=True)
    inv = power(add(var, eps), -0.5)
    return add(mul(mul(centered, inv), gain), bias)


_GELU_C = float(np.sqrt(2.0 / np.pi))


def gelu(x: Tensor) -> Tensor:
    """tanh-approximation GELU."""
    x = _as_tensor(x)
    inner = mul(_GELU_C, add(x, mul(0.044715, power(x, 3.0))))
    return mul(mul(0.5, x), add(1.0, tanh(inner)))
