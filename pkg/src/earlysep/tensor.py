"""Dense float64 tensors with reverse-mode automatic differentiation.

A deliberately small engine: every operation records its parent tensors and
a closure that routes the upstream gradient back to them. ``backward()``
walks the recorded graph in reverse topological order, accumulates into the
``grad`` slots, and then releases the graph so a stale second pass fails
loudly instead of silently reusing freed state.

All data is float64 and every operation checks its output for NaN/Inf, so a
diverging computation surfaces at the op that produced it.
"""

from __future__ import annotations

import threading

import numpy as np

__all__ = [
    "Tensor",
    "NumericsError",
    "GraphReleasedError",
    "no_grad",
    "stack",
    "slice_axis",
]


class NumericsError(RuntimeError):
    """A computation produced non-finite (NaN/Inf) values."""


class GraphReleasedError(RuntimeError):
    """backward() was called on a graph that has already been consumed."""


# Recording state is per-thread so concurrent model instances (e.g. parallel
# sweep cells) cannot switch each other's graphs off.
_state = threading.local()


def _recording() -> bool:
    return getattr(_state, "grad_enabled", True)


class no_grad:
    """Context manager that disables graph recording (for eval-mode forwards)."""

    def __enter__(self):
        self._prev = _recording()
        _state.grad_enabled = False
        return self

    def __exit__(self, *exc):
        _state.grad_enabled = self._prev
        return False


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce ``grad`` back to ``shape`` by summing over broadcast axes."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _accum(t: "Tensor", g: np.ndarray) -> None:
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _node(data, parents, backward_fn, op: str) -> "Tensor":
    """Wrap an op result, recording the graph edge when recording is active."""
    data = np.asarray(data, dtype=np.float64)
    if not np.all(np.isfinite(data)):
        raise NumericsError(f"{op} produced non-finite values")
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.name = None
    out._released = False
    if _recording() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward_fn = backward_fn
    else:
        out.requires_grad = False
        out._parents = ()
        out._backward_fn = None
    return out


def _lift(value) -> "Tensor":
    return value if isinstance(value, Tensor) else Tensor(value)


class Tensor:
    """A dense float64 array with an optional gradient slot.

    ``data`` is always an owned, finite numpy array; ``grad`` matches its
    shape once a backward pass has touched the tensor.
    """

    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward_fn", "_released")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.array(data, dtype=np.float64)
        if not np.all(np.isfinite(self.data)):
            raise NumericsError("tensor initialized with non-finite values")
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.name = name
        self._parents = ()
        self._backward_fn = None
        self._released = False

    # -- introspection ----------------------------------------------------

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{tag})"

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def clear_grad(self) -> None:
        self.grad = None

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        a, b = self, _lift(other)

        def backward_fn(g):
            if a.requires_grad:
                _accum(a, _unbroadcast(g, a.data.shape))
            if b.requires_grad:
                _accum(b, _unbroadcast(g, b.data.shape))

        return _node(a.data + b.data, (a, b), backward_fn, "add")

    __radd__ = __add__

    def __sub__(self, other):
        a, b = self, _lift(other)

        def backward_fn(g):
            if a.requires_grad:
                _accum(a, _unbroadcast(g, a.data.shape))
            if b.requires_grad:
                _accum(b, _unbroadcast(-g, b.data.shape))

        return _node(a.data - b.data, (a, b), backward_fn, "sub")

    def __rsub__(self, other):
        return _lift(other).__sub__(self)

    def __mul__(self, other):
        a, b = self, _lift(other)

        def backward_fn(g):
            if a.requires_grad:
                _accum(a, _unbroadcast(g * b.data, a.data.shape))
            if b.requires_grad:
                _accum(b, _unbroadcast(g * a.data, b.data.shape))

        return _node(a.data * b.data, (a, b), backward_fn, "mul")

    __rmul__ = __mul__

    def __truediv__(self, other):
        a, b = self, _lift(other)

        def backward_fn(g):
            if a.requires_grad:
                _accum(a, _unbroadcast(g / b.data, a.data.shape))
            if b.requires_grad:
                _accum(b, _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))

        return _node(a.data / b.data, (a, b), backward_fn, "div")

    def __rtruediv__(self, other):
        return _lift(other).__truediv__(self)

    def __neg__(self):
        a = self

        def backward_fn(g):
            if a.requires_grad:
                _accum(a, -g)

        return _node(-a.data, (a,), backward_fn, "neg")

    def __pow__(self, exponent):
        if not isinstance(exponent, (int, float)):
            raise TypeError("only scalar exponents are supported")
        a, p = self, float(exponent)

        def backward_fn(g):
            if a.requires_grad:
                _accum(a, g * p * np.power(a.data, p - 1.0))

        return _node(np.power(a.data, p), (a,), backward_fn, "pow")

    def __matmul__(self, other):
        a, b = self, _lift(other)
        if a.ndim < 2 or b.ndim < 2:
            raise ValueError("matmul requires tensors with at least 2 dimensions")

        def backward_fn(g):
            if a.requires_grad:
                ga = g @ np.swapaxes(b.data, -1, -2)
                _accum(a, _unbroadcast(ga, a.data.shape))
            if b.requires_grad:
                gb = np.swapaxes(a.data, -1, -2) @ g
                _accum(b, _unbroadcast(gb, b.data.shape))

        return _node(a.data @ b.data, (a, b), backward_fn, "matmul")

    # -- reductions -------------------------------------------------------

    def _reduce_backward(self, g, axis, keepdims):
        gg = np.asarray(g)
        if not keepdims:
            if axis is None:
                gg = gg.reshape((1,) * self.data.ndim)
            else:
                axes = axis if isinstance(axis, tuple) else (axis,)
                gg = np.expand_dims(gg, tuple(a % self.data.ndim for a in axes))
        return np.broadcast_to(gg, self.data.shape)

    def sum(self, axis=None, keepdims: bool = False):
        a = self

        def backward_fn(g):
            if a.requires_grad:
                _accum(a, a._reduce_backward(g, axis, keepdims))

        return _node(a.data.sum(axis=axis, keepdims=keepdims), (a,), backward_fn, "sum")

    def mean(self, axis=None, keepdims: bool = False):
        a = self
        if axis is None:
            count = a.data.size
        else:
            axes = axis if isinstance(axis, tuple) else (axis,)
            count = 1
            for ax in axes:
                count *= a.data.shape[ax % a.data.ndim]
        inv = 1.0 / count

        def backward_fn(g):
            if a.requires_grad:
                _accum(a, a._reduce_backward(g, axis, keepdims) * inv)

        return _node(a.data.mean(axis=axis, keepdims=keepdims), (a,), backward_fn, "mean")

    # -- shape manipulation -------------------------------------------------

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        a = self

        def backward_fn(g):
            if a.requires_grad:
                _accum(a, g.reshape(a.data.shape))

        return _node(a.data.reshape(shape), (a,), backward_fn, "reshape")

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        if not axes:
            axes = tuple(reversed(range(self.data.ndim)))
        inverse = tuple(np.argsort(axes))
        a = self

        def backward_fn(g):
            if a.requires_grad:
                _accum(a, g.transpose(inverse))

        return _node(a.data.transpose(axes), (a,), backward_fn, "transpose")

    # -- elementwise functions ----------------------------------------------

    def exp(self):
        a = self
        data = np.exp(a.data)

        def backward_fn(g):
            if a.requires_grad:
                _accum(a, g * data)

        return _node(data, (a,), backward_fn, "exp")

    def log(self):
        a = self

        def backward_fn(g):
            if a.requires_grad:
                _accum(a, g / a.data)

        return _node(np.log(a.data), (a,), backward_fn, "log")

    def sqrt(self):
        a = self
        data = np.sqrt(a.data)

        def backward_fn(g):
            if a.requires_grad:
                _accum(a, g * 0.5 / data)

        return _node(data, (a,), backward_fn, "sqrt")

    # -- autodiff -----------------------------------------------------------

    def backward(self) -> None:
        """Accumulate gradients of this scalar into every reachable tensor.

        The recorded graph is released afterwards; calling backward a second
        time on the same graph raises :class:`GraphReleasedError`.
        """
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar tensor")
        if self._released:
            raise GraphReleasedError(
                "graph already released; rerun the forward pass before calling backward() again"
            )
        if not self.requires_grad:
            raise ValueError("loss does not depend on any tensor that requires gradients")

        topo: list[Tensor] = []
        seen: set[int] = set()
        work: list[tuple[Tensor, bool]] = [(self, False)]
        while work:
            node, done = work.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            work.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    work.append((parent, False))

        _accum(self, np.ones_like(self.data))
        for node in reversed(topo):
            fn = node._backward_fn
            if fn is not None:
                if node.grad is not None:
                    fn(node.grad)
                node._backward_fn = None
                node._parents = ()
                node._released = True
        self._released = True


def stack(tensors, axis: int = 0) -> Tensor:
    """Stack tensors of identical shape along a new axis."""
    ts = [_lift(t) for t in tensors]
    if not ts:
        raise ValueError("stack() needs at least one tensor")
    data = np.stack([t.data for t in ts], axis=axis)

    def backward_fn(g):
        gm = np.moveaxis(g, axis, 0)
        for t, gi in zip(ts, gm):
            if t.requires_grad:
                _accum(t, gi)

    return _node(data, tuple(ts), backward_fn, "stack")


def slice_axis(x: Tensor, axis: int, start: int, stop: int) -> Tensor:
    """Contiguous slice along one axis; gradient scatters back into place."""
    index = [slice(None)] * x.data.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)

    def backward_fn(g):
        if x.requires_grad:
            full = np.zeros_like(x.data)
            full[index] = g
            _accum(x, full)

    return _node(x.data[index], (x,), backward_fn, "slice")
