"""
Dense float64 arrays with reverse-mode automatic differentiation.

Every op takes and returns `Node`s. A node remembers, for each parent that needs a
gradient, the rule that maps the node's gradient to that parent's share of it;
`backward()` walks the graph in reverse topological order and accumulates those
shares. Inside `no_grad()` ops record nothing, which is what inference uses.
"""
from __future__ import annotations

import math
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
from scipy import special

from .errors import NonScalarLoss, ShapeMismatch

Array = npt.NDArray[np.float64]
Rule = Callable[[Array], Array]

RNG_ALGORITHM = "philox4x64"


class _GradMode(threading.local):
    enabled = True


_grad_mode = _GradMode()


@contextmanager
def no_grad() -> Iterator[None]:
    """Ops executed in this block build no graph (per thread)."""
    previous = _grad_mode.enabled
    _grad_mode.enabled = False
    try:
        yield
    finally:
        _grad_mode.enabled = previous


class Node:
    __slots__ = ("value", "grad", "parents", "requires_grad", "name")

    def __init__(
        self,
        value: Array,
        parents: Tuple[Tuple["Node", Rule], ...] = (),
        requires_grad: bool = False,
        name: Optional[str] = None,
    ) -> None:
        self.value = value
        self.grad: Optional[Array] = None
        self.parents = parents
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.value.shape)

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"<Node{label} shape={self.shape}>"

    def zero_grad(self) -> None:
        self.grad = None


def constant(value: npt.ArrayLike) -> Node:
    return Node(np.asarray(value, dtype=np.float64))


def parameter(value: npt.ArrayLike, name: Optional[str] = None) -> Node:
    return Node(np.array(value, dtype=np.float64), requires_grad=True, name=name)


def _result(value: Array, *links: Tuple[Node, Rule]) -> Node:
    if not _grad_mode.enabled:
        return Node(value)
    kept = tuple((p, rule) for p, rule in links if p.requires_grad)
    return Node(value, kept, requires_grad=bool(kept))


def _unbroadcast(grad: Array, shape: Tuple[int, ...]) -> Array:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(op: str, a: Node, b: Node) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeMismatch(op, a.shape, b.shape) from None


def add(a: Node, b: Node) -> Node:
    _broadcast_shape("add", a, b)
    return _result(
        a.value + b.value,
        (a, lambda g: _unbroadcast(g, a.shape)),
        (b, lambda g: _unbroadcast(g, b.shape)),
    )


def sub(a: Node, b: Node) -> Node:
    _broadcast_shape("sub", a, b)
    return _result(
        a.value - b.value,
        (a, lambda g: _unbroadcast(g, a.shape)),
        (b, lambda g: -_unbroadcast(g, b.shape)),
    )


def mul(a: Node, b: Node) -> Node:
    _broadcast_shape("mul", a, b)
    return _result(
        a.value * b.value,
        (a, lambda g: _unbroadcast(g * b.value, a.shape)),
        (b, lambda g: _unbroadcast(g * a.value, b.shape)),
    )


def scale(x: Node, factor: float) -> Node:
    return _result(x.value * factor, (x, lambda g: g * factor))


def matmul(a: Node, b: Node) -> Node:
    if a.value.ndim != 2 or b.value.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatch("matmul", a.shape, b.shape)
    return _result(
        a.value @ b.value,
        (a, lambda g: g @ b.value.T),
        (b, lambda g: a.value.T @ g),
    )


def concat(nodes: Sequence[Node], axis: int = -1) -> Node:
    if len(nodes) == 1:
        return nodes[0]
    try:
        value = np.concatenate([n.value for n in nodes], axis=axis)
    except ValueError:
        raise ShapeMismatch("concat", *(n.shape for n in nodes)) from None

    bounds = np.cumsum([0] + [n.shape[axis] for n in nodes])

    def _piece(k: int) -> Rule:
        lo, hi = int(bounds[k]), int(bounds[k + 1])
        return lambda g: np.take(g, np.arange(lo, hi), axis=axis)

    return _result(value, *((n, _piece(k)) for k, n in enumerate(nodes)))


def slice_(x: Node, start: int, stop: int, axis: int = -1) -> Node:
    size = x.shape[axis]
    if not 0 <= start <= stop <= size:
        raise ShapeMismatch(f"slice [{start}:{stop}]", x.shape)
    index = np.arange(start, stop)

    def _rule(g: Array) -> Array:
        out = np.zeros_like(x.value)
        view = np.moveaxis(out, axis, 0)
        view[index] = np.moveaxis(g, axis, 0)
        return out

    return _result(np.take(x.value, index, axis=axis), (x, _rule))


def stack(nodes: Sequence[Node], axis: int = 1) -> Node:
    try:
        value = np.stack([n.value for n in nodes], axis=axis)
    except ValueError:
        raise ShapeMismatch("stack", *(n.shape for n in nodes)) from None

    def _piece(k: int) -> Rule:
        return lambda g: np.take(g, k, axis=axis)

    return _result(value, *((n, _piece(k)) for k, n in enumerate(nodes)))


def take_rows(x: Node, index: npt.ArrayLike) -> Node:
    idx = np.asarray(index, dtype=np.int64)

    def _rule(g: Array) -> Array:
        out = np.zeros_like(x.value)
        np.add.at(out, idx, g)
        return out

    return _result(x.value[idx], (x, _rule))


def tanh(x: Node) -> Node:
    y = np.tanh(x.value)
    return _result(y, (x, lambda g: g * (1.0 - y * y)))


def sigmoid(x: Node) -> Node:
    y = special.expit(x.value)
    return _result(y, (x, lambda g: g * y * (1.0 - y)))


def softmax(x: Node, axis: int = -1) -> Node:
    y = special.softmax(x.value, axis=axis)
    return _result(
        y, (x, lambda g: y * (g - np.sum(g * y, axis=axis, keepdims=True)))
    )


def log_softmax(x: Node, axis: int = -1) -> Node:
    y = special.log_softmax(x.value, axis=axis)
    return _result(
        y, (x, lambda g: g - np.exp(y) * np.sum(g, axis=axis, keepdims=True))
    )


def embedding_lookup(table: Node, ids: npt.ArrayLike) -> Node:
    idx = np.asarray(ids, dtype=np.int64)
    out_of_range = idx.size and (idx.min() < 0 or idx.max() >= table.shape[0])
    if table.value.ndim != 2 or out_of_range:
        raise ShapeMismatch("embedding_lookup", table.shape, idx.shape)
    return take_rows(table, idx)


def cross_entropy(logits: Node, target: npt.ArrayLike) -> Node:
    """
    Negative log-likelihood of `target` under softmax(logits). For a `(B, V)` batch
    the result has shape `(B,)`; for a single `(V,)` row it is a scalar.
    """
    targets = np.asarray(target, dtype=np.int64)
    single = logits.value.ndim == 1
    values = logits.value[None, :] if single else logits.value
    rows = np.atleast_1d(targets)
    if values.ndim != 2 or rows.shape != (values.shape[0],):
        raise ShapeMismatch("cross_entropy", logits.shape, targets.shape)

    lsm = special.log_softmax(values, axis=-1)
    picked = np.arange(values.shape[0])
    nll = -lsm[picked, rows]

    def _rule(g: Array) -> Array:
        probs = np.exp(lsm)
        probs[picked, rows] -= 1.0
        out = np.atleast_1d(g)[:, None] * probs
        return out[0] if single else out

    return _result(nll[0] if single else nll, (logits, _rule))


def sum_(x: Node) -> Node:
    return _result(np.asarray(x.value.sum()), (x, lambda g: np.full(x.shape, float(g))))


def mean(x: Node) -> Node:
    return scale(sum_(x), 1.0 / x.value.size)


def batched_matvec(m: Node, v: Node) -> Node:
    """`(B, n, k) x (B, k) -> (B, n)`."""
    if m.value.ndim != 3 or v.value.ndim != 2 or m.shape[::2] != v.shape:
        raise ShapeMismatch("batched_matvec", m.shape, v.shape)
    return _result(
        np.einsum("bnk,bk->bn", m.value, v.value),
        (m, lambda g: g[:, :, None] * v.value[:, None, :]),
        (v, lambda g: np.einsum("bn,bnk->bk", g, m.value)),
    )


def batched_vecmat(w: Node, m: Node) -> Node:
    """`(B, n) x (B, n, k) -> (B, k)`."""
    if w.value.ndim != 2 or m.value.ndim != 3 or w.shape != m.shape[:2]:
        raise ShapeMismatch("batched_vecmat", w.shape, m.shape)
    return _result(
        np.einsum("bn,bnk->bk", w.value, m.value),
        (w, lambda g: np.einsum("bk,bnk->bn", g, m.value)),
        (m, lambda g: w.value[:, :, None] * g[:, None, :]),
    )


def dropout(x: Node, p: float, training: bool, rng: np.random.Generator) -> Node:
    """Inverted dropout: survivors are scaled by 1/(1-p); identity at inference."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    if not training or p == 0.0:
        return x
    mask = (rng.random(x.shape) >= p) / (1.0 - p)
    return _result(x.value * mask, (x, lambda g: g * mask))


def _topological(loss: Node) -> List[Node]:
    order: List[Node] = []
    visited = set()
    stack_: List[Tuple[Node, bool]] = [(loss, False)]
    while stack_:
        node, done = stack_.pop()
        if done:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack_.append((node, True))
        for parent, _ in node.parents:
            if id(parent) not in visited:
                stack_.append((parent, False))
    return order


def backward(loss: Node) -> None:
    """Accumulates d(loss)/d(node) into `.grad` of every node that requires it."""
    if loss.value.ndim != 0:
        raise NonScalarLoss(f"backward() needs a scalar loss, got shape {loss.shape}")

    loss.grad = np.ones_like(loss.value)
    for node in reversed(_topological(loss)):
        if node.grad is None:
            continue
        for parent, rule in node.parents:
            share = np.asarray(rule(node.grad), dtype=np.float64)
            parent.grad = share if parent.grad is None else parent.grad + share


@dataclass(frozen=True)
class RngState:
    """
    A splittable handle on numpy's counter-based Philox generator. The stream is
    a pure function of (seed, path), so `split(epoch, step)` gives reproducible
    per-step streams regardless of what else consumed randomness.
    """

    seed: int
    path: Tuple[int, ...] = ()

    def split(self, *keys: int) -> "RngState":
        return RngState(self.seed, self.path + tuple(int(k) for k in keys))

    def generator(self) -> np.random.Generator:
        entropy = [self.seed & 0xFFFFFFFFFFFFFFFF, *self.path]
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def glorot_init(shape: Sequence[int], rng: RngState) -> Array:
    """Uniform on +-sqrt(6 / (fan_in + fan_out)); fans are the last two dims."""
    dims = tuple(int(d) for d in shape)
    if not dims or any(d < 1 for d in dims):
        raise ShapeMismatch("glorot_init", dims)
    fan_in, fan_out = (dims[0], 1) if len(dims) == 1 else dims[-2:]
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.generator().uniform(-limit, limit, size=dims)


def sgd_step(
    params: Sequence[Node], lr: float, clip: Optional[float] = None
) -> float:
    """
    `p <- p - lr * g` after optional global-norm clipping, then clears the grads.
    Returns the gradient norm before clipping.
    """
    grads = [p.grad for p in params if p.grad is not None]
    norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads))
    factor = clip / norm if clip is not None and norm > clip else 1.0
    for p in params:
        if p.grad is not None:
            p.value -= lr * factor * p.grad
            p.grad = None
    return norm


def gradient_check(
    loss_fn: Callable[[], Node],
    params: Sequence[Node],
    eps: float = 1e-5,
    floor: float = 1e-5,
) -> Dict[str, float]:
    """
    Compares analytic gradients against central finite differences and returns the
    largest relative error per parameter, `|a - n| / max(|a| + |n|, floor)`.
    """
    for p in params:
        p.zero_grad()
    backward(loss_fn())
    analytic = [
        p.grad.copy() if p.grad is not None else np.zeros_like(p.value) for p in params
    ]

    errors: Dict[str, float] = {}
    with no_grad():
        for k, (p, grad) in enumerate(zip(params, analytic)):
            worst = 0.0
            for index in np.ndindex(*p.shape):
                original = p.value[index]
                p.value[index] = original + eps
                plus = float(loss_fn().value)
                p.value[index] = original - eps
                minus = float(loss_fn().value)
                p.value[index] = original
                numeric = (plus - minus) / (2.0 * eps)
                a = float(grad[index])
                worst = max(worst, abs(a - numeric) / max(abs(a) + abs(numeric), floor))
            errors[p.name or f"param{k}"] = worst
    for p in params:
        p.zero_grad()
    return errors


def has_nonfinite(values: Sequence[Optional[Array]]) -> bool:
    return any(v is not None and not np.all(np.isfinite(v)) for v in values)
