"""Minimal reverse-mode tape over dense numpy arrays.

The computation graph of the alignment model is small and static, so instead
of a general autodiff framework each operation this model needs carries its
own analytic backward rule. Tensors wrap numpy arrays; calling
:func:`backward` on a scalar result accumulates gradients into every leaf
reachable from it. All ops preserve the dtype of their inputs (float32 for
training, float64 for verification) and avoid BLAS so that results are
bit-reproducible at thread count 1.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, DegenerateEmbeddingError, NonFiniteError

ZERO_NORM_TOLERANCE = 1e-12


class Tensor:
    """A node in the tape: value, gradient slot, and a backward closure."""

    __slots__ = ("data", "grad", "parents", "backward_fn", "name")

    def __init__(
        self,
        data: np.ndarray,
        parents: tuple["Tensor", ...] = (),
        backward_fn: Callable[[np.ndarray], None] | None = None,
        name: str = "",
    ):
        self.data = np.asarray(data)
        self.grad: np.ndarray | None = None
        self.parents = parents
        self.backward_fn = backward_fn
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=self.data.dtype, copy=True)
        else:
            self.grad += g

    def __repr__(self) -> str:
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}{tag})"


def leaf(data: np.ndarray, name: str = "") -> Tensor:
    return Tensor(np.asarray(data), name=name)


def backward(root: Tensor) -> None:
    """Reverse-accumulate gradients from a scalar root through the tape."""
    if root.data.size != 1:
        raise ValueError("backward root must be a scalar")
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))
    root.grad = np.ones_like(root.data)
    for node in reversed(order):
        if node.backward_fn is not None and node.grad is not None:
            node.backward_fn(node.grad)


def assert_finite(name: str, arr: np.ndarray) -> None:
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"non-finite values in {name}")


# ---------------------------------------------------------------------------
# elementwise and reduction ops


def add(a: Tensor, b: Tensor) -> Tensor:
    def bw(g):
        a.accumulate(g)
        b.accumulate(g)

    return Tensor(a.data + b.data, (a, b), bw)


def sub(a: Tensor, b: Tensor) -> Tensor:
    def bw(g):
        a.accumulate(g)
        b.accumulate(-g)

    return Tensor(a.data - b.data, (a, b), bw)


def mul(a: Tensor, b: Tensor) -> Tensor:
    def bw(g):
        a.accumulate(g * b.data)
        b.accumulate(g * a.data)

    return Tensor(a.data * b.data, (a, b), bw)


def scale(a: Tensor, c: float) -> Tensor:
    def bw(g):
        a.accumulate(g * c)

    return Tensor(a.data * c, (a,), bw)


def add_scalar(a: Tensor, c: float) -> Tensor:
    def bw(g):
        a.accumulate(g)

    return Tensor(a.data + c, (a,), bw)


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0

    def bw(g):
        a.accumulate(g * mask)

    return Tensor(np.where(mask, a.data, 0), (a,), bw)


def absolute(a: Tensor) -> Tensor:
    # subgradient 0 at the kink, matching the ReLU policy
    sgn = np.sign(a.data)

    def bw(g):
        a.accumulate(g * sgn)

    return Tensor(np.abs(a.data), (a,), bw)


def sum_all(a: Tensor) -> Tensor:
    def bw(g):
        a.accumulate(np.broadcast_to(g, a.data.shape))

    return Tensor(np.asarray(a.data.sum()), (a,), bw)


def row_sum(a: Tensor) -> Tensor:
    """(n, d) -> (n,) sum along axis 1."""

    def bw(g):
        a.accumulate(np.repeat(g[:, None], a.data.shape[1], axis=1))

    return Tensor(a.data.sum(axis=1), (a,), bw)


# ---------------------------------------------------------------------------
# indexing, shaping


def gather_rows(a: Tensor, idx: np.ndarray) -> Tensor:
    """Select rows (axis 0); the backward scatter-adds into the source."""
    idx = np.asarray(idx, dtype=np.int64)

    def bw(g):
        out = np.zeros_like(a.data)
        np.add.at(out, idx, g)
        a.accumulate(out)

    return Tensor(a.data[idx], (a,), bw)


def concat_cols(parts: Sequence[Tensor]) -> Tensor:
    parts = list(parts)
    widths = [p.data.shape[1] for p in parts]
    offsets = np.cumsum([0] + widths)

    def bw(g):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            p.accumulate(g[:, lo:hi])

    return Tensor(np.concatenate([p.data for p in parts], axis=1), tuple(parts), bw)


def matvec(a: Tensor, v: Tensor) -> Tensor:
    """(n, m) @ (m,) -> (n,). einsum keeps it off BLAS for reproducibility."""

    def bw(g):
        a.accumulate(g[:, None] * v.data[None, :])
        v.accumulate(np.einsum("nm,n->m", a.data, g))

    return Tensor(np.einsum("nm,m->n", a.data, v.data), (a, v), bw)


def scale_rows(x: Tensor, w: Tensor) -> Tensor:
    """Row i of x times scalar w[i], with w trainable."""

    def bw(g):
        x.accumulate(g * w.data[:, None])
        w.accumulate(np.einsum("nk,nk->n", g, x.data))

    return Tensor(x.data * w.data[:, None], (x, w), bw)


def scale_rows_const(x: Tensor, w: np.ndarray) -> Tensor:
    """Row i of x times constant w[i]."""
    w = np.asarray(w, dtype=x.data.dtype)

    def bw(g):
        x.accumulate(g * w[:, None])

    return Tensor(x.data * w[:, None], (x,), bw)


# ---------------------------------------------------------------------------
# model-specific primitives


def normalize_rows(a: Tensor) -> Tensor:
    """Scale every row to unit Euclidean norm (differentiated through)."""
    norms = np.sqrt(np.einsum("nk,nk->n", a.data, a.data))
    if np.any(norms < ZERO_NORM_TOLERANCE):
        bad = int(np.argmin(norms))
        raise DegenerateEmbeddingError(
            f"row {bad} has norm {norms[bad]:.3e} < {ZERO_NORM_TOLERANCE}"
        )
    inv = 1.0 / norms
    unit = a.data * inv[:, None]

    def bw(g):
        proj = np.einsum("nk,nk->n", unit, g)
        a.accumulate((g - unit * proj[:, None]) * inv[:, None])

    return Tensor(unit, (a,), bw)


def householder_apply(h: Tensor, x: Tensor) -> Tensor:
    """Row-wise reflection y = x - 2 (h.x) h for unit rows h.

    Equivalent to multiplying each row of x by the orthogonal matrix
    I - 2 h h^T without materializing it (O(k) per row instead of O(k^2)).
    """
    if h.data.shape != x.data.shape:
        raise ValueError(f"shape mismatch {h.data.shape} vs {x.data.shape}")
    hx = np.einsum("nk,nk->n", h.data, x.data)
    out = x.data - 2.0 * hx[:, None] * h.data

    def bw(g):
        hg = np.einsum("nk,nk->n", h.data, g)
        x.accumulate(g - 2.0 * hg[:, None] * h.data)
        gh = hg  # h.g, rows
        h.accumulate(-2.0 * (gh[:, None] * x.data + hx[:, None] * g))

    return Tensor(out, (h, x), bw)


def segment_softmax(logits: Tensor, segments: np.ndarray, num_segments: int) -> Tensor:
    """Softmax within each segment (max-subtracted for stability).

    ``segments[i]`` names the group of element i; groups need not be
    contiguous. Elements of empty groups do not exist, so no division by
    zero can occur.
    """
    seg = np.asarray(segments, dtype=np.int64)
    z = logits.data
    seg_max = np.full(num_segments, -np.inf, dtype=z.dtype)
    np.maximum.at(seg_max, seg, z)
    e = np.exp(z - seg_max[seg])
    denom = np.zeros(num_segments, dtype=z.dtype)
    np.add.at(denom, seg, e)
    w = e / denom[seg]

    def bw(g):
        dot = np.zeros(num_segments, dtype=z.dtype)
        np.add.at(dot, seg, g * w)
        logits.accumulate(w * (g - dot[seg]))

    return Tensor(w, (logits,), bw)


def segment_sum(x: Tensor, segments: np.ndarray, num_segments: int) -> Tensor:
    """Sum rows of x into their segment's output row."""
    seg = np.asarray(segments, dtype=np.int64)
    out = np.zeros((num_segments, x.data.shape[1]), dtype=x.data.dtype)
    np.add.at(out, seg, x.data)

    def bw(g):
        x.accumulate(g[seg])

    return Tensor(out, (x,), bw)


def dropout(x: Tensor, rate: float, rng: np.random.Generator, training: bool) -> Tensor:
    """Zero elements with probability ``rate``, scaling survivors by 1/(1-rate).

    Identity in eval mode or at rate 0.
    """
    if not (0.0 <= rate < 1.0):
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    keep = (rng.random(x.data.shape) >= rate).astype(x.data.dtype)
    factor = 1.0 / (1.0 - rate)

    def bw(g):
        x.accumulate(g * keep * factor)

    return Tensor(x.data * keep * factor, (x,), bw)


# ---------------------------------------------------------------------------
# non-tape helpers used by tests and verification suites


def materialize_householder(h: np.ndarray) -> np.ndarray:
    """The explicit k x k reflection matrix I - 2 h h^T for one unit vector."""
    h = np.asarray(h)
    return np.eye(h.shape[0], dtype=h.dtype) - 2.0 * np.outer(h, h)
