"""Sparse vectors over huge ambient dimensions: norms, distances, algebra.

Vectors are immutable sorted (index, value) pair lists. Explicit zeros are
canonicalized away on construction, so the stored support is exactly the set
of non-zero coordinates. All operations are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

from .errors import DimensionMismatch, NonNegativeRequired

#: Distinguished marker for the max norm. Not a stand-in "large float":
#: every norm routine special-cases it.
INF = math.inf


def _check_p(p) -> float:
    if p == INF:
        return INF
    p = float(p)
    if not math.isfinite(p) or p < 1.0:
        raise ValueError(f"norm order must be >= 1 or INF, got {p!r}")
    return p


def _reduce_abs(abs_vals: Iterable[float], p: float) -> float:
    """(sum |v|^p)^(1/p), scaled by the max entry so huge p stays stable."""
    vals = [v for v in abs_vals]
    if not vals:
        return 0.0
    top = max(vals)
    if top == 0.0:
        return 0.0
    if p == INF:
        return top
    acc = 0.0
    for v in vals:
        acc += (v / top) ** p
    return top * acc ** (1.0 / p)


@dataclass(frozen=True)
class SparseVector:
    """Sorted sparse (index, value) pairs with ambient dimension `dim`.

    Invariants: indices strictly increasing, all values non-zero and finite,
    `len(indices) <= dim`.
    """

    indices: tuple[int, ...]
    values: tuple[float, ...]
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"ambient dimension must be >= 1, got {self.dim}")
        if len(self.indices) != len(self.values):
            raise ValueError("indices and values must have equal length")
        prev = -1
        for i, v in zip(self.indices, self.values):
            if i <= prev:
                raise ValueError(f"indices must be strictly increasing, saw {i} after {prev}")
            if not 0 <= i < self.dim:
                raise ValueError(f"index {i} outside ambient dimension {self.dim}")
            if v == 0.0 or not math.isfinite(v):
                raise ValueError(f"stored values must be non-zero and finite, got {v!r} at {i}")
            prev = i

    @staticmethod
    def from_pairs(pairs: Iterable[tuple[int, float]] | Mapping[int, float], dim: int) -> "SparseVector":
        """Build from (index, value) pairs; drops explicit zeros, sorts."""
        if isinstance(pairs, Mapping):
            pairs = pairs.items()
        items = sorted((int(i), float(v)) for i, v in pairs)
        for (a, _), (b, _) in zip(items, items[1:]):
            if a == b:
                raise ValueError(f"duplicate index {a}")
        kept = [(i, v) for i, v in items if v != 0.0]
        return SparseVector(tuple(i for i, _ in kept), tuple(v for _, v in kept), dim)

    @staticmethod
    def zero(dim: int) -> "SparseVector":
        return SparseVector((), (), dim)

    @property
    def sparsity(self) -> int:
        return len(self.indices)

    @property
    def nonneg(self) -> bool:
        return all(v > 0.0 for v in self.values)

    def items(self) -> Iterator[tuple[int, float]]:
        return zip(self.indices, self.values)

    def to_dict(self) -> dict[int, float]:
        return dict(self.items())

    def max_value(self) -> float:
        """Largest stored value (0 for the empty vector)."""
        return max(self.values, default=0.0)


def lp_norm(x: SparseVector, p) -> float:
    """(sum_i |x_i|^p)^(1/p); the max absolute value when p is INF."""
    p = _check_p(p)
    return _reduce_abs((abs(v) for v in x.values), p)


def lp_dist(x: SparseVector, y: SparseVector, p) -> float:
    """lp norm of x - y, accumulated directly over the merged support."""
    p = _check_p(p)
    if x.dim != y.dim:
        raise DimensionMismatch(f"ambient dimensions differ: {x.dim} vs {y.dim}")
    diffs = []
    i = j = 0
    xi, xv, yi, yv = x.indices, x.values, y.indices, y.values
    while i < len(xi) and j < len(yi):
        if xi[i] == yi[j]:
            diffs.append(abs(xv[i] - yv[j]))
            i += 1
            j += 1
        elif xi[i] < yi[j]:
            diffs.append(abs(xv[i]))
            i += 1
        else:
            diffs.append(abs(yv[j]))
            j += 1
    diffs.extend(abs(v) for v in xv[i:])
    diffs.extend(abs(v) for v in yv[j:])
    return _reduce_abs(diffs, p)


def _merge(x: SparseVector, y: SparseVector, sign: float) -> SparseVector:
    if x.dim != y.dim:
        raise DimensionMismatch(f"ambient dimensions differ: {x.dim} vs {y.dim}")
    out: list[tuple[int, float]] = []
    i = j = 0
    while i < len(x.indices) and j < len(y.indices):
        if x.indices[i] == y.indices[j]:
            v = x.values[i] + sign * y.values[j]
            if v != 0.0:
                out.append((x.indices[i], v))
            i += 1
            j += 1
        elif x.indices[i] < y.indices[j]:
            out.append((x.indices[i], x.values[i]))
            i += 1
        else:
            out.append((y.indices[j], sign * y.values[j]))
            j += 1
    out.extend(zip(x.indices[i:], x.values[i:]))
    out.extend((k, sign * v) for k, v in zip(y.indices[j:], y.values[j:]))
    return SparseVector(tuple(k for k, _ in out), tuple(v for _, v in out), x.dim)


def sum_vectors(x: SparseVector, y: SparseVector) -> SparseVector:
    """Exact sparse sum; entries cancelling to exactly zero are dropped."""
    return _merge(x, y, 1.0)


def diff_vectors(x: SparseVector, y: SparseVector) -> SparseVector:
    """Exact sparse difference x - y."""
    return _merge(x, y, -1.0)


def scale_vector(x: SparseVector, c: float) -> SparseVector:
    if c == 0.0:
        return SparseVector.zero(x.dim)
    return SparseVector(x.indices, tuple(c * v for v in x.values), x.dim)


def require_nonneg(*vectors: SparseVector, what: str = "operation") -> None:
    for v in vectors:
        if not v.nonneg:
            raise NonNegativeRequired(f"{what} requires non-negative entries")


@dataclass(frozen=True)
class Dataset:
    """Ordered collection of id-tagged vectors sharing one ambient dimension."""

    ids: tuple[str, ...]
    vectors: tuple[SparseVector, ...]
    dim: int
    max_sparsity: int
    nonneg: bool

    def __post_init__(self):
        if len(self.ids) != len(self.vectors):
            raise ValueError("ids and vectors must have equal length")
        for v in self.vectors:
            if v.dim != self.dim:
                raise DimensionMismatch(
                    f"dataset dimension {self.dim} but member has {v.dim}"
                )

    @staticmethod
    def from_items(items: Iterable[tuple[str, SparseVector]], dim: int | None = None) -> "Dataset":
        items = list(items)
        if dim is None:
            if not items:
                raise ValueError("cannot infer dimension of an empty dataset")
            dim = items[0][1].dim
        ids = tuple(str(i) for i, _ in items)
        vecs = tuple(v for _, v in items)
        max_s = max((v.sparsity for v in vecs), default=0)
        nonneg = all(v.nonneg for v in vecs)
        return Dataset(ids, vecs, dim, max_s, nonneg)

    def __len__(self) -> int:
        return len(self.vectors)

    def __iter__(self) -> Iterator[tuple[str, SparseVector]]:
        return iter(zip(self.ids, self.vectors))
