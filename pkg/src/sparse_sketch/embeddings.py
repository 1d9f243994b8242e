"""Hash-and-pool embeddings: the linear sum map, the max-pool map, stacks.

Two pooling rules over the same bucket hash:

* sum pooling (``BirthdayMap``): linear; collision-free with high
  probability once the bucket count is quadratic in the sparsity.
* max pooling (``MaxHashMap``): non-linear; never expands distances
  between non-negative vectors, at any bucket count.

A ``StackedEmbedding`` concatenates independent max-pool copies; the
parameter planner turns (mode, sparsity, dataset size, accuracy) into a
concrete (bucket count m, copy count T). The planner's leading constants
are this library's defaults, chosen so the desk-scale guarantees hold with
margin; they are keyword-overridable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np

from .errors import EmbeddingMismatch, PreconditionError
from .hashing import HashSpec, bucket_array, bucket_grid
from .vectors import INF, SparseVector, _check_p, require_nonneg

MODES = ("all-p", "linf-exact", "sum-linf", "discrete")


def sum_pool(buckets, values, m: int) -> np.ndarray:
    """Dense length-m vector whose bucket b holds the sum of landed values."""
    out = np.zeros(m, dtype=np.float64)
    np.add.at(out, np.asarray(buckets, dtype=np.int64), np.asarray(values, dtype=np.float64))
    return out


def max_pool(buckets, values, m: int) -> np.ndarray:
    """Dense length-m vector whose bucket b holds the max of landed support
    values, 0 when no support lands there.

    The max is over stored (non-zero) values only, so a bucket receiving a
    single negative value reports that negative value, not 0.
    """
    out = np.zeros(m, dtype=np.float64)
    b = np.asarray(buckets, dtype=np.int64)
    v = np.asarray(values, dtype=np.float64)
    if len(b) == 0:
        return out
    filled = np.full(m, -np.inf)
    np.maximum.at(filled, b, v)
    landed = filled > -np.inf
    out[landed] = filled[landed]
    return out


@dataclass(frozen=True)
class BirthdayMap:
    """Linear hash-and-sum map to `spec.m` buckets."""

    spec: HashSpec


def birthday_embed(bmap: BirthdayMap, x: SparseVector) -> np.ndarray:
    if x.sparsity == 0:
        return np.zeros(bmap.spec.m, dtype=np.float64)
    buckets = bucket_array(bmap.spec, np.asarray(x.indices, dtype=np.uint64))
    return sum_pool(buckets, x.values, bmap.spec.m)


@dataclass(frozen=True)
class MaxHashMap:
    """Non-linear hash-and-max map to `spec.m` buckets.

    Total on any input, but its distance guarantees hold only for
    non-negative vectors: a collision between a negative entry of x and a
    positive entry of y can stretch their distance (the one-dimensional
    counterexample x = -e_i, y = e_j doubles it).
    """

    spec: HashSpec


def landed_buckets(mmap: MaxHashMap, x: SparseVector) -> tuple[np.ndarray, np.ndarray]:
    """Sparse image of x: sorted unique buckets and their pooled maxima."""
    if x.sparsity == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)
    buckets = bucket_array(mmap.spec, np.asarray(x.indices, dtype=np.uint64))
    order = np.argsort(buckets, kind="stable")
    b = buckets[order]
    v = np.asarray(x.values, dtype=np.float64)[order]
    starts = np.flatnonzero(np.r_[True, b[1:] != b[:-1]])
    maxima = np.maximum.reduceat(v, starts)
    return b[starts], maxima


def max_embed(mmap: MaxHashMap, x: SparseVector) -> np.ndarray:
    out = np.zeros(mmap.spec.m, dtype=np.float64)
    b, v = landed_buckets(mmap, x)
    out[b] = v
    return out


@dataclass(frozen=True)
class EmbedParams:
    """Planned embedding shape. Field names match the serialized schema."""

    mode: str
    s: int
    n: int
    eps: float
    delta: int | None
    p: float | None
    m: int
    T: int

    def to_json_dict(self, seed: int) -> dict:
        return {
            "mode": self.mode,
            "s": self.s,
            "n": self.n,
            "eps": self.eps,
            "delta": self.delta,
            "p": self.p,
            "m": self.m,
            "T": self.T,
            "seed": seed,
        }

    @staticmethod
    def from_json_dict(obj: dict) -> tuple["EmbedParams", int]:
        params = EmbedParams(
            mode=obj["mode"],
            s=int(obj["s"]),
            n=int(obj["n"]),
            eps=float(obj["eps"]),
            delta=None if obj.get("delta") is None else int(obj["delta"]),
            p=None if obj.get("p") is None else float(obj["p"]),
            m=int(obj["m"]),
            T=int(obj["T"]),
        )
        return params, int(obj["seed"])


def plan_params(
    mode: str,
    s: int,
    n: int,
    eps: float,
    delta: int | None = None,
    p: float | None = None,
    *,
    m_const: float | None = None,
    t_const: float | None = None,
    discrete_base: float | None = None,
) -> EmbedParams:
    """Concrete (m, T) for an embedding mode.

    Defaults (library choices, not canonical values):

    * all-p:      m = ceil(200 s / eps),            T = ceil(50 ln(n s) / eps)
    * linf-exact: m = 20 s,                         T = ceil(3 ln n) + 1
    * sum-linf:   m = 1,                            T = 1
    * discrete:   m = ceil(100 s^2 base^p / eps),   T = ceil(50 ln(n) base^p / eps)
      with base = 2*delta unless overridden via `discrete_base`.

    `m_const`/`t_const` replace the leading constants when supplied.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}, expected one of {MODES}")
    if s < 1:
        raise ValueError(f"sparsity must be >= 1, got {s}")
    if n < 2:
        raise ValueError(f"dataset size must be >= 2, got {n}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"accuracy must be in (0, 1), got {eps}")

    if mode == "all-p":
        mc = 200.0 if m_const is None else m_const
        tc = 50.0 if t_const is None else t_const
        m = math.ceil(mc * s / eps)
        T = math.ceil(tc * math.log(n * s) / eps)
    elif mode == "linf-exact":
        mc = 20.0 if m_const is None else m_const
        tc = 3.0 if t_const is None else t_const
        m = math.ceil(mc * s)
        T = math.ceil(tc * math.log(n)) + 1
    elif mode == "sum-linf":
        m, T = 1, 1
    else:  # discrete
        if delta is None or delta < 1:
            raise ValueError("discrete mode requires an integer delta >= 1")
        if p is None or p < 1:
            raise ValueError("discrete mode requires p >= 1")
        base = float(2 * delta) if discrete_base is None else float(discrete_base)
        growth = base ** p
        mc = 100.0 if m_const is None else m_const
        tc = 50.0 if t_const is None else t_const
        m = math.ceil(mc * s * s * growth / eps)
        T = math.ceil(tc * math.log(n) * growth / eps)
    return EmbedParams(mode=mode, s=s, n=n, eps=eps, delta=delta,
                       p=None if p is None else float(p), m=max(1, m), T=max(1, T))


@dataclass(frozen=True)
class StackedEmbedding:
    """T independent max-pool copies sharing a seed, concatenated."""

    params: EmbedParams
    seed: int

    @property
    def m(self) -> int:
        return self.params.m

    @property
    def T(self) -> int:
        return self.params.T

    @property
    def output_dim(self) -> int:
        return self.params.m * self.params.T

    def map_for(self, copy_index: int) -> MaxHashMap:
        if not 0 <= copy_index < self.params.T:
            raise IndexError(f"copy index {copy_index} outside 0..{self.params.T - 1}")
        return MaxHashMap(HashSpec(self.seed, copy_index, self.params.m))

    def maps(self) -> Iterator[MaxHashMap]:
        for c in range(self.params.T):
            yield self.map_for(c)


def build_stack(params: EmbedParams, seed: int) -> StackedEmbedding:
    return StackedEmbedding(params=params, seed=seed)


def stack_embed(stack: StackedEmbedding, x: SparseVector) -> np.ndarray:
    """Dense concatenation of the T copy outputs, copy 0 first."""
    m, T = stack.m, stack.T
    out = np.zeros(m * T, dtype=np.float64)
    if x.sparsity == 0:
        return out
    idx = np.asarray(x.indices, dtype=np.uint64)
    vals = np.asarray(x.values, dtype=np.float64)
    grid = bucket_grid(stack.seed, T, idx, m)
    for c in range(T):
        seg = out[c * m:(c + 1) * m]
        b = grid[c]
        filled = np.full(m, -np.inf)
        np.maximum.at(filled, b, vals)
        landed = filled > -np.inf
        seg[landed] = filled[landed]
    return out


def _pair_copy_power_sums(stack, x, y, p_list, want_linf):
    # One segmented pass over (copy, bucket) groups of the pair's union
    # support; see pairwise.pair_copy_tables for the shared implementation.
    from .pairwise import pair_copy_tables

    return pair_copy_tables(x, y, stack.m, stack.T, stack.seed,
                            ps=p_list, with_linf=want_linf)


def estimate_distance(stack: StackedEmbedding, x: SparseVector, y: SparseVector, p) -> float:
    """Distance estimate from the stacked embedding.

    Finite p: (||F(x) - F(y)||_p^p / T)^(1/p), i.e. the per-copy average of
    p-th powers. p = INF: the plain max over all coordinates, no
    normalization. For non-negative inputs the estimate never exceeds the
    true distance (up to float roundoff).
    """
    p = _check_p(p)
    if x.dim != y.dim:
        raise EmbeddingMismatch(f"ambient dimensions differ: {x.dim} vs {y.dim}")
    if p == INF:
        tables = _pair_copy_power_sums(stack, x, y, (), True)
        per_copy = tables["inf"]
        return float(per_copy.max(initial=0.0))
    tables = _pair_copy_power_sums(stack, x, y, (p,), False)
    total = float(tables[p].sum())
    return (total / stack.T) ** (1.0 / p)


def estimate_distance_embedded(params: EmbedParams, seed_a: int, ea: np.ndarray,
                               seed_b: int, eb: np.ndarray, p) -> float:
    """Same estimate computed from already-embedded rows; validates that both
    rows came from the same map."""
    p = _check_p(p)
    if seed_a != seed_b:
        raise EmbeddingMismatch(f"embeddings use different seeds: {seed_a} vs {seed_b}")
    width = params.m * params.T
    if ea.shape != (width,) or eb.shape != (width,):
        raise EmbeddingMismatch(
            f"expected embedded rows of length {width}, got {ea.shape} and {eb.shape}"
        )
    d = np.abs(ea - eb)
    if p == INF:
        return float(d.max(initial=0.0))
    return float((np.sum(d ** p) / params.T) ** (1.0 / p))


def estimate_sum_norm(stack: StackedEmbedding, x: SparseVector, y: SparseVector) -> float:
    """Scalar-mode estimate of ||x + y||_inf: F(x) + F(y) with m = T = 1.

    For non-negative inputs the result lands in [||x+y||_inf, 2||x+y||_inf]
    deterministically; the upper end is achieved by disjoint singletons.
    """
    if stack.m != 1 or stack.T != 1:
        raise PreconditionError(
            f"sum estimate needs m = 1 and T = 1, got m={stack.m}, T={stack.T}"
        )
    if x.dim != y.dim:
        raise EmbeddingMismatch(f"ambient dimensions differ: {x.dim} vs {y.dim}")
    require_nonneg(x, y, what="sum estimate")
    return x.max_value() + y.max_value()


def plan_for_dataset(mode: str, dataset, eps: float, delta: int | None = None,
                     p: float | None = None, **kw) -> EmbedParams:
    """Planner convenience: sparsity and size taken from the dataset."""
    return plan_params(mode, max(1, dataset.max_sparsity), max(2, len(dataset)),
                       eps, delta=delta, p=p, **kw)


def with_overrides(params: EmbedParams, m: int | None = None, T: int | None = None) -> EmbedParams:
    """Manual (m, T) overrides, e.g. for fixed-budget experiments."""
    out = params
    if m is not None:
        out = replace(out, m=int(m))
    if T is not None:
        out = replace(out, T=int(T))
    if out.m < 1 or out.T < 1:
        raise ValueError("m and T must be >= 1")
    return out
