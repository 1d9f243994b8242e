"""Shared independent oracles for the test suite.

Everything here recomputes quantities from definitions, deliberately not
reusing the library's optimized paths, so tests cross two routes.
"""

from __future__ import annotations

import numpy as np

from sparse_sketch.embeddings import EmbedParams, StackedEmbedding, stack_embed
from sparse_sketch.vectors import INF, SparseVector


def dense(vec: SparseVector) -> np.ndarray:
    out = np.zeros(vec.dim)
    for i, v in vec.items():
        out[i] = v
    return out


def dense_lp(arr: np.ndarray, p) -> float:
    a = np.abs(np.asarray(arr, dtype=np.float64))
    if p == INF:
        return float(a.max(initial=0.0))
    return float(np.sum(a ** p) ** (1.0 / p))


def manual_params(m: int, T: int) -> EmbedParams:
    return EmbedParams(mode="all-p", s=1, n=2, eps=0.5, delta=None, p=None, m=m, T=T)


def stack_of(m: int, T: int, seed: int) -> StackedEmbedding:
    return StackedEmbedding(manual_params(m, T), seed)


def naive_stack_pair_powers(x, y, m, T, seed, p) -> float:
    """sum over copies of ||f_c(x) - f_c(y)||_p^p via dense embeddings."""
    st = stack_of(m, T, seed)
    d = np.abs(stack_embed(st, x) - stack_embed(st, y))
    return float(np.sum(d ** p))


def naive_stack_linf(x, y, m, T, seed) -> float:
    st = stack_of(m, T, seed)
    d = np.abs(stack_embed(st, x) - stack_embed(st, y))
    return float(d.max(initial=0.0))


def random_sparse(rng, d, s, signed=False, delta=3) -> SparseVector:
    s = min(s, d)
    if s == 0:
        return SparseVector.zero(d)
    sup = np.sort(rng.choice(d, size=s, replace=False))
    if signed:
        vals = (rng.integers(1, delta + 1, size=s) * (rng.integers(0, 2, size=s) * 2 - 1)).astype(float)
    else:
        vals = 1.0 - rng.random(s)
    return SparseVector.from_pairs(zip(sup.tolist(), vals.tolist()), d)

