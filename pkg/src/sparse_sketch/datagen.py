"""Random dataset generators used by the experiment scripts and tests."""

from __future__ import annotations

import numpy as np

from .hashing import derive_seed
from .vectors import Dataset, SparseVector


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, 0xDA7A))


def random_nonneg_vector(s: int, d: int, rng: np.random.Generator) -> SparseVector:
    """s non-zeros at uniform random coordinates, values uniform in (0, 1]."""
    support = np.sort(rng.choice(d, size=s, replace=False))
    values = 1.0 - rng.random(s)
    return SparseVector.from_pairs(zip(support.tolist(), values.tolist()), d)


def random_nonneg_dataset(n: int, s: int, d: int, seed: int, prefix: str = "v") -> Dataset:
    rng = _rng(seed)
    width = len(str(max(0, n - 1)))
    items = [(f"{prefix}{i:0{width}d}", random_nonneg_vector(s, d, rng)) for i in range(n)]
    return Dataset.from_items(items, d)


def random_discrete_vector(s: int, d: int, delta: int, rng: np.random.Generator) -> SparseVector:
    """s non-zeros with values uniform in {-delta..delta} \\ {0}."""
    support = np.sort(rng.choice(d, size=s, replace=False))
    mags = rng.integers(1, delta + 1, size=s)
    signs = rng.integers(0, 2, size=s) * 2 - 1
    values = (mags * signs).astype(np.float64)
    return SparseVector.from_pairs(zip(support.tolist(), values.tolist()), d)


def random_discrete_dataset(n: int, s: int, d: int, delta: int, seed: int,
                            prefix: str = "v") -> Dataset:
    rng = _rng(seed)
    width = len(str(max(0, n - 1)))
    items = [(f"{prefix}{i:0{width}d}", random_discrete_vector(s, d, delta, rng))
             for i in range(n)]
    return Dataset.from_items(items, d)
