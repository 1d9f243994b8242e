"""Seeded 64-bit mixing hash shared by every embedding.

A keyed avalanche mixer (SplitMix64 finalizer) stands in for the uniformly
random bucket function h: [d] -> [m]: it is evaluated on demand, uses O(1)
memory, and is reproducible from (seed, copy_index) alone, so the ambient
dimension can be astronomically large.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB
_COPY_SALT = 0xD1B54A32D192ED03


def mix64(x: int) -> int:
    """SplitMix64 finalizer: bijective avalanche permutation of 64-bit ints."""
    z = (x + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * _MIX_A) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX_B) & _MASK64
    return z ^ (z >> 31)


def _mix64_u64(z: np.ndarray) -> np.ndarray:
    # numpy uint64 arithmetic wraps mod 2**64, matching the scalar path;
    # mutates in place over two scratch buffers to keep big grids cheap
    with np.errstate(over="ignore"):
        z = z + np.uint64(_GOLDEN)
        t = z >> np.uint64(30)
        z ^= t
        z *= np.uint64(_MIX_A)
        np.right_shift(z, np.uint64(27), out=t)
        z ^= t
        z *= np.uint64(_MIX_B)
        np.right_shift(z, np.uint64(31), out=t)
        z ^= t
        return z


def derive_seed(seed: int, *salts: int) -> int:
    """Deterministically derive a sub-seed from a master seed and salt path."""
    z = mix64(seed & _MASK64)
    for s in salts:
        z = mix64(z ^ (s & _MASK64))
    return z


@dataclass(frozen=True)
class HashSpec:
    """Seed, copy index, and bucket count; fully determines h: [d] -> [m]."""

    seed: int
    copy_index: int
    m: int

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"bucket count must be >= 1, got {self.m}")
        if self.copy_index < 0:
            raise ValueError(f"copy_index must be >= 0, got {self.copy_index}")

    def key(self) -> int:
        return mix64(mix64(self.seed & _MASK64) ^ ((self.copy_index * _COPY_SALT) & _MASK64))


def hash_bucket(spec: HashSpec, j: int) -> int:
    """Bucket of coordinate j under the function determined by spec."""
    if j < 0:
        raise ValueError(f"coordinate index must be >= 0, got {j}")
    return mix64(spec.key() ^ (j & _MASK64)) % spec.m


def bucket_array(spec: HashSpec, indices: np.ndarray) -> np.ndarray:
    """Vectorized hash_bucket over an index array; returns int64 buckets."""
    idx = np.asarray(indices, dtype=np.uint64)
    h = _mix64_u64(np.uint64(spec.key()) ^ idx)
    return (h % np.uint64(spec.m)).astype(np.int64)


def bucket_grid(seed: int, copies: int, indices: np.ndarray, m: int) -> np.ndarray:
    """Buckets for `indices` under copy_index 0..copies-1; shape (copies, len)."""
    idx = np.asarray(indices, dtype=np.uint64)
    copy_ids = np.arange(copies, dtype=np.uint64)
    with np.errstate(over="ignore"):
        seed_mixed = np.uint64(mix64(seed & _MASK64))
        keys = _mix64_u64(seed_mixed ^ (copy_ids * np.uint64(_COPY_SALT)))
        h = _mix64_u64(keys[:, None] ^ idx[None, :])
    return (h % np.uint64(m)).astype(np.int64)
