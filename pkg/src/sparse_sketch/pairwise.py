"""Bulk pairwise distance evaluation under stacked max-pool embeddings.

Two evaluation strategies, both exact (up to float roundoff) and
cross-checked against the dense definition in the test suite:

* ``pair_copy_tables``: one segmented pass over the (copy, bucket) groups
  of a single pair's union support. Memory O(T * union).
* ``stacked_power_sums``: all pairs of a dataset at once. A copy without
  collisions contributes exactly the true distance, so the T-fold sum is
  T * D plus corrections at the rare (copy, bucket) groups that receive
  two or more distinct coordinates. Only those groups are materialized,
  which is what makes copy counts in the tens of thousands tractable.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Sequence

import numpy as np

from .hashing import bucket_grid
from .vectors import SparseVector, lp_dist

_POS_LIMIT = 1 << 62


def pair_copy_tables(
    x: SparseVector,
    y: SparseVector,
    m: int,
    copies: int,
    seed: int,
    ps: Sequence[float] = (),
    with_linf: bool = False,
) -> dict:
    """Per-copy distances between the images of x and y.

    Returns {p: array of length `copies` holding ||f_c(x) - f_c(y)||_p^p}
    plus key "inf" (per-copy max-norm distances) when requested.
    """
    out: dict = {p: np.zeros(copies) for p in ps}
    if with_linf:
        out["inf"] = np.zeros(copies)
    union = sorted(set(x.indices) | set(y.indices))
    if not union or copies == 0:
        return out
    xd, yd = x.to_dict(), y.to_dict()
    xv = np.array([xd.get(i, 0.0) for i in union])
    yv = np.array([yd.get(i, 0.0) for i in union])
    k = len(union)
    if copies * m >= _POS_LIMIT:
        raise ValueError("copies * m too large to key")

    grid = bucket_grid(seed, copies, np.asarray(union, dtype=np.uint64), m)
    keys = (np.arange(copies, dtype=np.int64)[:, None] * m + grid).ravel()
    order = np.argsort(keys, kind="stable")
    ks = keys[order]
    xs = np.tile(xv, (copies, 1)).ravel()[order]
    ys = np.tile(yv, (copies, 1)).ravel()[order]

    starts = np.flatnonzero(np.r_[True, ks[1:] != ks[:-1]])
    # pooled maxima over landed support only; absent side counts as 0
    fx = np.maximum.reduceat(np.where(xs != 0.0, xs, -np.inf), starts)
    fy = np.maximum.reduceat(np.where(ys != 0.0, ys, -np.inf), starts)
    fx = np.where(np.isneginf(fx), 0.0, fx)
    fy = np.where(np.isneginf(fy), 0.0, fy)
    d = np.abs(fx - fy)
    seg_copy = (ks[starts] // m).astype(np.int64)
    for p in ps:
        out[p] = np.bincount(seg_copy, weights=d ** float(p), minlength=copies)
    if with_linf:
        linf = np.zeros(copies)
        np.maximum.at(linf, seg_copy, d)
        out["inf"] = linf
    return out


def pairwise_power_dists(vectors: Sequence[SparseVector], ps: Sequence[float]) -> dict:
    """Exact {p: (n, n) matrix of ||x_i - x_j||_p^p} over the raw vectors."""
    n = len(vectors)
    out = {p: np.zeros((n, n)) for p in ps}
    for i in range(n):
        for j in range(i + 1, n):
            for p in ps:
                v = lp_dist(vectors[i], vectors[j], p) ** float(p)
                out[p][i, j] = out[p][j, i] = v
    return out


def _ownership(vectors: Sequence[SparseVector]):
    """Distinct coordinate indices plus, per index, its (vector, value) owners."""
    vec_ids, idxs, vals = [], [], []
    for vid, v in enumerate(vectors):
        vec_ids.extend([vid] * v.sparsity)
        idxs.extend(v.indices)
        vals.extend(v.values)
    idx_arr = np.asarray(idxs, dtype=np.uint64)
    distinct, inverse = np.unique(idx_arr, return_inverse=True)
    order = np.argsort(inverse, kind="stable")
    owner_vec = np.asarray(vec_ids, dtype=np.int64)[order]
    owner_val = np.asarray(vals, dtype=np.float64)[order]
    sorted_inv = inverse[order]
    starts = np.flatnonzero(np.r_[True, sorted_inv[1:] != sorted_inv[:-1]])
    counts = np.diff(np.r_[starts, len(sorted_inv)])
    return distinct, owner_vec, owner_val, starts.astype(np.int64), counts.astype(np.int64)


def stacked_power_sums(
    vectors: Sequence[SparseVector],
    m: int,
    copies: int,
    seed: int,
    ps: Sequence[float],
    base: dict | None = None,
) -> dict:
    """{p: (n, n) matrix of sum_c ||f_c(x_i) - f_c(x_j)||_p^p} for all pairs.

    `base` may supply precomputed ``pairwise_power_dists(vectors, ps)`` when
    the same dataset is evaluated under many seeds.
    """
    n = len(vectors)
    ps = [float(p) for p in ps]
    if base is None:
        base = pairwise_power_dists(vectors, ps)
    totals = {p: base[p] * float(copies) for p in ps}
    if n == 0:
        return totals
    distinct, owner_vec, owner_val, ostarts, ocounts = _ownership(vectors)
    if len(distinct) == 0:
        return totals

    grid = bucket_grid(seed, copies, distinct, m)
    if m <= np.iinfo(np.int32).max:
        grid = grid.astype(np.int32)  # halves the sort's memory traffic
    # cheap detection first: a copy needs corrections only when two distinct
    # coordinates share a bucket, which row-sorted values expose directly
    gs = np.sort(grid, axis=1)
    has_dup = (gs[:, 1:] == gs[:, :-1]).any(axis=1)
    dup_rows = np.flatnonzero(has_dup)
    if len(dup_rows) == 0:
        return totals

    simple_a: list[int] = []
    simple_b: list[int] = []
    complex_members: list[np.ndarray] = []
    for t in dup_rows:
        row = grid[t]
        order = np.argsort(row, kind="stable")
        vals = row[order]
        boundary = np.flatnonzero(np.r_[True, vals[1:] != vals[:-1]])
        ends = np.r_[boundary[1:], len(vals)]
        for a, b in zip(boundary, ends):
            if b - a < 2:
                continue
            members = order[a:b]
            if b - a == 2:
                qa, qb = int(members[0]), int(members[1])
                if ocounts[qa] == 1 and ocounts[qb] == 1:
                    simple_a.append(qa)
                    simple_b.append(qb)
                    continue
            complex_members.append(members)

    row_corr = {p: np.zeros(n) for p in ps}  # broadcast to every pair of that vector
    pair_corr = {p: np.zeros((n, n)) for p in ps}

    if simple_a:
        ia = np.asarray(simple_a, dtype=np.int64)
        ib = np.asarray(simple_b, dtype=np.int64)
        ua = owner_vec[ostarts[ia]]
        ub = owner_vec[ostarts[ib]]
        va = owner_val[ostarts[ia]]
        vb = owner_val[ostarts[ib]]
        cross = ua != ub
        if cross.any():
            u, v = ua[cross], ub[cross]
            a, b = va[cross], vb[cross]
            for p in ps:
                corr = np.abs(a - b) ** p - np.abs(a) ** p - np.abs(b) ** p
                np.add.at(pair_corr[p], (u, v), corr)
                np.add.at(pair_corr[p], (v, u), corr)
        intra = ~cross
        if intra.any():
            u = ua[intra]
            a, b = va[intra], vb[intra]
            hi = np.maximum(a, b)
            for p in ps:
                corr = np.abs(hi) ** p - np.abs(a) ** p - np.abs(b) ** p
                np.add.at(row_corr[p], u, corr)

    for members in complex_members:
        landed: dict[int, dict[int, float]] = defaultdict(dict)  # vec -> {idx_id: val}
        for q in members:
            st = ostarts[q]
            for off in range(ocounts[q]):
                landed[int(owner_vec[st + off])][int(q)] = float(owner_val[st + off])
        tops = {u: max(vals.values()) for u, vals in landed.items()}
        solo = {}
        for u, vals in landed.items():
            solo_u = {}
            for p in ps:
                solo_u[p] = abs(tops[u]) ** p - sum(abs(v) ** p for v in vals.values())
                row_corr[p][u] += solo_u[p]
            solo[u] = solo_u
        owners = sorted(landed)
        for ui in range(len(owners)):
            for vi in range(ui + 1, len(owners)):
                u, v = owners[ui], owners[vi]
                shared = set(landed[u]) | set(landed[v])
                for p in ps:
                    baseline = sum(
                        abs(landed[u].get(q, 0.0) - landed[v].get(q, 0.0)) ** p
                        for q in shared
                    )
                    exact = abs(tops[u] - tops[v]) ** p - baseline
                    fix = exact - solo[u][p] - solo[v][p]
                    pair_corr[p][u, v] += fix
                    pair_corr[p][v, u] += fix

    for p in ps:
        totals[p] = totals[p] + row_corr[p][:, None] + row_corr[p][None, :] + pair_corr[p]
        np.fill_diagonal(totals[p], 0.0)
    return totals
