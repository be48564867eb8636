"""Orthogonal RCP queries: range tree, heavy-pair table, heavy/light query.

Preprocessing computes, for every unordered pair of heavy last-level nodes
(including a node with itself), the exact closest pair in the union of their
canonical subsets. Pairs are processed in nondecreasing size-sum order: while
both nodes hold fewer than twice the heavy threshold the union is swept
directly, otherwise the larger node is split into its two (heavy) children
and the three already-computed entries combine in O(1).

A query takes the closest precomputed pair over its heavy canonical nodes,
sweeps the light points, and closes the heavy-light gap by reporting, for
each light point, the few points inside its delta-cube clipped to the query
box. A packing argument caps that report at a constant per point.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels as K
from .geometry import (
    EUCLIDEAN,
    BoxRange,
    NO_PAIR,
    PairResult,
    PointSet,
    packing_bound,
)
from .reporting import RangeTree
from .stats import QueryStats

__all__ = ["OrthoRcpIndex", "build_ortho", "query_ortho"]

SMALL_N = 16


class OrthoRcpIndex:
    __slots__ = ("points", "metric", "tree", "heavy_index", "heavy_count",
                 "phi_i", "phi_j", "phi_d2", "small", "validate", "pack_limit")

    def __init__(self, points: PointSet):
        self.points = points
        self.metric = EUCLIDEAN
        self.small = points.n < SMALL_N
        self.tree = None
        self.heavy_index = {}
        self.heavy_count = 0
        self.phi_i = self.phi_j = self.phi_d2 = None
        self.validate = False
        self.pack_limit = packing_bound(points.dim)

    def phi_entry(self, u: int, v: int) -> PairResult:
        """Precomputed closest pair for heavy nodes with table ids (u, v)."""
        if u > v:
            u, v = v, u
        q = u * self.heavy_count - (u * (u - 1)) // 2 + (v - u)
        if self.phi_i[q] < 0:
            return NO_PAIR
        return PairResult.of(int(self.phi_i[q]), int(self.phi_j[q]), float(self.phi_d2[q]))


def _heavy_pair_table(idx: OrthoRcpIndex):
    tree = idx.tree
    coords = idx.points.coords
    heavy = tree.heavy_nodes()
    h = len(heavy)
    idx.heavy_count = h
    idx.heavy_index = {(tid, lo, hi): i for i, (tid, lo, hi, _) in enumerate(heavy)}
    t_heavy = tree.heavy_threshold
    split_cap = 2 * t_heavy

    sizes = np.array([s for (_, _, _, s) in heavy], dtype=np.int64)
    child1 = np.full(h, -1, dtype=np.int64)
    child2 = np.full(h, -1, dtype=np.int64)
    band_start = np.full(h, -1, dtype=np.int64)
    band_len = np.zeros(h, dtype=np.int64)

    band_chunks_x = []
    band_chunks_id = []
    offset = 0
    from .reporting import _mid

    for i, (tid, lo, hi, s) in enumerate(heavy):
        if s >= split_cap:
            m = _mid(lo, hi)
            child1[i] = idx.heavy_index[(tid, lo, m)]
            child2[i] = idx.heavy_index[(tid, m, hi)]
        else:
            ids = tree.last_trees[tid].ids[lo:hi]
            band_chunks_x.append(np.ascontiguousarray(coords[ids]))
            band_chunks_id.append(ids.copy())
            band_start[i] = offset
            band_len[i] = s
            offset += s

    if band_chunks_x:
        band_xs = np.vstack(band_chunks_x)
        band_ids = np.concatenate(band_chunks_id)
    else:
        band_xs = np.empty((0, idx.points.dim))
        band_ids = np.empty(0, dtype=np.int64)

    total = h * (h + 1) // 2
    us = np.empty(total, dtype=np.int64)
    vs = np.empty(total, dtype=np.int64)
    pos = 0
    for u in range(h):
        cnt = h - u
        us[pos:pos + cnt] = u
        vs[pos:pos + cnt] = np.arange(u, h)
        pos += cnt
    order = np.argsort(sizes[us] + sizes[vs], kind="stable")

    idx.phi_i = np.full(total, -1, dtype=np.int64)
    idx.phi_j = np.full(total, -1, dtype=np.int64)
    idx.phi_d2 = np.full(total, K.INF)
    K.phi_table(order, us, vs, sizes, child1, child2, band_start, band_len,
                band_xs, band_ids, split_cap, h, idx.phi_i, idx.phi_j, idx.phi_d2)


def build_ortho(ps: PointSet, validate: bool = False) -> OrthoRcpIndex:
    """Build the orthogonal RCP index (point sets below 16 points fall back
    to a per-query scan)."""
    idx = OrthoRcpIndex(ps)
    idx.validate = validate
    if not idx.small:
        idx.tree = RangeTree(ps)
        _heavy_pair_table(idx)
    return idx


def _scan_range(coords, mask):
    ids = np.flatnonzero(mask).astype(np.int64)
    if ids.shape[0] < 2:
        return NO_PAIR
    xs = np.ascontiguousarray(coords[ids])
    i, j, d2 = K.pair_scan(xs, ids)
    return PairResult.of(i, j, d2)


def query_ortho(idx: OrthoRcpIndex, box: BoxRange, stats: QueryStats | None = None) -> PairResult:
    """Exact closest pair (Euclidean) among the points inside the box."""
    coords = idx.points.coords
    if box.dim != idx.points.dim:
        raise ValueError("dimension mismatch")
    if idx.small:
        return _scan_range(coords, K.box_mask(coords, box.lo, box.hi))

    nodes = idx.tree.canonical_nodes(box)
    heavy_ids = []
    light_chunks = []
    for c in nodes:
        if c.heavy:
            heavy_ids.append(idx.heavy_index[c.key])
        else:
            light_chunks.append(c.ids)

    if heavy_ids:
        hs = np.asarray(heavy_ids, dtype=np.int64)
        iu, iv = np.triu_indices(hs.shape[0])
        a = np.minimum(hs[iu], hs[iv])
        b = np.maximum(hs[iu], hs[iv])
        q = a * idx.heavy_count - (a * (a - 1)) // 2 + (b - a)
        pi, pj, pd2 = K.best_entry(idx.phi_d2[q], idx.phi_i[q], idx.phi_j[q])
        phi = PairResult.of(pi, pj, pd2) if pi >= 0 else NO_PAIR
    else:
        phi = NO_PAIR

    if light_chunks:
        light = np.concatenate(light_chunks)
    else:
        light = np.empty(0, dtype=np.int64)

    if stats is not None:
        stats.canonical_nodes = len(nodes)
        stats.heavy_nodes = len(heavy_ids)
        stats.light_points = int(light.shape[0])
        stats.touched += int(light.shape[0])

    if light.shape[0] >= 2:
        i, j, d2 = K.pair_best(np.ascontiguousarray(coords[light]), light)
        phi_l = PairResult.of(i, j, d2)
    else:
        phi_l = NO_PAIR

    if idx.validate:
        t = len(nodes)
        cap = t * (idx.tree.heavy_threshold - 1) + t
        assert light.shape[0] <= cap, \
            f"light set {light.shape[0]} exceeds budget {cap}"

    delta2 = min(phi.d2, phi_l.d2)
    if delta2 == 0.0:
        return PairResult.best(phi, phi_l)

    half = np.nextafter(math.sqrt(delta2), np.inf) if delta2 < K.INF else K.INF
    psi = NO_PAIR
    for a in light:
        pa = coords[a]
        lo = np.maximum(pa - half, box.lo)
        hi = np.minimum(pa + half, box.hi)
        chunks = [c.ids for c in idx.tree.canonical_raw(lo, hi)]
        total = sum(c.shape[0] for c in chunks)
        if stats is not None:
            stats.pa_sizes.append(total)
            stats.touched += total
        if idx.validate:
            if stats is not None:
                stats.sum_m_a += total
            assert total <= idx.pack_limit, \
                f"|P_a| = {total} exceeds packing bound {idx.pack_limit}"
        if total < 2:
            continue
        ids = np.concatenate(chunks)
        xs = np.ascontiguousarray(coords[ids])
        j, d2 = K.nearest_among(xs, ids, pa, a)
        if j >= 0:
            psi = PairResult.best(psi, PairResult.of(int(a), int(j), float(d2)))

    if idx.validate and stats is not None:
        assert stats.pa_total <= idx.pack_limit * max(1, stats.light_points)

    return PairResult.best(phi, psi)
