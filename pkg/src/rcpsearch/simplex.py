"""Simplex RCP queries over a simplicial partition, including queries that
are intersections of O(1) halfspaces (needed by the halfspace preprocessing).

The index keeps the exact closest pair for every unordered pair of partition
classes. A query classifies each class simplex as inside, crossing, or
disjoint; takes the precomputed minimum over inside pairs; sweeps the points
of crossing classes that actually fall in the range; and reconciles the two
sides with per-point delta-cube reports against the box-simplex reporter.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels as K
from .geometry import (
    EUCLIDEAN,
    Metric,
    NO_PAIR,
    PairResult,
    PointSet,
    Polytope,
    packing_bound,
)
from .partitions import SimplicialPartition, build_partition
from .reporting import MultiLevelReporter, _RawBox
from .stats import QueryStats

__all__ = ["SimplexRcpIndex", "build_simplex", "query_simplex", "default_partition_size"]


def default_partition_size(n: int, d: int) -> int:
    """r = n^(d^2 / (2 d^2 + 1)), the space/time balance point."""
    if n <= 1:
        return max(n, 1)
    e = d * d / (2.0 * d * d + 1.0)
    return min(n, math.ceil(n ** e))


class SimplexRcpIndex:
    __slots__ = ("points", "metric", "keep", "r", "partition", "vertex_stack",
                 "class_xs", "class_ids", "pair_i", "pair_j", "pair_d2",
                 "reporter", "bounds_lo", "bounds_hi", "validate", "pack_limit")

    def __init__(self, points: PointSet, metric: Metric):
        self.points = points
        self.metric = metric
        self.keep = metric.resolve(points.dim) if points.dim else 0
        self.partition: SimplicialPartition | None = None
        self.vertex_stack = None
        self.class_xs = []
        self.class_ids = []
        self.pair_i = self.pair_j = self.pair_d2 = None
        self.reporter: MultiLevelReporter | None = None
        self.validate = False
        self.pack_limit = packing_bound(self.keep) if points.dim else 0
        self.r = 0
        lo, hi = points.bounds()
        self.bounds_lo, self.bounds_hi = lo, hi

    def pair_entry(self, i: int, j: int) -> PairResult:
        """Precomputed closest pair in the union of classes i and j."""
        if i > j:
            i, j = j, i
        q = i * self.r - (i * (i - 1)) // 2 + (j - i)
        if self.pair_i[q] < 0:
            return NO_PAIR
        return PairResult.of(int(self.pair_i[q]), int(self.pair_j[q]), float(self.pair_d2[q]))


def build_simplex(ps: PointSet, r: int | None = None, metric: Metric = EUCLIDEAN,
                  validate: bool = False) -> SimplexRcpIndex:
    idx = SimplexRcpIndex(ps, metric)
    idx.validate = validate
    if ps.n == 0:
        return idx
    if r is None:
        r = default_partition_size(ps.n, ps.dim)
    if not 1 <= r <= ps.n:
        raise ValueError(f"need 1 <= r <= n, got r={r}")
    idx.r = r
    idx.partition = build_partition(ps, r)
    idx.vertex_stack = idx.partition.vertex_array()
    for cls in idx.partition.classes:
        idx.class_xs.append(np.ascontiguousarray(ps.coords[cls][:, :idx.keep]))
        idx.class_ids.append(cls)

    total = r * (r + 1) // 2
    idx.pair_i = np.full(total, -1, dtype=np.int64)
    idx.pair_j = np.full(total, -1, dtype=np.int64)
    idx.pair_d2 = np.full(total, K.INF)
    q = 0
    for i in range(r):
        for j in range(i, r):
            if i == j:
                bi, bj, bd = K.pair_best(idx.class_xs[i], idx.class_ids[i])
            else:
                bi, bj, bd = K.pair_best_two(idx.class_xs[i], idx.class_ids[i],
                                             idx.class_xs[j], idx.class_ids[j])
            idx.pair_i[q] = bi
            idx.pair_j[q] = bj
            idx.pair_d2[q] = bd
            q += 1
    idx.reporter = MultiLevelReporter(ps)
    return idx


def _classify(vertex_stack, rows, rhs):
    """Per class: 2 inside the query polytope, 1 crossing, 0 disjoint.

    Inside means every vertex satisfies every halfspace. Disjoint is detected
    by a single separating query halfspace; a class that is neither lies on
    (or touches) some facet hyperplane, which is what the crossing budget
    counts.
    """
    r, nv, d = vertex_stack.shape
    g = vertex_stack.reshape(r * nv, d) @ rows.T
    ok = (g <= rhs).reshape(r, nv, rhs.shape[0])
    inside = ok.all(axis=(1, 2))
    separated = (~ok).all(axis=1).any(axis=1)
    return np.where(inside, 2, np.where(separated, 0, 1))


def query_simplex(idx: SimplexRcpIndex, query, stats: QueryStats | None = None) -> PairResult:
    """Exact closest pair in the points inside a simplex or a polytope given
    as an intersection of O(1) halfspaces."""
    poly = query.as_polytope()
    if idx.points.n == 0:
        return NO_PAIR
    if poly.dim != idx.points.dim:
        raise ValueError("dimension mismatch")
    coords = idx.points.coords
    rows, rhs = poly.rows, poly.rhs

    cls = _classify(idx.vertex_stack, rows, rhs)
    inside_ids = np.flatnonzero(cls == 2)
    cross_ids = np.flatnonzero(cls == 1)
    if stats is not None:
        stats.inside_classes = int(inside_ids.shape[0])
        stats.crossing_classes = int(cross_ids.shape[0])

    if inside_ids.shape[0]:
        iu, iv = np.triu_indices(inside_ids.shape[0])
        a = inside_ids[iu]
        b = inside_ids[iv]
        q = a * idx.r - (a * (a - 1)) // 2 + (b - a)
        pi, pj, pd2 = K.best_entry(idx.pair_d2[q], idx.pair_i[q], idx.pair_j[q])
        phi = PairResult.of(pi, pj, pd2) if pi >= 0 else NO_PAIR
    else:
        phi = NO_PAIR

    if cross_ids.shape[0]:
        cand = np.concatenate([idx.partition.classes[i] for i in cross_ids])
        mask = K.polytope_mask(np.ascontiguousarray(coords[cand]), rows, rhs)
        light = cand[mask]
    else:
        cand = np.empty(0, dtype=np.int64)
        light = cand

    if stats is not None:
        stats.light_points = int(light.shape[0])
        stats.touched += int(cand.shape[0])
    if idx.validate:
        budget = cross_ids.shape[0] * 4.0 * idx.points.n / idx.r
        assert cand.shape[0] <= budget, \
            f"crossing classes hold {cand.shape[0]} points, budget {budget:.1f}"

    if light.shape[0] >= 2:
        xs = np.ascontiguousarray(coords[light][:, :idx.keep])
        i, j, d2 = K.pair_best(xs, light)
        phi_l = PairResult.of(i, j, d2)
    else:
        phi_l = NO_PAIR

    delta2 = min(phi.d2, phi_l.d2)
    if delta2 == 0.0:
        return PairResult.best(phi, phi_l)

    half = np.nextafter(math.sqrt(delta2), np.inf) if delta2 < K.INF else K.INF
    psi = NO_PAIR
    for a in light:
        pa = coords[a]
        lo = idx.bounds_lo.copy()
        hi = idx.bounds_hi.copy()
        lo[:idx.keep] = np.maximum(pa[:idx.keep] - half, lo[:idx.keep])
        hi[:idx.keep] = np.minimum(pa[:idx.keep] + half, hi[:idx.keep])
        box = _RawBox(lo, hi)
        chunks = idx.reporter.report_raw(box, poly, stats)
        total = sum(c.shape[0] for c in chunks)
        if stats is not None:
            stats.pa_sizes.append(total)
        if idx.validate:
            if stats is not None:
                stats.sum_m_a += idx.reporter.tree.count_box(box)
            assert total <= idx.pack_limit, \
                f"|P_a| = {total} exceeds packing bound {idx.pack_limit}"
        if total < 2:
            continue
        ids = np.concatenate(chunks)
        xs = np.ascontiguousarray(coords[ids][:, :idx.keep])
        j, d2 = K.nearest_among(xs, ids, pa[:idx.keep], a)
        if j >= 0:
            psi = PairResult.best(psi, PairResult.of(int(a), int(j), float(d2)))

    if idx.validate and stats is not None and light.shape[0]:
        assert stats.sum_m_a <= idx.pack_limit * idx.points.n, \
            "charge census exceeded the packing budget"

    return PairResult.best(phi, psi)
