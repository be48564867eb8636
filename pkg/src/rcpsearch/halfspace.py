"""Halfspace RCP queries via cuttings in the dual space, and ball RCP
queries via the lifting map with the projected distance.

Preprocessing duals every point into a hyperplane, cuts the dual space, and
stores per cell the exact closest pair among the points whose duals pass
below the whole cell; those pairs are obtained through polytope queries on a
temporarily built simplex RCP index, not by scanning. A query locates the
dual of its bounding hyperplane, collects the leftover points through
two-halfspace wedge reports (one per cell vertex), and reconciles exactly as
the other structures do.

Above-halfspace queries run against a mirrored twin index (last coordinate
negated), keeping a single below-only query path. Ball queries never need the
twin: lifting always produces a below-halfspace.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels as K
from .geometry import (
    EUCLIDEAN,
    BallRange,
    HalfspaceRange,
    Hyperplane,
    Metric,
    NO_PAIR,
    PairResult,
    PointSet,
    Polytope,
    ball_to_lifted_halfspace,
    lift_points,
    packing_bound,
)
from .partitions import Cutting, build_cutting, dual_extent_bounds, locate
from .reporting import MultiLevelReporter, PartitionTree, _RawBox
from .simplex import build_simplex, query_simplex
from .stats import QueryStats

__all__ = ["HalfspaceRcpIndex", "BallRcpIndex", "build_halfspace",
           "query_halfspace", "build_ball", "query_ball"]

SMALL_N = 16
SMALL_CELL = 32


def _below_row(v):
    """Halfspace below the dual hyperplane of point v, as one polytope row."""
    d = v.shape[0]
    row = np.empty(d)
    row[:-1] = -v[:-1]
    row[-1] = 1.0
    return row, -v[-1]


def _above_row(v):
    d = v.shape[0]
    row = np.empty(d)
    row[:-1] = v[:-1]
    row[-1] = -1.0
    return row, v[-1]


def _cell_polytope(vertices) -> Polytope:
    rows = np.empty((vertices.shape[0], vertices.shape[1]))
    rhs = np.empty(vertices.shape[0])
    for k, v in enumerate(vertices):
        rows[k], rhs[k] = _below_row(v)
    return Polytope(rows, rhs)


class HalfspaceRcpIndex:
    __slots__ = ("points", "metric", "keep", "r", "seed", "cutting",
                 "cell_phi_i", "cell_phi_j", "cell_phi_d2",
                 "simplex_reporter", "bh_reporter", "mirror", "small",
                 "validate", "pack_limit", "bounds_lo", "bounds_hi")

    def __init__(self, points: PointSet, metric: Metric):
        self.points = points
        self.metric = metric
        self.keep = metric.resolve(points.dim)
        self.small = points.n < SMALL_N
        self.cutting: Cutting | None = None
        self.cell_phi_i = self.cell_phi_j = self.cell_phi_d2 = None
        self.simplex_reporter: PartitionTree | None = None
        self.bh_reporter: MultiLevelReporter | None = None
        self.mirror: HalfspaceRcpIndex | None = None
        self.validate = False
        self.pack_limit = packing_bound(self.keep)
        self.r = 0
        self.seed = 0
        lo, hi = points.bounds()
        self.bounds_lo, self.bounds_hi = lo, hi

    def cell_pair(self, cid: int) -> PairResult:
        if self.cell_phi_i[cid] < 0:
            return NO_PAIR
        return PairResult.of(int(self.cell_phi_i[cid]), int(self.cell_phi_j[cid]),
                             float(self.cell_phi_d2[cid]))

    def cell_subset(self, cid: int) -> np.ndarray:
        """Point ids whose duals pass below every vertex of cell ``cid``."""
        poly = _cell_polytope(self.cutting.cell_vertices(cid))
        mask = K.polytope_mask(self.points.coords, poly.rows, poly.rhs)
        return np.flatnonzero(mask).astype(np.int64)


def build_halfspace(ps: PointSet, r: int | None = None, seed: int = 0,
                    metric: Metric = EUCLIDEAN, mirror: bool = True,
                    dual_bounds=None, validate: bool = False) -> HalfspaceRcpIndex:
    if ps.dim < 2:
        raise ValueError("halfspace RCP needs dimension at least 2")
    idx = HalfspaceRcpIndex(ps, metric)
    idx.validate = validate
    idx.seed = seed
    if idx.small and r is None:
        # tiny inputs answer by scan unless a cutting size is forced
        return idx
    if r is None:
        r = max(1, min(ps.n, math.ceil(ps.n ** (1.0 / ps.dim))))
    if not 1 <= r <= ps.n:
        raise ValueError(f"need 1 <= r <= n, got r={r}")
    idx.r = r

    duals = [Hyperplane(row[:-1], row[-1]) for row in ps.coords]
    if dual_bounds is None:
        dual_bounds = dual_extent_bounds(duals)
    idx.cutting = build_cutting(duals, r, bounds=dual_bounds, seed=seed)

    tmp = build_simplex(ps, metric=metric)
    ncell = idx.cutting.cell_count
    idx.cell_phi_i = np.full(ncell, -1, dtype=np.int64)
    idx.cell_phi_j = np.full(ncell, -1, dtype=np.int64)
    idx.cell_phi_d2 = np.full(ncell, K.INF)
    for cid in range(ncell):
        poly = _cell_polytope(idx.cutting.cell_vertices(cid))
        members = np.flatnonzero(K.polytope_mask(ps.coords, poly.rows, poly.rhs))
        if members.shape[0] < SMALL_CELL:
            res = _scan_ids(ps.coords, members.astype(np.int64), idx.keep)
        else:
            res = query_simplex(tmp, poly)
        if validate:
            direct = _scan_ids(ps.coords, members.astype(np.int64), idx.keep)
            assert res == direct, f"cell {cid}: simplex-RCP pair differs from scan"
        if res.found:
            idx.cell_phi_i[cid] = res.i
            idx.cell_phi_j[cid] = res.j
            idx.cell_phi_d2[cid] = res.d2

    idx.simplex_reporter = PartitionTree(ps.coords, np.arange(ps.n, dtype=np.int64))
    idx.bh_reporter = MultiLevelReporter(ps)

    if mirror:
        refl = ps.coords.copy()
        refl[:, -1] = -refl[:, -1]
        mirrored = PointSet(refl)
        mduals = [Hyperplane(row[:-1], row[-1]) for row in refl]
        mlo = np.minimum(dual_extent_bounds(mduals)[0], -np.asarray(dual_bounds[1]))
        mhi = np.maximum(dual_extent_bounds(mduals)[1], -np.asarray(dual_bounds[0]))
        idx.mirror = build_halfspace(mirrored, r=r, seed=seed, metric=metric,
                                     mirror=False, dual_bounds=(mlo, mhi),
                                     validate=validate)
    return idx


def _scan_ids(coords, ids, keep):
    if ids.shape[0] < 2:
        return NO_PAIR
    xs = np.ascontiguousarray(coords[ids][:, :keep])
    i, j, d2 = K.pair_scan(xs, ids)
    return PairResult.of(i, j, d2)


def _mirror_query(h: HalfspaceRange) -> HalfspaceRange:
    plane = Hyperplane([-c for c in h.plane.coeffs], -h.plane.offset)
    return HalfspaceRange(plane, "below")


def query_halfspace(idx: HalfspaceRcpIndex, h: HalfspaceRange,
                    stats: QueryStats | None = None) -> PairResult:
    """Exact closest pair (under the index metric) inside the halfspace."""
    if h.dim != idx.points.dim:
        raise ValueError("dimension mismatch")
    if h.side == "above":
        if idx.cutting is None:
            poly = h.as_polytope()
            mask = K.polytope_mask(idx.points.coords, poly.rows, poly.rhs)
            return _scan_ids(idx.points.coords, np.flatnonzero(mask).astype(np.int64),
                             idx.keep)
        if idx.mirror is None:
            raise ValueError("index was built without the mirrored twin")
        return query_halfspace(idx.mirror, _mirror_query(h), stats)

    coords = idx.points.coords
    poly = h.as_polytope()
    if idx.cutting is None:
        mask = K.polytope_mask(coords, poly.rows, poly.rhs)
        return _scan_ids(coords, np.flatnonzero(mask).astype(np.int64), idx.keep)

    h_star = np.array([*h.plane.coeffs, h.plane.offset])
    cid = locate(idx.cutting, h_star)
    if stats is not None:
        stats.cell_id = cid
        stats.conflict_len = int(idx.cutting.conflicts[cid].shape[0])
    phi_cell = idx.cell_pair(cid)

    h_row, h_rhs = poly.rows[0], poly.rhs[0]
    vertices = idx.cutting.cell_vertices(cid)
    chunks = []
    for v in vertices:
        row_v, rhs_v = _above_row(v)
        wedge = Polytope(np.vstack([h_row, row_v]), np.array([h_rhs, rhs_v]))
        chunks.extend(idx.simplex_reporter.report_polytope_raw(wedge, stats))
    light = np.unique(np.concatenate(chunks)) if chunks else np.empty(0, dtype=np.int64)

    if stats is not None:
        stats.light_points = int(light.shape[0])

    if idx.validate:
        assert light.shape[0] <= idx.cutting.cap, \
            f"|L| = {light.shape[0]} exceeds conflict cap {idx.cutting.cap:.1f}"
        if light.shape[0]:
            lpts = coords[light]
            coefs = np.hstack([-lpts[:, :-1], np.ones((light.shape[0], 1))])
            consts = np.ascontiguousarray(lpts[:, -1])
            crossed = K.forms_cross_box(np.ascontiguousarray(coefs), consts,
                                        idx.cutting.cell_lo[cid], idx.cutting.cell_hi[cid])
            assert bool(crossed.all()), "a light point's dual misses the located cell"
        mask_h = K.polytope_mask(coords, poly.rows, poly.rhs)
        member = np.zeros(idx.points.n, dtype=bool)
        member[idx.cell_subset(cid)] = True
        member[light] = True
        assert np.array_equal(mask_h, member), "S ∩ H != S_i ∪ L"

    if light.shape[0] >= 2:
        xs = np.ascontiguousarray(coords[light][:, :idx.keep])
        i, j, d2 = K.pair_best(xs, light)
        phi_l = PairResult.of(i, j, d2)
    else:
        phi_l = NO_PAIR

    delta2 = min(phi_cell.d2, phi_l.d2)
    if delta2 == 0.0:
        return PairResult.best(phi_cell, phi_l)

    half = np.nextafter(math.sqrt(delta2), np.inf) if delta2 < K.INF else K.INF
    psi = NO_PAIR
    for a in light:
        pa = coords[a]
        lo = idx.bounds_lo.copy()
        hi = idx.bounds_hi.copy()
        lo[:idx.keep] = np.maximum(pa[:idx.keep] - half, lo[:idx.keep])
        hi[:idx.keep] = np.minimum(pa[:idx.keep] + half, hi[:idx.keep])
        box = _RawBox(lo, hi)
        chunks = idx.bh_reporter.report_raw(box, poly, stats)
        total = sum(c.shape[0] for c in chunks)
        if stats is not None:
            stats.pa_sizes.append(total)
        if idx.validate:
            if stats is not None:
                stats.sum_m_a += idx.bh_reporter.tree.count_box(box)
            assert total <= idx.pack_limit, \
                f"|P_a| = {total} exceeds packing bound {idx.pack_limit}"
        if total < 2:
            continue
        ids = np.concatenate(chunks)
        xs = np.ascontiguousarray(coords[ids][:, :idx.keep])
        j, d2 = K.nearest_among(xs, ids, pa[:idx.keep], a)
        if j >= 0:
            psi = PairResult.best(psi, PairResult.of(int(a), int(j), float(d2)))

    return PairResult.best(phi_cell, psi)


# ---------------------------------------------------------------------------
# ball queries through lifting
# ---------------------------------------------------------------------------


class BallRcpIndex:
    __slots__ = ("original", "inner", "max_radius")

    def __init__(self, original: PointSet, inner: HalfspaceRcpIndex, max_radius: float):
        self.original = original
        self.inner = inner
        self.max_radius = max_radius

    @property
    def points(self) -> PointSet:
        return self.original

    @property
    def metric(self) -> Metric:
        return self.inner.metric


def _lifted_dual_bounds(ps: PointSet, max_radius: float):
    """Dual-space cover for the lifted index: the lifted data duals plus the
    dual of any ball with center in the inflated data extent and radius at
    most ``max_radius``."""
    lo, hi = ps.bounds()
    mid = (lo + hi) / 2.0
    half = (hi - lo) / 2.0 * 3.0 + 1.0
    clo, chi = mid - half, mid + half
    d = ps.dim
    dual_lo = np.empty(d + 1)
    dual_hi = np.empty(d + 1)
    dual_lo[:d] = 2.0 * clo
    dual_hi[:d] = 2.0 * chi
    m = np.maximum(np.abs(clo), np.abs(chi))
    sq_hi = float((m * m).sum())
    dual_lo[d] = -max_radius * max_radius - 1.0
    dual_hi[d] = sq_hi + 1.0
    return dual_lo, dual_hi


def build_ball(ps: PointSet, r: int | None = None, seed: int = 0,
               validate: bool = False) -> BallRcpIndex:
    """Ball RCP index: halfspace RCP on the lifted points under the projected
    distance, which equals the original Euclidean distance."""
    lifted = lift_points(ps)
    metric = Metric.projected(ps.dim)
    lo, hi = ps.bounds()
    max_radius = 2.0 * float(np.linalg.norm(hi - lo)) + 1.0
    if lifted.n >= SMALL_N:
        base_lo, base_hi = dual_extent_bounds(
            [Hyperplane(row[:-1], row[-1]) for row in lifted.coords])
        q_lo, q_hi = _lifted_dual_bounds(ps, max_radius)
        dual_bounds = (np.minimum(base_lo, q_lo), np.maximum(base_hi, q_hi))
    else:
        dual_bounds = None
    if r is None and lifted.n:
        r = max(1, min(lifted.n, math.ceil(lifted.n ** (1.0 / lifted.dim))))
    inner = build_halfspace(lifted, r=r, seed=seed, metric=metric, mirror=False,
                            dual_bounds=dual_bounds, validate=validate)
    return BallRcpIndex(ps, inner, max_radius)


def query_ball(idx: BallRcpIndex, ball: BallRange,
               stats: QueryStats | None = None) -> PairResult:
    """Exact closest pair (Euclidean, original indices) inside the ball."""
    if ball.dim != idx.original.dim:
        raise ValueError("dimension mismatch")
    h = ball_to_lifted_halfspace(ball)
    return query_halfspace(idx.inner, h, stats)
