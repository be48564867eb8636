"""Simplicial partitions and cuttings with point location.

The partition splits a point set into r classes of balanced size, each
enclosed in an explicitly constructed simplex, via recursive alternating-
coordinate median splits. The crossing quality (few simplices crossed by any
hyperplane) is a measured property of this construction, not a proven one.

The cutting subdivides a bounding box of the dual space into box cells until
every cell meets at most c2*n/r of the input hyperplanes, again trading the
classical construction for a simpler one with the same interface. Both
builders are deterministic; the seed accepted by build_cutting is recorded
for reproducibility bookkeeping only.
"""

from __future__ import annotations

import numpy as np

from . import _kernels as K
from .geometry import Hyperplane, PointSet, Polytope, SimplexRange

__all__ = [
    "SimplicialPartition",
    "Cutting",
    "CuttingError",
    "build_partition",
    "crossing_count",
    "build_cutting",
    "locate",
]


# ---------------------------------------------------------------------------
# simplicial partition
# ---------------------------------------------------------------------------


def corner_simplex(lo, hi) -> SimplexRange:
    """A simplex enclosing the box [lo, hi] with exact facet halfspaces.

    Vertices are lo and lo + 2C e_k where C is the total box extent; the
    factor-two margin keeps box points strictly off the diagonal facet, so
    closed containment of the enclosed points survives float rounding. A zero
    extent degenerates to the point simplex, whose facets pin every
    coordinate exactly.
    """
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    d = lo.shape[0]
    ext = hi - lo
    c = float(ext[0])
    for k in range(1, d):
        c += float(ext[k])
    verts = np.tile(lo, (d + 1, 1))
    if c == 0.0:
        rows = np.vstack([np.eye(d), -np.eye(d)])
        rhs = np.concatenate([lo, -lo])
        return SimplexRange(verts, facets=Polytope(rows, rhs))
    c2 = 2.0 * c
    for k in range(d):
        verts[k + 1, k] += c2
    rows = np.vstack([-np.eye(d), np.ones((1, d))])
    s = float(lo[0])
    for k in range(1, d):
        s += float(lo[k])
    rhs = np.concatenate([-lo, [np.nextafter(c2 + s, np.inf)]])
    return SimplexRange(verts, facets=Polytope(rows, rhs))


class SimplicialPartition:
    """Classes S_1..S_r partitioning the input, each inside its simplex."""

    __slots__ = ("classes", "simplices", "r", "n", "dim")

    def __init__(self, classes, simplices, n, dim):
        self.classes = classes
        self.simplices = simplices
        self.r = len(classes)
        self.n = n
        self.dim = dim

    def vertex_array(self) -> np.ndarray:
        """(r, d+1, d) stack of simplex vertices, for batch classification."""
        return np.stack([s.vertices for s in self.simplices])


def split_classes(coords, ids, r, depth=0):
    """Partition ``ids`` into r balanced classes by recursive median splits
    along alternating coordinates; ties broken by point index."""
    k = ids.shape[0]
    sizes = [k // r + (1 if i < k % r else 0) for i in range(r)]
    d = coords.shape[1]
    out = []

    def rec(sub_ids, class_sizes, depth):
        if len(class_sizes) == 1:
            out.append(sub_ids)
            return
        rl = (len(class_sizes) + 1) // 2
        nl = sum(class_sizes[:rl])
        axis = depth % d
        order = np.lexsort((sub_ids, coords[sub_ids, axis]))
        rec(sub_ids[order[:nl]], class_sizes[:rl], depth + 1)
        rec(sub_ids[order[nl:]], class_sizes[rl:], depth + 1)

    rec(ids, sizes, depth)
    return out


def build_partition(ps: PointSet, r: int) -> SimplicialPartition:
    """Deterministic partition of ps into r classes with enclosing simplices."""
    if not 1 <= r <= ps.n:
        raise ValueError(f"need 1 <= r <= n, got r={r}, n={ps.n}")
    ids = np.arange(ps.n, dtype=np.int64)
    classes = split_classes(ps.coords, ids, r)
    simplices = []
    for cls in classes:
        pts = ps.coords[cls]
        simplices.append(corner_simplex(pts.min(axis=0), pts.max(axis=0)))
    return SimplicialPartition(classes, simplices, ps.n, ps.dim)


def _simplices_crossed(vertex_array, coef, const) -> np.ndarray:
    flat = np.ascontiguousarray(vertex_array.reshape(-1, vertex_array.shape[2]))
    g = K.linear_form(flat, coef, const).reshape(vertex_array.shape[0], -1)
    return (g.min(axis=1) <= 0.0) & (g.max(axis=1) >= 0.0)


def crossing_count(sp: SimplicialPartition, h: Hyperplane) -> int:
    """Number of partition simplices the hyperplane meets (touching counts)."""
    coef, const = h.linear_form()
    return int(_simplices_crossed(sp.vertex_array(), coef, const).sum())


# ---------------------------------------------------------------------------
# cutting
# ---------------------------------------------------------------------------


class CuttingError(RuntimeError):
    """Raised when the subdivision cannot reach the conflict-list cap."""


class Cutting:
    """Box cells covering the clipped dual space, each with the list of input
    hyperplanes meeting it, plus a point-location tree over the cells."""

    __slots__ = ("planes", "coefs", "consts", "cell_lo", "cell_hi", "conflicts",
                 "bounds_lo", "bounds_hi", "r", "cap", "seed", "retries", "_tree")

    def __init__(self, planes, coefs, consts, cells, tree, bounds, r, cap, seed):
        self.planes = planes
        self.coefs = coefs
        self.consts = consts
        self.cell_lo = np.array([c[0] for c in cells])
        self.cell_hi = np.array([c[1] for c in cells])
        self.conflicts = [c[2] for c in cells]
        self._tree = tree
        self.bounds_lo, self.bounds_hi = bounds
        self.r = r
        self.cap = cap
        self.seed = seed
        self.retries = 0

    @property
    def cell_count(self) -> int:
        return self.cell_lo.shape[0]

    def cell_vertices(self, cid: int) -> np.ndarray:
        """The 2^d corner points of cell ``cid``."""
        lo, hi = self.cell_lo[cid], self.cell_hi[cid]
        d = lo.shape[0]
        corners = np.empty((1 << d, d))
        for m in range(1 << d):
            for c in range(d):
                corners[m, c] = hi[c] if (m >> c) & 1 else lo[c]
        return corners

    def covers(self, p) -> bool:
        p = np.asarray(p, dtype=np.float64)
        return bool(((p >= self.bounds_lo) & (p <= self.bounds_hi)).all())


def dual_extent_bounds(planes, factor=3.0, margin=1.0):
    """Clipping box: extent of the hyperplanes' dual points, inflated."""
    duals = np.array([[*h.coeffs, h.offset] for h in planes])
    lo, hi = duals.min(axis=0), duals.max(axis=0)
    mid = (lo + hi) / 2.0
    half = (hi - lo) / 2.0 * factor + margin
    return mid - half, mid + half


def build_cutting(hs, r: int, *, bounds=None, c2: float = 8.0, seed: int = 0,
                  max_depth: int = 64) -> Cutting:
    """Subdivide the (clipped) dual space until every cell meets at most
    c2*n/r input hyperplanes. Deterministic; fails on pathological inputs
    that keep a cell's conflict list above the cap at full depth."""
    planes = list(hs)
    n = len(planes)
    if not 1 <= r <= n:
        raise ValueError(f"need 1 <= r <= n, got r={r}, n={n}")
    d = planes[0].dim
    coefs = np.empty((n, d))
    consts = np.empty(n)
    for i, h in enumerate(planes):
        coefs[i], consts[i] = h.linear_form()
    if bounds is None:
        bounds = dual_extent_bounds(planes)
    lo0 = np.asarray(bounds[0], dtype=np.float64)
    hi0 = np.asarray(bounds[1], dtype=np.float64)
    cap = c2 * n / r
    cells = []

    def subdivide(lo, hi, conflict, depth):
        if conflict.shape[0] <= cap:
            cells.append((lo, hi, conflict))
            return ("cell", len(cells) - 1)
        if depth >= max_depth:
            raise CuttingError(
                f"conflict list stuck at {conflict.shape[0]} > cap {cap:.1f} "
                f"after {depth} splits; input looks pathological")
        # halve the widest side; both extents shrink geometrically, so the
        # conflict count of a cell drops unless the input is near-concurrent
        axis = int(np.argmax(hi - lo))
        cut = (lo[axis] + hi[axis]) / 2.0
        hi_l = hi.copy()
        hi_l[axis] = cut
        lo_r = lo.copy()
        lo_r[axis] = cut
        sub_coefs = np.ascontiguousarray(coefs[conflict])
        sub_consts = np.ascontiguousarray(consts[conflict])
        ml = K.forms_cross_box(sub_coefs, sub_consts, lo, hi_l)
        mr = K.forms_cross_box(sub_coefs, sub_consts, lo_r, hi)
        left = subdivide(lo, hi_l, conflict[ml], depth + 1)
        right = subdivide(lo_r, hi, conflict[mr], depth + 1)
        return ("split", axis, cut, left, right)

    tree = subdivide(lo0, hi0, np.arange(n, dtype=np.int64), 0)
    return Cutting(planes, coefs, consts, cells, tree, (lo0, hi0), r, cap, seed)


def locate(cutting: Cutting, p) -> int:
    """Id of the cell containing p; shared boundaries resolve to the lowest
    cell id. Points outside the clipped cover are rejected."""
    p = np.asarray(p, dtype=np.float64)
    if not cutting.covers(p):
        raise ValueError("point lies outside the cutting's clipped cover")
    node = cutting._tree
    while node[0] == "split":
        _, axis, cut, left, right = node
        node = left if p[axis] <= cut else right
    return node[1]
