"""Executable hardness reductions: set-intersection queries answered through
color-uniqueness queries, answered in turn through 3D orthogonal RCP queries.

The chain is constructive: every instance is materialized as real point sets
and rectangles, and the final decision compares the reported closest-pair
distance against the separation threshold. Sets are deduplicated on input
(they are sets); empty sets are defined disjoint from everything and place no
anchor points.
"""

from __future__ import annotations

import numpy as np

from .geometry import BoxRange, NO_PAIR, PointSet
from .ortho import OrthoRcpIndex, build_ortho, query_ortho

__all__ = [
    "SetIntersectionInstance",
    "ColorUniquenessInstance",
    "RcpEmbedding3D",
    "ReductionChain",
    "reduce_si_to_cu",
    "reduce_cu_to_rcp",
    "build_chain",
    "solve_si_via_rcp",
]


class SetIntersectionInstance:
    """Sets S_1..S_m of positive reals; queries ask whether S_i and S_j are
    disjoint."""

    __slots__ = ("sets",)

    def __init__(self, sets):
        if len(sets) < 1:
            raise ValueError("need at least one set")
        norm = []
        for k, s in enumerate(sets):
            vals = sorted(set(float(x) for x in s))
            if any(v <= 0 for v in vals):
                raise ValueError(f"set {k}: elements must be positive")
            norm.append(tuple(vals))
        self.sets = tuple(norm)

    @property
    def m(self) -> int:
        return len(self.sets)

    @property
    def total(self) -> int:
        return sum(len(s) for s in self.sets)

    def disjoint(self, i: int, j: int) -> bool:
        """Direct set-disjointness; the reference the reductions must match."""
        return not (set(self.sets[i - 1]) & set(self.sets[j - 1]))


class ColorUniquenessInstance:
    """Colored 2D points; queries ask whether some color occurs at least
    twice inside a rectangle."""

    __slots__ = ("points", "colors", "color_count")

    def __init__(self, points: PointSet, colors, color_count: int):
        if points.dim != 2:
            raise ValueError("color uniqueness instances are planar")
        colors = np.asarray(colors, dtype=np.int64)
        if colors.shape[0] != points.n:
            raise ValueError("one color per point required")
        if colors.size and not (0 <= colors.min() and colors.max() < color_count):
            raise ValueError("color ids must lie in [0, color_count)")
        self.points = points
        self.colors = colors
        self.color_count = color_count


def reduce_si_to_cu(inst: SetIntersectionInstance, eps: float = 0.25):
    """Materialize the colored-point instance and the query mapper.

    Each nonempty set k gets a cluster of |S_k| points within eps of the
    anchor (k, k) and another within eps of (m+k, k); cluster point u sits at
    anchor + (eps/(2s)) * (u, 0). Every distinct element value across the
    instance owns one color. The rectangle for a query (i, j), j < i, is
    [i-eps, m+j+eps] x [j-eps, i+eps], which contains exactly the clusters of
    anchors p_i and p'_j.
    """
    if not 0.0 < eps < 0.5:
        raise ValueError("eps must lie strictly between 0 and 1/2")
    m = inst.m
    values = sorted(set().union(*[set(s) for s in inst.sets]))
    color_of_value = {v: c for c, v in enumerate(values)}
    pts = []
    colors = []
    for k, s in enumerate(inst.sets, start=1):
        size = len(s)
        if size == 0:
            continue
        step = eps / (2.0 * size)
        for anchor_x in (float(k), float(m + k)):
            for u, v in enumerate(s):
                pts.append((anchor_x + step * u, float(k)))
                colors.append(color_of_value[v])
    cu = ColorUniquenessInstance(
        PointSet(np.array(pts).reshape(len(pts), 2)), colors, len(values))

    def mapper(i: int, j: int) -> BoxRange:
        if not 1 <= j < i <= m:
            raise ValueError("queries require 1 <= j < i <= m")
        return BoxRange((i - eps, j - eps), (m + j + eps, i + eps))

    return cu, mapper


def _max_pairwise_distance(coords) -> float:
    n = coords.shape[0]
    if n < 2:
        return 0.0
    best = 0.0
    for i in range(1, n):
        d2 = ((coords[:i] - coords[i]) ** 2).sum(axis=1)
        best = max(best, float(d2.max()))
    return float(np.sqrt(best))


class RcpEmbedding3D:
    """A color-uniqueness instance pushed into 3D: the point of color c_i is
    raised to height 2*i*dmax, so differently colored points end up at least
    2*dmax apart while same-colored pairs keep their planar distance."""

    __slots__ = ("points", "color_of", "dmax", "threshold", "z_margin")

    def __init__(self, points, color_of, dmax, z_margin):
        self.points = points
        self.color_of = color_of
        self.dmax = dmax
        self.threshold = dmax
        self.z_margin = z_margin

    def query_box(self, rect: BoxRange) -> BoxRange:
        """Rectangle q -> box q x (-M, M) with M beyond every point height."""
        return BoxRange((rect.lo[0], rect.lo[1], -self.z_margin),
                        (rect.hi[0], rect.hi[1], self.z_margin))


def reduce_cu_to_rcp(cu: ColorUniquenessInstance) -> RcpEmbedding3D:
    if cu.points.n < 1:
        raise ValueError("need at least one point")
    dmax = _max_pairwise_distance(cu.points.coords)
    z = 2.0 * (cu.colors + 1) * dmax
    pts = np.column_stack([cu.points.coords, z])
    margin = 2.0 * (cu.color_count + 1) * dmax + 1.0
    return RcpEmbedding3D(PointSet(pts), cu.colors, dmax, margin)


class ReductionChain:
    """Both reductions plus the orthogonal RCP index on the embedded points,
    built once per set-intersection instance."""

    __slots__ = ("instance", "eps", "cu", "mapper", "embedding", "index")

    def __init__(self, instance: SetIntersectionInstance, eps: float = 0.25,
                 index: OrthoRcpIndex | None = None):
        self.instance = instance
        self.eps = eps
        self.cu, self.mapper = reduce_si_to_cu(instance, eps)
        self.embedding = reduce_cu_to_rcp(self.cu)
        self.index = index if index is not None else build_ortho(self.embedding.points)


def build_chain(inst: SetIntersectionInstance, eps: float = 0.25) -> ReductionChain:
    return ReductionChain(inst, eps)


def solve_si_via_rcp(chain: ReductionChain, i: int, j: int) -> bool:
    """True iff S_i and S_j are disjoint, decided by one orthogonal RCP query
    on the embedded instance. Empty sets are disjoint from everything."""
    if not 1 <= j < i <= chain.instance.m:
        raise ValueError("queries require 1 <= j < i <= m")
    if not chain.instance.sets[i - 1] or not chain.instance.sets[j - 1]:
        return True
    box = chain.embedding.query_box(chain.mapper(i, j))
    res = query_ortho(chain.index, box)
    if res is NO_PAIR or not res.found:
        return True
    return res.dist > chain.embedding.threshold
