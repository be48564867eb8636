"""Range-reporting structures: range trees, partition trees, and the
multi-level box-simplex / box-halfspace reporters.

The range tree is the standard d-level construction with two desk-scale
economies that preserve its contracts: nodes holding at most ``leaf_cutoff``
points collapse into leaves whose reports are filtered directly (such leaves
always stay below the heavy threshold), and the final level is an implicit
balanced BST over a sorted array, so a last-level node is just a rank range.
A box query still decomposes into canonical nodes whose subsets are disjoint
and cover exactly the points in the box.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels as K
from .geometry import BoxRange, PointSet, Polytope, SimplexRange
from .partitions import corner_simplex, split_classes
from .stats import QueryStats

__all__ = [
    "RangeTree",
    "CanonicalNode",
    "PartitionTree",
    "MultiLevelReporter",
    "build_range_tree",
    "canonical_nodes",
    "report_box",
    "build_partition_tree",
    "report_simplex",
    "report_halfspace",
    "build_box_simplex_reporter",
    "report_box_simplex",
    "build_box_halfspace_reporter",
    "report_box_halfspace",
]

LEAF_CUTOFF = 16
SECONDARY_CUTOFF = 16
PARTITION_BRANCH = 16


def _mid(lo, hi):
    return lo + ((hi - lo + 1) >> 1)


class _LastTree:
    """Implicit balanced BST over points sorted by the final coordinate.

    A node is the rank range (lo, hi); children split at _mid. Canonical
    decomposition, heavy enumeration, and the pair table all agree on this
    convention, so (tid, lo, hi) identifies a node globally.
    """

    __slots__ = ("tid", "ids", "vals")

    def __init__(self, tid, ids, vals):
        self.tid = tid
        self.ids = ids
        self.vals = vals

    @property
    def size(self):
        return self.ids.shape[0]


class _Node:
    """Explicit node of a non-final level; covers ranks [lo, hi) of its tree."""

    __slots__ = ("lo", "hi", "left", "right", "sec", "leaf_ids")

    def __init__(self, lo, hi):
        self.lo = lo
        self.hi = hi
        self.left = None
        self.right = None
        self.sec = None
        self.leaf_ids = None


class _LevelTree:
    __slots__ = ("axis", "vals", "root")

    def __init__(self, axis, vals, root):
        self.axis = axis
        self.vals = vals
        self.root = root


class _RawBox:
    """Bare lo/hi pair for internal walks, skipping BoxRange validation."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi):
        self.lo = lo
        self.hi = hi


class CanonicalNode:
    """One piece of a box query's decomposition. Real last-level nodes carry
    their (tree id, lo, hi) key and may be heavy; collapsed leaves arrive
    pre-filtered and are always light."""

    __slots__ = ("ids", "key", "heavy")

    def __init__(self, ids, key=None, heavy=False):
        self.ids = ids
        self.key = key
        self.heavy = heavy

    @property
    def size(self):
        return self.ids.shape[0]


class RangeTree:
    """d-level range tree over a PointSet with canonical-subset queries."""

    def __init__(self, ps: PointSet, leaf_cutoff: int = LEAF_CUTOFF):
        self.points = ps
        self.dim = ps.dim
        self.n = ps.n
        # heavy means size >= ceil(sqrt(n)); isqrt(n-1)+1 is that ceiling
        self.heavy_threshold = math.isqrt(ps.n - 1) + 1 if ps.n else 1
        # cutoff stays below the heavy threshold so collapsed leaves are light
        self.leaf_cutoff = max(1, min(leaf_cutoff, self.heavy_threshold - 1))
        self.last_trees: list[_LastTree] = []
        self._canon_sum = 0
        if ps.n:
            ids = np.arange(ps.n, dtype=np.int64)
            self.root = self._build_level(0, ids)
        else:
            self.root = None

    # -- construction -----------------------------------------------------

    def _sorted_by(self, axis, ids):
        vals = self.points.coords[ids, axis]
        order = np.lexsort((ids, vals))
        return ids[order], vals[order]

    def _build_level(self, axis, ids):
        ids, vals = self._sorted_by(axis, ids)
        if axis == self.dim - 1:
            t = _LastTree(len(self.last_trees), ids, vals)
            self.last_trees.append(t)
            self._canon_sum += _implicit_canon_sum(t.size)
            return t

        def rec(lo, hi):
            node = _Node(lo, hi)
            size = hi - lo
            self._canon_sum += size
            if size <= self.leaf_cutoff:
                node.leaf_ids = ids[lo:hi]
                return node
            node.sec = self._build_level(axis + 1, ids[lo:hi])
            m = _mid(lo, hi)
            node.left = rec(lo, m)
            node.right = rec(m, hi)
            return node

        root = rec(0, ids.shape[0])
        return _LevelTree(axis, vals, root)

    # -- queries ----------------------------------------------------------

    def canonical_nodes(self, box: BoxRange):
        """Disjoint canonical nodes whose subsets together are exactly the
        points inside the box."""
        if box.dim != self.dim:
            raise ValueError("dimension mismatch")
        return self.canonical_raw(box.lo, box.hi)

    def canonical_raw(self, lo, hi):
        out = []
        if self.root is not None:
            self._walk(self.root, _RawBox(lo, hi), out)
        return out

    def _leaf_emit(self, ids, first_axis, box, out):
        if ids.shape[0] == 0:
            return
        sub = self.points.coords[ids][:, first_axis:]
        mask = K.box_mask(np.ascontiguousarray(sub), box.lo[first_axis:], box.hi[first_axis:])
        picked = ids[mask]
        if picked.shape[0]:
            out.append(CanonicalNode(picked))

    def _walk(self, level, box, out):
        if isinstance(level, _LastTree):
            l = int(np.searchsorted(level.vals, box.lo[-1], side="left"))
            r = int(np.searchsorted(level.vals, box.hi[-1], side="right"))
            if l < r:
                self._emit_last(level, l, r, 0, level.size, out)
            return
        axis = level.axis
        l = int(np.searchsorted(level.vals, box.lo[axis], side="left"))
        r = int(np.searchsorted(level.vals, box.hi[axis], side="right"))
        if l >= r:
            return

        def rec(node):
            if node.hi <= l or r <= node.lo:
                return
            if node.leaf_ids is not None:
                # the rank slice already enforces this axis; filter the rest
                inside = node.leaf_ids[max(l - node.lo, 0):node.hi - node.lo - max(node.hi - r, 0)]
                self._leaf_emit(inside, axis + 1, box, out)
                return
            if l <= node.lo and node.hi <= r:
                self._walk(node.sec, box, out)
                return
            rec(node.left)
            rec(node.right)

        rec(level.root)

    def _emit_last(self, t, l, r, lo, hi, out):
        if hi <= l or r <= lo:
            return
        if l <= lo and hi <= r:
            heavy = hi - lo >= self.heavy_threshold
            out.append(CanonicalNode(t.ids[lo:hi], key=(t.tid, lo, hi), heavy=heavy))
            return
        m = _mid(lo, hi)
        self._emit_last(t, l, r, lo, m, out)
        self._emit_last(t, l, r, m, hi, out)

    def report_box(self, box: BoxRange) -> np.ndarray:
        nodes = self.canonical_nodes(box)
        if not nodes:
            return np.empty(0, dtype=np.int64)
        return np.sort(np.concatenate([c.ids for c in nodes]))

    def count_box(self, box) -> int:
        """Number of points in the box via the canonical decomposition."""
        return sum(c.size for c in self.canonical_raw(box.lo, box.hi))

    # -- structure accounting ----------------------------------------------

    @property
    def canonical_size_sum(self) -> int:
        return self._canon_sum

    def heavy_nodes(self):
        """All heavy last-level nodes as (tid, lo, hi, size), preorder. A
        node's children (when it holds at least two threshold units) appear
        after it; left before right."""
        t_heavy = self.heavy_threshold
        out = []
        for t in self.last_trees:
            stack = [(0, t.size)]
            while stack:
                lo, hi = stack.pop()
                if hi - lo < t_heavy or hi <= lo:
                    continue
                out.append((t.tid, lo, hi, hi - lo))
                m = _mid(lo, hi)
                stack.append((m, hi))
                stack.append((lo, m))
        return out

    def heavy_count(self) -> int:
        return len(self.heavy_nodes())


def _implicit_canon_sum(s, _memo={0: 0, 1: 1}):
    if s in _memo:
        return _memo[s]
    half = (s + 1) >> 1
    v = s + _implicit_canon_sum(half) + _implicit_canon_sum(s - half)
    _memo[s] = v
    return v


def build_range_tree(ps: PointSet) -> RangeTree:
    return RangeTree(ps)


def canonical_nodes(tree: RangeTree, box: BoxRange):
    return tree.canonical_nodes(box)


def report_box(tree: RangeTree, box: BoxRange) -> np.ndarray:
    return tree.report_box(box)


# ---------------------------------------------------------------------------
# partition tree
# ---------------------------------------------------------------------------


class _PNode:
    __slots__ = ("ids", "simplex", "children")

    def __init__(self, ids, simplex, children):
        self.ids = ids
        self.simplex = simplex
        self.children = children


class PartitionTree:
    """Recursive simplicial partition; leaves hold O(1) points.

    Supports reporting against any halfspace-intersection range: subtrees
    whose simplex lies inside the range are reported wholesale, subtrees
    separated from it by one of its halfspaces are skipped, leaves are
    filtered point by point.
    """

    def __init__(self, coords, ids, branch: int = PARTITION_BRANCH,
                 leaf: int = LEAF_CUTOFF):
        self.coords = coords
        self.branch = branch
        self.leaf = leaf
        self.n = ids.shape[0]
        self.dim = coords.shape[1]
        self.root = self._build(np.asarray(ids, dtype=np.int64), 0) if self.n else None

    def _build(self, ids, depth):
        pts = self.coords[ids]
        simplex = corner_simplex(pts.min(axis=0), pts.max(axis=0))
        if ids.shape[0] <= self.leaf:
            return _PNode(ids, simplex, None)
        classes = split_classes(self.coords, ids, min(self.branch, ids.shape[0]), depth)
        children = [self._build(cls, depth + 1) for cls in classes]
        return _PNode(ids, simplex, children)

    def report_polytope_raw(self, poly: Polytope, stats: QueryStats | None = None):
        if self.root is None:
            return []
        rows, rhs = poly.rows, poly.rhs
        chunks = []

        def visit(node):
            if stats is not None:
                stats.nodes_visited += 1
            g = node.simplex.vertices @ rows.T
            inside_v = g <= rhs
            if inside_v.all():
                chunks.append(node.ids)
                if stats is not None:
                    stats.touched += node.ids.shape[0]
                return
            if (~inside_v).all(axis=0).any():
                return
            if node.children is None:
                sub = np.ascontiguousarray(self.coords[node.ids])
                mask = K.polytope_mask(sub, rows, rhs)
                if stats is not None:
                    stats.touched += node.ids.shape[0]
                picked = node.ids[mask]
                if picked.shape[0]:
                    chunks.append(picked)
                return
            for ch in node.children:
                visit(ch)

        visit(self.root)
        return chunks

    def report(self, rng, stats: QueryStats | None = None) -> np.ndarray:
        chunks = self.report_polytope_raw(rng.as_polytope(), stats)
        if not chunks:
            return np.empty(0, dtype=np.int64)
        return np.sort(np.concatenate(chunks))


def build_partition_tree(ps: PointSet) -> PartitionTree:
    return PartitionTree(ps.coords, np.arange(ps.n, dtype=np.int64))


def report_simplex(pt: PartitionTree, simplex: SimplexRange,
                   stats: QueryStats | None = None) -> np.ndarray:
    return pt.report(simplex, stats)


def report_halfspace(pt: PartitionTree, halfspace,
                     stats: QueryStats | None = None) -> np.ndarray:
    return pt.report(halfspace, stats)


# ---------------------------------------------------------------------------
# multi-level reporters
# ---------------------------------------------------------------------------


class MultiLevelReporter:
    """Range tree whose last-level nodes each carry a partition tree over
    their canonical subset; a (box, range) query runs the secondary structure
    of every canonical node, never a filtered full box report.

    Nodes at or below the secondary cutoff use the single-leaf partition tree
    implicitly: their slice is filtered directly, which is the same traversal
    a one-leaf tree would do, without materializing it.
    """

    def __init__(self, ps: PointSet, secondary_cutoff: int = SECONDARY_CUTOFF):
        self.points = ps
        self.tree = RangeTree(ps)
        self.secondary_cutoff = secondary_cutoff
        self.secondaries = {}
        for t in self.tree.last_trees:
            stack = [(0, t.size)]
            while stack:
                lo, hi = stack.pop()
                if hi - lo <= secondary_cutoff or hi <= lo:
                    continue
                self.secondaries[(t.tid, lo, hi)] = PartitionTree(
                    ps.coords, t.ids[lo:hi])
                m = _mid(lo, hi)
                stack.append((m, hi))
                stack.append((lo, m))

    def report_raw(self, box, poly: Polytope,
                   stats: QueryStats | None = None):
        chunks = []
        for node in self.tree.canonical_raw(box.lo, box.hi):
            if stats is not None:
                stats.canonical_nodes += 1
            sec = self.secondaries.get(node.key) if node.key is not None else None
            if sec is not None:
                chunks.extend(sec.report_polytope_raw(poly, stats))
            else:
                sub = np.ascontiguousarray(self.points.coords[node.ids])
                mask = K.polytope_mask(sub, poly.rows, poly.rhs)
                if stats is not None:
                    stats.touched += node.size
                picked = node.ids[mask]
                if picked.shape[0]:
                    chunks.append(picked)
        return chunks

    def report(self, box: BoxRange, rng, stats: QueryStats | None = None) -> np.ndarray:
        chunks = self.report_raw(box, rng.as_polytope(), stats)
        if not chunks:
            return np.empty(0, dtype=np.int64)
        return np.sort(np.concatenate(chunks))


def build_box_simplex_reporter(ps: PointSet) -> MultiLevelReporter:
    return MultiLevelReporter(ps)


def report_box_simplex(rep: MultiLevelReporter, box: BoxRange, simplex,
                       stats: QueryStats | None = None) -> np.ndarray:
    return rep.report(box, simplex, stats)


def build_box_halfspace_reporter(ps: PointSet) -> MultiLevelReporter:
    return MultiLevelReporter(ps)


def report_box_halfspace(rep: MultiLevelReporter, box: BoxRange, halfspace,
                         stats: QueryStats | None = None) -> np.ndarray:
    return rep.report(box, halfspace, stats)
