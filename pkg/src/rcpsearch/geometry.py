"""Points, ranges, metrics, duality, lifting, and the closest-pair primitive.

This is the vocabulary the index structures speak. All types are immutable
after construction and all operations are pure. Coordinates are float64 and
every containment or above/below comparison is an exact floating comparison
with no epsilon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import _kernels as K

__all__ = [
    "PointSet",
    "Metric",
    "EUCLIDEAN",
    "PairResult",
    "NO_PAIR",
    "BoxRange",
    "Hyperplane",
    "HalfspaceRange",
    "SimplexRange",
    "Polytope",
    "BallRange",
    "distance",
    "closest_pair",
    "dualize_point",
    "dualize_hyperplane",
    "point_side",
    "lift",
    "lift_points",
    "ball_to_lifted_halfspace",
    "contains",
    "range_mask",
    "packing_bound",
]


def _as_coords(obj, dim=None):
    a = np.ascontiguousarray(np.asarray(obj, dtype=np.float64))
    if a.ndim != 1:
        raise ValueError(f"expected a flat coordinate vector, got shape {a.shape}")
    if dim is not None and a.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {a.shape[0]}")
    if not np.isfinite(a).all():
        raise ValueError("coordinates must be finite")
    return a


def _sqnorm(p):
    """Sum of squares accumulated in coordinate order (shared by lift and the
    ball-to-halfspace map so boundary comparisons agree bit for bit)."""
    s = p[0] * p[0]
    for c in range(1, p.shape[0]):
        s += p[c] * p[c]
    return s


class PointSet:
    """An indexed set of n points in R^d, immutable once built.

    Point i is row i of ``coords``; indices stay stable for the set's
    lifetime. Duplicate points are legal.
    """

    __slots__ = ("coords", "n", "dim")

    def __init__(self, coords):
        a = np.array(coords, dtype=np.float64, order="C", copy=True)
        if a.ndim != 2:
            raise ValueError(f"expected an (n, d) array, got shape {a.shape}")
        if a.shape[1] < 1:
            raise ValueError("dimension must be at least 1")
        if a.size and not np.isfinite(a).all():
            raise ValueError("coordinates must be finite")
        a.setflags(write=False)
        self.coords = a
        self.n = a.shape[0]
        self.dim = a.shape[1]

    def __len__(self):
        return self.n

    def __getitem__(self, i):
        return self.coords[i]

    def bounds(self):
        """(lo, hi) corner vectors of the bounding box; zeros for empty sets."""
        if self.n == 0:
            z = np.zeros(self.dim)
            return z, z.copy()
        return self.coords.min(axis=0), self.coords.max(axis=0)

    def __repr__(self):
        return f"PointSet(n={self.n}, dim={self.dim})"


@dataclass(frozen=True)
class Metric:
    """Euclidean distance, or Euclidean on the first ``keep`` coordinates only.

    The projected form realizes the distance used on lifted point sets, where
    the appended coordinate must not contribute.
    """

    kind: str = "euclidean"
    keep: int | None = None

    @staticmethod
    def euclidean() -> "Metric":
        return Metric("euclidean", None)

    @staticmethod
    def projected(keep: int) -> "Metric":
        if keep < 1:
            raise ValueError("projected metric needs at least one coordinate")
        return Metric("projected", keep)

    def resolve(self, dim: int) -> int:
        """Number of leading coordinates that enter the distance."""
        if self.kind == "euclidean":
            return dim
        if self.keep > dim:
            raise ValueError(f"projected({self.keep}) exceeds dimension {dim}")
        return self.keep

    def __str__(self):
        return "euclidean" if self.kind == "euclidean" else f"projected:{self.keep}"


EUCLIDEAN = Metric.euclidean()


@dataclass(frozen=True)
class PairResult:
    """The closest pair in a queried range: two point indices plus distance,
    or no pair when the range holds fewer than two points.

    Comparisons use the squared distance and then the sorted index pair, so
    ties resolve identically everywhere.
    """

    i: int = -1
    j: int = -1
    d2: float = K.INF

    @staticmethod
    def of(i: int, j: int, d2: float) -> "PairResult":
        if i > j:
            i, j = j, i
        return PairResult(int(i), int(j), float(d2))

    @property
    def found(self) -> bool:
        return self.i >= 0

    @property
    def dist(self) -> float:
        return math.sqrt(self.d2) if self.found else K.INF

    @property
    def pair(self):
        return (self.i, self.j, self.dist) if self.found else None

    def key(self):
        return (self.d2, self.i if self.found else K.INF, self.j if self.found else K.INF)

    @staticmethod
    def best(*results: "PairResult") -> "PairResult":
        out = NO_PAIR
        for r in results:
            if r.key() < out.key():
                out = r
        return out

    def __repr__(self):
        if not self.found:
            return "PairResult(none)"
        return f"PairResult({self.i}, {self.j}, dist={self.dist!r})"


NO_PAIR = PairResult()


# ---------------------------------------------------------------------------
# query ranges
# ---------------------------------------------------------------------------


class BoxRange:
    """Axis-aligned closed box [lo, hi]; containment is closed on all faces."""

    __slots__ = ("lo", "hi", "dim")

    def __init__(self, lo, hi):
        self.lo = _as_coords(lo)
        self.hi = _as_coords(hi, self.lo.shape[0])
        if (self.lo > self.hi).any():
            raise ValueError("box corners must satisfy lo <= hi componentwise")
        self.lo.setflags(write=False)
        self.hi.setflags(write=False)
        self.dim = self.lo.shape[0]

    def __repr__(self):
        return f"BoxRange({self.lo.tolist()}, {self.hi.tolist()})"


@dataclass(frozen=True)
class Hyperplane:
    """Non-vertical hyperplane x_d = a_1 x_1 + ... + a_{d-1} x_{d-1} - b."""

    coeffs: tuple
    offset: float

    def __init__(self, coeffs, offset):
        co = tuple(float(c) for c in np.atleast_1d(coeffs))
        object.__setattr__(self, "coeffs", co)
        object.__setattr__(self, "offset", float(offset))

    @property
    def dim(self) -> int:
        return len(self.coeffs) + 1

    def linear_form(self):
        """(coef, const) with g(x) = coef . x + const, g > 0 strictly above."""
        coef = np.empty(self.dim)
        coef[:-1] = [-c for c in self.coeffs]
        coef[-1] = 1.0
        return coef, self.offset


@dataclass(frozen=True)
class HalfspaceRange:
    """Closed halfspace bounded by a non-vertical hyperplane.

    ``below`` means x_d <= a . x' - b.
    """

    plane: Hyperplane
    side: str = "below"

    def __post_init__(self):
        if self.side not in ("below", "above"):
            raise ValueError(f"side must be 'below' or 'above', got {self.side!r}")

    @property
    def dim(self) -> int:
        return self.plane.dim

    def as_polytope(self) -> "Polytope":
        coef, const = self.plane.linear_form()
        if self.side == "below":
            return Polytope(coef[None, :], np.array([-const]))
        return Polytope(-coef[None, :], np.array([const]))


class Polytope:
    """Intersection of closed halfspaces, rows[m] . x <= rhs[m].

    The general constant-complexity query range; possibly unbounded or empty.
    """

    __slots__ = ("rows", "rhs", "dim")

    def __init__(self, rows, rhs):
        self.rows = np.ascontiguousarray(np.atleast_2d(np.asarray(rows, dtype=np.float64)))
        self.rhs = np.ascontiguousarray(np.asarray(rhs, dtype=np.float64).ravel())
        if self.rows.shape[0] != self.rhs.shape[0]:
            raise ValueError("one rhs value per halfspace row required")
        self.rows.setflags(write=False)
        self.rhs.setflags(write=False)
        self.dim = self.rows.shape[1]

    @staticmethod
    def intersection(*parts: "Polytope") -> "Polytope":
        rows = np.vstack([p.rows for p in parts])
        rhs = np.concatenate([p.rhs for p in parts])
        return Polytope(rows, rhs)

    def as_polytope(self) -> "Polytope":
        return self

    def __repr__(self):
        return f"Polytope({self.rows.shape[0]} halfspaces, dim={self.dim})"


class SimplexRange:
    """Simplex given by d+1 vertices; containment means inside every bounding
    halfspace (closed). Degenerate (flat) simplices are permitted.

    ``facets`` may supply precomputed exact facet halfspaces; otherwise they
    are derived from the vertices on first use (full-dimensional case only).
    """

    __slots__ = ("vertices", "dim", "_facets")

    def __init__(self, vertices, facets: Polytope | None = None):
        v = np.array(vertices, dtype=np.float64, order="C", copy=True)
        if v.ndim != 2 or v.shape[0] != v.shape[1] + 1:
            raise ValueError(f"a simplex in R^d needs d+1 vertices, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise ValueError("vertices must be finite")
        v.setflags(write=False)
        self.vertices = v
        self.dim = v.shape[1]
        self._facets = facets

    def is_degenerate(self) -> bool:
        e = self.vertices[1:] - self.vertices[0]
        return abs(np.linalg.det(e)) == 0.0

    def as_polytope(self) -> Polytope:
        if self._facets is None:
            self._facets = self._derive_facets()
        return self._facets

    def _derive_facets(self) -> Polytope:
        if self.is_degenerate():
            raise ValueError("cannot derive facets of a degenerate simplex")
        v = self.vertices
        d = self.dim
        rows = np.empty((d + 1, d))
        rhs = np.empty(d + 1)
        for k in range(d + 1):
            others = np.delete(np.arange(d + 1), k)
            base = v[others[0]]
            edges = v[others[1:]] - base
            _, s, vt = np.linalg.svd(edges) if edges.size else (None, np.zeros(0), np.eye(d))
            if s.size and s[-1] <= s[0] * 1e-12:
                raise ValueError("cannot derive facets of a degenerate simplex")
            normal = vt[-1]
            c = float(normal @ base)
            if float(normal @ v[k]) > c:
                normal, c = -normal, -c
            rows[k] = normal
            rhs[k] = c
        return Polytope(rows, rhs)

    def __repr__(self):
        return f"SimplexRange(dim={self.dim})"


class BallRange:
    """Closed ball of nonnegative radius."""

    __slots__ = ("center", "radius", "dim")

    def __init__(self, center, radius):
        self.center = _as_coords(center)
        self.center.setflags(write=False)
        if not (float(radius) >= 0.0):
            raise ValueError("radius must be nonnegative")
        self.radius = float(radius)
        self.dim = self.center.shape[0]


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def distance(a, b, metric: Metric = EUCLIDEAN) -> float:
    """Distance between two points under the given metric."""
    pa = _as_coords(a)
    pb = _as_coords(b, pa.shape[0])
    keep = metric.resolve(pa.shape[0])
    d2 = (pa[0] - pb[0]) ** 2
    for c in range(1, keep):
        d2 += (pa[c] - pb[c]) ** 2
    return math.sqrt(d2)


def closest_pair(ps: PointSet, subset=None, metric: Metric = EUCLIDEAN) -> PairResult:
    """Closest pair over a subset of a point set, ties broken by the sorted
    index pair. Runs as a plane sweep along the widest coordinate axis.
    """
    keep = metric.resolve(ps.dim)
    if subset is None:
        ids = np.arange(ps.n, dtype=np.int64)
        xs = ps.coords[:, :keep]
    else:
        ids = np.asarray(subset, dtype=np.int64)
        xs = ps.coords[ids][:, :keep]
    if ids.shape[0] < 2:
        return NO_PAIR
    i, j, d2 = K.pair_best(np.ascontiguousarray(xs), ids)
    return PairResult.of(i, j, d2) if i >= 0 else NO_PAIR


def dualize_point(p) -> Hyperplane:
    """Point (a_1,...,a_d) -> hyperplane x_d = a_1 x_1 + ... + a_{d-1} x_{d-1} - a_d."""
    a = _as_coords(p)
    if a.shape[0] < 2:
        raise ValueError("duality needs dimension at least 2")
    return Hyperplane(a[:-1], a[-1])


def dualize_hyperplane(h: Hyperplane) -> np.ndarray:
    """Inverse of dualize_point; the round trip reproduces coordinates exactly."""
    return np.array([*h.coeffs, h.offset])


def point_side(p, h: Hyperplane) -> float:
    """Signed vertical residual of p against h: positive above, zero on,
    negative below."""
    a = _as_coords(p, h.dim)
    g = a[-1] + h.offset
    for c in range(h.dim - 1):
        g -= h.coeffs[c] * a[c]
    return g


def lift(p) -> np.ndarray:
    """Append the sum of squared coordinates: (x_1,...,x_d, sum x_i^2)."""
    a = _as_coords(p)
    return np.append(a, _sqnorm(a))


def lift_points(ps: PointSet) -> PointSet:
    out = np.empty((ps.n, ps.dim + 1))
    out[:, :-1] = ps.coords
    for i in range(ps.n):
        out[i, -1] = _sqnorm(ps.coords[i])
    return PointSet(out)


def ball_to_lifted_halfspace(ball: BallRange) -> HalfspaceRange:
    """Image of a ball under lifting: p in B(c, r) iff lift(p) lies below the
    hyperplane x_{d+1} = 2 c . x - (|c|^2 - r^2)."""
    c = ball.center
    return HalfspaceRange(
        Hyperplane(2.0 * c, _sqnorm(c) - ball.radius * ball.radius), "below")


def _hull_contains_small(vertices, p) -> bool:
    """Membership of p in the convex hull of at most d+1 points, valid for
    degenerate (flat) vertex sets. Caratheodory over affinely independent
    subsets; only exercised off the full-dimensional fast path."""
    v = vertices
    if bool(np.all(v == v[0])):
        return bool(np.array_equal(p, v[0]))
    m = v.shape[0]
    for size in range(2, m + 1):
        for sub in combinations(range(m), size):
            base = v[sub[0]]
            e = (v[list(sub[1:])] - base).T
            sol, res, rank, _ = np.linalg.lstsq(e, p - base, rcond=None)
            if rank < size - 1:
                continue
            recon = base + e @ sol
            if not np.allclose(recon, p, rtol=0.0, atol=1e-9 * max(1.0, float(np.abs(v).max()))):
                continue
            if (sol >= -1e-12).all() and sol.sum() <= 1.0 + 1e-12:
                return True
    return False


def contains(rng, p) -> bool:
    """Closed containment of a point in a range, per the range type."""
    a = _as_coords(p)
    if isinstance(rng, BoxRange):
        if rng.dim != a.shape[0]:
            raise ValueError("dimension mismatch")
        return bool(((a >= rng.lo) & (a <= rng.hi)).all())
    if isinstance(rng, HalfspaceRange):
        if rng.dim != a.shape[0]:
            raise ValueError("dimension mismatch")
        poly = rng.as_polytope()
        return bool(K.polytope_mask(a[None, :], poly.rows, poly.rhs)[0])
    if isinstance(rng, Polytope):
        if rng.dim != a.shape[0]:
            raise ValueError("dimension mismatch")
        return bool(K.polytope_mask(a[None, :], rng.rows, rng.rhs)[0])
    if isinstance(rng, SimplexRange):
        if rng.dim != a.shape[0]:
            raise ValueError("dimension mismatch")
        try:
            poly = rng.as_polytope()
        except ValueError:
            return _hull_contains_small(rng.vertices, a)
        return bool(K.polytope_mask(a[None, :], poly.rows, poly.rhs)[0])
    if isinstance(rng, BallRange):
        if rng.dim != a.shape[0]:
            raise ValueError("dimension mismatch")
        return bool(K.ball_mask(a[None, :], rng.center, rng.radius * rng.radius)[0])
    raise TypeError(f"unsupported range type {type(rng).__name__}")


def range_mask(rng, coords) -> np.ndarray:
    """Vectorized closed containment of every row of ``coords`` in ``rng``."""
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    if isinstance(rng, BoxRange):
        return K.box_mask(coords, rng.lo, rng.hi)
    if isinstance(rng, (HalfspaceRange, Polytope, SimplexRange)):
        poly = rng.as_polytope()
        return K.polytope_mask(coords, poly.rows, poly.rhs)
    if isinstance(rng, BallRange):
        return K.ball_mask(coords, rng.center, rng.radius * rng.radius)
    raise TypeError(f"unsupported range type {type(rng).__name__}")


def packing_bound(d: int) -> int:
    """Largest number of points, pairwise at least delta apart, that fit in a
    hypercube of side 2*delta: floor((3 delta)^d / vol_d(delta/2)).
    Evaluates to 11 for d=2 and 51 for d=3."""
    ball_vol = math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0) * 0.5 ** d
    return math.floor(3.0 ** d / ball_vol)
