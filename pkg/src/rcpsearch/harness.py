"""Brute-force oracle, instance generation, file formats, verify and bench.

The oracle and the generators are the ground truth every structure is tested
against; keep them boring. File formats are line-oriented plain text with
shortest-round-trip decimal floats so runs diff cleanly.
"""

from __future__ import annotations

import math
import os
import platform
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .geometry import (
    EUCLIDEAN,
    BallRange,
    BoxRange,
    HalfspaceRange,
    Hyperplane,
    Metric,
    NO_PAIR,
    PairResult,
    PointSet,
    SimplexRange,
    range_mask,
)
from .stats import QueryStats

DISTRIBUTIONS = ("uniform", "clustered", "grid", "degenerate-duplicates")
STRUCTURES = ("ortho", "simplex", "halfspace", "ball", "brute")


def rcp_threads() -> int:
    """Parallelism cap from RCP_THREADS (0 = sequential). The implementation
    is sequential throughout, which satisfies any cap."""
    try:
        return max(0, int(os.environ.get("RCP_THREADS", "0")))
    except ValueError:
        return 0


# ---------------------------------------------------------------------------
# oracle
# ---------------------------------------------------------------------------


def brute_rcp(ps: PointSet, rng, metric: Metric = EUCLIDEAN) -> PairResult:
    """Filter by containment, then quadratic scan with the global tie-break."""
    if ps.n == 0:
        return NO_PAIR
    mask = range_mask(rng, ps.coords)
    ids = np.flatnonzero(mask).astype(np.int64)
    if ids.shape[0] < 2:
        return NO_PAIR
    keep = metric.resolve(ps.dim)
    xs = np.ascontiguousarray(ps.coords[ids][:, :keep])
    i, j, d2 = K.pair_scan(xs, ids)
    return PairResult.of(i, j, d2) if i >= 0 else NO_PAIR


# ---------------------------------------------------------------------------
# point generation
# ---------------------------------------------------------------------------


def generate(dist: str, n: int, d: int, seed: int) -> PointSet:
    """Deterministic point sets per (dist, n, d, seed).

    uniform: i.i.d. in [0,1]^d. clustered: Gaussian blobs around ~sqrt(n)/2
    centers. grid: the first n nodes of the smallest lattice holding n points.
    degenerate-duplicates: uniform with exact duplicates injected at rate 1%.
    """
    if n < 0 or d < 1:
        raise ValueError("need n >= 0 and d >= 1")
    rng = np.random.default_rng(seed)
    if dist == "uniform":
        pts = rng.random((n, d))
    elif dist == "clustered":
        k = max(1, int(round(math.sqrt(n) / 2)))
        centers = rng.random((k, d))
        which = rng.integers(0, k, size=n)
        pts = centers[which] + rng.normal(0.0, 0.02, size=(n, d))
    elif dist == "grid":
        side = max(1, math.ceil(n ** (1.0 / d)))
        idx = np.arange(n)
        pts = np.empty((n, d))
        for c in range(d - 1, -1, -1):
            pts[:, c] = idx % side
            idx = idx // side
    elif dist == "degenerate-duplicates":
        pts = rng.random((n, d))
        if n >= 2:
            ndup = math.ceil(0.01 * n)
            slots = rng.choice(np.arange(1, n), size=ndup, replace=False)
            for s in np.sort(slots):
                src = int(rng.integers(0, s))
                pts[s] = pts[src]
    else:
        raise ValueError(f"unknown distribution {dist!r}")
    return PointSet(pts.reshape(n, d))


def _inflate(lo, hi, factor=3.0, margin=1.0):
    mid = (lo + hi) / 2.0
    half = (hi - lo) / 2.0 * factor + margin
    return mid - half, mid + half


def generate_queries(kind: str, count: int, ps: PointSet, seed: int):
    """Seeded query ranges sized against the data extent.

    Halfspace queries are drawn by sampling their duals inside the inflated
    dual extent of the data, so the dual-cutting cover always holds them.
    """
    rng = np.random.default_rng(seed)
    lo, hi = ps.bounds()
    span = np.maximum(hi - lo, 1e-9)
    out = []
    for _ in range(count):
        if kind == "box":
            a = lo + rng.random(ps.dim) * span
            b = lo + rng.random(ps.dim) * span
            out.append(BoxRange(np.minimum(a, b), np.maximum(a, b)))
        elif kind == "simplex":
            scale = 0.35 + 0.9 * rng.random()
            base = lo + rng.random(ps.dim) * span
            verts = base + (rng.random((ps.dim + 1, ps.dim)) - 0.5) * span * scale
            out.append(SimplexRange(verts))
        elif kind == "halfspace":
            dual_lo, dual_hi = _inflate(lo, hi, 1.5, 0.25)
            dual = dual_lo + rng.random(ps.dim) * (dual_hi - dual_lo)
            side = "below" if rng.random() < 0.5 else "above"
            out.append(HalfspaceRange(Hyperplane(dual[:-1], dual[-1]), side))
        elif kind == "ball":
            center = lo + rng.random(ps.dim) * span
            radius = float(rng.random() * 0.75 * np.linalg.norm(span))
            out.append(BallRange(center, radius))
        else:
            raise ValueError(f"unknown query kind {kind!r}")
    return out


QUERY_KIND_FOR_STRUCTURE = {
    "ortho": "box",
    "simplex": "simplex",
    "halfspace": "halfspace",
    "ball": "ball",
}


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def write_points(path, ps: PointSet):
    with open(path, "w") as f:
        f.write(f"{ps.dim} {ps.n}\n")
        for row in ps.coords:
            f.write(" ".join(_fmt(v) for v in row) + "\n")


def read_points(path) -> PointSet:
    with open(path) as f:
        header = f.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}:1: expected header 'd n'")
        d, n = int(header[0]), int(header[1])
        rows = np.empty((n, d))
        for i in range(n):
            parts = f.readline().split()
            if len(parts) != d:
                raise ValueError(f"{path}:{i + 2}: expected {d} coordinates")
            rows[i] = [float(p) for p in parts]
    return PointSet(rows)


def format_query(q) -> str:
    if isinstance(q, BoxRange):
        vals = list(q.lo) + list(q.hi)
        return "BOX " + " ".join(_fmt(v) for v in vals)
    if isinstance(q, SimplexRange):
        return "SIMPLEX " + " ".join(_fmt(v) for v in q.vertices.ravel())
    if isinstance(q, HalfspaceRange):
        vals = list(q.plane.coeffs) + [q.plane.offset]
        return "HALFSPACE " + " ".join(_fmt(v) for v in vals) + f" {q.side}"
    if isinstance(q, BallRange):
        vals = list(q.center) + [q.radius]
        return "BALL " + " ".join(_fmt(v) for v in vals)
    raise TypeError(f"unsupported query type {type(q).__name__}")


def parse_query(line: str, lineno: int = 0, where: str = "<queries>"):
    parts = line.split()
    if not parts:
        raise ValueError(f"{where}:{lineno}: empty query record")
    tag, rest = parts[0], parts[1:]
    try:
        if tag == "BOX":
            if len(rest) % 2:
                raise ValueError("odd coordinate count")
            d = len(rest) // 2
            vals = [float(v) for v in rest]
            return BoxRange(vals[:d], vals[d:])
        if tag == "SIMPLEX":
            vals = [float(v) for v in rest]
            d = int((-1 + math.isqrt(1 + 4 * len(vals))) // 2)
            if (d + 1) * d != len(vals):
                raise ValueError("vertex count does not form a simplex")
            return SimplexRange(np.array(vals).reshape(d + 1, d))
        if tag == "HALFSPACE":
            side = rest[-1]
            vals = [float(v) for v in rest[:-1]]
            return HalfspaceRange(Hyperplane(vals[:-1], vals[-1]), side)
        if tag == "BALL":
            vals = [float(v) for v in rest]
            return BallRange(vals[:-1], vals[-1])
    except ValueError as e:
        raise ValueError(f"{where}:{lineno}: bad {tag} record: {e}") from None
    raise ValueError(f"{where}:{lineno}: unknown query tag {tag!r}")


def write_queries(path, queries):
    with open(path, "w") as f:
        for q in queries:
            f.write(format_query(q) + "\n")


def read_queries(path):
    out = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            if line.strip():
                out.append(parse_query(line, lineno, str(path)))
    return out


def format_answer(res: PairResult) -> str:
    if not res.found:
        return "NONE"
    return f"PAIR {res.i} {res.j} {_fmt(res.dist)}"


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Workload:
    """A points file plus a queries file and the structure to run them on."""

    points_file: str
    queries_file: str
    structure: str
    seed: int = 0
    r: int | None = None
    metric: Metric = EUCLIDEAN


def _build_structure(name: str, ps: PointSet, seed: int, r=None, validate=False):
    from .halfspace import build_ball, build_halfspace
    from .ortho import build_ortho
    from .simplex import build_simplex

    if name == "ortho":
        return build_ortho(ps, validate=validate)
    if name == "simplex":
        return build_simplex(ps, r=r, validate=validate)
    if name == "halfspace":
        return build_halfspace(ps, r=r, seed=seed, validate=validate)
    if name == "ball":
        return build_ball(ps, r=r, seed=seed, validate=validate)
    raise ValueError(f"unknown structure {name!r}")


def _query_structure(name: str, idx, q, stats=None):
    from .halfspace import query_ball, query_halfspace
    from .ortho import query_ortho
    from .simplex import query_simplex

    if name == "ortho":
        return query_ortho(idx, q, stats=stats)
    if name == "simplex":
        return query_simplex(idx, q, stats=stats)
    if name == "halfspace":
        return query_halfspace(idx, q, stats=stats)
    if name == "ball":
        return query_ball(idx, q, stats=stats)
    raise ValueError(f"unknown structure {name!r}")


@dataclass
class VerifyReport:
    structure: str
    n: int
    dim: int
    queries: int
    mismatches: list
    lines: list

    @property
    def passed(self) -> bool:
        return not self.mismatches

    def render(self) -> str:
        return "\n".join(self.lines) + "\n"


def run_verify(w: Workload) -> VerifyReport:
    """Answer every query with the structure and with brute_rcp; report any
    disagreement (expected: none). Output is deterministic given the inputs."""
    ps = read_points(w.points_file)
    queries = read_queries(w.queries_file)
    if w.structure not in QUERY_KIND_FOR_STRUCTURE:
        raise ValueError(f"cannot verify structure {w.structure!r}")
    idx = _build_structure(w.structure, ps, w.seed, w.r, validate=True)
    mismatches = []
    lines = [
        f"points={w.points_file}",
        f"queries={w.queries_file}",
        f"structure={w.structure}",
        f"n={ps.n}",
        f"d={ps.dim}",
        f"seed={w.seed}",
        f"query_count={len(queries)}",
    ]
    for qi, q in enumerate(queries):
        got = _query_structure(w.structure, idx, q)
        want = brute_rcp(ps, q, w.metric)
        if got != want:
            mismatches.append((qi, got, want))
    lines.append(f"mismatches={len(mismatches)}")
    for qi, got, want in mismatches:
        lines.append(f"q{qi}\tgot={format_answer(got)}\twant={format_answer(want)}")
    lines.append("status=" + ("PASS" if not mismatches else "FAIL"))
    return VerifyReport(w.structure, ps.n, ps.dim, len(queries), mismatches, lines)


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------


@dataclass
class BenchRow:
    n: int
    build_ns: int
    query_mean_ns: float
    query_median_ns: float
    query_mom_ns: float
    touched_mean: float

    def fields(self):
        return [
            str(self.n),
            str(self.build_ns),
            _fmt(self.query_mean_ns),
            _fmt(self.query_median_ns),
            _fmt(self.query_mom_ns),
            _fmt(self.touched_mean),
        ]

    @staticmethod
    def parse(line: str) -> "BenchRow":
        p = line.split("\t")
        return BenchRow(int(p[0]), int(p[1]), float(p[2]), float(p[3]),
                        float(p[4]), float(p[5]))


@dataclass
class BenchReport:
    structure: str
    dist: str
    dim: int
    seed: int
    rows: list = field(default_factory=list)
    slope: float | None = None
    env: dict = field(default_factory=dict)

    HEADER = "n\tbuild_ns\tquery_mean_ns\tquery_median_ns\tquery_mom_ns\ttouched_mean"

    def render(self) -> str:
        lines = [f"structure={self.structure}", f"dist={self.dist}",
                 f"d={self.dim}", f"seed={self.seed}"]
        lines += [f"env.{k}={v}" for k, v in sorted(self.env.items())]
        lines.append(f"slope={'NA' if self.slope is None else _fmt(self.slope)}")
        lines.append(self.HEADER)
        lines += ["\t".join(r.fields()) for r in self.rows]
        return "\n".join(lines) + "\n"


def _median_of_means(samples_ns, groups: int = 30) -> float:
    samples = np.asarray(samples_ns, dtype=np.float64)
    if samples.size == 0:
        return 0.0
    groups = min(groups, samples.size)
    chunks = np.array_split(samples, groups)
    return float(np.median([c.mean() for c in chunks]))


def fit_loglog_slope(ns, ys) -> float:
    """Least-squares slope of log2(y) against log2(n)."""
    x = np.log2(np.asarray(ns, dtype=np.float64))
    y = np.log2(np.maximum(np.asarray(ys, dtype=np.float64), 1e-9))
    x = x - x.mean()
    return float((x * y).sum() / (x * x).sum())


def env_stamp() -> dict:
    import numpy

    stamp = {
        "platform": platform.platform(),
        "python": sys.version.split()[0],
        "numpy": numpy.__version__,
        "kernels": K.KERNEL_PATH,
        "rcp_threads": rcp_threads(),
    }
    if K.HAVE_NUMBA:
        import numba

        stamp["numba"] = numba.__version__
    return stamp


def run_bench(sizes, structure: str, dist: str, seed: int, queries_per_size: int,
              d: int = 2, warmup: int = 10, r=None) -> BenchReport:
    """Build per size, run the query batch, and fit the log-log slope of the
    median query time. ``structure='brute'`` benchmarks the oracle itself."""
    sizes = sorted(int(n) for n in sizes)
    if len(sizes) < 5:
        raise ValueError("bench needs at least 5 sizes for a trustworthy slope")
    if structure not in STRUCTURES:
        raise ValueError(f"unknown structure {structure!r}")
    kind = QUERY_KIND_FOR_STRUCTURE.get(structure, "box")
    report = BenchReport(structure, dist, d, seed, env=env_stamp())
    K.warmup()
    for n in sizes:
        ps = generate(dist, n, d, seed)
        queries = generate_queries(kind, queries_per_size + (warmup if queries_per_size else 0),
                                   ps, seed + 1)
        t0 = time.monotonic_ns()
        if structure == "brute":
            idx = None
        else:
            idx = _build_structure(structure, ps, seed, r=r)
        build_ns = time.monotonic_ns() - t0
        times = []
        touched = []
        for qi, q in enumerate(queries):
            st = QueryStats()
            t0 = time.monotonic_ns()
            if structure == "brute":
                brute_rcp(ps, q)
                st.touched = ps.n
            else:
                _query_structure(structure, idx, q, stats=st)
            dt = time.monotonic_ns() - t0
            if qi >= warmup or not queries_per_size:
                times.append(dt)
                touched.append(st.touched)
        report.rows.append(BenchRow(
            n=n,
            build_ns=build_ns,
            query_mean_ns=float(np.mean(times)) if times else 0.0,
            query_median_ns=float(np.median(times)) if times else 0.0,
            query_mom_ns=_median_of_means(times),
            touched_mean=float(np.mean(touched)) if touched else 0.0,
        ))
    if queries_per_size:
        report.slope = fit_loglog_slope(
            [r_.n for r_ in report.rows], [r_.query_median_ns for r_ in report.rows])
    return report
