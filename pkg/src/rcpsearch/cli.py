"""Command-line surface: build, query, verify, bench, reduce, gen.

Indexes are rebuilt per run; there is no on-disk index format. All file
formats are the plain-text ones documented in the README.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import harness
from .geometry import Metric, PointSet
from .hardness import SetIntersectionInstance, build_chain, reduce_cu_to_rcp, reduce_si_to_cu
from .harness import (
    QUERY_KIND_FOR_STRUCTURE,
    Workload,
    brute_rcp,
    format_answer,
    generate,
    generate_queries,
    read_points,
    read_queries,
    run_bench,
    run_verify,
    write_points,
    write_queries,
)


def _parse_metric(text: str) -> Metric:
    if text == "euclidean":
        return Metric.euclidean()
    if text.startswith("projected:"):
        return Metric.projected(int(text.split(":", 1)[1]))
    raise argparse.ArgumentTypeError(f"bad metric {text!r}; use euclidean or projected:K")


def _out(args, text: str):
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _add_common(p, structures):
    p.add_argument("--structure", required=True, choices=structures)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--r", type=int, default=None, help="partition/cutting size override")
    p.add_argument("--metric", type=_parse_metric, default=Metric.euclidean())
    p.add_argument("--out", default=None)


def cmd_build(args) -> int:
    ps = read_points(args.points)
    t0 = time.monotonic_ns()
    harness._build_structure(args.structure, ps, args.seed, args.r)
    build_ns = time.monotonic_ns() - t0
    _out(args, f"structure={args.structure}\nn={ps.n}\nd={ps.dim}\nbuild_ns={build_ns}\n")
    return 0


def cmd_query(args) -> int:
    ps = read_points(args.points)
    queries = read_queries(args.queries)
    if args.structure == "brute":
        answers = [brute_rcp(ps, q, args.metric) for q in queries]
    else:
        idx = harness._build_structure(args.structure, ps, args.seed, args.r)
        answers = [harness._query_structure(args.structure, idx, q) for q in queries]
    _out(args, "".join(format_answer(a) + "\n" for a in answers))
    return 0


def cmd_verify(args) -> int:
    w = Workload(args.points, args.queries, args.structure, args.seed, args.r, args.metric)
    report = run_verify(w)
    _out(args, report.render())
    return 0 if report.passed else 1


def cmd_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",")]
    report = run_bench(sizes, args.structure, args.dist, args.seed,
                       args.queries, d=args.d, r=args.r)
    _out(args, report.render())
    return 0


def cmd_gen(args) -> int:
    ps = generate(args.dist, args.n, args.d, args.seed)
    write_points(args.points, ps)
    if args.queries:
        kind = QUERY_KIND_FOR_STRUCTURE[args.structure]
        write_queries(args.queries, generate_queries(kind, args.query_count, ps, args.seed + 1))
    return 0


def cmd_reduce(args) -> int:
    sets = []
    with open(args.sets) as f:
        m = int(f.readline().split()[0])
        for _ in range(m):
            line = f.readline().split()
            sets.append([float(v) for v in line])
    inst = SetIntersectionInstance(sets)
    cu, mapper = reduce_si_to_cu(inst, args.eps)
    emb = reduce_cu_to_rcp(cu)

    prefix = args.out_prefix
    with open(prefix + ".colored", "w") as f:
        f.write(f"2 {cu.points.n} {cu.color_count}\n")
        for row, c in zip(cu.points.coords, cu.colors):
            f.write(f"{row[0]!r} {row[1]!r} {int(c)}\n")
    write_points(prefix + ".points3d", emb.points)
    boxes = []
    pairs = []
    for i in range(2, inst.m + 1):
        for j in range(1, i):
            if inst.sets[i - 1] and inst.sets[j - 1]:
                boxes.append(emb.query_box(mapper(i, j)))
                pairs.append((i, j))
    write_queries(prefix + ".queries", boxes)
    with open(prefix + ".map", "w") as f:
        f.write(f"m={inst.m}\nn={inst.total}\ndmax={emb.dmax!r}\nthreshold={emb.threshold!r}\n")
        for (i, j), _ in zip(pairs, boxes):
            f.write(f"{i} {j}\n")
    print(f"wrote {prefix}.colored, {prefix}.points3d, {prefix}.queries, {prefix}.map")
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="rcp", description="range closest-pair structures and harness")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("build", help="build a structure and report timings")
    p.add_argument("--points", required=True)
    _add_common(p, ["ortho", "simplex", "halfspace", "ball"])
    p.set_defaults(fn=cmd_build)

    p = sub.add_parser("query", help="answer a query file")
    p.add_argument("--points", required=True)
    p.add_argument("--queries", required=True)
    _add_common(p, ["ortho", "simplex", "halfspace", "ball", "brute"])
    p.set_defaults(fn=cmd_query)

    p = sub.add_parser("verify", help="compare a structure against the oracle")
    p.add_argument("--points", required=True)
    p.add_argument("--queries", required=True)
    _add_common(p, ["ortho", "simplex", "halfspace", "ball"])
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("bench", help="scaling benchmark over a size ladder")
    p.add_argument("--sizes", required=True, help="comma-separated point counts (>= 5)")
    p.add_argument("--dist", default="uniform", choices=harness.DISTRIBUTIONS)
    p.add_argument("--queries", type=int, default=200)
    p.add_argument("--d", type=int, default=2)
    _add_common(p, ["ortho", "simplex", "halfspace", "ball", "brute"])
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("gen", help="generate a points file (and queries)")
    p.add_argument("--dist", default="uniform", choices=harness.DISTRIBUTIONS)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--points", required=True)
    p.add_argument("--queries", default=None)
    p.add_argument("--query-count", type=int, default=200)
    p.add_argument("--structure", default="ortho",
                   choices=["ortho", "simplex", "halfspace", "ball"])
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("reduce", help="materialize the hardness reduction instances")
    p.add_argument("--sets", required=True, help="header m, then one line of reals per set")
    p.add_argument("--eps", type=float, default=0.25)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(fn=cmd_reduce)

    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
