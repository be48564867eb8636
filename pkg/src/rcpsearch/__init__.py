"""Range closest-pair (RCP) search structures for orthogonal, simplex,
halfspace, and ball queries in R^d, with a brute-force oracle, hardness
reductions, and a benchmark harness."""

from .geometry import (
    BallRange,
    BoxRange,
    EUCLIDEAN,
    HalfspaceRange,
    Hyperplane,
    Metric,
    NO_PAIR,
    PairResult,
    PointSet,
    Polytope,
    SimplexRange,
    closest_pair,
    contains,
    distance,
    dualize_hyperplane,
    dualize_point,
    lift,
    lift_points,
    packing_bound,
)
from .halfspace import (
    BallRcpIndex,
    HalfspaceRcpIndex,
    build_ball,
    build_halfspace,
    query_ball,
    query_halfspace,
)
from .hardness import (
    ColorUniquenessInstance,
    RcpEmbedding3D,
    ReductionChain,
    SetIntersectionInstance,
    build_chain,
    reduce_cu_to_rcp,
    reduce_si_to_cu,
    solve_si_via_rcp,
)
from .harness import (
    BenchReport,
    VerifyReport,
    Workload,
    brute_rcp,
    generate,
    generate_queries,
    run_bench,
    run_verify,
)
from .ortho import OrthoRcpIndex, build_ortho, query_ortho
from .partitions import (
    Cutting,
    CuttingError,
    SimplicialPartition,
    build_cutting,
    build_partition,
    crossing_count,
    locate,
)
from .reporting import (
    MultiLevelReporter,
    PartitionTree,
    RangeTree,
    build_box_halfspace_reporter,
    build_box_simplex_reporter,
    build_partition_tree,
    build_range_tree,
    canonical_nodes,
    report_box,
    report_box_halfspace,
    report_box_simplex,
    report_halfspace,
    report_simplex,
)
from .simplex import SimplexRcpIndex, build_simplex, query_simplex
from .stats import QueryStats

__version__ = "0.1.0"
