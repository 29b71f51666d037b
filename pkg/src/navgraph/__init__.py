"""Navigable proximity graphs answering (1+eps)-approximate nearest-neighbor
queries by greedy walks.

Three constructions are provided: the greedy-permutation graph (linear size,
independent of the spread), the WSPD graph with its two-graph variant, and
the slow-preprocessing robust-prune graph as a baseline.
"""

__version__ = "0.1.0"

from .errors import (
    DimensionMismatchError,
    DuplicatePointsError,
    GuaranteeViolation,
    IndexFormatError,
    NavGraphError,
    PointDataError,
    UnsupportedMetricError,
    UsageError,
    ZeroClosestPairError,
)
from .metric import (
    DistanceCounter,
    MetricKind,
    PointSet,
    distance,
    exact_nn,
    read_points,
    spread,
)
from .graph import NavGraph, RoutingResult, mature_greedy_route
from .greedy_perm import GreedyPermutation, attach_friend_lists, build_greedy_permutation
from .perm_graph import build_perm_graph, greedy_route, permutation_of, routing_eps
from .wspd import (
    WspdPair,
    WspdPairSet,
    build_wspd,
    build_wspd_graph,
    two_phase_route,
    wspd_greedy_route,
)
from .prune import (
    ApolloniusBall,
    PruneConfig,
    apollonius_ball,
    beam_search,
    build_slow_diskann,
    prune_figure_dump,
    robust_prune,
)
from .index import Index, build_index, load_index, save_index
from .bench import BenchReport, SuiteParams, run_accuracy_suite, run_scaling_suite
