"""Directed graph container (CSR adjacency) and query result record."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import UsageError
from .metric import DistanceCounter, PointSet


@dataclass(frozen=True, eq=False)
class NavGraph:
    """Directed graph over vertices ``0..n-1`` stored as CSR.

    For the greedy-permutation graph a vertex is a permutation rank and
    ``point_of`` maps it back to a point index; for the other constructions
    the mapping is the identity.  Out-lists are strictly ascending.
    """

    offsets: np.ndarray
    targets: np.ndarray
    point_of: np.ndarray
    kind: str
    eps_query: float = math.nan
    eps_build: float = math.nan
    alpha: float = math.nan
    # covering radius of the prefix ending at each rank; perm graphs only
    radii: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.float64))
    rank_of: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        rank_of = np.empty_like(self.point_of)
        rank_of[self.point_of] = np.arange(len(self.point_of), dtype=self.point_of.dtype)
        object.__setattr__(self, "rank_of", rank_of)

    @classmethod
    def from_edges(
        cls,
        n: int,
        src: np.ndarray,
        dst: np.ndarray,
        kind: str,
        point_of: Optional[np.ndarray] = None,
        dedupe: bool = True,
        **params,
    ) -> "NavGraph":
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        if dedupe and len(src):
            key = np.unique(src * n + dst)
            src, dst = key // n, key % n
        else:
            order = np.lexsort((dst, src))
            src, dst = src[order], dst[order]
        counts = np.bincount(src, minlength=n) if len(src) else np.zeros(n, dtype=np.int64)
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        if point_of is None:
            point_of = np.arange(n, dtype=np.int64)
        return cls(offsets, dst, np.asarray(point_of, dtype=np.int64), kind, **params)

    @property
    def n(self) -> int:
        return len(self.offsets) - 1

    @property
    def num_edges(self) -> int:
        return int(self.offsets[-1])

    def out(self, v: int) -> np.ndarray:
        return self.targets[self.offsets[v] : self.offsets[v + 1]]

    def out_degree(self) -> np.ndarray:
        return np.diff(self.offsets)

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.out_degree())
        return src, self.targets.copy()

    def edge_set(self) -> set[tuple[int, int]]:
        """Edges as (source point index, target point index) pairs."""
        src, dst = self.edges()
        return set(zip(self.point_of[src].tolist(), self.point_of[dst].tolist()))

    def has_sorted_out_lists(self) -> bool:
        if self.num_edges < 2:
            return True
        step = np.diff(self.targets)
        # a position starting a new out-list is exempt from the comparison
        row_start = np.zeros(self.num_edges, dtype=bool)
        row_start[self.offsets[:-1][self.out_degree() > 0]] = True
        return bool(np.all((step > 0) | row_start[1:]))

    def same_as(self, other: "NavGraph") -> bool:
        def feq(a: float, b: float) -> bool:
            return (math.isnan(a) and math.isnan(b)) or a == b

        return (
            self.kind == other.kind
            and np.array_equal(self.offsets, other.offsets)
            and np.array_equal(self.targets, other.targets)
            and np.array_equal(self.point_of, other.point_of)
            and np.array_equal(self.radii, other.radii)
            and feq(self.eps_query, other.eps_query)
            and feq(self.eps_build, other.eps_build)
            and feq(self.alpha, other.alpha)
        )


@dataclass
class RoutingResult:
    """Outcome of one walk. ``trace`` holds graph vertices (ranks for perm graphs)."""

    answer: int
    dist: float
    hops: int
    edges_scanned: int
    distance_evals: int
    trace: list[int]
    trace_dists: list[float]
    early_stopped: bool = False
    # destinations inspected, in order; filled only when debug tracing is on
    inspected: Optional[list[int]] = None
    phase_hops: Optional[tuple[int, ...]] = None


def mature_greedy_route(
    g: NavGraph,
    ps: PointSet,
    q: np.ndarray,
    start: int = 0,
    counter: Optional[DistanceCounter] = None,
) -> RoutingResult:
    """Evaluate every out-neighbor, move to the closest if strictly closer, else stop.

    ``start`` is a vertex id. Ties among equally close neighbors go to the
    lowest vertex id.
    """
    if not 0 <= start < g.n:
        raise UsageError(f"start vertex {start} out of range")
    counter = counter if counter is not None else DistanceCounter()
    evals0 = counter.count
    c = int(start)
    dc = ps.dist(q, int(g.point_of[c]), counter)
    trace, trace_d = [c], [dc]
    scanned = 0
    while True:
        nbrs = g.out(c)
        if len(nbrs) == 0:
            break
        d = ps.dists(q, g.point_of[nbrs], counter)
        scanned += len(nbrs)
        k = int(np.argmin(d))
        if d[k] < dc:
            c, dc = int(nbrs[k]), float(d[k])
            trace.append(c)
            trace_d.append(dc)
        else:
            break
    return RoutingResult(
        answer=int(g.point_of[c]),
        dist=dc,
        hops=len(trace) - 1,
        edges_scanned=scanned,
        distance_evals=counter.count - evals0,
        trace=trace,
        trace_dists=trace_d,
    )
