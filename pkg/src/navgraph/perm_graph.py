"""Greedy-permutation navigable graph and impulsive greedy routing.

Calibration: a user asks for ``eps_query`` in (0, 1).  The graph is built
and routed with ``eps_r = min(eps_query, 1/2) / 4``: the walk itself then
returns a (1 + eps_r)-ANN, and the early-stop rule is evaluated at the
uncalibrated ``4 * eps_r`` so that early answers stay within
(1 + min(eps_query, 1/2)).
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .errors import UsageError
from .graph import NavGraph, RoutingResult
from .greedy_perm import GreedyPermutation, attach_friend_lists, build_greedy_permutation
from .metric import ArrayLike, DistanceCounter, PointSet

# Blocks of out-edges evaluated per numpy call while scanning; the first
# qualifying edge wins, so later entries of a block are discarded unscanned.
_FIRST_BLOCK = 32


def routing_eps(eps_query: float) -> float:
    """The calibrated build/routing parameter for a requested ``eps_query``."""
    if not 0.0 < eps_query < 1.0:
        raise UsageError(f"eps must lie in (0, 1), got {eps_query}")
    return min(eps_query, 0.5) / 4.0


def hop_bound(eps_query: float, spread: float) -> float:
    """Upper bound log(spread) / log(1 / (1 - eps_r/4)) + 2 on the number of moves."""
    er = routing_eps(eps_query)
    return math.log(spread) / -math.log1p(-er / 4.0) + 2.0


def graph_from_permutation(gp: GreedyPermutation, eps_query: float = math.nan) -> NavGraph:
    """Materialise edges (p_j -> p_i) for every j in F_i, vertices being ranks."""
    if gp.friends is None:
        raise UsageError("friend lists must be attached before building the graph")
    n = gp.n
    sizes = np.array([len(f) for f in gp.friends], dtype=np.int64)
    # edges appended in increasing destination rank
    dst = np.repeat(np.arange(n, dtype=np.int64), sizes)
    src = np.concatenate(gp.friends) if n else np.empty(0, dtype=np.int64)
    # stable grouping by source keeps each out-list in insertion order
    order = np.argsort(src, kind="stable")
    targets = dst[order]
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=offsets[1:])
    cover = np.zeros(n, dtype=np.float64)
    cover[: n - 1] = gp.radii
    g = NavGraph(
        offsets,
        targets,
        gp.order.astype(np.int64),
        "perm",
        eps_query=float(eps_query),
        eps_build=float(gp.eps_build),
        radii=cover,
    )
    assert g.has_sorted_out_lists(), "append order must already be ascending by rank"
    return g


def build_perm_graph(ps: PointSet, eps_query: float, start: int = 0) -> NavGraph:
    """Build the graph answering (1 + eps_query)-ANN queries by greedy routing."""
    eps_r = routing_eps(eps_query)
    gp = attach_friend_lists(build_greedy_permutation(ps, start), ps, eps_r)
    return graph_from_permutation(gp, eps_query)


def permutation_of(g: NavGraph) -> GreedyPermutation:
    """Recover the permutation, radii and friend lists stored in a perm graph.

    Friend list F_i is exactly the in-neighborhood of rank i.
    """
    if g.kind != "perm":
        raise UsageError(f"not a perm graph: {g.kind!r}")
    src, dst = g.edges()
    order = np.lexsort((src, dst))
    src, dst = src[order], dst[order]
    bounds = np.zeros(g.n + 1, dtype=np.int64)
    np.cumsum(np.bincount(dst, minlength=g.n), out=bounds[1:])
    friends = [src[bounds[i] : bounds[i + 1]] for i in range(g.n)]
    return GreedyPermutation(
        g.point_of.copy(),
        g.radii[: max(g.n - 1, 0)].copy(),
        friends=friends,
        eps_build=g.eps_build,
        start=int(g.point_of[0]),
    )


def greedy_route(
    g: NavGraph,
    ps: PointSet,
    q: ArrayLike,
    eps_query: Optional[float] = None,
    early_stop: bool = False,
    start_rank: int = 0,
    debug: bool = False,
    counter: Optional[DistanceCounter] = None,
) -> RoutingResult:
    """Impulsive greedy walk from ``p_1``.

    Out-edges of the current vertex are scanned by ascending rank; the walk
    moves on the first destination with ``d(q, p) <= (1 - eps_r/4) d(q, c)``
    and restarts the scan there.  It stops after a full scan without a move,
    or, with ``early_stop``, on the first inspected edge ``c -> p_i`` with
    ``d(q, p_i) > d(q, c)`` and ``r_i < (4 eps_r / 8) d(q, c)``.
    """
    if g.kind != "perm":
        raise UsageError(f"impulsive routing needs a perm graph, got {g.kind!r}")
    eps_r = g.eps_build if eps_query is None else routing_eps(eps_query)
    if eps_query is not None and eps_r != g.eps_build:
        raise UsageError(
            f"graph was built for eps_r={g.eps_build}, query asks for eps_r={eps_r}"
        )
    if not 0 <= start_rank < g.n:
        raise UsageError(f"start rank {start_rank} out of range")
    q = ps.check_query(q)
    counter = counter if counter is not None else DistanceCounter()
    evals0 = counter.count

    shrink = 1.0 - eps_r / 4.0
    stop_coef = (4.0 * eps_r) / 8.0
    cover = g.radii
    c = int(start_rank)
    dc = ps.dist(q, int(g.point_of[c]), counter)
    trace, trace_d = [c], [dc]
    inspected: Optional[list[int]] = [] if debug else None
    scanned = 0
    early = False

    while True:
        nbrs = g.out(c)
        m = len(nbrs)
        lo = 0
        step = _FIRST_BLOCK
        moved = False
        move_to_thr = shrink * dc
        stop_thr = stop_coef * dc
        while lo < m:
            hi = min(lo + step, m)
            block = nbrs[lo:hi]
            d = ps.dists(q, g.point_of[block])
            hit = d <= move_to_thr
            if early_stop:
                hit |= (d > dc) & (cover[block] < stop_thr)
            k = int(np.argmax(hit)) if hit.any() else -1
            seen = (hi - lo) if k < 0 else k + 1
            scanned += seen
            counter.add(seen)
            if inspected is not None:
                inspected.extend(block[:seen].tolist())
            if k >= 0:
                if d[k] <= move_to_thr:
                    c, dc = int(block[k]), float(d[k])
                    trace.append(c)
                    trace_d.append(dc)
                    moved = True
                else:
                    early = True
                break
            lo = hi
            step *= 2
        if early or not moved:
            break

    return RoutingResult(
        answer=int(g.point_of[c]),
        dist=dc,
        hops=len(trace) - 1,
        edges_scanned=scanned,
        distance_evals=counter.count - evals0,
        trace=trace,
        trace_dists=trace_d,
        early_stopped=early,
        inspected=inspected,
    )
