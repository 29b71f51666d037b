"""Robust-prune baseline: Apollonius balls, the slow-preprocessing graph,
beam search, and the prune figure dump."""

from __future__ import annotations

import heapq
import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import UsageError
from .graph import NavGraph, RoutingResult
from .metric import ArrayLike, DistanceCounter, MetricKind, PointSet, _as_point, pairwise_to


@dataclass(frozen=True)
class ApolloniusBall:
    center: np.ndarray
    radius: float
    kappa: float

    def contains(self, p: ArrayLike, tol: float = 0.0) -> bool:
        """Closed-ball membership in the Euclidean metric, ``tol`` added to the radius."""
        diff = _as_point(p) - self.center
        return float(np.sqrt((diff * diff).sum())) <= self.radius + tol


def apollonius_ball(u1: ArrayLike, u2: ArrayLike, kappa: float) -> ApolloniusBall:
    """Ball of points p with d(u1, p) >= kappa * d(u2, p) (Euclidean)."""
    u1 = _as_point(u1)
    u2 = _as_point(u2)
    if not kappa > 1.0:
        raise UsageError(f"kappa must exceed 1, got {kappa}")
    if u1.shape != u2.shape:
        raise UsageError("u1 and u2 must have the same dimension")
    if np.array_equal(u1, u2):
        raise UsageError("u1 and u2 must differ")
    k2 = kappa * kappa - 1.0
    xi = float(np.sqrt(((u2 - u1) ** 2).sum()))
    return ApolloniusBall(u2 + (u2 - u1) / k2, kappa / k2 * xi, float(kappa))


@dataclass(frozen=True)
class PruneConfig:
    alpha: float = 2.0
    degree_cap: Optional[int] = None

    def __post_init__(self) -> None:
        if not self.alpha > 1.0:
            raise UsageError(f"alpha must exceed 1, got {self.alpha}")
        if self.degree_cap is not None and self.degree_cap < 1:
            raise UsageError("degree_cap must be at least 1")


@dataclass
class PruneTrace:
    selected: list[int]
    # removed candidate -> selected center that removed it
    removed_by: dict[int, int]


def robust_prune_trace(
    ps: PointSet, v: int, candidates: Sequence[int], cfg: PruneConfig
) -> PruneTrace:
    cand = np.asarray(list(candidates), dtype=np.int64)
    if np.any(cand == v):
        raise UsageError("v must not be among its own candidates")
    if len(cand) == 0:
        return PruneTrace([], {})
    dv = ps.dists(ps.coords[v], cand)
    order = np.lexsort((cand, dv))
    cand, dv = cand[order], dv[order]
    alive = np.ones(len(cand), dtype=bool)
    selected: list[int] = []
    removed_by: dict[int, int] = {}
    head = 0
    while True:
        while head < len(cand) and not alive[head]:
            head += 1
        if head == len(cand):
            break
        p = int(cand[head])
        alive[head] = False
        selected.append(p)
        if cfg.degree_cap is not None and len(selected) >= cfg.degree_cap:
            break
        rest = np.flatnonzero(alive)
        if len(rest) == 0:
            break
        dp = ps.dists(ps.coords[p], cand[rest])
        kill = rest[cfg.alpha * dp < dv[rest]]
        alive[kill] = False
        for f in cand[kill].tolist():
            removed_by[f] = p
    return PruneTrace(selected, removed_by)


def robust_prune(ps: PointSet, v: int, candidates: Sequence[int], cfg: PruneConfig) -> list[int]:
    """Return the kept out-neighbors of ``v`` in selection order.

    Candidates are taken by increasing distance from ``v``; each kept ``p``
    discards every remaining ``f`` with ``alpha * d(p, f) < d(v, f)``.
    """
    return robust_prune_trace(ps, v, candidates, cfg).selected


def build_slow_diskann(ps: PointSet, alpha: float, degree_cap: Optional[int] = None) -> NavGraph:
    """Prune the full candidate set P \\ {v} for every vertex v."""
    cfg = PruneConfig(alpha, degree_cap)
    n = ps.n
    everyone = np.arange(n, dtype=np.int64)
    src, dst = [], []
    for v in range(n):
        out = robust_prune(ps, v, np.delete(everyone, v), cfg)
        src.append(np.full(len(out), v, dtype=np.int64))
        dst.append(np.asarray(out, dtype=np.int64))
    return NavGraph.from_edges(
        n,
        np.concatenate(src) if src else np.empty(0),
        np.concatenate(dst) if dst else np.empty(0),
        "diskann-slow",
        alpha=float(alpha),
    )


def beam_search(
    g: NavGraph,
    ps: PointSet,
    q: ArrayLike,
    beam: int,
    k: int = 1,
    start: int = 0,
) -> tuple[list[int], RoutingResult]:
    """Best-first exploration keeping the ``beam`` closest queued vertices.

    Each round expands the closest unexpanded vertex in the queue, queues its
    out-neighbors that were never queued before, and truncates the queue to
    the ``beam`` closest (ties by vertex id).  Returns the ``k`` closest
    expanded vertices as point indices, nearest first.
    """
    if not beam >= k >= 1:
        raise UsageError(f"need beam >= k >= 1, got beam={beam}, k={k}")
    q = ps.check_query(q)
    counter = DistanceCounter()
    d0 = ps.dist(q, int(g.point_of[start]), counter)
    queue: list[tuple[float, int]] = [(d0, start)]
    seen = {start}
    expanded: dict[int, float] = {}
    trace: list[int] = []
    trace_d: list[float] = []
    scanned = 0
    while True:
        nxt = next(((d, v) for d, v in queue if v not in expanded), None)
        if nxt is None:
            break
        dv, v = nxt
        expanded[v] = dv
        trace.append(v)
        trace_d.append(dv)
        nbrs = g.out(v)
        scanned += len(nbrs)
        fresh = [u for u in nbrs.tolist() if u not in seen]
        if fresh:
            seen.update(fresh)
            fd = ps.dists(q, g.point_of[np.asarray(fresh, dtype=np.int64)], counter)
            queue.extend(zip(fd.tolist(), fresh))
        queue = heapq.nsmallest(beam, queue)
    ranked = sorted(expanded.items(), key=lambda kv: (kv[1], kv[0]))[:k]
    best_v, best_d = ranked[0]
    result = RoutingResult(
        answer=int(g.point_of[best_v]),
        dist=best_d,
        hops=len(trace) - 1,
        edges_scanned=scanned,
        distance_evals=counter.count,
        trace=trace,
        trace_dists=trace_d,
    )
    return [int(g.point_of[v]) for v, _ in ranked], result


@dataclass
class PruneFigure:
    v: int
    alpha: float
    selected: list[int]
    disks: list[ApolloniusBall]
    removed_by: dict[int, int]
    coords: np.ndarray

    def rows(self) -> list[tuple[str, float, float, float]]:
        out = [("selected", float(self.coords[p, 0]), float(self.coords[p, 1]), 0.0) for p in self.selected]
        out += [("disk", float(b.center[0]), float(b.center[1]), float(b.radius)) for b in self.disks]
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("kind,center_x,center_y,radius\n")
        for kind, x, y, r in self.rows():
            buf.write(f"{kind},{x!r},{y!r},{r!r}\n")
        return buf.getvalue()

    def to_svg(self, size: int = 800) -> str:
        pts = self.coords
        lo = pts.min(axis=0)
        span = float((pts.max(axis=0) - lo).max()) or 1.0
        pad = 0.05 * span
        scale = size / (span + 2 * pad)

        def xy(p):
            return (float(p[0] - lo[0] + pad) * scale, float(span + pad - (p[1] - lo[1])) * scale)

        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
            f'viewBox="0 0 {size} {size}">',
            '<rect width="100%" height="100%" fill="white"/>',
        ]
        for b in self.disks:
            cx, cy = xy(b.center)
            parts.append(
                f'<circle cx="{cx:.3f}" cy="{cy:.3f}" r="{b.radius * scale:.3f}" '
                'fill="none" stroke="steelblue" stroke-width="0.8"/>'
            )
        vx, vy = xy(pts[self.v])
        parts.append(f'<circle cx="{vx:.3f}" cy="{vy:.3f}" r="4" fill="crimson"/>')
        for p in self.selected:
            cx, cy = xy(pts[p])
            parts.append(f'<circle cx="{cx:.3f}" cy="{cy:.3f}" r="1.6" fill="black"/>')
        parts.append("</svg>")
        return "\n".join(parts) + "\n"


def prune_figure_dump(ps: PointSet, v: int, alpha: float) -> PruneFigure:
    """Run robust prune for ``v`` over all other points and keep every disk used."""
    if ps.d != 2:
        raise UsageError("the prune figure needs 2D points")
    if ps.metric is not MetricKind.L2:
        raise UsageError("Apollonius disks are Euclidean; use the l2 metric")
    cfg = PruneConfig(alpha)
    others = np.delete(np.arange(ps.n, dtype=np.int64), v)
    tr = robust_prune_trace(ps, v, others, cfg)
    disks = [apollonius_ball(ps.coords[v], ps.coords[p], alpha) for p in tr.selected]
    return PruneFigure(v, float(alpha), tr.selected, disks, tr.removed_by, ps.coords)


def removal_by_ball(ps: PointSet, v: int, p: int, candidates: np.ndarray, alpha: float) -> np.ndarray:
    """Mask of candidates strictly inside the Apollonius ball of (v, p, alpha)."""
    ball = apollonius_ball(ps.coords[v], ps.coords[p], alpha)
    return pairwise_to(ps.coords[candidates], ball.center, MetricKind.L2) < ball.radius


def gamma_bound(alpha: float) -> float:
    """Approximation factor (alpha + 1) / (alpha - 1) of greedy routing on alpha-navigable graphs."""
    return (alpha + 1.0) / (alpha - 1.0)


def navigability_violations(g: NavGraph, ps: PointSet, alpha: float) -> list[tuple[int, int]]:
    """All ordered pairs (s, t) for which neither s -> t nor a y with
    d(y, t) < d(s, t) / alpha among the out-neighbors of s exists."""
    bad = []
    X = ps.coords
    for s in range(g.n):
        nb = g.out(s)
        ps_s = int(g.point_of[s])
        d_st = pairwise_to(X, X[ps_s], ps.metric)
        linked = np.zeros(ps.n, dtype=bool)
        linked[g.point_of[nb]] = True
        if len(nb):
            # min over neighbors y of d(y, t), for every t
            Y = X[g.point_of[nb]]
            best = np.full(ps.n, math.inf)
            for row in Y:
                np.minimum(best, pairwise_to(X, row, ps.metric), out=best)
        else:
            best = np.full(ps.n, math.inf)
        ok = linked | (best < d_st / alpha)
        ok[ps_s] = True
        bad.extend((ps_s, int(t)) for t in np.flatnonzero(~ok))
    return bad
