"""Well-separated pair decomposition over a compressed quadtree, the
WSPD navigable graph, and greedy / two-phase routing on it.

Separation is decided on the tight bounding boxes of the points stored in
each node: the box diagonal bounds the set diameter from above and the box
gap bounds the set distance from below, so every emitted pair satisfies
``max(diam A, diam B) <= sep * d(A, B)`` for the actual point sets.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Iterator, Optional, TextIO

import numpy as np

from .errors import UnsupportedMetricError, UsageError
from .graph import NavGraph, RoutingResult, mature_greedy_route
from .metric import ArrayLike, DistanceCounter, MetricKind, PointSet, _block_distances

# Root cell side is the bounding-box extent inflated by this factor.
ROOT_INFLATE = 1.01


@dataclass(frozen=True, eq=False)
class QuadTree:
    """Compressed quadtree laid out in arrays.

    ``perm[start[v]:end[v]]`` are the point indices stored under node ``v``;
    ``children[child_off[v]:child_off[v+1]]`` its children.  Node 0 is the root.
    """

    perm: np.ndarray
    start: np.ndarray
    end: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    diam: np.ndarray
    rep: np.ndarray
    child_off: np.ndarray
    children: np.ndarray
    metric: MetricKind

    @property
    def num_nodes(self) -> int:
        return len(self.start)

    def points(self, v: int) -> np.ndarray:
        return self.perm[self.start[v] : self.end[v]]

    def kids(self, v: int) -> np.ndarray:
        return self.children[self.child_off[v] : self.child_off[v + 1]]

    def size(self, v) -> np.ndarray:
        return self.end[v] - self.start[v]


def _box_diameter(lo: np.ndarray, hi: np.ndarray, metric: MetricKind) -> np.ndarray:
    side = hi - lo
    if metric is MetricKind.L2:
        return np.sqrt((side * side).sum(axis=-1))
    return side.max(axis=-1)


def _box_gap(lo_a, hi_a, lo_b, hi_b, metric: MetricKind) -> np.ndarray:
    gap = np.maximum(0.0, np.maximum(lo_b - hi_a, lo_a - hi_b))
    if metric is MetricKind.L2:
        return np.sqrt((gap * gap).sum(axis=-1))
    return gap.max(axis=-1)


def _check_metric(ps: PointSet) -> None:
    if ps.metric is MetricKind.L1:
        raise UnsupportedMetricError("the quadtree WSPD supports only the l2 and linf metrics")


def build_quadtree(ps: PointSet) -> QuadTree:
    _check_metric(ps)
    X = ps.coords
    n, d = X.shape
    weights = 1 << np.arange(d, dtype=np.int64)

    lo0, hi0 = X.min(axis=0), X.max(axis=0)
    half0 = max(float((hi0 - lo0).max()), 0.0) / 2.0 * ROOT_INFLATE
    if half0 == 0.0:
        half0 = 1.0
    center0 = (lo0 + hi0) / 2.0

    perm = np.empty(n, dtype=np.int64)
    start: list[int] = []
    end: list[int] = []
    kids: list[list[int]] = []

    def new_node(s: int, e: int) -> int:
        start.append(s)
        end.append(e)
        kids.append([])
        return len(start) - 1

    root = new_node(0, n)
    stack = [(root, np.arange(n, dtype=np.int64), center0, half0)]
    while stack:
        v, idx, center, half = stack.pop()
        s = start[v]
        if len(idx) == 1:
            perm[s] = idx[0]
            continue
        pts = X[idx]
        groups: Optional[list[tuple[np.ndarray, np.ndarray, float]]] = None
        while True:
            codes = ((pts >= center).astype(np.int64) * weights).sum(axis=1)
            uniq = np.unique(codes)
            if len(uniq) > 1:
                groups = []
                for code in uniq:
                    bits = (code & weights) > 0
                    c_center = center + np.where(bits, 0.5, -0.5) * half
                    groups.append((idx[codes == code], c_center, half / 2.0))
                break
            # every point in one child: shrink the cell (path compression)
            bits = (uniq[0] & weights) > 0
            nxt = center + np.where(bits, 0.5, -0.5) * half
            if half / 2.0 == 0.0 or np.array_equal(nxt, center):
                break
            center, half = nxt, half / 2.0
        if groups is None:
            # cell arithmetic ran out of precision; split on the widest axis
            plo, phi = pts.min(axis=0), pts.max(axis=0)
            k = int(np.argmax(phi - plo))
            upper = pts[:, k] == phi[k]
            groups = []
            for mask in (~upper, upper):
                sub = idx[mask]
                sp = X[sub]
                c_lo, c_hi = sp.min(axis=0), sp.max(axis=0)
                groups.append((sub, (c_lo + c_hi) / 2.0, max(float((c_hi - c_lo).max()), 1e-300)))
        pos = s
        made = []
        for sub, c_center, c_half in groups:
            c = new_node(pos, pos + len(sub))
            made.append((c, sub, c_center, c_half))
            kids[v].append(c)
            pos += len(sub)
        # reversed push keeps the DFS order aligned with the child order
        for item in reversed(made):
            stack.append(item)

    start_a = np.array(start, dtype=np.int64)
    end_a = np.array(end, dtype=np.int64)
    m = len(start_a)
    lo = np.empty((m, d))
    hi = np.empty((m, d))
    rep = np.empty(m, dtype=np.int64)
    for v in range(m):
        p = perm[start_a[v] : end_a[v]]
        sub = X[p]
        lo[v] = sub.min(axis=0)
        hi[v] = sub.max(axis=0)
        rep[v] = p.min()
    child_off = np.zeros(m + 1, dtype=np.int64)
    np.cumsum([len(k) for k in kids], out=child_off[1:])
    children = np.array([c for k in kids for c in k], dtype=np.int64)
    return QuadTree(
        perm, start_a, end_a, lo, hi, _box_diameter(lo, hi, ps.metric), rep,
        child_off, children, ps.metric,
    )


@dataclass(frozen=True)
class WspdPair:
    a_set: tuple[int, ...]
    b_set: tuple[int, ...]
    rep_a: int
    rep_b: int


@dataclass(frozen=True, eq=False)
class WspdPairSet:
    """Pairs of quadtree nodes; each realises ``A x B`` for its two point sets."""

    tree: QuadTree
    a_nodes: np.ndarray
    b_nodes: np.ndarray
    eps_sep: float

    def __len__(self) -> int:
        return len(self.a_nodes)

    def pair(self, k: int) -> WspdPair:
        a, b = int(self.a_nodes[k]), int(self.b_nodes[k])
        t = self.tree
        return WspdPair(
            tuple(sorted(t.points(a).tolist())),
            tuple(sorted(t.points(b).tolist())),
            int(t.rep[a]),
            int(t.rep[b]),
        )

    def __iter__(self) -> Iterator[WspdPair]:
        for k in range(len(self)):
            yield self.pair(k)

    def participation(self, n: int) -> np.ndarray:
        """Number of pairs each point belongs to (on either side)."""
        t = self.tree
        pts = np.concatenate([
            _expand_ranges(t.start[self.a_nodes], t.end[self.a_nodes], t.perm),
            _expand_ranges(t.start[self.b_nodes], t.end[self.b_nodes], t.perm),
        ])
        return np.bincount(pts, minlength=n)

    def dump(self, ps: PointSet, out: Optional[TextIO] = None) -> str:
        """Debug listing, one line per pair: ``A:{..} B:{..} repA repB sep_ratio``.

        ``sep_ratio`` is max(diam A, diam B) / d(A, B) computed exactly.
        """
        buf = out if out is not None else io.StringIO()
        for p in self:
            a = np.array(p.a_set)
            b = np.array(p.b_set)
            ratio = exact_separation_ratio(ps, a, b)
            buf.write(
                "A:{%s} B:{%s} %d %d %.6g\n"
                % (",".join(map(str, p.a_set)), ",".join(map(str, p.b_set)), p.rep_a, p.rep_b, ratio)
            )
        return buf.getvalue() if out is None else ""


def exact_separation_ratio(ps: PointSet, a: np.ndarray, b: np.ndarray) -> float:
    """max(diam a, diam b) / d(a, b) by brute force."""
    A, B = ps.coords[a], ps.coords[b]
    da = float(_block_distances(A, A, ps.metric).max())
    db = float(_block_distances(B, B, ps.metric).max())
    gap = float(_block_distances(A, B, ps.metric).min())
    return max(da, db) / gap


def _expand_ranges(starts: np.ndarray, ends: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Concatenate ``values[s:e]`` over all (s, e) without a Python loop."""
    lens = ends - starts
    total = int(lens.sum())
    if total == 0:
        return np.empty(0, dtype=values.dtype)
    first = np.repeat(starts - np.concatenate(([0], np.cumsum(lens)[:-1])), lens)
    return values[first + np.arange(total)]


def build_wspd(ps: PointSet, sep: float, tree: Optional[QuadTree] = None) -> WspdPairSet:
    """(1/sep)-WSPD: every pair has max(diam A, diam B) <= sep * d(A, B).

    Each unordered pair of distinct points lies across exactly one pair.
    """
    _check_metric(ps)
    if not 0.0 < sep <= 1.0:
        raise UsageError(f"separation parameter must lie in (0, 1], got {sep}")
    if ps.n < 2:
        raise UsageError("a WSPD needs at least two points")
    t = tree if tree is not None else build_quadtree(ps)

    # seed: every pair of siblings under every internal node
    us, vs = [], []
    nkids = np.diff(t.child_off)
    for v in np.flatnonzero(nkids > 1):
        k = t.kids(int(v))
        i, j = np.triu_indices(len(k), 1)
        us.append(k[i])
        vs.append(k[j])
    U = np.concatenate(us)
    V = np.concatenate(vs)

    out_a, out_b = [], []
    while len(U):
        gap = _box_gap(t.lo[U], t.hi[U], t.lo[V], t.hi[V], t.metric)
        ok = np.maximum(t.diam[U], t.diam[V]) <= sep * gap
        out_a.append(U[ok])
        out_b.append(V[ok])
        U, V = U[~ok], V[~ok]
        # split the side with the larger box
        swap = t.diam[U] < t.diam[V]
        U, V = np.where(swap, V, U), np.where(swap, U, V)
        counts = nkids[U]
        V = np.repeat(V, counts)
        U = _expand_ranges(t.child_off[U], t.child_off[U + 1], t.children)
    return WspdPairSet(t, np.concatenate(out_a), np.concatenate(out_b), float(sep))


def wspd_edges(pairs: WspdPairSet, symmetric: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Edge endpoints (with repeats) for {rep(B) -> c} u {b -> rep(C)} over all pairs.

    With ``symmetric`` both orientations of each unordered pair are emitted.
    """
    t = pairs.tree
    A, B = pairs.a_nodes, pairs.b_nodes
    sa, ea, sb, eb = t.start[A], t.end[A], t.start[B], t.end[B]
    size_a, size_b = ea - sa, eb - sb
    pts_a = _expand_ranges(sa, ea, t.perm)
    pts_b = _expand_ranges(sb, eb, t.perm)
    src = [np.repeat(t.rep[A], size_b), pts_a]
    dst = [pts_b, np.repeat(t.rep[B], size_a)]
    if symmetric:
        src += [np.repeat(t.rep[B], size_a), pts_b]
        dst += [pts_a, np.repeat(t.rep[A], size_b)]
    return np.concatenate(src), np.concatenate(dst)


def build_wspd_graph(ps: PointSet, eps_query: float) -> NavGraph:
    """Navigable graph from an (8/eps)-WSPD, edges deduplicated."""
    if not 0.0 < eps_query < 1.0:
        raise UsageError(f"eps must lie in (0, 1), got {eps_query}")
    sep = eps_query / 8.0
    if ps.n == 1:
        return NavGraph.from_edges(1, np.empty(0), np.empty(0), "wspd", eps_query=eps_query, eps_build=sep)
    src, dst = wspd_edges(build_wspd(ps, sep))
    return NavGraph.from_edges(ps.n, src, dst, "wspd", eps_query=eps_query, eps_build=sep)


def wspd_greedy_route(
    g: NavGraph,
    ps: PointSet,
    q: ArrayLike,
    eps: Optional[float] = None,
    start: int = 0,
    counter: Optional[DistanceCounter] = None,
) -> RoutingResult:
    """Mature greedy walk (move to the best strictly closer neighbor)."""
    if eps is not None and not math.isnan(g.eps_query) and eps != g.eps_query:
        raise UsageError(f"graph was built for eps={g.eps_query}, query asks for eps={eps}")
    return mature_greedy_route(g, ps, ps.check_query(q), start, counter)


def two_phase_route(
    g_half: NavGraph,
    g_eps: NavGraph,
    ps: PointSet,
    q: ArrayLike,
    eps: Optional[float] = None,
    start: int = 0,
) -> RoutingResult:
    """Greedy walk on the eps=1/2 graph, then continue on the eps graph from its end."""
    q = ps.check_query(q)
    counter = DistanceCounter()
    first = wspd_greedy_route(g_half, ps, q, None, start, counter)
    second = wspd_greedy_route(g_eps, ps, q, eps, first.answer, counter)
    return RoutingResult(
        answer=second.answer,
        dist=second.dist,
        hops=first.hops + second.hops,
        edges_scanned=first.edges_scanned + second.edges_scanned,
        distance_evals=counter.count,
        trace=first.trace + second.trace[1:],
        trace_dists=first.trace_dists + second.trace_dists[1:],
        phase_hops=(first.hops, second.hops),
    )
