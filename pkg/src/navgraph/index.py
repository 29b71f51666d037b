"""Built indexes for every method, and the versioned binary index file.

File layout (all little-endian)::

    magic "NAVG" | version u32 | method u32 | metric u32 | n u64 | d u32
    eps f64 | alpha f64
    points           n*d f64, row-major
    permutation      m u64 (0 or n) | order m*i64 | radii (m-1)*f64 | eps_build f64
    graph count      u32, then per graph:
        kind u32 | eps_query f64 | eps_build f64 | alpha f64 | edges u64
        offsets (n+1)*i64 | targets edges*i64 | point_of n*i64
        radii_len u64 | radii radii_len*f64
    crc32 u32 over every preceding byte
"""

from __future__ import annotations

import math
import os
import struct
import zlib
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import IndexFormatError, UsageError
from .graph import NavGraph, RoutingResult, mature_greedy_route
from .greedy_perm import GreedyPermutation
from .metric import ArrayLike, MetricKind, PointSet
from .perm_graph import build_perm_graph, greedy_route, permutation_of
from .prune import beam_search, build_slow_diskann
from .wspd import build_wspd_graph, two_phase_route, wspd_greedy_route

MAGIC = b"NAVG"
FORMAT_VERSION = 1
METHODS = ("perm", "wspd", "wspd2phase", "diskann-slow")
_KINDS = ("perm", "wspd", "diskann-slow")
_HEADER = struct.Struct("<4sIIIQIdd")
_GRAPH_HEADER = struct.Struct("<IdddQ")


@dataclass
class Index:
    method: str
    ps: PointSet
    graphs: list[NavGraph]
    eps: float = math.nan
    alpha: float = math.nan
    perm: Optional[GreedyPermutation] = field(default=None, repr=False)

    @property
    def graph(self) -> NavGraph:
        return self.graphs[-1]

    @property
    def edge_count(self) -> int:
        return sum(g.num_edges for g in self.graphs)

    def query(
        self,
        q: ArrayLike,
        early_stop: bool = False,
        beam: Optional[int] = None,
        debug: bool = False,
    ) -> RoutingResult:
        q = self.ps.check_query(q)
        if self.method == "perm":
            return greedy_route(self.graph, self.ps, q, early_stop=early_stop, debug=debug)
        if self.method == "wspd":
            return wspd_greedy_route(self.graph, self.ps, q)
        if self.method == "wspd2phase":
            return two_phase_route(self.graphs[0], self.graphs[1], self.ps, q)
        if beam is not None and beam > 1:
            return beam_search(self.graph, self.ps, q, beam, 1)[1]
        return mature_greedy_route(self.graph, self.ps, q)

    def same_as(self, other: "Index") -> bool:
        def feq(a: float, b: float) -> bool:
            return (math.isnan(a) and math.isnan(b)) or a == b

        if (self.perm is None) != (other.perm is None):
            return False
        if self.perm is not None and not self.perm.same_as(other.perm):
            return False
        return (
            self.method == other.method
            and self.ps.same_as(other.ps)
            and len(self.graphs) == len(other.graphs)
            and all(a.same_as(b) for a, b in zip(self.graphs, other.graphs))
            and feq(self.eps, other.eps)
            and feq(self.alpha, other.alpha)
        )


def build_index(
    ps: PointSet,
    method: str,
    eps: float = 0.25,
    alpha: float = 2.0,
    start: int = 0,
) -> Index:
    if method not in METHODS:
        raise UsageError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")
    if method == "diskann-slow":
        if not alpha > 1.0:
            raise UsageError(f"alpha must exceed 1, got {alpha}")
        return Index(method, ps, [build_slow_diskann(ps, alpha)], alpha=float(alpha))
    if not 0.0 < eps < 1.0:
        raise UsageError(f"eps must lie in (0, 1), got {eps}")
    if method == "perm":
        g = build_perm_graph(ps, eps, start)
        return Index(method, ps, [g], eps=float(eps), perm=permutation_of(g))
    if method == "wspd":
        return Index(method, ps, [build_wspd_graph(ps, eps)], eps=float(eps))
    return Index(method, ps, [build_wspd_graph(ps, 0.5), build_wspd_graph(ps, eps)], eps=float(eps))


# -- serialisation -----------------------------------------------------------


def _f8(a) -> bytes:
    return np.ascontiguousarray(a, dtype="<f8").tobytes()


def _i8(a) -> bytes:
    return np.ascontiguousarray(a, dtype="<i8").tobytes()


def encode_index(index: Index) -> bytes:
    ps = index.ps
    parts = [
        _HEADER.pack(
            MAGIC, FORMAT_VERSION, METHODS.index(index.method), int(ps.metric),
            ps.n, ps.d, index.eps, index.alpha,
        ),
        _f8(ps.coords),
    ]
    gp = index.perm
    if gp is None:
        parts.append(struct.pack("<Q", 0))
        parts.append(struct.pack("<d", math.nan))
    else:
        parts.append(struct.pack("<Q", gp.n))
        parts.append(_i8(gp.order))
        parts.append(_f8(gp.radii))
        parts.append(struct.pack("<d", math.nan if gp.eps_build is None else gp.eps_build))
    parts.append(struct.pack("<I", len(index.graphs)))
    for g in index.graphs:
        parts.append(_GRAPH_HEADER.pack(_KINDS.index(g.kind), g.eps_query, g.eps_build, g.alpha, g.num_edges))
        parts.append(_i8(g.offsets))
        parts.append(_i8(g.targets))
        parts.append(_i8(g.point_of))
        parts.append(struct.pack("<Q", len(g.radii)))
        parts.append(_f8(g.radii))
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


class _Reader:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.pos = 0

    def take(self, size: int) -> bytes:
        if size < 0 or self.pos + size > len(self.data):
            raise IndexFormatError("index file is truncated")
        chunk = self.data[self.pos : self.pos + size]
        self.pos += size
        return chunk

    def unpack(self, st: Union[struct.Struct, str]):
        st = st if isinstance(st, struct.Struct) else struct.Struct(st)
        return st.unpack(self.take(st.size))

    def array(self, dtype: str, count: int) -> np.ndarray:
        if count < 0 or count > len(self.data):
            raise IndexFormatError("corrupt array length")
        return np.frombuffer(self.take(8 * count), dtype=dtype).astype(dtype[1:])


def decode_index(data: bytes) -> Index:
    if not data:
        raise IndexFormatError("index file is empty")
    if len(data) < 4 or data[:4] != MAGIC:
        raise IndexFormatError("not a navgraph index (bad magic)")
    if len(data) < _HEADER.size + 4:
        raise IndexFormatError("index file is truncated")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != FORMAT_VERSION:
        raise IndexFormatError(f"unsupported index format version {version} (expected {FORMAT_VERSION})")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) & 0xFFFFFFFF != crc:
        raise IndexFormatError("checksum mismatch: index file is corrupt or truncated")

    r = _Reader(body)
    _, _, method_tag, metric_tag, n, d, eps, alpha = r.unpack(_HEADER)
    try:
        method = METHODS[method_tag]
        metric = MetricKind(metric_tag)
    except (IndexError, ValueError):
        raise IndexFormatError("unknown method or metric tag") from None
    coords = r.array("<f8", n * d).reshape(n, d)
    ps = PointSet.from_array(coords, metric, check_duplicates=False)

    (m,) = r.unpack("<Q")
    gp = None
    if m:
        order = r.array("<i8", m)
        radii = r.array("<f8", m - 1)
        (eps_build,) = r.unpack("<d")
        gp = (order, radii, eps_build)
    else:
        r.unpack("<d")

    (count,) = r.unpack("<I")
    graphs = []
    for _ in range(count):
        kind_tag, eps_q, eps_b, g_alpha, num_edges = r.unpack(_GRAPH_HEADER)
        if kind_tag >= len(_KINDS):
            raise IndexFormatError("unknown graph kind tag")
        offsets = r.array("<i8", n + 1)
        targets = r.array("<i8", num_edges)
        point_of = r.array("<i8", n)
        (nr,) = r.unpack("<Q")
        radii_g = r.array("<f8", nr)
        if offsets[-1] != num_edges or np.any(np.diff(offsets) < 0):
            raise IndexFormatError("inconsistent adjacency offsets")
        if num_edges and (targets.min() < 0 or targets.max() >= n):
            raise IndexFormatError("edge target out of range")
        graphs.append(
            NavGraph(offsets, targets, point_of, _KINDS[kind_tag], eps_q, eps_b, g_alpha, radii_g)
        )
    if r.pos != len(body):
        raise IndexFormatError("trailing bytes after index payload")

    perm = None
    if gp is not None:
        perm = permutation_of(graphs[0]) if method == "perm" else GreedyPermutation(
            gp[0], gp[1], eps_build=gp[2], start=int(gp[0][0])
        )
        if not (np.array_equal(perm.order, gp[0]) and np.array_equal(perm.radii, gp[1])):
            raise IndexFormatError("permutation block disagrees with the graph")
    return Index(method, ps, graphs, eps=eps, alpha=alpha, perm=perm)


def save_index(g: NavGraph, gp: Optional[GreedyPermutation], ps: PointSet) -> bytes:
    """Serialise a single graph with its permutation and points."""
    method = "perm" if g.kind == "perm" else g.kind
    eps = g.eps_query
    return encode_index(Index(method, ps, [g], eps=eps, alpha=g.alpha, perm=gp))


def load_index(data: bytes) -> tuple[NavGraph, Optional[GreedyPermutation], PointSet]:
    idx = decode_index(data)
    return idx.graph, idx.perm, idx.ps


def write_index(path: Union[str, os.PathLike], index: Index) -> int:
    blob = encode_index(index)
    with open(path, "wb") as fh:
        fh.write(blob)
    return len(blob)


def read_index(path: Union[str, os.PathLike]) -> Index:
    with open(path, "rb") as fh:
        return decode_index(fh.read())
