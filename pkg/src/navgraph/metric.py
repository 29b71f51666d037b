"""Point storage, the three supported metrics, and brute-force global quantities.

Every distance in the package is computed by :func:`pairwise_to`, so counters
and oracle comparisons always see bit-identical values for the same pair.
"""

from __future__ import annotations

import enum
import math
import os
import re
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import (
    DimensionMismatchError,
    DuplicatePointsError,
    PointDataError,
    ZeroClosestPairError,
)

ArrayLike = Union[np.ndarray, Sequence[float], Sequence[Sequence[float]]]

# Rows processed per block by the O(n^2) scans; bounds peak memory to
# _BLOCK * n * d doubles.
_BLOCK = 256


class MetricKind(enum.IntEnum):
    """Closed set of supported metrics. The integer value is the on-disk tag."""

    L2 = 0
    L1 = 1
    LINF = 2

    @classmethod
    def parse(cls, value: Union[str, int, "MetricKind"]) -> "MetricKind":
        if isinstance(value, MetricKind):
            return value
        if isinstance(value, (int, np.integer)):
            return cls(int(value))
        key = str(value).strip().lower()
        aliases = {
            "l2": cls.L2, "euclidean": cls.L2,
            "l1": cls.L1, "manhattan": cls.L1, "cityblock": cls.L1,
            "linf": cls.LINF, "l_inf": cls.LINF, "chebyshev": cls.LINF, "max": cls.LINF,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown metric {value!r}; expected one of l2, l1, linf") from None

    @property
    def label(self) -> str:
        return {MetricKind.L2: "l2", MetricKind.L1: "l1", MetricKind.LINF: "linf"}[self]


def pairwise_to(points: np.ndarray, q: np.ndarray, metric: MetricKind) -> np.ndarray:
    """Distances from each row of ``points`` (shape (m, d)) to ``q`` (shape (d,))."""
    diff = np.abs(points - q)
    if metric is MetricKind.L2:
        return np.sqrt((diff * diff).sum(axis=-1))
    if metric is MetricKind.L1:
        return diff.sum(axis=-1)
    return diff.max(axis=-1)


def _block_distances(rows: np.ndarray, points: np.ndarray, metric: MetricKind) -> np.ndarray:
    """Distance matrix between ``rows`` (b, d) and ``points`` (n, d)."""
    diff = np.abs(rows[:, None, :] - points[None, :, :])
    if metric is MetricKind.L2:
        return np.sqrt((diff * diff).sum(axis=-1))
    if metric is MetricKind.L1:
        return diff.sum(axis=-1)
    return diff.max(axis=-1)


def _as_point(p: ArrayLike) -> np.ndarray:
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise DimensionMismatchError(f"a point must be one-dimensional, got shape {arr.shape}")
    return arr


def distance(a: ArrayLike, b: ArrayLike, metric: Union[MetricKind, str] = MetricKind.L2) -> float:
    """Distance between two points under ``metric``."""
    a = _as_point(a)
    b = _as_point(b)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    return float(pairwise_to(a[None, :], b, MetricKind.parse(metric))[0])


class DistanceCounter:
    """Per-query tally of distance evaluations."""

    __slots__ = ("count",)

    def __init__(self) -> None:
        self.count = 0

    def add(self, k: int = 1) -> None:
        self.count += int(k)


@dataclass(frozen=True, eq=False)
class PointSet:
    """An immutable, indexed set of points in R^d with an attached metric.

    Duplicates are rejected unless ``check_duplicates=False`` is passed to
    :meth:`from_array`; such sets can be built but have no defined spread.
    """

    coords: np.ndarray
    metric: MetricKind = MetricKind.L2

    @classmethod
    def from_array(
        cls,
        data: ArrayLike,
        metric: Union[MetricKind, str] = MetricKind.L2,
        check_duplicates: bool = True,
    ) -> "PointSet":
        arr = np.array(data, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2:
            raise PointDataError(f"expected an (n, d) array of coordinates, got shape {arr.shape}")
        if arr.shape[0] == 0:
            raise PointDataError("a point set needs at least one point")
        if arr.shape[1] == 0:
            raise PointDataError("points must have at least one coordinate")
        if not np.all(np.isfinite(arr)):
            raise PointDataError("coordinates must be finite (no NaN or infinity)")
        if check_duplicates:
            uniq = np.unique(arr, axis=0)
            if uniq.shape[0] != arr.shape[0]:
                raise DuplicatePointsError(
                    f"{arr.shape[0] - uniq.shape[0]} duplicate point(s) in input"
                )
        arr.setflags(write=False)
        return cls(arr, MetricKind.parse(metric))

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def d(self) -> int:
        return self.coords.shape[1]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> np.ndarray:
        return self.coords[i]

    def check_query(self, q: ArrayLike) -> np.ndarray:
        q = _as_point(q)
        if q.shape[0] != self.d:
            raise DimensionMismatchError(f"query has dimension {q.shape[0]}, point set has {self.d}")
        if not np.all(np.isfinite(q)):
            raise PointDataError("query coordinates must be finite")
        return q

    def dists(
        self,
        q: np.ndarray,
        idx: Optional[np.ndarray] = None,
        counter: Optional[DistanceCounter] = None,
    ) -> np.ndarray:
        """Distances from ``q`` to the points ``idx`` (all points when None)."""
        pts = self.coords if idx is None else self.coords[idx]
        if counter is not None:
            counter.add(pts.shape[0])
        return pairwise_to(pts, q, self.metric)

    def dist(self, q: np.ndarray, i: int, counter: Optional[DistanceCounter] = None) -> float:
        if counter is not None:
            counter.add(1)
        return float(pairwise_to(self.coords[i : i + 1], q, self.metric)[0])

    def dist_ij(self, i: int, j: int) -> float:
        return float(pairwise_to(self.coords[i : i + 1], self.coords[j], self.metric)[0])

    def subset(self, idx: Iterable[int]) -> "PointSet":
        sub = self.coords[np.asarray(list(idx), dtype=np.int64)]
        sub.setflags(write=False)
        return PointSet(sub, self.metric)

    def same_as(self, other: "PointSet") -> bool:
        return self.metric is other.metric and np.array_equal(self.coords, other.coords)


def _extremes(ps: PointSet) -> tuple[float, float]:
    """(diameter, closest-pair distance) by exhaustive pairwise scan."""
    n = ps.n
    if n < 2:
        return 0.0, math.inf
    diam = 0.0
    cp = math.inf
    X = ps.coords
    for lo in range(0, n, _BLOCK):
        hi = min(lo + _BLOCK, n)
        D = _block_distances(X[lo:hi], X, ps.metric)
        diam = max(diam, float(D.max()))
        # only pairs (i, j) with j > i
        rows = np.arange(lo, hi)[:, None]
        cols = np.arange(n)[None, :]
        upper = np.where(cols > rows, D, np.inf)
        cp = min(cp, float(upper.min()))
    return diam, cp


def diameter(ps: PointSet) -> float:
    return _extremes(ps)[0]


def closest_pair_distance(ps: PointSet) -> float:
    return _extremes(ps)[1]


def spread(ps: PointSet) -> float:
    """Ratio of diameter to closest-pair distance, by O(n^2) scan."""
    if ps.n < 2:
        raise PointDataError("spread needs at least two points")
    diam, cp = _extremes(ps)
    if cp == 0.0:
        raise ZeroClosestPairError("closest-pair distance is zero (duplicate points); spread undefined")
    return diam / cp


def exact_nn(ps: PointSet, q: ArrayLike, counter: Optional[DistanceCounter] = None) -> tuple[int, float]:
    """Brute-force nearest neighbor of ``q``; ties go to the lowest index."""
    q = ps.check_query(q)
    d = ps.dists(q, counter=counter)
    i = int(np.argmin(d))
    return i, float(d[i])


def exact_nn_batch(ps: PointSet, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`exact_nn` over the rows of ``queries``."""
    queries = np.asarray(queries, dtype=np.float64).reshape(-1, ps.d)
    idx = np.empty(len(queries), dtype=np.int64)
    dist = np.empty(len(queries), dtype=np.float64)
    for lo in range(0, len(queries), _BLOCK):
        hi = min(lo + _BLOCK, len(queries))
        D = _block_distances(queries[lo:hi], ps.coords, ps.metric)
        idx[lo:hi] = np.argmin(D, axis=1)
        dist[lo:hi] = D[np.arange(hi - lo), idx[lo:hi]]
    return idx, dist


_SPLIT = re.compile(r"[,\s]+")


def parse_points(text: str) -> np.ndarray:
    """Parse the plain-text point format into an (n, d) array.

    One point per line, coordinates separated by commas and/or whitespace.
    Blank lines and lines starting with ``#`` are skipped. The dimension is
    fixed by the first data line.
    """
    rows: list[list[float]] = []
    dim = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f for f in _SPLIT.split(line) if f]
        try:
            row = [float(f) for f in fields]
        except ValueError:
            raise PointDataError(f"line {lineno}: not a number in {line!r}") from None
        if dim is None:
            dim = len(row)
        elif len(row) != dim:
            raise PointDataError(f"line {lineno}: expected {dim} coordinates, found {len(row)}")
        rows.append(row)
    if not rows:
        raise PointDataError("no points found in input")
    return np.array(rows, dtype=np.float64)


def read_points(
    path: Union[str, os.PathLike],
    metric: Union[MetricKind, str] = MetricKind.L2,
) -> PointSet:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return PointSet.from_array(parse_points(text), metric)


def write_points(path: Union[str, os.PathLike], coords: np.ndarray) -> None:
    coords = np.asarray(coords, dtype=np.float64).reshape(len(coords), -1)
    with open(path, "w", encoding="utf-8") as fh:
        for row in coords:
            fh.write(" ".join(repr(float(x)) for x in row))
            fh.write("\n")
