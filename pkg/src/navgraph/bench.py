"""Oracle-backed accuracy and scaling measurements."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Iterable, Optional, Sequence

import numpy as np

from .datasets import box_queries, generate
from .errors import UsageError
from .index import Index, build_index
from .metric import PointSet, exact_nn_batch, spread
from .perm_graph import hop_bound
from .prune import gamma_bound

# Methods whose approximation bound is a theorem; violations fail the run.
HARD_METHODS = ("perm", "wspd", "wspd2phase")
_TIMING_FIELDS = ("build_seconds",)


@dataclass
class SuiteParams:
    eps: float = 0.25
    alpha: float = 2.0
    early_stop: bool = False
    beam: Optional[int] = None


@dataclass
class BenchRecord:
    method: str
    n: int
    d: int
    eps: Optional[float]
    alpha: Optional[float]
    early_stop: bool
    beam: Optional[int]
    queries: int
    edge_count: int
    edges_per_point: float
    build_seconds: Optional[float]
    mean_ratio: float
    p95_ratio: float
    worst_ratio: float
    mean_hops: float
    max_hops: int
    mean_edges_scanned: float
    mean_distance_evals: float
    recall_at_1: float
    bound: float
    hard: bool
    violations: int
    generator: str = ""
    seed: Optional[int] = None
    spread: Optional[float] = None
    hop_bound: Optional[float] = None
    hop_violations: Optional[int] = None
    phase2_mean_hops: Optional[float] = None
    phase2_max_hops: Optional[int] = None

    @property
    def ok(self) -> bool:
        if self.hard and self.violations:
            return False
        return not self.hop_violations


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    return v


@dataclass
class BenchReport:
    records: list[BenchRecord] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.records)

    def extend(self, other: "BenchReport") -> None:
        self.records.extend(other.records)

    def rows(self, include_timing: bool = False) -> list[dict]:
        out = []
        for r in self.records:
            row = {k: _clean(v) for k, v in asdict(r).items()}
            if not include_timing:
                for k in _TIMING_FIELDS:
                    row.pop(k)
            out.append(row)
        return out

    def to_json(self, include_timing: bool = False) -> str:
        """Stable JSON; wall-clock fields are left out unless asked for so
        that equal seeds give byte-identical output."""
        payload = {"ok": self.ok, "records": self.rows(include_timing)}
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    def to_csv(self, include_timing: bool = False) -> str:
        rows = self.rows(include_timing)
        names = [f.name for f in fields(BenchRecord) if include_timing or f.name not in _TIMING_FIELDS]
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=names, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()

    def to_text(self, include_timing: bool = False) -> str:
        cols = [
            "method", "n", "d", "eps", "alpha", "early_stop", "edge_count", "edges_per_point",
            "mean_ratio", "p95_ratio", "worst_ratio", "mean_hops", "mean_edges_scanned",
            "mean_distance_evals", "recall_at_1", "violations",
        ]
        if include_timing:
            cols.insert(8, "build_seconds")
        table = [cols]
        for row in self.rows(include_timing):
            table.append([_fmt(row[c]) for c in cols])
        widths = [max(len(r[i]) for r in table) for i in range(len(cols))]
        lines = ["  ".join(cell.rjust(w) for cell, w in zip(r, widths)) for r in table]
        lines.append(f"status: {'ok' if self.ok else 'GUARANTEE VIOLATED'}")
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.4g}"
    return "-" if v is None else str(v)


def method_bound(method: str, params: SuiteParams) -> float:
    if method == "diskann-slow":
        return gamma_bound(params.alpha)
    return 1.0 + params.eps


def run_accuracy_suite(
    ps: PointSet,
    method: str,
    params: SuiteParams,
    queries: np.ndarray,
    index: Optional[Index] = None,
    threads: int = 1,
    generator: str = "",
    seed: Optional[int] = None,
) -> BenchReport:
    """Route every query and compare with the brute-force oracle.

    Ratio-bound violations are counted for every method but only make the
    report fail for the methods in ``HARD_METHODS``; perm-graph runs also
    check the hop bound.
    """
    queries = np.asarray(queries, dtype=np.float64).reshape(-1, ps.d)
    if len(queries) == 0:
        raise UsageError("the accuracy suite needs at least one query")
    build_seconds = None
    if index is None:
        t0 = time.perf_counter()
        index = build_index(ps, method, eps=params.eps, alpha=params.alpha)
        build_seconds = time.perf_counter() - t0
    elif index.method != method:
        raise UsageError(f"index holds method {index.method!r}, suite asked for {method!r}")

    def one(q):
        return index.query(q, early_stop=params.early_stop, beam=params.beam)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, queries))
    else:
        results = [one(q) for q in queries]

    oracle_idx, oracle_d = exact_nn_batch(ps, queries)
    got = np.array([r.dist for r in results])
    answers = np.array([r.answer for r in results])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(oracle_d > 0, got / np.where(oracle_d > 0, oracle_d, 1.0),
                          np.where(got == 0, 1.0, np.inf))
    bound = method_bound(method, params)
    violations = int(np.count_nonzero(got > bound * oracle_d))
    hits = (answers == oracle_idx) | (got == oracle_d)
    hops = np.array([r.hops for r in results])

    rec = BenchRecord(
        method=method,
        n=ps.n,
        d=ps.d,
        eps=None if method == "diskann-slow" else params.eps,
        alpha=params.alpha if method == "diskann-slow" else None,
        early_stop=bool(params.early_stop) if method == "perm" else False,
        beam=params.beam if method == "diskann-slow" else None,
        queries=len(queries),
        edge_count=index.edge_count,
        edges_per_point=index.edge_count / ps.n,
        build_seconds=build_seconds,
        mean_ratio=float(ratios.mean()),
        p95_ratio=float(np.percentile(ratios, 95)),
        worst_ratio=float(ratios.max()),
        mean_hops=float(hops.mean()),
        max_hops=int(hops.max()),
        mean_edges_scanned=float(np.mean([r.edges_scanned for r in results])),
        mean_distance_evals=float(np.mean([r.distance_evals for r in results])),
        recall_at_1=float(hits.mean()),
        bound=bound,
        hard=method in HARD_METHODS,
        violations=violations,
        generator=generator,
        seed=seed,
    )
    if method == "perm" and ps.n >= 2:
        phi = spread(ps)
        rec.spread = phi
        rec.hop_bound = hop_bound(params.eps, phi)
        rec.hop_violations = int(np.count_nonzero(hops > rec.hop_bound))
    if method == "wspd2phase":
        p2 = np.array([r.phase_hops[1] for r in results])
        rec.phase2_mean_hops = float(p2.mean())
        rec.phase2_max_hops = int(p2.max())
    return BenchReport([rec])


def run_generated_suite(
    generator: str,
    n: int,
    d: int,
    method: str,
    params: SuiteParams,
    num_queries: int = 100,
    seed: int = 0,
    threads: int = 1,
    metric: str = "l2",
) -> BenchReport:
    pts = generate(generator, n, d, seed)
    ps = PointSet.from_array(pts, metric)
    qs = box_queries(ps.coords, num_queries, seed + 1)
    return run_accuracy_suite(ps, method, params, qs, threads=threads, generator=generator, seed=seed)


def run_scaling_suite(
    generator: str,
    sizes: Sequence[int],
    eps: float,
    methods: Iterable[str] = ("perm", "wspd"),
    d: int = 2,
    seed: int = 0,
    num_queries: int = 50,
    alpha: float = 2.0,
) -> BenchReport:
    """One record per (method, size); sizes must be ascending."""
    sizes = list(sizes)
    if sizes != sorted(sizes):
        raise UsageError("sizes must be ascending")
    report = BenchReport()
    for method in methods:
        for n in sizes:
            report.extend(
                run_generated_suite(generator, n, d, method, SuiteParams(eps=eps, alpha=alpha),
                                    num_queries, seed)
            )
    return report


def size_growth(report: BenchReport, method: str) -> float:
    """max / min of edges-per-point across the records of one method."""
    vals = [r.edges_per_point for r in report.records if r.method == method]
    if not vals:
        raise UsageError(f"no records for method {method!r}")
    return max(vals) / min(vals)
