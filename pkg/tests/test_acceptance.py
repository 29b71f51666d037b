"""Acceptance criteria 1-11, one test each.

Every test records a PASS/FAIL line (printed in the terminal summary) and
then asserts; a failing criterion is left failing, never loosened.
"""

import itertools
import json
import math
import time

import numpy as np
import pytest

import oracles
from navgraph.bench import SuiteParams, run_generated_suite
from navgraph.datasets import box_queries
from navgraph.graph import mature_greedy_route
from navgraph.greedy_perm import build_greedy_permutation
from navgraph.index import METHODS, build_index, decode_index, encode_index
from navgraph.metric import MetricKind, PointSet, exact_nn_batch, pairwise_to, spread
from navgraph.perm_graph import build_perm_graph, greedy_route, hop_bound
from navgraph.prune import (
    apollonius_ball,
    build_slow_diskann,
    gamma_bound,
    navigability_violations,
    removal_by_ball,
)
from navgraph.wspd import build_wspd, build_wspd_graph, two_phase_route, wspd_greedy_route

DIMS = (1, 2, 3)
SIZES = (100, 500, 2000)
EPSILONS = (0.1, 0.25, 0.5)
NUM_QUERIES = 200


@pytest.fixture(scope="module")
def perm_sweep():
    """Route 200 seeded queries on every (d, n, eps) perm graph, with and without early stop."""
    rows = []
    plain_seconds = 0.0
    for d, n, eps in itertools.product(DIMS, SIZES, EPSILONS):
        seed = 1000 * d + n + int(eps * 100)
        ps = PointSet.from_array(np.random.default_rng(seed).random((n, d)))
        qs = box_queries(ps.coords, NUM_QUERIES, seed + 1)
        t0 = time.perf_counter()
        g = build_perm_graph(ps, eps)
        plain = [greedy_route(g, ps, q) for q in qs]
        plain_seconds += time.perf_counter() - t0
        early = [greedy_route(g, ps, q, early_stop=True) for q in qs]
        _, best = exact_nn_batch(ps, qs)
        rows.append(dict(
            d=d, n=n, eps=eps, best=best, spread=spread(ps),
            plain_dist=np.array([r.dist for r in plain]),
            early_dist=np.array([r.dist for r in early]),
            plain_hops=np.array([r.hops for r in plain]),
            early_hops=np.array([r.hops for r in early]),
            plain_scanned=np.mean([r.edges_scanned for r in plain]),
            early_scanned=np.mean([r.edges_scanned for r in early]),
            fired=sum(r.early_stopped for r in early),
        ))
    return rows, plain_seconds


def test_criterion_01_perm_ratio(perm_sweep, criterion):
    rows, seconds = perm_sweep
    violations = sum(int(np.count_nonzero(r["plain_dist"] > (1 + r["eps"]) * r["best"])) for r in rows)
    worst = max(float(np.max(r["plain_dist"] / r["best"])) for r in rows)
    ok = violations == 0 and seconds < 120
    criterion(1, ok, f"{len(rows)} configs x {NUM_QUERIES} queries, violations={violations}, "
                     f"worst ratio={worst:.4f}, runtime={seconds:.1f}s (< 120s)")
    assert ok


def test_criterion_02_early_stop(perm_sweep, criterion):
    rows, _ = perm_sweep
    violations = sum(int(np.count_nonzero(r["early_dist"] > (1 + r["eps"]) * r["best"])) for r in rows)
    costlier = [(r["d"], r["n"], r["eps"]) for r in rows if r["early_scanned"] > r["plain_scanned"]]
    fired = sum(r["fired"] for r in rows)
    scan_plain = np.mean([r["plain_scanned"] for r in rows])
    scan_early = np.mean([r["early_scanned"] for r in rows])
    ok = violations == 0 and not costlier
    criterion(2, ok, f"violations={violations}, configs where early stop scanned more={len(costlier)}, "
                     f"mean edges scanned {scan_early:.1f} vs {scan_plain:.1f}, early stops fired={fired}")
    assert ok


def test_criterion_03_linear_size(criterion):
    sizes = (250, 500, 1000, 2000, 4000)
    per_point = []
    for n in sizes:
        ps = PointSet.from_array(np.random.default_rng(n).random((n, 2)))
        per_point.append(build_perm_graph(ps, 0.5).num_edges / n)
    growth = max(per_point) / min(per_point)
    ok = growth <= 1.5
    series = ", ".join(f"{n}:{e:.1f}" for n, e in zip(sizes, per_point))
    criterion(3, ok, f"|E|/n by n = {series}; max/min = {growth:.2f} (needs <= 1.5)")
    assert ok


def test_criterion_04_hop_bound(perm_sweep, criterion):
    rows, _ = perm_sweep
    over = 0
    tightest = 0.0
    for r in rows:
        bound = hop_bound(r["eps"], r["spread"])
        hops = np.concatenate([r["plain_hops"], r["early_hops"]])
        over += int(np.count_nonzero(hops > bound))
        tightest = max(tightest, float(hops.max()) / bound)
    ok = over == 0
    criterion(4, ok, f"hops over bound={over}, max hops/bound={tightest:.3f}")
    assert ok


def _wspd_check(ps, sep):
    """Exhaustive separation ratio and pair-coverage counts for one WSPD."""
    ws = build_wspd(ps, sep)
    X, metric = ps.coords, ps.metric
    cover = np.zeros((ps.n, ps.n), dtype=np.int64)
    worst_excess = -math.inf
    for p in ws:
        a, b = np.array(p.a_set), np.array(p.b_set)
        da = max(pairwise_to(X[a], X[i], metric).max() for i in a)
        db = max(pairwise_to(X[b], X[i], metric).max() for i in b)
        gap = min(pairwise_to(X[b], X[i], metric).min() for i in a)
        worst_excess = max(worst_excess, max(da, db) - sep * gap)
        cover[np.ix_(a, b)] += 1
    sym = cover + cover.T
    off = ~np.eye(ps.n, dtype=bool)
    return worst_excess, bool(np.all(sym[off] == 1)), int(np.count_nonzero(np.triu(sym, 1))), len(ws)


def test_criterion_05_wspd_validity(criterion):
    cases = []
    rng = np.random.default_rng(5)
    for n, d, metric, sep in [
        (2, 2, "l2", 0.5), (3, 1, "l2", 0.5), (64, 2, "l2", 0.25), (256, 2, "linf", 0.5),
        (300, 3, "l2", 0.5), (512, 2, "l2", 1.0), (512, 2, "l2", 0.25), (512, 1, "l2", 0.125),
    ]:
        ps = PointSet.from_array(rng.random((n, d)), metric)
        cases.append((n, sep) + _wspd_check(ps, sep))
    clustered = np.vstack([rng.normal(c, 1e-4, size=(128, 2)) for c in ([0, 0], [1, 0], [0, 1], [1, 1])])
    cases.append((512, 0.25) + _wspd_check(PointSet.from_array(clustered), 0.25))
    sep_ok = all(excess <= 1e-9 for _, _, excess, _, _, _ in cases)
    cover_ok = all(once and count == n * (n - 1) // 2 for n, _, _, once, count, _ in cases)
    worst = max(excess for _, _, excess, _, _, _ in cases)
    ok = sep_ok and cover_ok
    criterion(5, ok, f"{len(cases)} point sets (n <= 512): max(diam) - sep*gap <= {worst:.2e}, "
                     f"every unordered pair covered exactly once: {cover_ok}")
    assert ok


def test_criterion_06_wspd_graph(criterion):
    violations = bad_steps = queries = 0
    for eps in (0.25, 0.5):
        for n, gen in ((250, "uniform"), (1000, "uniform"), (1000, "clusters")):
            rng = np.random.default_rng(n + int(eps * 100))
            if gen == "uniform":
                pts = rng.random((n, 2))
            else:
                pts = rng.random((8, 2))[rng.integers(0, 8, n)] + rng.normal(0, 0.02, (n, 2))
            ps = PointSet.from_array(pts)
            g = build_wspd_graph(ps, eps)
            qs = box_queries(ps.coords, NUM_QUERIES, n + 7)
            _, best = exact_nn_batch(ps, qs)
            for q, ell in zip(qs, best):
                res = wspd_greedy_route(g, ps, q, eps)
                queries += 1
                violations += res.dist > (1 + eps) * ell
                dd = res.trace_dists
                # float slack: a few ulps of the operands
                bad_steps += sum(b > (eps / 4) * a + ell + 4e-16 * (a + ell) for a, b in zip(dd, dd[1:]))
    ok = violations == 0 and bad_steps == 0
    criterion(6, ok, f"{queries} queries: ratio violations={violations}, recurrence failures={bad_steps}")
    assert ok


def test_criterion_07_two_phase(criterion):
    eps = 0.1
    violations = queries = 0
    phase2 = []
    for n in (500, 1000):
        rng = np.random.default_rng(70 + n)
        ps = PointSet.from_array(rng.random((n, 2)))
        g_half, g_eps = build_wspd_graph(ps, 0.5), build_wspd_graph(ps, eps)
        qs = box_queries(ps.coords, NUM_QUERIES, n)
        _, best = exact_nn_batch(ps, qs)
        for q, ell in zip(qs, best):
            res = two_phase_route(g_half, g_eps, ps, q, eps)
            queries += 1
            violations += res.dist > (1 + eps) * ell
            phase2.append(res.phase_hops[1])
    ok = violations == 0
    criterion(7, ok, f"{queries} queries at eps=0.1: violations={violations}; "
                     f"phase-2 hops mean={np.mean(phase2):.3f} max={max(phase2)} (reported)")
    assert ok


def test_criterion_08_apollonius(criterion):
    rng = np.random.default_rng(8)
    mismatches = checked = 0
    for _ in range(1000):
        d = int(rng.integers(2, 4))
        v, p = rng.normal(size=(2, d))
        alpha = float(rng.uniform(1.05, 8.0))
        F = p + rng.normal(size=(100, d)) * rng.uniform(0.05, 2.0) * np.linalg.norm(p - v)
        ps = PointSet.from_array(np.vstack([v, p, F]))
        cands = np.arange(2, 102)
        dv = pairwise_to(F, v, MetricKind.L2)
        dp = pairwise_to(F, p, MetricKind.L2)
        by_ineq = alpha * dp < dv
        by_ball = removal_by_ball(ps, 0, 1, cands, alpha)
        ball = apollonius_ball(v, p, alpha)
        margin = np.minimum(np.abs(dv - alpha * dp), np.abs(pairwise_to(F, ball.center, MetricKind.L2) - ball.radius))
        clear = margin > 1e-9
        mismatches += int(np.count_nonzero(by_ineq[clear] != by_ball[clear]))
        checked += len(F)

    b2 = apollonius_ball([0.0, 0.0], [1.0, 0.0], 2.0)
    closed_2 = max(abs(b2.center[0] - 4 / 3), abs(b2.center[1]), abs(b2.radius - 2 / 3))
    v, p = np.array([0.0, 0.0]), np.array([3.0, 4.0])
    b3 = apollonius_ball(v, p, 3.0)
    e = 1.0  # alpha = 2/e + 1 = 3
    closed_3 = max(float(np.abs(b3.center - (p + e * e / (4 * (1 + e)) * (p - v))).max()),
                   abs(b3.radius - (1 + e / 2) * e / (2 * (1 + e)) * 5.0))
    ok = mismatches == 0 and checked >= 100_000 and closed_2 <= 1e-12 and closed_3 <= 1e-12
    criterion(8, ok, f"{checked} configurations, mismatches={mismatches}; "
                     f"closed-form errors kappa=2: {closed_2:.1e}, kappa=3: {closed_3:.1e}")
    assert ok


def test_criterion_09_navigability(criterion):
    details = []
    ok = True
    for alpha in (2.0, 5.0):
        rng = np.random.default_rng(int(alpha * 9))
        ps = PointSet.from_array(rng.random((300, 2)))
        g = build_slow_diskann(ps, alpha)
        bad = navigability_violations(g, ps, alpha)
        qs = box_queries(ps.coords, NUM_QUERIES, 99)
        _, best = exact_nn_batch(ps, qs)
        worst = max(mature_greedy_route(g, ps, q).dist / b for q, b in zip(qs, best))
        limit = gamma_bound(alpha) + 0.05
        ok &= not bad and worst <= limit
        details.append(f"alpha={alpha:g}: non-navigable pairs={len(bad)}, worst ratio={worst:.3f} <= {limit:.2f}")
    criterion(9, ok, "; ".join(details))
    assert ok


def test_criterion_10_kcenter(criterion):
    checks = violations = 0
    tightest = 0.0
    rng = np.random.default_rng(10)
    for trial in range(6):
        n = 12 if trial < 4 else int(rng.integers(4, 12))
        pts = rng.random((n, 2)).tolist()
        gp = build_greedy_permutation(PointSet.from_array(pts))
        for k in range(1, n + 1):
            centers = [pts[i] for i in gp.order[:k]]
            cost = max(min(oracles.dist(p, c) for c in centers) for p in pts)
            opt = oracles.kcenter_opt(pts, k)
            checks += 1
            violations += cost > 2 * opt
            if opt > 0:
                tightest = max(tightest, cost / opt)
    ok = violations == 0
    criterion(10, ok, f"{checks} (instance, k) checks, violations={violations}, max cost/OPT={tightest:.3f}")
    assert ok


def test_criterion_11_determinism_and_io(criterion):
    same_json = True
    for method in METHODS:
        runs = [run_generated_suite("clusters", 400, 2, method, SuiteParams(eps=0.25, alpha=2.0),
                                    num_queries=40, seed=11).to_json() for _ in range(2)]
        same_json &= runs[0] == runs[1] and json.loads(runs[0])["records"][0]["method"] == method
    round_trip = True
    ps = PointSet.from_array(np.random.default_rng(11).random((300, 3)))
    for method in METHODS:
        idx = build_index(ps, method, eps=0.3, alpha=2.0)
        blob = encode_index(idx)
        back = decode_index(blob)
        round_trip &= back.same_as(idx) and encode_index(back) == blob
    ok = same_json and round_trip
    criterion(11, ok, f"byte-identical bench JSON for all methods: {same_json}; "
                      f"index save/load structural equality for all methods: {round_trip}")
    assert ok
