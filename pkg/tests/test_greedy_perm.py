import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from navgraph.errors import UsageError
from navgraph.greedy_perm import attach_friend_lists, build_greedy_permutation
from navgraph.metric import PointSet, pairwise_to


def _line(*xs):
    return PointSet.from_array(list(xs))


def test_line_example():
    gp = build_greedy_permutation(_line(0.0, 10.0, 3.0), start=0)
    assert gp.order.tolist() == [0, 1, 2]
    assert gp.radii.tolist() == [10.0, 3.0]


def test_single_point():
    gp = build_greedy_permutation(_line(4.0))
    assert gp.order.tolist() == [0]
    assert len(gp.radii) == 0


def test_unit_square_tie_goes_to_lowest_index():
    square = [(0, 0), (1, 0), (0, 1), (1, 1)]
    gp = build_greedy_permutation(PointSet.from_array(square), start=0)
    assert gp.order.tolist() == [0, 3, 1, 2]
    assert gp.radii == pytest.approx([math.sqrt(2), 1.0, 1.0], rel=1e-15)
    assert oracles.greedy_permutation(square)[0] == gp.order.tolist()


def test_start_out_of_range():
    with pytest.raises(UsageError):
        build_greedy_permutation(_line(0.0, 1.0), start=2)


@pytest.mark.parametrize("metric", ["l2", "l1", "linf"])
@pytest.mark.parametrize("seed", range(4))
def test_matches_bruteforce_recomputation(metric, seed):
    rng = np.random.default_rng(seed)
    pts = rng.random((40, 3)).tolist()
    start = int(rng.integers(40))
    gp = build_greedy_permutation(PointSet.from_array(pts, metric), start=start)
    order, radii = oracles.greedy_permutation(pts, start, metric)
    assert gp.order.tolist() == order
    assert gp.radii == pytest.approx(radii, rel=1e-14)


def _prefix_dists(ps, gp):
    """d(p, P_i) for every point p and every prefix length i (rows: prefix)."""
    X = ps.coords
    out = np.empty((ps.n, ps.n))
    running = np.full(ps.n, np.inf)
    for k, idx in enumerate(gp.order):
        running = np.minimum(running, pairwise_to(X, X[idx], ps.metric))
        out[k] = running
    return out


@pytest.mark.parametrize("seed", range(3))
def test_prefix_packing_invariants(seed):
    pts = np.random.default_rng(seed).normal(size=(120, 2))
    ps = PointSet.from_array(pts)
    gp = build_greedy_permutation(ps)
    r = gp.radii
    assert np.all(np.diff(r) <= 0)
    pref = _prefix_dists(ps, gp)
    for i in range(1, ps.n):
        # exact insertion radius: distance of the new point to the previous prefix
        assert pref[i - 1, gp.order[i]] == r[i - 1]
        # covering by radius r_i (prefix of ranks 0..i-1 has covering radius r[i-1])
        assert pref[i - 1].max() <= r[i - 1] + 1e-9
    Y = pts[gp.order]
    for i in range(2, ps.n):
        # separation: cp(P_i) >= r_i
        sub = Y[:i]
        dd = np.sqrt(((sub[:, None] - sub[None]) ** 2).sum(-1))
        cp = dd[np.triu_indices(i, 1)].min()
        assert cp >= r[i - 1]


def test_closest_pair_can_exceed_radius():
    # cp(P_2) = 10 while r_2 = 3 on {0, 10, 3}: only the >= direction holds
    ps = _line(0.0, 10.0, 3.0)
    gp = build_greedy_permutation(ps)
    cp_p2 = ps.dist_ij(int(gp.order[0]), int(gp.order[1]))
    assert cp_p2 == 10.0 > gp.radii[1] == 3.0


@pytest.mark.parametrize("seed", range(3))
def test_kcenter_two_approximation(seed):
    pts = np.random.default_rng(100 + seed).random((11, 2)).tolist()
    ps = PointSet.from_array(pts)
    gp = build_greedy_permutation(ps)
    for k in range(1, len(pts) + 1):
        centers = [pts[i] for i in gp.order[:k]]
        cost = max(min(oracles.dist(p, c) for c in centers) for p in pts)
        assert cost <= 2 * oracles.kcenter_opt(pts, k) + 1e-12


def test_determinism():
    pts = np.random.default_rng(9).random((200, 3))
    a = attach_friend_lists(build_greedy_permutation(PointSet.from_array(pts), 5), PointSet.from_array(pts), 0.3)
    b = attach_friend_lists(build_greedy_permutation(PointSet.from_array(pts.copy()), 5), PointSet.from_array(pts), 0.3)
    assert a.same_as(b)


def test_friend_list_examples():
    ps = _line(0.0, 10.0, 3.0)
    gp = attach_friend_lists(build_greedy_permutation(ps), ps, 0.5)
    assert [f.tolist() for f in gp.friends] == [[], [0], [0, 1]]
    tiny = attach_friend_lists(build_greedy_permutation(ps), ps, 0.01)
    assert tiny.friends[2].tolist() == [0, 1]
    two = _line(0.0, 1.0)
    assert attach_friend_lists(build_greedy_permutation(two), two, 0.999).friends[1].tolist() == [0]


@pytest.mark.parametrize("eps", [0.0, 1.0, -0.1, 1.5])
def test_friend_eps_domain(eps):
    ps = _line(0.0, 1.0)
    with pytest.raises(UsageError):
        attach_friend_lists(build_greedy_permutation(ps), ps, eps)


@pytest.mark.parametrize("metric", ["l2", "linf"])
@pytest.mark.parametrize("eps", [0.1, 0.5, 0.9])
def test_friend_lists_sound_and_complete(metric, eps):
    pts = np.random.default_rng(int(eps * 10)).random((60, 2)).tolist()
    ps = PointSet.from_array(pts, metric)
    gp = attach_friend_lists(build_greedy_permutation(ps), ps, eps)
    order, radii = oracles.greedy_permutation(pts, 0, metric)
    expected = oracles.friend_lists(pts, order, radii, eps, metric)
    assert [f.tolist() for f in gp.friends] == expected


@pytest.mark.parametrize("eps", [0.125, 0.5])
def test_friend_list_packing_size(eps):
    ps = PointSet.from_array(np.random.default_rng(1).random((800, 2)))
    gp = attach_friend_lists(build_greedy_permutation(ps), ps, eps)
    assert max(len(f) for f in gp.friends) <= (1 + 16 / eps) ** 2


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.tuples(st.integers(0, 30), st.integers(0, 30)), min_size=2, max_size=18, unique=True),
    st.floats(0.05, 0.95),
)
def test_friend_lists_property(pts, eps):
    ps = PointSet.from_array(pts)
    gp = attach_friend_lists(build_greedy_permutation(ps), ps, eps)
    Y = ps.coords[gp.order]
    for i in range(1, ps.n):
        reach = 8 * gp.radii[i - 1] / eps
        expected = [j for j in range(i) if oracles.dist(Y[j], Y[i]) <= reach]
        assert gp.friends[i].tolist() == expected
        # the parent (closest earlier point) always qualifies
        assert len(gp.friends[i]) >= 1
