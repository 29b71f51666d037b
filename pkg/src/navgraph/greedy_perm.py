"""Exact greedy permutation (farthest-point traversal) with insertion radii
and friend lists.

Ranks are 0-based throughout the code: rank ``k`` holds the point chosen
``k``-th, so ``order[0]`` is the start point.  ``radii[k]`` is the distance
from the point at rank ``k + 1`` to the prefix of ranks ``0..k``; it is also
the covering radius of that prefix.  There are exactly ``n - 1`` radii.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import UsageError
from .metric import PointSet, pairwise_to

# Friend-list ball radius is FRIEND_FACTOR * r / eps.
FRIEND_FACTOR = 8.0


@dataclass(frozen=True, eq=False)
class GreedyPermutation:
    order: np.ndarray
    radii: np.ndarray
    friends: Optional[list[np.ndarray]] = None
    eps_build: Optional[float] = None
    start: int = 0
    rank_of: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        rank_of = np.empty_like(self.order)
        rank_of[self.order] = np.arange(len(self.order), dtype=self.order.dtype)
        object.__setattr__(self, "rank_of", rank_of)

    @property
    def n(self) -> int:
        return len(self.order)

    def covering_radius(self, rank: int) -> float:
        """Covering radius of the prefix of ranks ``0..rank`` (zero for the full set)."""
        if rank >= self.n - 1:
            return 0.0
        return float(self.radii[rank])

    def friend_count(self) -> int:
        if self.friends is None:
            return 0
        return int(sum(len(f) for f in self.friends))

    def same_as(self, other: "GreedyPermutation") -> bool:
        if not (np.array_equal(self.order, other.order) and np.array_equal(self.radii, other.radii)):
            return False
        if (self.friends is None) != (other.friends is None):
            return False
        if self.friends is not None:
            if len(self.friends) != len(other.friends):
                return False
            if any(not np.array_equal(a, b) for a, b in zip(self.friends, other.friends)):
                return False
        return self.eps_build == other.eps_build


def build_greedy_permutation(ps: PointSet, start: int = 0) -> GreedyPermutation:
    """Farthest-point traversal in O(n^2) time.

    Keeps, for every unchosen point, its distance to the chosen prefix and
    repeatedly picks the maximum. Ties go to the lowest point index.
    """
    n = ps.n
    if not 0 <= start < n:
        raise UsageError(f"start index {start} out of range for {n} points")
    order = np.empty(n, dtype=np.int64)
    radii = np.empty(max(n - 1, 0), dtype=np.float64)
    order[0] = start
    if n == 1:
        return GreedyPermutation(order, radii, start=start)

    X = ps.coords
    to_prefix = pairwise_to(X, X[start], ps.metric)
    to_prefix[start] = -np.inf
    for k in range(1, n):
        j = int(np.argmax(to_prefix))
        order[k] = j
        radii[k - 1] = to_prefix[j]
        np.minimum(to_prefix, pairwise_to(X, X[j], ps.metric), out=to_prefix)
        to_prefix[j] = -np.inf
    # chosen points carry -inf, so argmax never re-picks them
    return GreedyPermutation(order, radii, start=start)


def attach_friend_lists(gp: GreedyPermutation, ps: PointSet, eps: float) -> GreedyPermutation:
    """Attach F_i = {ranks j < i : d(p_j, p_i) <= 8 r_{i-1} / eps} for every rank i >= 1.

    Exact quadratic scan; each list is sorted by ascending rank.
    """
    if not 0.0 < eps < 1.0:
        raise UsageError(f"eps must lie in (0, 1), got {eps}")
    if gp.n != ps.n:
        raise UsageError("permutation and point set sizes differ")
    Y = ps.coords[gp.order]
    friends: list[np.ndarray] = [np.empty(0, dtype=np.int64)]
    for i in range(1, gp.n):
        reach = FRIEND_FACTOR * gp.radii[i - 1] / eps
        dd = pairwise_to(Y[:i], Y[i], ps.metric)
        friends.append(np.flatnonzero(dd <= reach).astype(np.int64))
    return dataclasses.replace(gp, friends=friends, eps_build=float(eps))
