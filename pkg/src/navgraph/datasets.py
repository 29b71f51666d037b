"""Seeded synthetic point sets and query generators."""

from __future__ import annotations

from typing import Callable

import numpy as np


def uniform_cube(n: int, d: int = 2, seed: int = 0) -> np.ndarray:
    return np.random.default_rng(seed).random((n, d))


def gaussian_clusters(n: int, d: int = 2, seed: int = 0, clusters: int = 8, scale: float = 0.03) -> np.ndarray:
    rng = np.random.default_rng(seed)
    centers = rng.random((clusters, d))
    labels = rng.integers(0, clusters, size=n)
    return centers[labels] + rng.normal(0.0, scale, size=(n, d))


def geometric_progression(levels: int = 20, d: int = 1, seed: int = 0) -> np.ndarray:
    """{0} together with 2^0 .. 2^levels on a line: spread exactly 2^levels.

    ``d`` and ``seed`` are accepted for a uniform generator signature; extra
    coordinates are zero.
    """
    xs = np.concatenate(([0.0], 2.0 ** np.arange(levels + 1)))
    out = np.zeros((len(xs), d))
    out[:, 0] = xs
    return out


def uniform_minus_island(n: int, d: int = 2, seed: int = 0, island: float = 0.2) -> np.ndarray:
    """Uniform points in the unit square with a central disk of radius ``island`` removed."""
    if d != 2:
        raise ValueError("the island generator is two-dimensional")
    rng = np.random.default_rng(seed)
    out = np.empty((0, 2))
    while len(out) < n:
        batch = rng.random((2 * (n - len(out)) + 16, 2))
        keep = ((batch - 0.5) ** 2).sum(axis=1) > island * island
        out = np.vstack([out, batch[keep]])
    return out[:n]


GENERATORS: dict[str, Callable[..., np.ndarray]] = {
    "uniform": uniform_cube,
    "clusters": gaussian_clusters,
    "geometric": lambda n, d=1, seed=0: geometric_progression(n, d, seed),
    "island": uniform_minus_island,
}


def generate(name: str, n: int, d: int = 2, seed: int = 0) -> np.ndarray:
    """Dispatch by generator name. For ``geometric`` ``n`` is the number of levels."""
    try:
        gen = GENERATORS[name]
    except KeyError:
        raise ValueError(f"unknown generator {name!r}; expected one of {', '.join(GENERATORS)}") from None
    return gen(n, d, seed)


def box_queries(points: np.ndarray, m: int, seed: int = 0, pad: float = 0.1) -> np.ndarray:
    """``m`` uniform queries in the bounding box of ``points`` grown by ``pad`` on each side."""
    rng = np.random.default_rng(seed)
    lo, hi = points.min(axis=0), points.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    lo = lo - pad * span
    hi = hi + pad * span
    return lo + rng.random((m, points.shape[1])) * (hi - lo)
