"""Benchmark objectives over graphs.

``hartmann_objective`` drives the synthetic non-linear benchmark,
``robustness`` the connectivity-robustness benchmark. ``activity`` is the
degree-growth score for temporal-network data supplied by the user; no
ingestion for such data ships here.
"""

from __future__ import annotations

import math

import numpy as np

from .graphs import Graph

__all__ = [
    "HARTMANN4_ALPHA",
    "HARTMANN4_A",
    "HARTMANN4_P",
    "hartmann4",
    "hartmann_objective",
    "robustness",
    "activity",
]

# Four-column restriction of the classic 6-D Hartmann constants.
HARTMANN4_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
HARTMANN4_A = np.array(
    [
        [10.0, 3.0, 17.0, 3.5],
        [0.05, 10.0, 17.0, 0.1],
        [3.0, 3.5, 1.7, 10.0],
        [17.0, 8.0, 0.05, 10.0],
    ]
)
HARTMANN4_P = 1e-4 * np.array(
    [
        [1312.0, 1696.0, 5569.0, 124.0],
        [2329.0, 4135.0, 8307.0, 3736.0],
        [2348.0, 1451.0, 3522.0, 2883.0],
        [4047.0, 8828.0, 8732.0, 5743.0],
    ]
)


def hartmann4(x) -> float:
    """Four-dimensional Hartmann test function on [0, 1]^4 (to minimize)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (4,):
        raise ValueError("hartmann4 expects a 4-vector")
    inner = ((x[None, :] - HARTMANN4_P) ** 2 * HARTMANN4_A).sum(axis=1)
    return float(-(HARTMANN4_ALPHA * np.exp(-inner)).sum())


def hartmann_objective(x) -> float:
    """Negated Hartmann-4 of normalized features; the benchmark maximizes it."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > 1):
        raise ValueError("normalized features must lie in [0, 1]")
    return -hartmann4(x)


def _largest_component(n: int, edges: np.ndarray, removed: np.ndarray) -> int:
    """Largest connected-component size after deleting ``removed`` nodes."""
    keep = np.ones(n, dtype=bool)
    keep[removed] = False
    parent = np.arange(n)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    if edges.size:
        alive = keep[edges[:, 0]] & keep[edges[:, 1]]
        for u, v in edges[alive]:
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[ru] = rv
    sizes: dict[int, int] = {}
    best = 0
    for node in np.flatnonzero(keep):
        root = find(node)
        sizes[root] = sizes.get(root, 0) + 1
        best = max(best, sizes[root])
    return best


def robustness(
    graph: Graph,
    removal: str = "random",
    p: float = 0.8,
    trials: int = 100,
    seed: int = 0,
) -> float:
    """Connectivity robustness: largest residual component fraction.

    Removes ``round(p * N)`` nodes, either uniformly at random (averaged
    over ``trials`` seeded removals) or the highest-degree nodes (ties
    broken by node index; deterministic, so a single trial), then returns
    C / (N - N_r) with C the largest connected-component size left.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("removal ratio must be in (0, 1)")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n = graph.node_count
    n_r = int(math.floor(p * n + 0.5))
    if n_r >= n:
        raise ValueError(f"removal of {n_r} nodes would empty the {n}-node graph")
    edges = np.asarray(graph.edges, dtype=np.int64).reshape(-1, 2)
    denom = n - n_r
    if removal == "targeted":
        order = np.lexsort((np.arange(n), -graph.degrees()))
        return _largest_component(n, edges, order[:n_r]) / denom
    if removal != "random":
        raise ValueError(f"unknown removal mode {removal!r}")
    rng = np.random.default_rng(seed)
    picks = rng.random((trials, n)).argsort(axis=1)[:, :n_r]
    total = 0
    for row in picks:
        total += _largest_component(n, edges, row)
    return total / (trials * denom)


def activity(d_t: float, d_t2: float) -> float:
    """Degree-growth activity score, natural log of the friend growth minus 1."""
    growth = d_t2 - d_t
    if growth <= 0:
        raise ValueError("activity requires positive degree growth")
    return math.log(growth) - 1.0
