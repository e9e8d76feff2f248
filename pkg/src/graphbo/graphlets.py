"""Graphlet sampling and canonicalization.

A graphlet is an induced subgraph on ``k`` sampled nodes (3 <= k <= 6).
Its isomorphism class is identified by the minimum adjacency bit-string
over all k! node relabelings; full lookup tables over the 2^C(k,2)
possible adjacency masks are built once per ``k`` and cached.
"""

from __future__ import annotations

import itertools

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

__all__ = [
    "canonical_form",
    "canonical_table",
    "pair_list",
    "sample_graphlets",
    "build_corpus",
    "GraphletProfiler",
]

MIN_K = 3
MAX_K = 6

_TABLES: dict[int, np.ndarray] = {}


def pair_list(k: int) -> list[tuple[int, int]]:
    """Unordered node pairs of a k-node graph, in bit order."""
    return list(itertools.combinations(range(k), 2))


def canonical_table(k: int) -> np.ndarray:
    """Lookup table mapping every adjacency mask to its canonical id."""
    if not MIN_K <= k <= MAX_K:
        raise ValueError(f"graphlet size must be in [{MIN_K}, {MAX_K}], got {k}")
    table = _TABLES.get(k)
    if table is None:
        pairs = pair_list(k)
        index = {p: i for i, p in enumerate(pairs)}
        n_bits = len(pairs)
        bits = (np.arange(2**n_bits, dtype=np.int64)[:, None] >> np.arange(n_bits)) & 1
        table = np.full(2**n_bits, np.iinfo(np.int64).max, dtype=np.int64)
        for perm in itertools.permutations(range(k)):
            weights = np.empty(n_bits, dtype=np.int64)
            for idx, (a, b) in enumerate(pairs):
                pa, pb = perm[a], perm[b]
                weights[idx] = 1 << index[(pa, pb) if pa < pb else (pb, pa)]
            np.minimum(table, bits @ weights, out=table)
        _TABLES[k] = table
    return table


def canonical_form(k: int, edges) -> int:
    """Canonical id of the induced subgraph given by ``edges`` over 0..k-1.

    Two inputs map to the same id iff the graphs are isomorphic.
    """
    pairs = pair_list(k)
    index = {p: i for i, p in enumerate(pairs)}
    mask = 0
    for u, v in edges:
        if u == v or not (0 <= u < k and 0 <= v < k):
            raise ValueError(f"bad edge ({u}, {v}) for a {k}-node graphlet")
        mask |= 1 << index[(u, v) if u < v else (v, u)]
    return int(canonical_table(k)[mask])


def _masks_for_samples(adj: np.ndarray, nodes: np.ndarray, k: int) -> np.ndarray:
    """Adjacency masks of induced subgraphs; ``nodes`` is (samples, k)."""
    mask = np.zeros(nodes.shape[0], dtype=np.int64)
    for idx, (a, b) in enumerate(pair_list(k)):
        mask |= adj[nodes[:, a], nodes[:, b]].astype(np.int64) << idx
    return mask


def _padded_mask(adj: np.ndarray, universe: np.ndarray, k: int) -> int:
    """Mask of the whole ``universe`` padded with isolated nodes up to k."""
    mask = 0
    for idx, (a, b) in enumerate(pair_list(k)):
        if a < len(universe) and b < len(universe) and adj[universe[a], universe[b]]:
            mask |= 1 << idx
    return mask


def _sample_universe(adj, universe, k, count, rng, counts):
    universe = np.asarray(universe, dtype=np.int64)
    if len(universe) < k:
        mask = _padded_mask(adj, universe, k)
        cid = int(canonical_table(k)[mask])
        counts[cid] = counts.get(cid, 0) + count
        return
    order = rng.random((count, len(universe))).argsort(axis=1)[:, :k]
    masks = _masks_for_samples(adj, universe[order], k)
    table = canonical_table(k)
    ids, reps = np.unique(table[masks], return_counts=True)
    for cid, rep in zip(ids, reps):
        counts[int(cid)] = counts.get(int(cid), 0) + int(rep)


def sample_graphlets(graph, k: int, samples: int, seed: int, partition=None):
    """Sample induced k-node subgraphs and return relative class frequencies.

    Without a partition, each sample picks k distinct nodes uniformly from
    the whole graph. With a partition (a list of node subsets, used for
    sparse networks organized into local areas), the budget is split across
    parts, sampling is performed inside each part, and the counts are
    pooled. Graphs or parts with fewer than k nodes contribute the padded
    form in which missing nodes are isolated.
    """
    if not MIN_K <= k <= MAX_K:
        raise ValueError(f"graphlet size must be in [{MIN_K}, {MAX_K}], got {k}")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    adj = graph.adjacency_matrix()
    rng = np.random.default_rng(seed)
    counts: dict[int, int] = {}
    if partition is None:
        _sample_universe(adj, np.arange(graph.node_count), k, samples, rng, counts)
    else:
        if not partition:
            raise ValueError("partition must contain at least one part")
        for part in partition:
            for node in part:
                if not 0 <= node < graph.node_count:
                    raise ValueError(f"partition node {node} out of range")
        base, extra = divmod(samples, len(partition))
        for i, part in enumerate(partition):
            count = base + (1 if i < extra else 0)
            if count:
                _sample_universe(adj, part, k, count, rng, counts)
    total = sum(counts.values())
    return {cid: c / total for cid, c in counts.items()}


def build_corpus(graph, k: int, samples_per_node: int, seed: int) -> list[list[int]]:
    """Node-rooted graphlet sentences for embedding training.

    Each node contributes one sentence: the canonical ids of
    ``samples_per_node`` graphlets sampled from its closed 1-hop
    neighborhood, so co-occurrence encodes "graphlets from the same
    locality".
    """
    adj = graph.adjacency_matrix()
    rng = np.random.default_rng(seed)
    table = canonical_table(k)
    sentences = []
    neighbor_lists = [np.flatnonzero(adj[v]) for v in range(graph.node_count)]
    for v in range(graph.node_count):
        universe = np.append(neighbor_lists[v], v)
        if len(universe) < k:
            mask = _padded_mask(adj, universe, k)
            sentences.append([int(table[mask])] * samples_per_node)
        else:
            order = rng.random((samples_per_node, len(universe))).argsort(axis=1)[:, :k]
            masks = _masks_for_samples(adj, universe[order], k)
            sentences.append([int(c) for c in table[masks]])
    return sentences


class GraphletProfiler(BaseEstimator, TransformerMixin):
    """Builds graphlet frequency profiles over a fixed candidate set.

    ``fit`` samples every graph once and fixes the vocabulary: the sorted
    canonical ids observed anywhere in the set, giving dense indices that
    are stable for the lifetime of the candidate set. ``transform`` maps
    graphs onto that vocabulary (classes never seen during fit are
    dropped, which leaves all kernel values unchanged since their fitted
    frequencies are zero).

    Parameters
    ----------
    k : int
        Graphlet size, between 3 and 6.
    samples : int
        Sampling budget per graph.
    seed : int
        Base seed; per-graph streams are spawned from it.
    partition : list of node subsets, optional
        Forwarded to :func:`sample_graphlets`.
    """

    def __init__(self, k=4, samples=500, seed=0, partition=None):
        self.k = k
        self.samples = samples
        self.seed = seed
        self.partition = partition

    def _profiles(self, graphs):
        seeds = np.random.SeedSequence(self.seed).generate_state(len(graphs))
        return [
            sample_graphlets(g, self.k, self.samples, int(s), partition=self.partition)
            for g, s in zip(graphs, seeds)
        ]

    def fit(self, X, y=None):
        graphs = list(X)
        if not graphs:
            raise ValueError("candidate set must be non-empty")
        profiles = self._profiles(graphs)
        vocab = sorted({cid for prof in profiles for cid in prof})
        self.vocab_ = {cid: i for i, cid in enumerate(vocab)}
        self.psi_ = self._stack(profiles)
        self._fit_graphs = graphs
        return self

    def _stack(self, profiles) -> np.ndarray:
        psi = np.zeros((len(profiles), len(self.vocab_)))
        for row, prof in enumerate(profiles):
            for cid, freq in prof.items():
                col = self.vocab_.get(cid)
                if col is not None:
                    psi[row, col] = freq
        return psi

    def transform(self, X):
        graphs = list(X)
        if graphs is not None and hasattr(self, "_fit_graphs"):
            if len(graphs) == len(self._fit_graphs) and all(
                a is b for a, b in zip(graphs, self._fit_graphs)
            ):
                return self.psi_.copy()
        return self._stack(self._profiles(graphs))
