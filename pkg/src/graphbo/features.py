"""Explicit per-graph features: extraction, min-max scaling, grouping.

Topological statistics use normalized centrality definitions (values in
[0, 1] before scaling); disconnected graphs are handled with the standard
per-component conventions, so ER graphs at low edge probability never
break extraction.
"""

from __future__ import annotations

from dataclasses import dataclass

import networkx as nx
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils import check_array

from .graphs import Graph

__all__ = [
    "FEATURE_NAMES",
    "extract",
    "feature_matrix",
    "minmax_normalize",
    "FeatureGroups",
    "GraphFeatureExtractor",
    "MinMaxNormalizer",
]

FEATURE_NAMES = (
    "node_count",
    "edge_count",
    "avg_degree_centrality",
    "avg_betweenness",
    "avg_closeness",
    "avg_clustering",
    "random_unrelated",
)


def _avg(values) -> float:
    values = list(values)
    return float(sum(values) / len(values))


def extract(graph: Graph, names, rng: np.random.Generator | None = None) -> np.ndarray:
    """Extract the named raw features of one graph, in the given order.

    ``random_unrelated`` draws one uniform value from ``rng`` per request
    (a deliberate distractor feature); ``tag:<name>`` reads the graph
    attribute ``<name>``.
    """
    g = None
    out = np.empty(len(names), dtype=float)
    for i, name in enumerate(names):
        if name == "node_count":
            out[i] = graph.node_count
        elif name == "edge_count":
            out[i] = graph.edge_count
        elif name == "random_unrelated":
            if rng is None:
                raise ValueError("random_unrelated requires an rng")
            out[i] = rng.random()
        elif name.startswith("tag:"):
            key = name[4:]
            if not graph.graph_attrs or key not in graph.graph_attrs:
                raise ValueError(f"graph has no attribute {key!r}")
            out[i] = graph.graph_attrs[key]
        else:
            if g is None:
                g = graph.to_networkx()
            if name == "avg_degree_centrality":
                out[i] = _avg(nx.degree_centrality(g).values())
            elif name == "avg_betweenness":
                out[i] = _avg(nx.betweenness_centrality(g, normalized=True).values())
            elif name == "avg_closeness":
                out[i] = _avg(nx.closeness_centrality(g).values())
            elif name == "avg_clustering":
                out[i] = _avg(nx.clustering(g).values())
            else:
                raise ValueError(f"unknown feature name {name!r}")
    return out


def feature_matrix(graphs, names, seed: int = 0) -> np.ndarray:
    """Raw feature matrix over a collection of graphs (rows = graphs)."""
    rng = np.random.default_rng(seed)
    return np.stack([extract(g, names, rng=rng) for g in graphs])


def minmax_normalize(raw: np.ndarray) -> np.ndarray:
    """Column-wise min-max scaling into [0, 1]; constant columns map to 0."""
    raw = np.asarray(raw, dtype=float)
    if raw.size == 0:
        raise ValueError("feature matrix is empty")
    lo = raw.min(axis=0)
    span = raw.max(axis=0) - lo
    span = np.where(span > 0, span, 1.0)
    return (raw - lo) / span


@dataclass(frozen=True)
class FeatureGroups:
    """Named groups of normalized feature vectors, one row per graph."""

    names: tuple[str, ...]
    matrices: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.names) != len(self.matrices):
            raise ValueError("names and matrices must align")
        rows = {m.shape[0] for m in self.matrices}
        if len(rows) > 1:
            raise ValueError("all groups must cover the same graphs")
        for name, m in zip(self.names, self.matrices):
            if m.ndim != 2:
                raise ValueError(f"group {name!r} is not a matrix")
            if m.size and (m.min() < -1e-12 or m.max() > 1 + 1e-12):
                raise ValueError(f"group {name!r} is not normalized into [0, 1]")

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(m.shape[1] for m in self.matrices)

    def __len__(self) -> int:
        return len(self.names)

    @classmethod
    def build(cls, graphs, group_specs, seed: int = 0) -> "FeatureGroups":
        """Extract and normalize groups given ``[(name, [feature, ...]), ...]``."""
        names = []
        mats = []
        for name, feats in group_specs:
            names.append(name)
            mats.append(minmax_normalize(feature_matrix(graphs, feats, seed=seed)))
        return cls(tuple(names), tuple(mats))


class GraphFeatureExtractor(BaseEstimator, TransformerMixin):
    """Transformer from graphs to a raw feature matrix.

    Parameters
    ----------
    features : sequence of str
        Feature names, drawn from :data:`FEATURE_NAMES` or ``tag:<name>``.
    seed : int
        Seed for the ``random_unrelated`` distractor column.
    """

    def __init__(self, features=("node_count", "edge_count"), seed=0):
        self.features = features
        self.seed = seed

    def fit(self, X, y=None):
        for name in self.features:
            if name not in FEATURE_NAMES and not name.startswith("tag:"):
                raise ValueError(f"unknown feature name {name!r}")
        return self

    def transform(self, X):
        return feature_matrix(X, self.features, seed=self.seed)


class MinMaxNormalizer(BaseEstimator, TransformerMixin):
    """Column-wise min-max scaler fitted on the full candidate set.

    Unlike an incremental scaler, statistics are computed once over the
    candidate set and reused for every transform, and constant columns map
    to 0 so downstream length-scale kernels stay finite.
    """

    def fit(self, X, y=None):
        X = check_array(X, ensure_2d=True, dtype=float)
        self.min_ = X.min(axis=0)
        span = X.max(axis=0) - self.min_
        self.span_ = np.where(span > 0, span, 1.0)
        return self

    def transform(self, X):
        X = check_array(X, ensure_2d=True, dtype=float)
        return (X - self.min_) / self.span_
