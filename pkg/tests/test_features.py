import itertools

import numpy as np
import pytest

from graphbo.features import (
    FeatureGroups,
    GraphFeatureExtractor,
    MinMaxNormalizer,
    extract,
    feature_matrix,
    minmax_normalize,
)
from graphbo.graphs import Graph, generate_er


def path3_betweenness_oracle():
    """Brute-force normalized betweenness of P3 averaged over nodes."""
    nodes = [0, 1, 2]
    edges = {(0, 1), (1, 2)}
    score = {v: 0.0 for v in nodes}
    for s, t in itertools.combinations(nodes, 2):
        # All shortest paths on 3 nodes are directly enumerable.
        if (min(s, t), max(s, t)) in edges:
            continue
        for mid in nodes:
            if mid in (s, t):
                continue
            if (min(s, mid), max(s, mid)) in edges and (min(mid, t), max(mid, t)) in edges:
                score[mid] += 1.0
    norm = (len(nodes) - 1) * (len(nodes) - 2) / 2
    return sum(v / norm for v in score.values()) / len(nodes)


K4 = Graph(4, tuple(itertools.combinations(range(4), 2)))
P3 = Graph(3, ((0, 1), (1, 2)))
TRIANGLE = Graph(3, ((0, 1), (1, 2), (0, 2)))


class TestExtract:
    def test_complete_graph_degree_centrality(self):
        assert extract(K4, ["avg_degree_centrality"])[0] == pytest.approx(1.0)

    def test_path_betweenness_matches_bruteforce(self):
        oracle = path3_betweenness_oracle()
        assert oracle == pytest.approx(1.0 / 3.0)
        assert extract(P3, ["avg_betweenness"])[0] == pytest.approx(oracle)

    def test_triangle_clustering(self):
        assert extract(TRIANGLE, ["avg_clustering"])[0] == pytest.approx(1.0)

    def test_counts(self):
        out = extract(P3, ["node_count", "edge_count"])
        assert out.tolist() == [3.0, 2.0]

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="unknown feature"):
            extract(P3, ["nope"])

    def test_tag_feature_reads_graph_attr(self):
        g = Graph(2, ((0, 1),), graph_attrs={"posts": 12.0})
        assert extract(g, ["tag:posts"])[0] == 12.0
        with pytest.raises(ValueError, match="attribute"):
            extract(g, ["tag:missing"])

    def test_permutation_invariance(self):
        g = generate_er(12, 0.3, seed=5)
        perm = np.random.default_rng(0).permutation(12)
        relabeled = Graph(
            12, tuple((int(perm[u]), int(perm[v])) for u, v in g.edges)
        )
        names = [
            "avg_degree_centrality",
            "avg_betweenness",
            "avg_closeness",
            "avg_clustering",
            "node_count",
            "edge_count",
        ]
        np.testing.assert_allclose(extract(g, names), extract(relabeled, names))

    def test_disconnected_graph_features_finite(self):
        g = Graph(5, ((0, 1),))
        out = extract(g, ["avg_betweenness", "avg_closeness", "avg_clustering"])
        assert np.isfinite(out).all()

    def test_random_unrelated_reproducible(self):
        g1 = feature_matrix([P3, K4], ["random_unrelated"], seed=9)
        g2 = feature_matrix([P3, K4], ["random_unrelated"], seed=9)
        np.testing.assert_array_equal(g1, g2)
        assert not np.array_equal(
            g1, feature_matrix([P3, K4], ["random_unrelated"], seed=10)
        )


class TestNormalize:
    def test_simple_column(self):
        out = minmax_normalize(np.array([[2.0], [4.0], [6.0]]))
        np.testing.assert_allclose(out[:, 0], [0.0, 0.5, 1.0])

    def test_constant_column_maps_to_zero(self):
        out = minmax_normalize(np.array([[5.0], [5.0]]))
        np.testing.assert_array_equal(out, np.zeros((2, 1)))

    def test_min_zero_max_one(self, rng):
        raw = rng.normal(size=(20, 4))
        out = minmax_normalize(raw)
        np.testing.assert_allclose(out.min(axis=0), 0.0, atol=1e-15)
        np.testing.assert_allclose(out.max(axis=0), 1.0)

    def test_idempotent(self, rng):
        raw = rng.random((15, 3))
        once = minmax_normalize(raw)
        np.testing.assert_allclose(minmax_normalize(once), once)

    def test_empty_errors(self):
        with pytest.raises(ValueError):
            minmax_normalize(np.empty((0, 2)))


class TestEstimators:
    def test_extractor_transform(self, small_candidates):
        est = GraphFeatureExtractor(features=("node_count", "edge_count"), seed=0)
        X = est.fit_transform(small_candidates.graphs)
        assert X.shape == (len(small_candidates), 2)
        assert est.get_params()["seed"] == 0

    def test_normalizer_fit_transform(self):
        raw = np.array([[0.0, 10.0], [2.0, 30.0]])
        scaler = MinMaxNormalizer().fit(raw)
        out = scaler.transform(raw)
        np.testing.assert_allclose(out, [[0.0, 0.0], [1.0, 1.0]])
        # Out-of-sample rows reuse the fitted statistics.
        np.testing.assert_allclose(scaler.transform([[4.0, 20.0]]), [[2.0, 0.5]])

    def test_feature_groups_build(self, small_candidates):
        groups = FeatureGroups.build(
            small_candidates.graphs,
            [("a", ["node_count"]), ("b", ["edge_count", "avg_clustering"])],
        )
        assert groups.dims == (1, 2)
        for mat in groups.matrices:
            assert mat.min() >= 0.0 and mat.max() <= 1.0

    def test_feature_groups_reject_unnormalized(self):
        with pytest.raises(ValueError, match="normalized"):
            FeatureGroups(("a",), (np.array([[2.0]]),))
