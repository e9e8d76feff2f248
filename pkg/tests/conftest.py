import numpy as np
import pytest

from graphbo.features import FeatureGroups
from graphbo.graphs import SynthSpec, synth_dataset
from graphbo.kernels import KernelWorkspace

STRUCT_FEATURES = [
    "node_count",
    "edge_count",
    "avg_degree_centrality",
    "avg_betweenness",
]


@pytest.fixture(scope="session")
def small_candidates():
    return synth_dataset(SynthSpec(count_per_family=20, seed=11))


@pytest.fixture(scope="session")
def small_groups(small_candidates):
    return FeatureGroups.build(
        small_candidates.graphs, [("struct", STRUCT_FEATURES)], seed=0
    )


@pytest.fixture(scope="session")
def small_workspace(small_candidates, small_groups):
    ws = KernelWorkspace(
        small_candidates.graphs, small_groups, k=4, samples=300, seed=5
    )
    ws.graph_gram(5, 5)
    return ws


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
