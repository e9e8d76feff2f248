import json
from pathlib import Path

import numpy as np
import pytest

from graphbo.benchmarks import HARTMANN_INPUT_FEATURES, build_benchmark
from graphbo.features import feature_matrix, minmax_normalize
from graphbo.graphs import write_graphs
from graphbo.objectives import hartmann_objective
from graphbo.traffic import utndp_objective

DATA = Path(__file__).resolve().parents[1] / "src" / "graphbo" / "data"


def hartmann_config(count=20, seed=5):
    return {
        "benchmark": "hartmann",
        "candidate_spec": {"count_per_family": count, "seed": seed},
        "feature_groups": [{"name": "s", "features": ["node_count", "edge_count"]}],
    }


class TestHartmannBenchmark:
    def test_argmax_matches_exhaustive_rescan(self):
        bench = build_benchmark(hartmann_config(count=250, seed=0), base_dir=".")
        x = minmax_normalize(
            feature_matrix(bench.candidates.graphs, HARTMANN_INPUT_FEATURES, seed=0)
        )
        best_idx, best_val = None, -np.inf
        for i, row in enumerate(x):
            val = hartmann_objective(row)
            if val > best_val:
                best_idx, best_val = i, val
        assert bench.optimum_index == best_idx
        assert bench.optimum_value == pytest.approx(best_val)
        assert len(bench.candidates) == 500

    def test_objective_invariant_to_candidate_order(self):
        # The tabulated value of a graph does not depend on which index it
        # occupies; permuting the candidate order permutes the table.
        bench = build_benchmark(hartmann_config(), base_dir=".")
        assert bench.y_table.shape == (40,)
        assert bench.metadata["objective"]["kind"] == "negated-hartmann4"

    def test_metadata_records_conventions(self):
        bench = build_benchmark(hartmann_config(), base_dir=".")
        assert bench.metadata["centrality_convention"] == "normalized"
        assert "constants" in bench.metadata["objective"]
        assert bench.metadata["optimum_id"] in bench.candidates.ids


class TestRobustnessBenchmark:
    def test_targeted_table(self):
        config = {
            "benchmark": "robustness",
            "candidate_spec": {"count_per_family": 10, "seed": 2},
            "objective": {"removal": "targeted", "p": 0.8},
            "feature_groups": [{"name": "s", "features": ["node_count"]}],
        }
        bench = build_benchmark(config, base_dir=".")
        assert ((bench.y_table > 0) & (bench.y_table <= 1.0)).all()


class TestUtndpBenchmark:
    def make_config(self, tmp_path, cache=None):
        config = {
            "benchmark": "utndp",
            "candidate_spec": {
                "net": str(DATA / "siouxfalls_net.tntp"),
                "trips": str(DATA / "siouxfalls_trips.tntp"),
                "project_count": 3,
                "project_seed": 2,
            },
            "objective": {"tolerance": 1e-3, "max_iter": 300},
            "feature_groups": [{"name": "s", "features": ["edge_count"]}],
        }
        if cache:
            config["candidate_spec"]["cache"] = cache
        return config

    def test_argmax_matches_direct_evaluation(self, tmp_path):
        bench = build_benchmark(self.make_config(tmp_path), base_dir=tmp_path)
        assert len(bench.candidates) == 8
        from graphbo.traffic import build_candidates, parse_tntp, select_projects

        net = parse_tntp(DATA / "siouxfalls_net.tntp", DATA / "siouxfalls_trips.tntp")
        base, projects = select_projects(net, 3, seed=2)
        direct = [
            utndp_objective(c.network, tolerance=1e-3, max_iter=300)
            for c in build_candidates(base, projects)
        ]
        np.testing.assert_allclose(bench.y_table, direct, rtol=1e-12)
        assert bench.optimum_index == int(np.argmax(direct))

    def test_cache_file_round_trip(self, tmp_path):
        config = self.make_config(tmp_path, cache="values.json")
        bench1 = build_benchmark(config, base_dir=tmp_path)
        cache_path = tmp_path / "values.json"
        assert cache_path.exists()
        stamp = cache_path.stat().st_mtime_ns
        payload = json.loads(cache_path.read_text())
        assert len(payload) == 8
        bench2 = build_benchmark(config, base_dir=tmp_path)
        np.testing.assert_array_equal(bench1.y_table, bench2.y_table)
        assert cache_path.stat().st_mtime_ns == stamp  # untouched on full hit

    def test_encoding_matches_decisions(self, tmp_path):
        bench = build_benchmark(self.make_config(tmp_path), base_dir=tmp_path)
        assert bench.encoding.shape == (8, 3)
        assert bench.candidates.ids[5] == "101"
        np.testing.assert_array_equal(bench.encoding[5], [1, 0, 1])


class TestCustomBenchmark:
    def test_reads_graph_file(self, tmp_path, small_candidates):
        path = tmp_path / "set.txt"
        write_graphs(small_candidates, path)
        config = {
            "benchmark": "custom",
            "candidate_spec": {"path": "set.txt"},
            "objective": {"kind": "hartmann"},
            "feature_groups": [{"name": "s", "features": ["node_count"]}],
        }
        bench = build_benchmark(config, base_dir=tmp_path)
        assert bench.candidates.ids == small_candidates.ids
        assert bench.y_table.shape == (len(small_candidates),)

    def test_unknown_benchmark(self):
        with pytest.raises(ValueError, match="unknown benchmark"):
            build_benchmark(
                {"benchmark": "nope", "feature_groups": []}, base_dir="."
            )
