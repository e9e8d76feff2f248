"""Benchmark assembly: candidate sets, objective tables, and metadata.

Benchmarks precompute the objective for every candidate once (in parallel
for the traffic benchmark, where one evaluation is a full equilibrium
assignment). Optimizers then draw evaluations from the frozen table, which
both fixes the true optimum for evaluations-to-optimum accounting and
makes multi-seed experiments cheap.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import traffic
from .features import FeatureGroups, feature_matrix, minmax_normalize
from .graphs import CandidateSet, SynthSpec, read_graphs, synth_dataset
from .objectives import hartmann_objective, robustness

__all__ = ["Benchmark", "build_benchmark", "HARTMANN_INPUT_FEATURES"]

# The four normalized features the synthetic objective is built on.
HARTMANN_INPUT_FEATURES = (
    "node_count",
    "edge_count",
    "avg_degree_centrality",
    "avg_betweenness",
)


@dataclass
class Benchmark:
    """A candidate set with fully tabulated objective values."""

    name: str
    candidates: CandidateSet
    feature_groups: FeatureGroups
    y_table: np.ndarray
    metadata: dict = field(default_factory=dict)
    encoding: np.ndarray | None = None

    @property
    def optimum_value(self) -> float:
        return float(self.y_table.max())

    @property
    def optimum_index(self) -> int:
        return int(self.y_table.argmax())

    def objective(self, index: int, graph) -> float:
        return float(self.y_table[index])


def _synth_candidates(spec: dict) -> CandidateSet:
    synth = SynthSpec(
        n_values=tuple(spec.get("n_values", SynthSpec.n_values)),
        p_values=tuple(spec.get("p_values", SynthSpec.p_values)),
        m_values=tuple(spec.get("m_values", SynthSpec.m_values)),
        count_per_family=int(spec.get("count_per_family", 50)),
        seed=int(spec.get("seed", 0)),
    )
    return synth_dataset(synth)


def _build_feature_groups(candidates, group_specs, seed: int) -> FeatureGroups:
    specs = [(g["name"], list(g["features"])) for g in group_specs]
    return FeatureGroups.build(candidates.graphs, specs, seed=seed)


def _hartmann_table(candidates) -> np.ndarray:
    x = minmax_normalize(
        feature_matrix(candidates.graphs, HARTMANN_INPUT_FEATURES, seed=0)
    )
    return np.array([hartmann_objective(row) for row in x])


def _robustness_table(candidates, options: dict) -> np.ndarray:
    removal = options.get("removal", "targeted")
    p = float(options.get("p", 0.8))
    trials = int(options.get("trials", 100))
    seeds = np.random.SeedSequence(int(options.get("seed", 0))).generate_state(
        len(candidates)
    )
    return np.array(
        [
            robustness(g, removal=removal, p=p, trials=trials, seed=int(s))
            for g, s in zip(candidates.graphs, seeds)
        ]
    )


def _utndp_value(args):
    network, tolerance, max_iter = args
    return traffic.utndp_objective(network, tolerance=tolerance, max_iter=max_iter)


def _utndp_table(cands, options: dict, cache_path, jobs: int) -> np.ndarray:
    """Evaluate all candidate networks, reusing a JSON value cache if present."""
    tolerance = float(options.get("tolerance", 1e-4))
    max_iter = int(options.get("max_iter", 500))
    ids = ["".join(str(b) for b in c.decision) for c in cands]
    cached: dict[str, float] = {}
    if cache_path is not None and Path(cache_path).exists():
        with open(cache_path) as fh:
            cached = json.load(fh)
    values = np.full(len(cands), np.nan)
    todo = []
    for i, cid in enumerate(ids):
        if cid in cached:
            values[i] = cached[cid]
        else:
            todo.append(i)
    if todo:
        work = [(cands[i].network, tolerance, max_iter) for i in todo]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_utndp_value, work, chunksize=8))
        else:
            results = [_utndp_value(w) for w in work]
        for i, value in zip(todo, results):
            values[i] = value
        if cache_path is not None:
            with open(cache_path, "w") as fh:
                json.dump({cid: float(v) for cid, v in zip(ids, values)}, fh, indent=0)
    return values


def build_benchmark(config: dict, base_dir, jobs: int = 1) -> Benchmark:
    """Assemble the benchmark named by ``config`` (paths relative to base_dir)."""
    base_dir = Path(base_dir)
    name = config["benchmark"]
    spec = config.get("candidate_spec", {})
    options = config.get("objective", {})
    feature_seed = int(config.get("feature_seed", 0))
    group_specs = config["feature_groups"]
    metadata = {
        "benchmark": name,
        "centrality_convention": "normalized",
        "log_base": "natural",
    }
    encoding = None

    if name == "hartmann":
        candidates = _synth_candidates(spec)
        y = _hartmann_table(candidates)
        metadata["objective"] = {
            "kind": "negated-hartmann4",
            "inputs": list(HARTMANN_INPUT_FEATURES),
            "constants": "alpha=(1.0,1.2,3.0,3.2); first four columns of the "
            "standard 6-D A and P matrices",
        }
    elif name == "robustness":
        candidates = _synth_candidates(spec)
        y = _robustness_table(candidates, options)
        metadata["objective"] = {
            "kind": "connectivity-robustness",
            "removal": options.get("removal", "targeted"),
            "p": options.get("p", 0.8),
            "trials": options.get("trials", 100),
        }
    elif name == "utndp":
        net = traffic.parse_tntp(base_dir / spec["net"], base_dir / spec["trips"])
        if "projects" in spec:
            projects = traffic.load_projects(base_dir / spec["projects"])
            removed = {traffic._road_key(l) for p in projects for l in p.links}
            base_links = tuple(
                l for l in net.links if traffic._road_key(l) not in removed
            )
            base = traffic.TrafficNetwork(net.n_nodes, base_links, net.od)
        else:
            base, projects = traffic.select_projects(
                net, int(spec.get("project_count", 10)), int(spec.get("project_seed", 0))
            )
        cands = traffic.build_candidates(base, projects)
        candidates = traffic.candidate_set(cands)
        cache_path = spec.get("cache")
        if cache_path is not None:
            cache_path = base_dir / cache_path
        y = _utndp_table(cands, options, cache_path, jobs)
        encoding = np.array([c.decision for c in cands], dtype=np.uint8)
        metadata["objective"] = {
            "kind": "negative-log-total-travel-time",
            "projects": [p.id for p in projects],
            "fw_tolerance": options.get("tolerance", 1e-4),
        }
    elif name == "custom":
        candidates = read_graphs(base_dir / spec["path"])
        kind = options.get("kind", "hartmann")
        if kind == "hartmann":
            y = _hartmann_table(candidates)
        elif kind == "robustness":
            y = _robustness_table(candidates, options)
        else:
            raise ValueError(f"unknown custom objective kind {kind!r}")
        metadata["objective"] = {"kind": kind}
    else:
        raise ValueError(f"unknown benchmark {name!r}")

    groups = _build_feature_groups(candidates, group_specs, feature_seed)
    finite = np.isfinite(y)
    if not finite.all():
        metadata["infeasible_candidates"] = int((~finite).sum())
        y = np.where(finite, y, -math.inf)
    metadata["optimum_value"] = float(np.max(y))
    metadata["optimum_id"] = candidates.ids[int(np.argmax(y))]
    return Benchmark(
        name=name,
        candidates=candidates,
        feature_groups=groups,
        y_table=y,
        metadata=metadata,
        encoding=encoding,
    )
