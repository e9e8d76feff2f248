"""Graph and vector kernels, and their weighted combination.

The graph side is a graphlet-frequency kernel, optionally reweighted by a
diagonal matrix of embedding squared norms (the "deep" variant), then
normalized so every self-similarity is exactly 1. The vector side is a
squared-exponential kernel with one length scale per feature dimension.
The combined kernel is a non-negative weighted sum of the normalized graph
kernel and one vector kernel per feature group, hence positive
semi-definite whenever the weights are non-negative.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from sklearn.base import BaseEstimator

from .embeddings import EmbeddingModel, train_embeddings
from .exceptions import DegenerateGraphError
from .features import FeatureGroups
from .graphlets import GraphletProfiler, build_corpus

__all__ = [
    "KernelParams",
    "base_graphlet_kernel",
    "deep_graphlet_kernel",
    "normalize_kernel",
    "seard",
    "seard_matrix",
    "combined_kernel",
    "KernelCache",
    "KernelWorkspace",
    "DeepGraphletKernel",
]


@dataclass(frozen=True, eq=False)
class KernelParams:
    """Full hyperparameter record of the combined kernel.

    ``length_scales`` holds one positive vector per feature group, aligned
    with ``betas``. ``alpha`` weights the normalized graph kernel.
    """

    w: int
    d: int
    length_scales: tuple[np.ndarray, ...]
    sigma: float
    alpha: float
    betas: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self,
            "length_scales",
            tuple(np.asarray(l, dtype=float) for l in self.length_scales),
        )
        object.__setattr__(self, "betas", np.asarray(self.betas, dtype=float))
        if len(self.betas) != len(self.length_scales):
            raise ValueError("one beta per feature group required")
        if self.alpha < 0 or np.any(self.betas < 0):
            raise ValueError("kernel weights must be non-negative")
        if self.sigma < 0:
            raise ValueError("noise level must be non-negative")
        for l in self.length_scales:
            if np.any(l <= 0):
                raise ValueError("length scales must be strictly positive")

    def with_pins(self, pins: dict | None) -> "KernelParams":
        if not pins:
            return self
        out = self
        if "alpha" in pins:
            out = replace(out, alpha=float(pins["alpha"]))
        if "betas" in pins:
            out = replace(out, betas=np.full(len(self.betas), float(pins["betas"])))
        return out

    @property
    def weight_total(self) -> float:
        return float(self.alpha + self.betas.sum())

    def flat_summary(self) -> dict:
        """Scalar view used by run records and fit traces."""
        out = {"w": self.w, "d": self.d, "alpha": self.alpha, "sigma": self.sigma}
        for j, b in enumerate(self.betas):
            out[f"beta_{j}"] = float(b)
        for j, ls in enumerate(self.length_scales):
            for i, l in enumerate(ls):
                out[f"l_{j}_{i}"] = float(l)
        return out


def base_graphlet_kernel(psi_a: np.ndarray, psi_b: np.ndarray) -> float:
    """Inner product of graphlet frequency vectors over a shared vocabulary."""
    psi_a = np.asarray(psi_a, dtype=float)
    psi_b = np.asarray(psi_b, dtype=float)
    if psi_a.shape != psi_b.shape:
        raise ValueError("frequency vectors use different vocabularies")
    return float(psi_a @ psi_b)


def deep_graphlet_kernel(psi_a: np.ndarray, psi_b: np.ndarray, m_diag: np.ndarray) -> float:
    """Frequency inner product reweighted by embedding squared norms."""
    psi_a = np.asarray(psi_a, dtype=float)
    psi_b = np.asarray(psi_b, dtype=float)
    m_diag = np.asarray(m_diag, dtype=float)
    if psi_a.shape != psi_b.shape or m_diag.shape != psi_a.shape:
        raise ValueError("vocabulary sizes do not match")
    return float((psi_a * m_diag) @ psi_b)


def normalize_kernel(k_raw: np.ndarray) -> np.ndarray:
    """Cosine-normalize a raw kernel matrix; the diagonal becomes exactly 1."""
    k_raw = np.asarray(k_raw, dtype=float)
    diag = np.diag(k_raw)
    if np.any(diag <= 0):
        bad = int(np.argmin(diag))
        raise DegenerateGraphError(f"graph {bad} has non-positive self-kernel")
    scale = 1.0 / np.sqrt(diag)
    out = k_raw * scale[:, None] * scale[None, :]
    np.fill_diagonal(out, 1.0)
    return out


def seard(f_a, f_b, length_scales) -> float:
    """Squared-exponential ARD kernel between two feature vectors."""
    f_a = np.asarray(f_a, dtype=float)
    f_b = np.asarray(f_b, dtype=float)
    length_scales = np.asarray(length_scales, dtype=float)
    if f_a.shape != f_b.shape or f_a.shape != length_scales.shape:
        raise ValueError("feature vectors and length scales must share a dimension")
    if np.any(length_scales <= 0):
        raise ValueError("length scales must be strictly positive")
    z = (f_a - f_b) / length_scales
    return float(np.exp(-0.5 * np.dot(z, z)))


def seard_matrix(F_rows: np.ndarray, F_cols: np.ndarray, length_scales) -> np.ndarray:
    """SEARD kernel between every row pair of two feature matrices."""
    inv = 0.5 / np.asarray(length_scales, dtype=float) ** 2
    diff = F_rows[:, None, :] - F_cols[None, :, :]
    return np.exp(-np.einsum("rcd,d->rc", diff * diff, inv))


def combined_kernel(kg_tilde: float, feats_a, feats_b, params: KernelParams) -> float:
    """Weighted combination for one graph pair.

    ``kg_tilde`` is the normalized graph-kernel value for the pair;
    ``feats_a``/``feats_b`` list one feature vector per group.
    """
    if len(feats_a) != len(params.betas) or len(feats_b) != len(params.betas):
        raise ValueError("one feature vector per group required")
    value = params.alpha * kg_tilde
    for fa, fb, ls, beta in zip(feats_a, feats_b, params.length_scales, params.betas):
        value += beta * seard(fa, fb, ls)
    return float(value)


class KernelCache:
    """Normalized graph-kernel matrices keyed by (window, dim).

    The graph kernel for a fixed grid point depends only on the candidate
    set, so it is computed once and reused across refits, strategies and
    seeds. ``save``/``load`` persist the table to an ``.npz`` file.
    """

    def __init__(self, ids=None):
        self.ids = tuple(ids) if ids is not None else None
        self._table: dict[tuple[int, int], np.ndarray] = {}

    def get(self, w: int, d: int):
        return self._table.get((w, d))

    def put(self, w: int, d: int, matrix: np.ndarray) -> None:
        self._table[(w, d)] = matrix

    def __len__(self) -> int:
        return len(self._table)

    def save(self, path) -> None:
        arrays = {f"K_{w}_{d}": m for (w, d), m in self._table.items()}
        ids = np.array(self.ids if self.ids is not None else [], dtype=str)
        np.savez_compressed(path, ids=ids, **arrays)

    @classmethod
    def load(cls, path) -> "KernelCache":
        with np.load(path) as data:
            ids = tuple(data["ids"]) if data["ids"].size else None
            cache = cls(ids=ids)
            for key in data.files:
                if key == "ids":
                    continue
                _, w, d = key.split("_")
                cache.put(int(w), int(d), data[key])
        return cache


class KernelWorkspace:
    """Precomputed kernel state bound to one candidate set.

    Holds the graphlet profiles, the embedding corpus, one normalized
    graph-kernel matrix per (w, d) grid point (built on demand and shared
    through an optional :class:`KernelCache`), and the normalized feature
    groups. All Gram assembly for the surrogate goes through here.
    """

    def __init__(
        self,
        graphs,
        feature_groups: FeatureGroups,
        k: int = 4,
        samples: int = 500,
        samples_per_node: int = 10,
        seed: int = 0,
        partition=None,
        cache: KernelCache | None = None,
    ):
        self.graphs = list(graphs)
        self.feature_groups = feature_groups
        if feature_groups.matrices and feature_groups.matrices[0].shape[0] != len(self.graphs):
            raise ValueError("feature groups do not cover the candidate set")
        self.k = k
        self.samples = samples
        self.samples_per_node = samples_per_node
        self.seed = seed
        self.partition = partition
        self.cache = cache if cache is not None else KernelCache()
        self._profiler = None
        self._corpus = None
        self._models: dict[tuple[int, int], EmbeddingModel] = {}

    @property
    def n_candidates(self) -> int:
        return len(self.graphs)

    @property
    def profiler(self) -> GraphletProfiler:
        if self._profiler is None:
            self._profiler = GraphletProfiler(
                k=self.k, samples=self.samples, seed=self.seed, partition=self.partition
            ).fit(self.graphs)
        return self._profiler

    @property
    def psi(self) -> np.ndarray:
        return self.profiler.psi_

    def corpus(self):
        if self._corpus is None:
            seeds = np.random.SeedSequence(self.seed + 1).generate_state(len(self.graphs))
            sentences = []
            for g, s in zip(self.graphs, seeds):
                sentences.extend(build_corpus(g, self.k, self.samples_per_node, int(s)))
            self._corpus = sentences
        return self._corpus

    def embedding_model(self, w: int, d: int) -> EmbeddingModel:
        model = self._models.get((w, d))
        if model is None:
            model = train_embeddings(
                self.corpus(), w, d, seed=self.seed + 2, vocab=self.profiler.vocab_
            )
            self._models[(w, d)] = model
        return model

    def graph_gram(self, w: int, d: int) -> np.ndarray:
        """Normalized deep graphlet kernel matrix for one grid point."""
        mat = self.cache.get(w, d)
        if mat is None:
            m_diag = self.embedding_model(w, d).m_for(self.profiler.vocab_)
            psi = self.psi
            raw = (psi * m_diag) @ psi.T
            mat = normalize_kernel(raw)
            self.cache.put(w, d, mat)
        return mat

    def feature_block(self, rows, cols, params: KernelParams) -> np.ndarray:
        """Sum of weighted SEARD blocks over all feature groups."""
        rows = np.asarray(rows)
        cols = np.asarray(cols)
        out = np.zeros((rows.size, cols.size))
        for F, ls, beta in zip(
            self.feature_groups.matrices, params.length_scales, params.betas
        ):
            if beta > 0:
                out += beta * seard_matrix(F[rows], F[cols], ls)
        return out

    def cross(self, rows, cols, params: KernelParams) -> np.ndarray:
        """Combined kernel between two index sets."""
        rows = np.asarray(rows)
        cols = np.asarray(cols)
        out = self.feature_block(rows, cols, params)
        if params.alpha > 0:
            out += params.alpha * self.graph_gram(params.w, params.d)[np.ix_(rows, cols)]
        return out

    def gram(self, indices, params: KernelParams) -> np.ndarray:
        k = self.cross(indices, indices, params)
        return 0.5 * (k + k.T)

    def diag_value(self, params: KernelParams) -> float:
        """Self-similarity, identical for every candidate by construction."""
        return params.weight_total

    def pair_value(self, a: int, b: int, params: KernelParams) -> float:
        kg = self.graph_gram(params.w, params.d)[a, b] if params.alpha > 0 else 0.0
        feats_a = [F[a] for F in self.feature_groups.matrices]
        feats_b = [F[b] for F in self.feature_groups.matrices]
        return combined_kernel(kg, feats_a, feats_b, params)

    def bind(self, indices) -> "BoundKernel":
        return BoundKernel(self, np.asarray(indices))

    def default_params(self) -> KernelParams:
        dims = self.feature_groups.dims
        return KernelParams(
            w=5,
            d=5,
            length_scales=tuple(np.ones(dim) for dim in dims),
            sigma=0.1,
            alpha=1.0,
            betas=np.ones(len(dims)),
        )


class BoundKernel:
    """Gram assembly for a frozen observation index set.

    Slices the per-group feature differences and the graph-kernel rows
    once, so repeated Gram evaluations during hyperparameter search only
    pay for the exponentials.
    """

    def __init__(self, workspace: KernelWorkspace, indices: np.ndarray):
        self.workspace = workspace
        self.indices = indices
        self._sq = []
        for F in workspace.feature_groups.matrices:
            sub = F[indices]
            diff = sub[:, None, :] - sub[None, :, :]
            self._sq.append(diff * diff)
        self._kg_slices: dict[tuple[int, int], np.ndarray] = {}

    def gram(self, params: KernelParams) -> np.ndarray:
        t = self.indices.size
        out = np.zeros((t, t))
        for sq, ls, beta in zip(self._sq, params.length_scales, params.betas):
            if beta > 0:
                out += beta * np.exp(-sq @ (0.5 / np.asarray(ls, dtype=float) ** 2))
        if params.alpha > 0:
            key = (params.w, params.d)
            kg = self._kg_slices.get(key)
            if kg is None:
                kg = self.workspace.graph_gram(*key)[np.ix_(self.indices, self.indices)]
                self._kg_slices[key] = kg
            out += params.alpha * kg
        return 0.5 * (out + out.T)


class DeepGraphletKernel(BaseEstimator):
    """Scikit-learn style graph kernel: fit on a graph list, transform to
    a normalized kernel matrix against the fitted graphs.

    With ``use_embeddings=False`` the kernel reduces to the base graphlet
    frequency kernel (identity reweighting).
    """

    def __init__(
        self,
        w=5,
        d=5,
        k=4,
        samples=500,
        samples_per_node=10,
        seed=0,
        partition=None,
        use_embeddings=True,
    ):
        self.w = w
        self.d = d
        self.k = k
        self.samples = samples
        self.samples_per_node = samples_per_node
        self.seed = seed
        self.partition = partition
        self.use_embeddings = use_embeddings

    def fit(self, X, y=None):
        graphs = list(X)
        self.profiler_ = GraphletProfiler(
            k=self.k, samples=self.samples, seed=self.seed, partition=self.partition
        ).fit(graphs)
        if self.use_embeddings:
            seeds = np.random.SeedSequence(self.seed + 1).generate_state(len(graphs))
            corpus = []
            for g, s in zip(graphs, seeds):
                corpus.extend(build_corpus(g, self.k, self.samples_per_node, int(s)))
            self.m_diag_ = train_embeddings(
                corpus, self.w, self.d, seed=self.seed + 2, vocab=self.profiler_.vocab_
            ).m_for(self.profiler_.vocab_)
        else:
            self.m_diag_ = np.ones(len(self.profiler_.vocab_))
        raw_self = (self.profiler_.psi_ * self.m_diag_) @ self.profiler_.psi_.T
        self_diag = np.diag(raw_self)
        if np.any(self_diag <= 0):
            raise DegenerateGraphError("fitted set contains a zero self-kernel graph")
        self.self_diag_ = self_diag
        return self

    def transform(self, X) -> np.ndarray:
        psi = self.profiler_.transform(X)
        raw = (psi * self.m_diag_) @ self.profiler_.psi_.T
        own = np.einsum("ij,j,ij->i", psi, self.m_diag_, psi)
        if np.any(own <= 0):
            raise DegenerateGraphError("input contains a zero self-kernel graph")
        return raw / np.sqrt(own)[:, None] / np.sqrt(self.self_diag_)[None, :]

    def fit_transform(self, X, y=None):
        self.fit(X)
        raw = (self.profiler_.psi_ * self.m_diag_) @ self.profiler_.psi_.T
        return normalize_kernel(raw)
