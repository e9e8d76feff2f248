"""Skip-gram-with-negative-sampling embeddings for graphlet vocabularies.

Pinned training recipe (recorded here for reproducibility): 5 negative
samples per positive pair, 5 epochs, initial learning rate 0.025 decayed
linearly to 1e-4 over all minibatches, input vectors initialized uniformly
in [-0.5/d, 0.5/d] and context vectors at zero, negatives drawn from the
unigram distribution raised to 3/4, and a per-center window reduced
uniformly to 1..w. Training is single-threaded and deterministic under
the seed. Minibatches must stay small: the vocabulary has at most a few
dozen graphlet classes, so tokens recur within a batch and summed updates
grow with the batch size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

__all__ = ["EmbeddingModel", "train_embeddings"]


@dataclass(frozen=True)
class EmbeddingModel:
    """Per-graphlet embeddings and their squared norms.

    ``m_diag[i]`` is the self inner product of token i's embedding, the
    diagonal reweighting used by the deep graphlet kernel.
    """

    window: int
    dim: int
    vocab: dict[int, int]
    vectors: np.ndarray
    m_diag: np.ndarray

    def m_for(self, vocab: dict[int, int]) -> np.ndarray:
        """Reorder ``m_diag`` to follow another vocabulary's indexing."""
        out = np.empty(len(vocab))
        for token, idx in vocab.items():
            out[idx] = self.m_diag[self.vocab[token]]
        return out


def _pairs_from_corpus(corpus, vocab, window, rng):
    centers = []
    contexts = []
    for sentence in corpus:
        idx = [vocab[token] for token in sentence]
        for i, center in enumerate(idx):
            b = int(rng.integers(1, window + 1))
            for j in range(max(0, i - b), min(len(idx), i + b + 1)):
                if j != i:
                    centers.append(center)
                    contexts.append(idx[j])
    return np.asarray(centers, dtype=np.int64), np.asarray(contexts, dtype=np.int64)


def train_embeddings(
    corpus,
    window: int,
    dim: int,
    seed: int,
    vocab: dict[int, int] | None = None,
    negatives: int = 5,
    epochs: int = 5,
    lr0: float = 0.025,
    lr_min: float = 1e-4,
    batch_size: int = 64,
) -> EmbeddingModel:
    """Train skip-gram embeddings on graphlet-id sentences.

    ``vocab`` may include tokens that never occur in the corpus; their
    vectors keep the initialization (so their squared norms stay at the
    initialization scale rather than zero). Corpus tokens missing from the
    given vocabulary are appended to it.
    """
    corpus = [list(s) for s in corpus if s]
    if not corpus:
        raise ValueError("corpus is empty")
    if window < 1 or dim < 1:
        raise ValueError("window and dim must be >= 1")
    seen = sorted({t for s in corpus for t in s})
    if vocab is None:
        vocab = {tok: i for i, tok in enumerate(seen)}
    else:
        vocab = dict(vocab)
        for tok in seen:
            if tok not in vocab:
                vocab[tok] = len(vocab)
    n_tokens = len(vocab)
    rng = np.random.default_rng(seed)

    vec_in = rng.uniform(-0.5 / dim, 0.5 / dim, size=(n_tokens, dim))
    vec_out = np.zeros((n_tokens, dim))

    counts = np.zeros(n_tokens)
    for sentence in corpus:
        for token in sentence:
            counts[vocab[token]] += 1
    noise = counts**0.75
    noise /= noise.sum()

    centers, contexts = _pairs_from_corpus(corpus, vocab, window, rng)
    if centers.size == 0:
        # All sentences are single tokens: nothing to train on.
        return EmbeddingModel(window, dim, dict(vocab), vec_in, (vec_in**2).sum(axis=1))

    n_pairs = centers.size
    n_batches_per_epoch = (n_pairs + batch_size - 1) // batch_size
    total_batches = n_batches_per_epoch * epochs
    step = 0
    for _ in range(epochs):
        order = rng.permutation(n_pairs)
        for start in range(0, n_pairs, batch_size):
            batch = order[start : start + batch_size]
            c = centers[batch]
            targets = np.empty((batch.size, 1 + negatives), dtype=np.int64)
            targets[:, 0] = contexts[batch]
            targets[:, 1:] = rng.choice(
                n_tokens, size=(batch.size, negatives), p=noise
            )
            lr = max(lr_min, lr0 * (1.0 - step / total_batches))
            step += 1

            v = vec_in[c]
            u = vec_out[targets]
            logits = np.einsum("bd,bkd->bk", v, u)
            grad = expit(logits)
            grad[:, 0] -= 1.0
            # A negative drawn equal to the positive context is skipped,
            # as in the reference implementation; with a graphlet-sized
            # vocabulary such collisions are frequent, not rare.
            grad[:, 1:][targets[:, 1:] == targets[:, :1]] = 0.0
            grad_v = np.einsum("bk,bkd->bd", grad, u)
            grad_u = grad[:, :, None] * v[:, None, :]
            np.add.at(vec_in, c, -lr * grad_v)
            np.add.at(vec_out, targets.ravel(), -lr * grad_u.reshape(-1, dim))

    return EmbeddingModel(window, dim, dict(vocab), vec_in, (vec_in**2).sum(axis=1))
