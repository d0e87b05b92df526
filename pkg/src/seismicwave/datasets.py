"""Synthetic learned-sparse-style collections for desk-scale experiments.

Documents and queries are drawn from latent topics over a Zipf-skewed
vocabulary, so that nearby documents share heavy coordinates the way
SPLADE embeddings of related passages do.
"""

from __future__ import annotations

import numpy as np

from .core import SparseVector


def _draw(rng, cdf, count, pool=None):
    """About ``count`` distinct items sampled with probability given by ``cdf``."""
    picks = np.unique(np.searchsorted(cdf, rng.random(int(count * 1.3) + 2) * cdf[-1]))
    picks = picks[picks < cdf.size]
    if picks.size > count:
        picks = rng.choice(picks, size=count, replace=False)
    return picks if pool is None else pool[picks]


def make_synthetic(
    n_docs: int = 10_000,
    n_queries: int = 500,
    dim: int = 30_000,
    doc_nnz: float = 120,
    query_nnz: float = 40,
    n_topics: int = 200,
    topic_vocab: int = 500,
    topic_decay: float = 0.6,
    spread: float = 1.3,
    background: float = -2.2,
    seed: int = 0,
) -> tuple[list[SparseVector], list[SparseVector]]:
    rng = np.random.default_rng(seed)
    popularity = np.empty(dim)
    popularity[rng.permutation(dim)] = (np.arange(dim) + 10.0) ** -1.05
    global_cdf = np.cumsum(popularity)

    vocabs, strengths, cdfs, q_cdfs = [], [], [], []
    for _ in range(n_topics):
        vocab = _draw(rng, global_cdf, topic_vocab)
        vocab = vocab[rng.permutation(vocab.size)]
        s = (np.arange(vocab.size) + 1.0) ** -topic_decay
        vocabs.append(vocab)
        strengths.append(s / s[0])
        cdfs.append(np.cumsum(s))
        q_cdfs.append(np.cumsum(s**2))
    topic_pop = np.cumsum((np.arange(n_topics) + 5.0) ** -0.5)

    def vector(length, topic_share, cdf_list, spread):
        t = int(np.searchsorted(topic_pop, rng.random() * topic_pop[-1]))
        n_topic = int(round(length * topic_share))
        coords = [vocabs[t][_draw(rng, cdf_list[t], n_topic)]]
        idx = np.argsort(vocabs[t])
        pos = idx[np.searchsorted(vocabs[t], coords[0], sorter=idx)]
        weights = [2.5 * strengths[t][pos] * rng.lognormal(0.0, spread, pos.size)]
        if rng.random() < 0.3:
            t2 = int(rng.integers(n_topics))
            c2 = vocabs[t2][_draw(rng, cdf_list[t2], n_topic // 3)]
            coords.append(c2)
            weights.append(1.2 * rng.lognormal(-0.7, spread, c2.size))
        bg = _draw(rng, global_cdf, max(0, length - n_topic))
        coords.append(bg)
        weights.append(rng.lognormal(background, spread, bg.size))
        c = np.concatenate(coords)
        w = np.concatenate(weights)
        c, first = np.unique(c, return_index=True)
        w = np.round(w[first].astype(np.float32), 3)
        keep = w > 0
        return SparseVector(c[keep], w[keep])

    docs = []
    for _ in range(n_docs):
        length = int(np.clip(rng.lognormal(np.log(doc_nnz), 0.35), 8, 6 * doc_nnz))
        docs.append(vector(length, 0.7, cdfs, spread))
    queries = []
    for _ in range(n_queries):
        length = int(np.clip(rng.lognormal(np.log(query_nnz), 0.35), 3, 6 * query_nnz))
        queries.append(vector(length, 0.8, q_cdfs, 0.8 * spread))
    return docs, queries
