"""Term-at-a-time approximate top-k search with summary-gated blocks."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels
from .core import ScoredHeap, SparseVector, query_coordinates
from .index import ForwardIndex, InvertedIndex, PostingBlock


class TraversalPolicy(str, Enum):
    """Order in which a list's blocks are visited."""

    ARBITRARY = "arbitrary"
    FIRST_LIST = "first"
    ALL_LISTS = "all"


@dataclass(frozen=True)
class SearchParams:
    k: int = 10
    cut: int = 10
    heap_factor: float = 1.0
    obt: TraversalPolicy = TraversalPolicy.ARBITRARY
    expand: bool = False

    def __post_init__(self):
        object.__setattr__(self, "obt", TraversalPolicy(self.obt))
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        if self.cut < 1:
            raise ValueError("cut must be a positive integer")
        if not 0.0 < self.heap_factor <= 1.0:
            raise ValueError("heap_factor must be in (0,1]")


class BlockVisit(NamedTuple):
    coord: int
    block: int
    summary_score: float
    threshold: float
    evaluated: bool


@dataclass
class SearchStats:
    lists_visited: int = 0
    blocks_scored: int = 0
    blocks_evaluated: int = 0
    docs_scored: int = 0
    per_list_nanos: list[int] = field(default_factory=list)
    trace: list[BlockVisit] | None = None

    @property
    def work(self) -> int:
        """Hardware-independent cost: evaluated blocks plus scored documents."""
        return self.blocks_evaluated + self.docs_scored

    def merge(self, other: "SearchStats") -> "SearchStats":
        self.lists_visited += other.lists_visited
        self.blocks_scored += other.blocks_scored
        self.blocks_evaluated += other.blocks_evaluated
        self.docs_scored += other.docs_scored
        return self


def summary_scores(q: SparseVector, blocks: Sequence[PostingBlock], dim: int | None = None) -> np.ndarray:
    """Inner product of ``q`` with each block summary, in block order."""
    if not blocks:
        return np.empty(0, dtype=np.float32)
    ids = [b.summary.ids for b in blocks]
    if dim is None:
        dim = 1 + max([int(q.ids.max()) if len(q) else 0] + [int(i.max()) for i in ids if i.size])
    ptr = np.concatenate([[0], np.cumsum([i.size for i in ids])]).astype(np.int64)
    out = np.empty(len(blocks), dtype=np.float32)
    _kernels.score_range(
        q.densify(dim), ptr, np.concatenate(ids), np.concatenate([b.summary.weights for b in blocks]), 0, len(blocks), out
    )
    return out


def traversal_order(scores: np.ndarray, policy: TraversalPolicy | str, list_rank: int) -> np.ndarray:
    """Block visiting order: stored order, or descending score with ties by index."""
    policy = TraversalPolicy(policy)
    if policy is TraversalPolicy.ALL_LISTS or (policy is TraversalPolicy.FIRST_LIST and list_rank == 0):
        return np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")
    return np.arange(len(scores))


def _search(
    q: SparseVector,
    idx: InvertedIndex,
    fwd: ForwardIndex,
    p: SearchParams,
    timed: bool = False,
    trace: bool = False,
) -> tuple[ScoredHeap, SearchStats, np.ndarray]:
    heap = ScoredHeap(p.k)
    stats = SearchStats(trace=[] if trace else None)
    qdense = q.densify(fwd.span)
    counters = np.zeros(2, dtype=np.int64)
    clock = time.perf_counter_ns
    for rank, coord in enumerate(query_coordinates(q)[: p.cut].tolist()):
        t0 = clock() if timed else 0
        stats.lists_visited += 1
        lo, hi = idx.block_range(coord)
        if hi > lo:
            scores = np.empty(hi - lo, dtype=np.float32)
            _kernels.score_range(qdense, idx.summary_ptr, idx.summary_ids, idx.summary_weights, lo, hi, scores)
            order = traversal_order(scores, p.obt, rank)
            thresholds = np.full(hi - lo, np.nan)
            evaluated = np.zeros(hi - lo, dtype=np.bool_)
            _kernels.process_list(
                qdense, order, scores, float(p.heap_factor), lo,
                idx.block_ptr, idx.block_docs, fwd.indptr, fwd.indices, fwd.values,
                heap.scores, heap.docs, heap.meta, counters, thresholds, evaluated,
            )
            stats.blocks_scored += hi - lo
            if trace:
                stats.trace.extend(
                    BlockVisit(coord, lo + int(b), float(scores[b]), float(thresholds[b]), bool(evaluated[b]))
                    for b in order
                )
        if timed:
            stats.per_list_nanos.append(clock() - t0)
    stats.blocks_evaluated = int(counters[0])
    stats.docs_scored = int(counters[1])
    return heap, stats, qdense


def search_seismic(
    q: SparseVector,
    idx: InvertedIndex,
    fwd: ForwardIndex,
    p: SearchParams,
    *,
    timed: bool = False,
    trace: bool = False,
) -> tuple[list[tuple[int, float]], SearchStats]:
    """Base search (no graph expansion).

    Processes the ``p.cut`` heaviest query coordinates. A block's documents
    are scored only when ``heap_factor * summary_score`` beats the current
    heap minimum. Returns ``(doc, score)`` best first and the work counters.
    """
    heap, stats, _ = _search(q, idx, fwd, p, timed=timed, trace=trace)
    return heap.items(), stats
