"""Forward index and the pruned, blocked, summarized inverted index."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np
import scipy.sparse as sp

from ._kernels_build import assign_to_centroids, group_summaries
from .core import COORD_DTYPE, WEIGHT_DTYPE, SparseVector


class ForwardIndex:
    """Document id -> sparse vector, stored as CSR arrays.

    Row ``i`` of the CSR arrays is document ``i``. ``dim`` is the number of
    columns; coordinates at or above it never match anything.
    """

    def __init__(self, indptr: np.ndarray, indices: np.ndarray, values: np.ndarray, dim: int | None = None):
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=COORD_DTYPE)
        self.values = np.ascontiguousarray(values, dtype=WEIGHT_DTYPE)
        if dim is None:
            dim = int(self.indices.max()) + 1 if self.indices.size else 0
        self.dim = int(dim)

    @property
    def n(self) -> int:
        return self.indptr.size - 1

    @cached_property
    def span(self) -> int:
        """One past the largest stored coordinate; sizes all dense work arrays."""
        return int(self.indices.max()) + 1 if self.indices.size else 0

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, doc: int) -> SparseVector:
        if not 0 <= doc < self.n:
            raise IndexError(doc)
        lo, hi = self.indptr[doc], self.indptr[doc + 1]
        return SparseVector(self.indices[lo:hi], self.values[lo:hi])

    def __iter__(self) -> Iterator[SparseVector]:
        for i in range(self.n):
            yield self[i]

    @property
    def docs(self) -> list[SparseVector]:
        return list(self)

    @cached_property
    def csr(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.values, self.indices.astype(np.int64), self.indptr), shape=(self.n, max(self.span, 1))
        )

    @cached_property
    def csc(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Column-major copy ``(colptr, rows, values)``; rows ascend within a column."""
        m = self.csr.tocsc()
        m.sort_indices()
        return m.indptr.astype(np.int64), m.indices.astype(np.int64), m.data.astype(WEIGHT_DTYPE)

    @cached_property
    def _scratch(self) -> dict[str, np.ndarray]:
        # build-time work buffers, left clean after every kernel call
        return {
            "start": np.zeros(self.span, dtype=np.int64),
            "stop": np.zeros(self.span, dtype=np.int64),
            "max": np.zeros(self.span, dtype=WEIGHT_DTYPE),
            "seen": np.zeros(self.span, dtype=np.bool_),
        }

    def __eq__(self, other) -> bool:
        if not isinstance(other, ForwardIndex):
            return NotImplemented
        return (
            self.dim == other.dim
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values.view(np.uint32), other.values.view(np.uint32))
        )

    __hash__ = None


def build_forward(collection: Sequence[SparseVector], dim: int | None = None) -> ForwardIndex:
    """Stack ``collection`` into a forward index; ids follow input order."""
    vectors = []
    for pos, v in enumerate(collection):
        if not isinstance(v, SparseVector):
            try:
                v = SparseVector(*v)
            except (TypeError, ValueError) as exc:
                raise ValueError(f"invalid vector at position {pos}: {exc}") from None
        vectors.append(v)
    indptr = np.concatenate([[0], np.cumsum([len(v) for v in vectors], dtype=np.int64)])
    indices = np.concatenate([v.ids for v in vectors] or [np.empty(0, COORD_DTYPE)])
    values = np.concatenate([v.weights for v in vectors] or [np.empty(0, WEIGHT_DTYPE)])
    if dim is None:
        dim = int(indices.max()) + 1 if indices.size else 0
    return ForwardIndex(indptr, indices, values, dim)


@dataclass(frozen=True)
class BuildParams:
    lam: int
    beta: int
    alpha: float
    seed: int = 0

    def __post_init__(self):
        if self.lam < 1:
            raise ValueError("lambda must be a positive integer")
        if not 1 <= self.beta <= self.lam:
            raise ValueError("beta must be in [1, lambda]")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must be in (0,1]")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def blocks_for(self, length: int) -> int:
        """Block budget for a list holding ``length`` entries.

        Lists filled up to lambda get beta blocks; shorter lists keep the
        same entries-per-block ratio.
        """
        return max(1, min(self.beta, math.ceil(length * self.beta / self.lam)))


@dataclass(frozen=True, eq=False)
class PostingBlock:
    docs: np.ndarray
    summary: SparseVector


class InvertedIndex:
    """Blocked inverted lists in flat arrays.

    List ``l`` (coordinate ``coords[l]``) owns blocks
    ``list_ptr[l]:list_ptr[l+1]``; block ``b`` owns docs
    ``block_docs[block_ptr[b]:block_ptr[b+1]]`` and summary entries
    ``summary_ptr[b]:summary_ptr[b+1]``.
    """

    def __init__(self, params, coords, list_ptr, block_ptr, block_docs, summary_ptr, summary_ids, summary_weights):
        self.params = params
        self.coords = np.ascontiguousarray(coords, dtype=COORD_DTYPE)
        self.list_ptr = np.ascontiguousarray(list_ptr, dtype=np.int64)
        self.block_ptr = np.ascontiguousarray(block_ptr, dtype=np.int64)
        self.block_docs = np.ascontiguousarray(block_docs, dtype=np.int64)
        self.summary_ptr = np.ascontiguousarray(summary_ptr, dtype=np.int64)
        self.summary_ids = np.ascontiguousarray(summary_ids, dtype=COORD_DTYPE)
        self.summary_weights = np.ascontiguousarray(summary_weights, dtype=WEIGHT_DTYPE)
        self._slot = {int(c): i for i, c in enumerate(self.coords.tolist())}

    @property
    def n_lists(self) -> int:
        return self.coords.size

    @property
    def n_blocks(self) -> int:
        return self.block_ptr.size - 1

    def list_slot(self, coord: int) -> int | None:
        return self._slot.get(int(coord))

    def block_range(self, coord: int) -> tuple[int, int]:
        slot = self._slot.get(int(coord))
        if slot is None:
            return 0, 0
        return int(self.list_ptr[slot]), int(self.list_ptr[slot + 1])

    def blocks(self, coord: int) -> list[PostingBlock]:
        lo, hi = self.block_range(coord)
        return [self.block(b) for b in range(lo, hi)]

    def block(self, b: int) -> PostingBlock:
        d0, d1 = self.block_ptr[b], self.block_ptr[b + 1]
        s0, s1 = self.summary_ptr[b], self.summary_ptr[b + 1]
        return PostingBlock(
            self.block_docs[d0:d1].copy(),
            SparseVector(self.summary_ids[s0:s1], self.summary_weights[s0:s1]),
        )

    @property
    def lists(self) -> dict[int, list[PostingBlock]]:
        return {int(c): self.blocks(int(c)) for c in self.coords}

    def list_docs(self, coord: int) -> np.ndarray:
        lo, hi = self.block_range(coord)
        return self.block_docs[self.block_ptr[lo] : self.block_ptr[hi]]

    def __eq__(self, other) -> bool:
        if not isinstance(other, InvertedIndex):
            return NotImplemented
        return self.params == other.params and all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("coords", "list_ptr", "block_ptr", "block_docs", "summary_ptr", "summary_ids")
        ) and np.array_equal(self.summary_weights.view(np.uint32), other.summary_weights.view(np.uint32))

    __hash__ = None


def top_lambda(rows: np.ndarray, vals: np.ndarray, lam: int) -> np.ndarray:
    """Rows holding the ``lam`` largest values, ties to the lower row id."""
    order = np.lexsort((rows, -vals.astype(np.float64)))
    return rows[order[:lam]]


def cluster_list(entries, fwd: ForwardIndex, beta: int, seed) -> list[np.ndarray]:
    """Split ``entries`` into at most ``beta`` groups.

    Samples ``min(beta, len(entries))`` distinct entries as centroids and
    sends every entry to the centroid with the largest inner product
    (lowest centroid index on ties). Empty groups are dropped; each group
    is returned sorted by doc id.
    """
    entries = np.asarray(entries, dtype=np.int64)
    m = entries.size
    if m == 0:
        raise ValueError("cannot cluster an empty list")
    if beta < 1:
        raise ValueError("beta must be >= 1")
    if m <= beta:
        return [np.array([d]) for d in entries]
    labels = _assign(entries, fwd, beta, seed)
    return [np.sort(entries[labels == g]) for g in np.unique(labels)]


def _assign(entries: np.ndarray, fwd: ForwardIndex, beta: int, seed) -> np.ndarray:
    if beta == 1:
        return np.zeros(entries.size, dtype=np.int64)
    rng = np.random.default_rng(seed)
    centroids = entries[rng.choice(entries.size, size=beta, replace=False)]
    buf = fwd._scratch
    return assign_to_centroids(entries, centroids, fwd.indptr, fwd.indices, fwd.values, buf["start"], buf["stop"])


def _summaries(groups: list[np.ndarray], fwd: ForwardIndex, alpha: float):
    """Per-group summaries as ``(counts, ids, weights)``, one run per group."""
    group_ptr = np.concatenate([[0], np.cumsum([g.size for g in groups], dtype=np.int64)])
    docs = np.concatenate(groups).astype(np.int64)
    bound = int((fwd.indptr[docs + 1] - fwd.indptr[docs]).sum())
    ids = np.empty(bound, dtype=COORD_DTYPE)
    weights = np.empty(bound, dtype=WEIGHT_DTYPE)
    counts = np.empty(len(groups), dtype=np.int64)
    buf = fwd._scratch
    used = group_summaries(
        group_ptr, docs, fwd.indptr, fwd.indices, fwd.values, float(alpha), buf["max"], buf["seen"], ids, weights, counts
    )
    return counts, ids[:used], weights[:used]


def summarize(group, fwd: ForwardIndex, alpha: float) -> SparseVector:
    """Coordinate-wise max over ``group``; keeps the heaviest coordinates
    until they hold ``alpha`` of the total weight."""
    group = np.asarray(group, dtype=np.int64)
    if group.size == 0:
        raise ValueError("cannot summarize an empty group")
    _, ids, weights = _summaries([group], fwd, alpha)
    return SparseVector(ids, weights)


def build_inverted(fwd: ForwardIndex, params: BuildParams) -> InvertedIndex:
    colptr, rows, vals = fwd.csc
    coords = np.flatnonzero(np.diff(colptr) > 0)

    list_ptr = [0]
    block_sizes: list[int] = []
    block_docs: list[np.ndarray] = []
    summary_counts: list[np.ndarray] = []
    summary_ids: list[np.ndarray] = []
    summary_weights: list[np.ndarray] = []
    for c in coords.tolist():
        lo, hi = colptr[c], colptr[c + 1]
        kept = top_lambda(rows[lo:hi], vals[lo:hi], params.lam)
        groups = cluster_list(kept, fwd, params.blocks_for(kept.size), [params.seed, c])
        counts, ids, weights = _summaries(groups, fwd, params.alpha)
        list_ptr.append(list_ptr[-1] + len(groups))
        block_sizes.extend(g.size for g in groups)
        block_docs.extend(groups)
        summary_counts.append(counts)
        summary_ids.append(ids)
        summary_weights.append(weights)

    block_ptr = np.concatenate([[0], np.cumsum(block_sizes, dtype=np.int64)])
    summary_ptr = np.concatenate([[0], np.cumsum(np.concatenate(summary_counts or [[]]), dtype=np.int64)])
    return InvertedIndex(
        params,
        coords,
        np.asarray(list_ptr),
        block_ptr,
        np.concatenate(block_docs or [np.empty(0, np.int64)]),
        summary_ptr,
        np.concatenate(summary_ids or [np.empty(0, COORD_DTYPE)]),
        np.concatenate(summary_weights or [np.empty(0, WEIGHT_DTYPE)]),
    )


@dataclass(frozen=True)
class IndexSizes:
    forward: int
    inverted: int

    @property
    def total(self) -> int:
        return self.forward + self.inverted

    @property
    def ratio(self) -> float:
        return self.inverted / self.forward if self.forward else math.inf


def index_size_bytes(idx: InvertedIndex | None, fwd: ForwardIndex) -> IndexSizes:
    """Byte sizes of the forward and inverted sections of a SWIX file."""
    from .io import csr_nbytes, inverted_nbytes

    return IndexSizes(csr_nbytes(fwd.n, fwd.nnz), inverted_nbytes(idx))


def within_budget(sizes: IndexSizes, budget: float, graph_bytes: int = 0) -> bool:
    """Inverted index plus graph no larger than ``budget`` times the forward index."""
    return sizes.inverted + graph_bytes <= budget * sizes.forward
