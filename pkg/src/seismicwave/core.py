"""Sparse vectors, the canonical inner product, and the bounded top-k heap."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from . import _kernels

COORD_DTYPE = np.uint32
WEIGHT_DTYPE = np.float32


@dataclass(frozen=True, eq=False)
class SparseVector:
    """Sorted ``(coordinate, weight)`` pairs.

    The constructor validates; use :meth:`from_pairs` or :meth:`from_dict`
    to build from unsorted input (those also drop explicit zeros).
    """

    ids: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        ids = np.asarray(self.ids)
        weights = np.asarray(self.weights)
        if ids.ndim != 1 or weights.ndim != 1 or ids.shape != weights.shape:
            raise ValueError("ids and weights must be 1-d and of equal length")
        if ids.size and (ids.min() < 0 or ids.max() > np.iinfo(COORD_DTYPE).max):
            raise ValueError("coordinate ids must fit in uint32")
        ids = ids.astype(COORD_DTYPE, copy=False)
        weights = weights.astype(WEIGHT_DTYPE, copy=False)
        if ids.size > 1 and not np.all(ids[1:] > ids[:-1]):
            raise ValueError("coordinate ids must be strictly increasing")
        if not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite")
        if np.any(weights == 0):
            raise ValueError("zero weights must not be stored")
        ids.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, float]]) -> "SparseVector":
        pairs = list(pairs)
        if not pairs:
            return cls.empty()
        ids = np.array([p[0] for p in pairs], dtype=np.int64)
        weights = np.array([p[1] for p in pairs], dtype=WEIGHT_DTYPE)
        order = np.argsort(ids, kind="stable")
        ids, weights = ids[order], weights[order]
        if ids.size > 1 and np.any(ids[1:] == ids[:-1]):
            raise ValueError("duplicate coordinate id")
        keep = weights != 0
        return cls(ids[keep], weights[keep])

    @classmethod
    def from_dict(cls, mapping: Mapping[int, float]) -> "SparseVector":
        return cls.from_pairs(mapping.items())

    @classmethod
    def empty(cls) -> "SparseVector":
        return cls(np.empty(0, COORD_DTYPE), np.empty(0, WEIGHT_DTYPE))

    def __len__(self) -> int:
        return int(self.ids.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseVector):
            return NotImplemented
        return np.array_equal(self.ids, other.ids) and np.array_equal(
            self.weights.view(np.uint32), other.weights.view(np.uint32)
        )

    __hash__ = None

    def __repr__(self) -> str:
        body = ", ".join(f"({int(i)}, {float(w):g})" for i, w in zip(self.ids[:8], self.weights[:8]))
        more = ", ..." if len(self) > 8 else ""
        return f"SparseVector([{body}{more}])"

    def to_pairs(self) -> list[tuple[int, float]]:
        return [(int(i), float(w)) for i, w in zip(self.ids, self.weights)]

    def densify(self, dim: int) -> np.ndarray:
        """Float64 dense copy restricted to coordinates below ``dim``."""
        out = np.zeros(dim, dtype=np.float64)
        keep = self.ids < dim
        out[self.ids[keep]] = self.weights[keep]
        return out


def dot(u: SparseVector, v: SparseVector) -> np.float32:
    """Inner product over the shared support.

    Accumulates in float64 in ascending coordinate order and rounds to
    float32, which is bit-compatible with every compiled scoring loop.
    """
    _, iu, iv = np.intersect1d(u.ids, v.ids, assume_unique=True, return_indices=True)
    acc = 0.0
    for a, b in zip(u.weights[iu].tolist(), v.weights[iv].tolist()):
        acc += a * b
    return np.float32(acc)


def query_coordinates(q: SparseVector) -> np.ndarray:
    """Coordinates of ``q`` by descending weight, ties by ascending id."""
    order = np.lexsort((q.ids, -q.weights.astype(np.float64)))
    return q.ids[order]


class ScoredHeap:
    """Bounded top-k of ``(score, doc)`` with duplicate-doc rejection.

    Entries compare by score, then by doc id (lower id wins a tie). The
    backing arrays are shared with the compiled search loop.
    """

    def __init__(self, k: int):
        if k < 1:
            raise ValueError("heap capacity must be positive")
        self.k = int(k)
        self.scores = np.empty(self.k, dtype=np.float32)
        self.docs = np.empty(self.k, dtype=np.int64)
        self.meta = np.zeros(1, dtype=np.int64)

    def __len__(self) -> int:
        return int(self.meta[0])

    def __contains__(self, doc: int) -> bool:
        return bool(np.any(self.docs[: len(self)] == doc))

    def insert(self, score: float, doc: int) -> bool:
        return bool(_kernels.heap_insert(self.scores, self.docs, self.meta, np.float32(score), int(doc)))

    def min(self) -> float:
        """Smallest held score, or ``-inf`` while below capacity."""
        return float(_kernels.heap_threshold(self.scores, self.meta))

    def doc_ids(self) -> np.ndarray:
        return self.docs[: len(self)].copy()

    def items(self) -> list[tuple[int, float]]:
        """``(doc, score)`` pairs ordered best first."""
        n = len(self)
        s, d = self.scores[:n], self.docs[:n]
        order = np.lexsort((d, -s.astype(np.float64)))
        return [(int(d[i]), float(s[i])) for i in order]

    def copy(self) -> "ScoredHeap":
        h = ScoredHeap(self.k)
        h.scores[:] = self.scores
        h.docs[:] = self.docs
        h.meta[:] = self.meta
        return h


def heap_insert(h: ScoredHeap, score: float, doc: int) -> bool:
    return h.insert(score, doc)
