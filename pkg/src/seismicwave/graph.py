"""kappa-NN graph over the collection: construction, refinement, storage.

SWKG file layout (little-endian)::

    b"SWKG", u32 version          (one 8-byte word)
    u64 n, u64 kappa
    payload: n * kappa neighbor ids, each in b = floor(log2(n - 1)) + 1 bits,
             row-major, least significant bit first, zero-padded to a byte
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import ScoredHeap, SparseVector
from .index import BuildParams, ForwardIndex, InvertedIndex, build_inverted
from .io import _Reader, _with_reader, _with_writer
from .search import SearchParams, SearchStats, _search

SWKG_MAGIC = b"SWKG"
SWKG_VERSION = 1

# approximate construction settings: lambda, beta, alpha, cut, heap_factor
APPROX_DEFAULTS = dict(lam=10_000, beta=2_000, alpha=0.6, cut=15, heap_factor=0.7)


@dataclass(frozen=True, eq=False)
class KnnGraph:
    """``neighbors[u]`` holds u's kappa nearest documents by inner product."""

    neighbors: np.ndarray

    def __post_init__(self):
        nb = np.ascontiguousarray(self.neighbors, dtype=np.int64)
        if nb.ndim != 2:
            raise ValueError("neighbors must be an (n, kappa) array")
        object.__setattr__(self, "neighbors", nb)

    @property
    def n(self) -> int:
        return self.neighbors.shape[0]

    @property
    def kappa(self) -> int:
        return self.neighbors.shape[1]

    def __call__(self, u: int) -> np.ndarray:
        return self.neighbors[u]

    def __eq__(self, other) -> bool:
        if not isinstance(other, KnnGraph):
            return NotImplemented
        return np.array_equal(self.neighbors, other.neighbors)

    __hash__ = None

    def truncate(self, kappa: int) -> "KnnGraph":
        """First ``kappa`` neighbors of every node (still sorted, still exact if built exact)."""
        if not 1 <= kappa <= self.kappa:
            raise ValueError("kappa out of range")
        return KnnGraph(self.neighbors[:, :kappa])

    def validate(self) -> None:
        nb = self.neighbors
        if nb.size and (nb.min() < 0 or nb.max() >= self.n):
            raise ValueError("neighbor id out of range")
        if np.any(nb == np.arange(self.n)[:, None]):
            raise ValueError("self loop")
        s = np.sort(nb, axis=1)
        if np.any(s[:, 1:] == s[:, :-1]):
            raise ValueError("duplicate neighbor")


def _check_kappa(fwd: ForwardIndex, kappa: int):
    if kappa < 1:
        raise ValueError("kappa must be positive")
    if fwd.n <= kappa:
        raise ValueError(f"need more than kappa={kappa} documents, got {fwd.n}")


def _exact_rows(fwd: ForwardIndex, rows: np.ndarray, kappa: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact top-kappa (self excluded) for the given document rows."""
    colptr, crow, cval = fwd.csc
    if np.array_equal(rows, np.arange(fwd.n)):
        docs = np.empty((fwd.n, kappa), dtype=np.int64)
        scores = np.empty((fwd.n, kappa), dtype=np.float32)
        _kernels.exact_topk_batch(fwd.indptr, fwd.indices, fwd.values, colptr, crow, cval, fwd.n, kappa, True, docs, scores)
        return docs, scores
    docs = np.empty((rows.size, kappa + 1), dtype=np.int64)
    scores = np.empty((rows.size, kappa + 1), dtype=np.float32)
    for j, r in enumerate(rows.tolist()):
        u = fwd[r]
        _kernels.exact_topk_batch(
            np.array([0, len(u)]), u.ids, u.weights, colptr, crow, cval, fwd.n, kappa + 1, False,
            docs[j : j + 1], scores[j : j + 1],
        )
    keep = docs != rows[:, None]
    # drop self when present, otherwise the last (weakest) entry
    keep[np.all(keep, axis=1), -1] = False
    return docs[keep].reshape(rows.size, kappa), scores[keep].reshape(rows.size, kappa)


def build_knn_exact(fwd: ForwardIndex, kappa: int) -> KnnGraph:
    """All-pairs kappa-NN graph; neighbors sorted by (score desc, id asc), self excluded."""
    _check_kappa(fwd, kappa)
    docs, _ = _exact_rows(fwd, np.arange(fwd.n), kappa)
    return KnnGraph(docs)


def build_knn_approx(
    fwd: ForwardIndex,
    kappa: int,
    *,
    lam: int | None = None,
    beta: int | None = None,
    alpha: float | None = None,
    cut: int | None = None,
    heap_factor: float | None = None,
    seed: int = 0,
    index: InvertedIndex | None = None,
) -> KnnGraph:
    """kappa-NN graph from one approximate search per document.

    Each document queries an index built with the construction defaults
    (lambda capped at the collection size). Rows that come back short are
    completed from an exact scan.
    """
    _check_kappa(fwd, kappa)
    s = dict(APPROX_DEFAULTS)
    s.update({k: v for k, v in dict(lam=lam, beta=beta, alpha=alpha, cut=cut, heap_factor=heap_factor).items() if v is not None})
    if index is None:
        lam_eff = min(s["lam"], fwd.n)
        index = build_inverted(fwd, BuildParams(lam_eff, min(s["beta"], lam_eff), s["alpha"], seed))
    p = SearchParams(k=kappa + 1, cut=s["cut"], heap_factor=s["heap_factor"])
    out = np.empty((fwd.n, kappa), dtype=np.int64)
    for u in range(fwd.n):
        heap, _, _ = _search(fwd[u], index, fwd, p)
        found = [d for d, _ in heap.items() if d != u][:kappa]
        out[u] = found if len(found) == kappa else _pad_row(fwd, u, found, kappa)
    return KnnGraph(out)


def _pad_row(fwd: ForwardIndex, u: int, found: list[int], kappa: int) -> np.ndarray:
    exact, _ = _exact_rows(fwd, np.array([u]), kappa)
    row = list(found) + [d for d in exact[0].tolist() if d not in found]
    row = np.array(row[:kappa], dtype=np.int64)
    scores = np.empty(row.size, dtype=np.float32)
    _kernels.score_rows(fwd[u].densify(fwd.span), fwd.indptr, fwd.indices, fwd.values, row, scores)
    return row[np.lexsort((row, -scores.astype(np.float64)))]


def refine_with_knn(
    q: SparseVector,
    heap: ScoredHeap,
    g: KnnGraph,
    fwd: ForwardIndex,
    *,
    qdense: np.ndarray | None = None,
    stats: SearchStats | None = None,
) -> ScoredHeap:
    """Expand the heap's documents with their graph neighbors and keep the top k.

    Neighbors already held are not rescored; the heap is updated in place
    and returned.
    """
    members = heap.doc_ids()
    if members.size == 0:
        return heap
    cand = np.unique(g.neighbors[members].ravel())
    cand = cand[~np.isin(cand, members)]
    if qdense is None:
        qdense = q.densify(fwd.span)
    scores = np.empty(cand.size, dtype=np.float32)
    _kernels.score_rows(qdense, fwd.indptr, fwd.indices, fwd.values, cand, scores)
    if stats is not None:
        stats.docs_scored += int(cand.size)
    floor = heap.min()
    for i in np.flatnonzero(scores >= floor).tolist():
        heap.insert(scores[i], int(cand[i]))
    return heap


def search(
    q: SparseVector,
    idx: InvertedIndex,
    fwd: ForwardIndex,
    p: SearchParams,
    graph: KnnGraph | None = None,
    *,
    timed: bool = False,
) -> tuple[ScoredHeap, SearchStats]:
    """Base search followed, when ``p.expand`` is set, by graph refinement."""
    if p.expand and graph is None:
        raise ValueError("expand=True needs a kappa-NN graph")
    heap, stats, qdense = _search(q, idx, fwd, p, timed=timed)
    if p.expand:
        refine_with_knn(q, heap, graph, fwd, qdense=qdense, stats=stats)
    return heap, stats


def payload_bits(n: int, kappa: int) -> int:
    """Bits needed for all neighbor ids: (floor(log2(n - 1)) + 1) * n * kappa."""
    return bits_per_id(n) * n * kappa


def bits_per_id(n: int) -> int:
    if n < 2:
        raise ValueError("a graph needs at least two nodes")
    return (n - 1).bit_length()


def graph_nbytes(n: int, kappa: int) -> int:
    return 24 + (payload_bits(n, kappa) + 7) // 8


def graph_write(g: KnnGraph, destination) -> None:
    b = bits_per_id(g.n)
    flat = g.neighbors.ravel().astype(np.uint64)
    if flat.size and int(flat.max()) >= g.n:
        raise ValueError("neighbor id out of range")
    shifts = np.arange(b, dtype=np.uint64)

    def body(f):
        f.write(SWKG_MAGIC + struct.pack("<I", SWKG_VERSION))
        f.write(struct.pack("<QQ", g.n, g.kappa))
        # chunks hold a multiple of 8 ids so every chunk ends on a byte boundary
        step = 1 << 16
        for lo in range(0, flat.size, step):
            bits = ((flat[lo : lo + step, None] >> shifts) & np.uint64(1)).astype(np.uint8)
            f.write(np.packbits(bits.ravel(), bitorder="little").tobytes())

    _with_writer(destination, body)


def graph_read(source) -> KnnGraph:
    def body(r: _Reader):
        head = r.bytes(8, "magic")
        if head[:4] != SWKG_MAGIC:
            raise r.error("bad magic", offset=0)
        version = struct.unpack("<I", head[4:])[0]
        if version != SWKG_VERSION:
            raise r.error(f"unsupported version {version}", offset=4)
        n, kappa = struct.unpack("<QQ", r.bytes(16, "header"))
        if n < 2 or kappa < 1 or kappa >= n:
            raise r.error(f"invalid graph shape n={n} kappa={kappa}", offset=8)
        if n * kappa > 2**40:
            raise r.error("implausible graph size", offset=8)
        b = bits_per_id(n)
        nbytes = (b * n * kappa + 7) // 8
        payload_at = r.offset
        raw = np.frombuffer(r.bytes(nbytes, "neighbor payload"), dtype=np.uint8)
        r.expect_end()
        total = n * kappa
        ids = np.empty(total, dtype=np.int64)
        weights = np.uint64(1) << np.arange(b, dtype=np.uint64)
        step = 1 << 16
        for lo in range(0, total, step):
            hi = min(total, lo + step)
            chunk = raw[lo * b // 8 : (hi * b + 7) // 8]
            bits = np.unpackbits(chunk, bitorder="little")[: (hi - lo) * b].reshape(-1, b)
            ids[lo:hi] = bits.astype(np.uint64) @ weights
        bad = np.flatnonzero(ids >= n)
        if bad.size:
            raise r.error(f"neighbor id {int(ids[bad[0]])} >= n", offset=payload_at + (int(bad[0]) * b) // 8)
        return KnnGraph(ids.reshape(n, kappa))

    return _with_reader(source, body)
