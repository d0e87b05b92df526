"""Little-endian binary formats: CSR collections, ground truth, and SWIX indexes.

CSR (collections and query sets)::

    u64 nrows, u64 ncols, u64 nnz
    u64 indptr[nrows + 1]
    u32 indices[nnz]
    f32 values[nnz]

Ground truth::

    u64 nqueries, u64 k
    per query: u32 ids[k], f32 scores[k]

SWIX (forward + inverted index)::

    b"SWIX", u32 version
    u64 lambda, u64 beta, f64 alpha, u64 seed
    <forward index as a CSR section>
    u64 nlists, u64 nblocks, u64 npostings, u64 nsummary
    u32 coords[nlists]
    u64 list_ptr[nlists + 1]
    u64 block_ptr[nblocks + 1]
    u32 block_docs[npostings]
    u64 summary_ptr[nblocks + 1]
    u32 summary_ids[nsummary]
    f32 summary_weights[nsummary]
"""

from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass
from typing import BinaryIO, Sequence

import numpy as np

from .core import COORD_DTYPE, WEIGHT_DTYPE, SparseVector

U64 = np.dtype("<u8")
U32 = np.dtype("<u4")
F32 = np.dtype("<f4")
F64 = np.dtype("<f8")

SWIX_MAGIC = b"SWIX"
SWIX_VERSION = 1


class FormatError(ValueError):
    """Malformed or inconsistent binary input."""

    def __init__(self, message: str, *, offset: int | None = None, row: int | None = None, source: str | None = None):
        self.offset = offset
        self.row = row
        self.source = source
        where = []
        if source:
            where.append(source)
        if row is not None:
            where.append(f"row {row}")
        if offset is not None:
            where.append(f"byte {offset}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class _Reader:
    """Bounds-checked sequential reads from a binary stream."""

    def __init__(self, f: BinaryIO, source: str | None = None):
        self.f = f
        self.source = source
        self.offset = 0
        try:
            here = f.tell()
            self.remaining = f.seek(0, os.SEEK_END) - here
            f.seek(here)
        except (OSError, AttributeError, io.UnsupportedOperation):
            self.remaining = None

    def error(self, message: str, **kw) -> FormatError:
        kw.setdefault("offset", self.offset)
        return FormatError(message, source=self.source, **kw)

    def bytes(self, count: int, what: str) -> bytes:
        if count < 0 or (self.remaining is not None and count > self.remaining):
            raise self.error(f"truncated {what}")
        data = self.f.read(count)
        if len(data) != count:
            raise self.error(f"truncated {what}")
        self.offset += count
        if self.remaining is not None:
            self.remaining -= count
        return data

    def array(self, dtype: np.dtype, count: int, what: str) -> np.ndarray:
        if count < 0 or count > 2**62 // dtype.itemsize:
            raise self.error(f"implausible {what} length {count}")
        return np.frombuffer(self.bytes(count * dtype.itemsize, what), dtype=dtype)

    def u64(self, what: str) -> int:
        return int(self.array(U64, 1, what)[0])

    def f64(self, what: str) -> float:
        return float(self.array(F64, 1, what)[0])

    def expect_end(self):
        if self.f.read(1):
            raise self.error("trailing bytes after payload")


def _open_read(source):
    if isinstance(source, (bytes, bytearray, memoryview)):
        return io.BytesIO(bytes(source)), None
    if isinstance(source, (str, os.PathLike)):
        return open(source, "rb"), os.fspath(source)
    return source, getattr(source, "name", None)


def _open_write(destination):
    if isinstance(destination, (str, os.PathLike)):
        return open(destination, "wb"), True
    return destination, False


def _with_reader(source, body):
    f, name = _open_read(source)
    try:
        return body(_Reader(f, name))
    finally:
        if f is not source:
            f.close()


def _with_writer(destination, body):
    f, owned = _open_write(destination)
    try:
        body(f)
    finally:
        if owned:
            f.close()


# --- CSR -------------------------------------------------------------------


@dataclass(frozen=True)
class CsrArrays:
    ncols: int
    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray

    @property
    def nrows(self) -> int:
        return self.indptr.size - 1


def csr_nbytes(nrows: int, nnz: int) -> int:
    return 24 + 8 * (nrows + 1) + 8 * nnz


def _read_csr_section(r: _Reader) -> CsrArrays:
    start = r.offset
    nrows, ncols, nnz = (int(x) for x in r.array(U64, 3, "CSR header"))
    if ncols > 2**32:
        raise r.error(f"ncols {ncols} exceeds the 32-bit coordinate space", offset=start + 8)
    indptr_at = r.offset
    indptr = r.array(U64, nrows + 1, "indptr")
    if indptr[0] != 0:
        raise r.error("indptr[0] must be 0", offset=indptr_at)
    if int(indptr[-1]) != nnz:
        raise r.error(f"indptr[nrows]={int(indptr[-1])} does not match nnz={nnz}", offset=indptr_at + 8 * nrows)
    bad = np.flatnonzero(indptr[1:] < indptr[:-1])
    if bad.size:
        row = int(bad[0])
        raise r.error("indptr decreases", row=row, offset=indptr_at + 8 * (row + 1))
    indices_at = r.offset
    indices = r.array(U32, nnz, "indices")
    values_at = r.offset
    values = r.array(F32, nnz, "values")

    if nnz:
        row_of = np.repeat(np.arange(nrows, dtype=np.int64), np.diff(indptr.astype(np.int64)))
        if ncols == 0 or int(indices.max()) >= ncols:
            p = int(np.flatnonzero(indices.astype(np.int64) >= ncols)[0])
            raise r.error(f"coordinate {int(indices[p])} >= ncols {ncols}", row=int(row_of[p]), offset=indices_at + 4 * p)
        same_row = row_of[1:] == row_of[:-1]
        bad = np.flatnonzero(same_row & (indices[1:] <= indices[:-1]))
        if bad.size:
            p = int(bad[0]) + 1
            raise r.error("row indices not strictly increasing", row=int(row_of[p]), offset=indices_at + 4 * p)
        bad = np.flatnonzero(~np.isfinite(values) | (values == 0))
        if bad.size:
            p = int(bad[0])
            kind = "zero" if values[p] == 0 else "non-finite"
            raise r.error(f"{kind} value", row=int(row_of[p]), offset=values_at + 4 * p)
    return CsrArrays(
        ncols,
        indptr.astype(np.int64),
        indices.astype(COORD_DTYPE),
        values.astype(WEIGHT_DTYPE),
    )


def _write_csr_section(f: BinaryIO, ncols: int, indptr, indices, values):
    indptr = np.asarray(indptr)
    f.write(np.array([indptr.size - 1, ncols, indices.size], dtype=U64).tobytes())
    f.write(np.asarray(indptr, dtype=U64).tobytes())
    f.write(np.asarray(indices, dtype=U32).tobytes())
    f.write(np.asarray(values, dtype=F32).tobytes())


def read_csr_arrays(source) -> CsrArrays:
    def body(r):
        out = _read_csr_section(r)
        r.expect_end()
        return out

    return _with_reader(source, body)


def read_csr(source) -> list[SparseVector]:
    """Rows of a CSR file as sparse vectors."""
    a = read_csr_arrays(source)
    return [
        SparseVector(a.indices[a.indptr[i] : a.indptr[i + 1]], a.values[a.indptr[i] : a.indptr[i + 1]])
        for i in range(a.nrows)
    ]


def write_csr(vectors: Sequence[SparseVector], destination, ncols: int | None = None) -> None:
    lengths = [len(v) for v in vectors]
    indptr = np.concatenate([[0], np.cumsum(lengths, dtype=np.int64)])
    indices = np.concatenate([v.ids for v in vectors] or [np.empty(0, COORD_DTYPE)])
    values = np.concatenate([v.weights for v in vectors] or [np.empty(0, WEIGHT_DTYPE)])
    if ncols is None:
        ncols = int(indices.max()) + 1 if indices.size else 0
    elif indices.size and int(indices.max()) >= ncols:
        raise ValueError("ncols smaller than the largest coordinate")
    _with_writer(destination, lambda f: _write_csr_section(f, ncols, indptr, indices, values))


# --- ground truth ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Per-query top-k ``(id, score)``, best first. Shapes ``(nq, k)``."""

    ids: np.ndarray
    scores: np.ndarray

    def __post_init__(self):
        ids = np.asarray(self.ids, dtype=np.int64)
        scores = np.asarray(self.scores, dtype=np.float32)
        if ids.ndim != 2 or ids.shape != scores.shape:
            raise ValueError("ids and scores must be 2-d arrays of equal shape")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "scores", scores)

    @property
    def k(self) -> int:
        return self.ids.shape[1]

    def __len__(self) -> int:
        return self.ids.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, GroundTruth):
            return NotImplemented
        return np.array_equal(self.ids, other.ids) and np.array_equal(
            self.scores.view(np.uint32), other.scores.view(np.uint32)
        )

    __hash__ = None


def write_ground_truth(truth: GroundTruth, destination) -> None:
    if truth.ids.size and (truth.ids.min() < 0 or truth.ids.max() >= 2**32):
        raise ValueError("ids must fit in uint32")
    nq, k = truth.ids.shape

    def body(f):
        f.write(np.array([nq, k], dtype=U64).tobytes())
        block = np.concatenate([truth.ids.astype(U32).view(np.uint8), truth.scores.astype(F32).view(np.uint8)], axis=1)
        f.write(block.tobytes())

    _with_writer(destination, body)


def read_ground_truth(source) -> GroundTruth:
    def body(r):
        nq, k = r.u64("nqueries"), r.u64("k")
        if k and nq > 2**62 // (8 * k):
            raise r.error("implausible ground-truth size")
        raw = r.bytes(nq * k * 8, "ground-truth payload")
        r.expect_end()
        rows = np.frombuffer(raw, dtype=np.uint8).reshape(nq, 8 * k)
        ids = rows[:, : 4 * k].copy().view(U32).astype(np.int64)
        scores = rows[:, 4 * k :].copy().view(F32).astype(np.float32)
        return GroundTruth(ids.reshape(nq, k), scores.reshape(nq, k))

    return _with_reader(source, body)


# --- SWIX ------------------------------------------------------------------


def inverted_nbytes(idx) -> int:
    """Bytes used by everything in a SWIX file except the forward section."""
    if idx is None:
        return 8 + 32 + 32 + 8 + 16
    return (
        8 + 32 + 32
        + 4 * idx.n_lists + 8 * (idx.n_lists + 1)
        + 16 * (idx.n_blocks + 1)
        + 4 * idx.block_docs.size
        + 8 * idx.summary_ids.size
    )


def index_write(idx, fwd, destination) -> None:
    p = idx.params

    def body(f):
        f.write(SWIX_MAGIC + struct.pack("<I", SWIX_VERSION))
        f.write(struct.pack("<QQdQ", p.lam, p.beta, p.alpha, p.seed))
        _write_csr_section(f, fwd.dim, fwd.indptr, fwd.indices, fwd.values)
        f.write(np.array([idx.n_lists, idx.n_blocks, idx.block_docs.size, idx.summary_ids.size], dtype=U64).tobytes())
        for arr, dt in (
            (idx.coords, U32),
            (idx.list_ptr, U64),
            (idx.block_ptr, U64),
            (idx.block_docs, U32),
            (idx.summary_ptr, U64),
            (idx.summary_ids, U32),
            (idx.summary_weights, F32),
        ):
            f.write(np.asarray(arr).astype(dt).tobytes())

    _with_writer(destination, body)


def _check_ptr(r: _Reader, ptr: np.ndarray, end: int, what: str, at: int):
    if ptr[0] != 0 or int(ptr[-1]) != end:
        raise r.error(f"{what} does not span [0, {end}]", offset=at)
    if np.any(ptr[1:] < ptr[:-1]):
        raise r.error(f"{what} decreases", offset=at)


def index_read(source):
    """Read a SWIX file; returns ``(InvertedIndex, ForwardIndex)``."""
    from .index import BuildParams, ForwardIndex, InvertedIndex

    def body(r: _Reader):
        head = r.bytes(8, "magic")
        if head[:4] != SWIX_MAGIC:
            raise r.error("bad magic", offset=0)
        version = struct.unpack("<I", head[4:])[0]
        if version != SWIX_VERSION:
            raise r.error(f"unsupported version {version}", offset=4)
        lam, beta, alpha, seed = struct.unpack("<QQdQ", r.bytes(32, "build parameters"))
        try:
            params = BuildParams(lam, beta, alpha, seed)
        except ValueError as exc:
            raise r.error(f"invalid build parameters: {exc}", offset=8) from None
        csr = _read_csr_section(r)
        fwd = ForwardIndex(csr.indptr, csr.indices, csr.values, csr.ncols)

        counts_at = r.offset
        n_lists, n_blocks, n_post, n_sum = (int(x) for x in r.array(U64, 4, "section counts"))
        coords_at = r.offset
        coords = r.array(U32, n_lists, "list coordinates")
        if n_lists and (np.any(coords[1:] <= coords[:-1]) or int(coords[-1]) >= fwd.span):
            raise r.error("list coordinates not increasing or not held by any document", offset=coords_at)
        at = r.offset
        list_ptr = r.array(U64, n_lists + 1, "list_ptr")
        _check_ptr(r, list_ptr, n_blocks, "list_ptr", at)
        if n_lists and np.any(list_ptr[1:] == list_ptr[:-1]):
            raise r.error("empty inverted list", offset=at)
        at = r.offset
        block_ptr = r.array(U64, n_blocks + 1, "block_ptr")
        _check_ptr(r, block_ptr, n_post, "block_ptr", at)
        if n_blocks and np.any(block_ptr[1:] == block_ptr[:-1]):
            raise r.error("empty block", offset=at)
        at = r.offset
        block_docs = r.array(U32, n_post, "block docs")
        if n_post and int(block_docs.max()) >= fwd.n:
            raise r.error("block doc id out of range", offset=at)
        at = r.offset
        summary_ptr = r.array(U64, n_blocks + 1, "summary_ptr")
        _check_ptr(r, summary_ptr, n_sum, "summary_ptr", at)
        at = r.offset
        summary_ids = r.array(U32, n_sum, "summary ids")
        if n_sum and int(summary_ids.max()) >= fwd.span:
            # summaries are maxima of stored documents, so no coordinate lies beyond them
            raise r.error("summary coordinate not held by any document", offset=at)
        at = r.offset
        summary_weights = r.array(F32, n_sum, "summary weights")
        if not np.all(np.isfinite(summary_weights)) or np.any(summary_weights == 0):
            raise r.error("summary weight zero or non-finite", offset=at)
        r.expect_end()
        if n_sum:
            owner = np.repeat(np.arange(n_blocks), np.diff(summary_ptr.astype(np.int64)))
            same = owner[1:] == owner[:-1]
            if np.any(same & (summary_ids[1:] <= summary_ids[:-1])):
                raise r.error("summary ids not strictly increasing", offset=counts_at)
        idx = InvertedIndex(
            params,
            coords,
            list_ptr.astype(np.int64),
            block_ptr.astype(np.int64),
            block_docs.astype(np.int64),
            summary_ptr.astype(np.int64),
            summary_ids,
            summary_weights,
        )
        return idx, fwd

    return _with_reader(source, body)
