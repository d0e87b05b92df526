"""Compiled inner loops.

Every score in the package goes through one arithmetic path: products of
float32 weights widened to float64, summed sequentially in ascending
coordinate order, then rounded to float32. Term-at-a-time accumulation and
row-at-a-time scoring visit the nonzero products in the same order (extra
terms are exact zeros), so both produce bit-identical scores.
"""

import numpy as np
from numba import njit

NEG_INF = -np.inf


@njit(cache=True)
def score_rows(qdense, indptr, indices, values, rows, out):
    for j in range(rows.shape[0]):
        r = rows[j]
        acc = 0.0
        for p in range(indptr[r], indptr[r + 1]):
            acc += qdense[indices[p]] * np.float64(values[p])
        out[j] = np.float32(acc)


@njit(cache=True)
def score_range(qdense, indptr, indices, values, start, stop, out):
    for r in range(start, stop):
        acc = 0.0
        for p in range(indptr[r], indptr[r + 1]):
            acc += qdense[indices[p]] * np.float64(values[p])
        out[r - start] = np.float32(acc)


# Heap layout: scores[0:size], docs[0:size] form a binary heap whose root is
# the worst entry under the (score desc, doc asc) order; size lives in meta[0].


@njit(cache=True, inline="always")
def _worse(s1, d1, s2, d2):
    return s1 < s2 or (s1 == s2 and d1 > d2)


@njit(cache=True)
def _sift_up(scores, docs, i):
    s, d = scores[i], docs[i]
    while i > 0:
        parent = (i - 1) >> 1
        if _worse(s, d, scores[parent], docs[parent]):
            scores[i] = scores[parent]
            docs[i] = docs[parent]
            i = parent
        else:
            break
    scores[i] = s
    docs[i] = d


@njit(cache=True)
def _sift_down(scores, docs, size, i):
    s, d = scores[i], docs[i]
    while True:
        child = 2 * i + 1
        if child >= size:
            break
        right = child + 1
        if right < size and _worse(scores[right], docs[right], scores[child], docs[child]):
            child = right
        if _worse(scores[child], docs[child], s, d):
            scores[i] = scores[child]
            docs[i] = docs[child]
            i = child
        else:
            break
    scores[i] = s
    docs[i] = d


@njit(cache=True)
def heap_insert(scores, docs, meta, score, doc):
    size = meta[0]
    cap = scores.shape[0]
    if size == cap and not _worse(scores[0], docs[0], score, doc):
        return False
    for i in range(size):
        if docs[i] == doc:
            return False
    if size < cap:
        scores[size] = score
        docs[size] = doc
        meta[0] = size + 1
        _sift_up(scores, docs, size)
    else:
        scores[0] = score
        docs[0] = doc
        _sift_down(scores, docs, size, 0)
    return True


@njit(cache=True)
def heap_threshold(scores, meta):
    if meta[0] < scores.shape[0]:
        return NEG_INF
    return np.float64(scores[0])


@njit(cache=True)
def process_list(
    qdense,
    order,
    summary_scores,
    heap_factor,
    first_block,
    block_ptr,
    block_docs,
    fwd_indptr,
    fwd_indices,
    fwd_values,
    heap_scores,
    heap_docs,
    heap_meta,
    counters,
    trace_threshold,
    trace_evaluated,
):
    """Visit one list's blocks in ``order``; counters = [evaluated, docs_scored]."""
    for j in range(order.shape[0]):
        b = order[j]
        thr = heap_threshold(heap_scores, heap_meta)
        trace_threshold[b] = thr
        if heap_factor * np.float64(summary_scores[b]) > thr:
            trace_evaluated[b] = True
            counters[0] += 1
            blk = first_block + b
            for p in range(block_ptr[blk], block_ptr[blk + 1]):
                d = block_docs[p]
                acc = 0.0
                for t in range(fwd_indptr[d], fwd_indptr[d + 1]):
                    acc += qdense[fwd_indices[t]] * np.float64(fwd_values[t])
                counters[1] += 1
                heap_insert(heap_scores, heap_docs, heap_meta, np.float32(acc), d)


@njit(cache=True)
def taat_accumulate(q_ids, q_weights, csc_ptr, csc_rows, csc_vals, acc):
    for j in range(q_ids.shape[0]):
        c = q_ids[j]
        if c + 1 >= csc_ptr.shape[0]:
            continue
        w = np.float64(q_weights[j])
        for p in range(csc_ptr[c], csc_ptr[c + 1]):
            acc[csc_rows[p]] += w * np.float64(csc_vals[p])


@njit(cache=True)
def exact_topk_batch(q_indptr, q_indices, q_values, csc_ptr, csc_rows, csc_vals, n, k, exclude_self, out_docs, out_scores):
    """Brute-force top-k for every query row; ``exclude_self`` drops doc == row."""
    acc = np.zeros(n, dtype=np.float64)
    hs = np.empty(k, dtype=np.float32)
    hd = np.empty(k, dtype=np.int64)
    meta = np.zeros(1, dtype=np.int64)
    for r in range(q_indptr.shape[0] - 1):
        acc[:] = 0.0
        lo, hi = q_indptr[r], q_indptr[r + 1]
        taat_accumulate(q_indices[lo:hi], q_values[lo:hi], csc_ptr, csc_rows, csc_vals, acc)
        meta[0] = 0
        for d in range(n):
            if exclude_self and d == r:
                continue
            heap_insert(hs, hd, meta, np.float32(acc[d]), d)
        m = meta[0]
        # pop worst-first to fill from the back
        for pos in range(m - 1, -1, -1):
            out_docs[r, pos] = hd[0]
            out_scores[r, pos] = hs[0]
            last = meta[0] - 1
            hs[0] = hs[last]
            hd[0] = hd[last]
            meta[0] = last
            if last > 0:
                _sift_down(hs, hd, last, 0)
