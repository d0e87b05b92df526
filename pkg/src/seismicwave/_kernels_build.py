"""Compiled helpers used only while building the inverted index.

Dimension-sized scratch arrays are allocated once per build by the caller
and handed back clean (all zero / False) after every call.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def assign_to_centroids(entries, centroids, indptr, indices, values, start, stop):
    """Label each entry with the centroid of largest inner product (lowest index on ties)."""
    n_cent = centroids.shape[0]
    total = 0
    for j in range(n_cent):
        r = centroids[j]
        total += indptr[r + 1] - indptr[r]
    coord = np.empty(total, dtype=np.int64)
    owner = np.empty(total, dtype=np.int64)
    wts = np.empty(total, dtype=np.float64)
    t = 0
    for j in range(n_cent):
        r = centroids[j]
        for p in range(indptr[r], indptr[r + 1]):
            coord[t] = indices[p]
            owner[t] = j
            wts[t] = values[p]
            t += 1
    order = np.argsort(coord, kind="mergesort")
    coord, owner, wts = coord[order], owner[order], wts[order]
    for t in range(total):
        c = coord[t]
        if stop[c] == 0:
            start[c] = t
        stop[c] = t + 1

    labels = np.empty(entries.shape[0], dtype=np.int64)
    acc = np.zeros(n_cent, dtype=np.float64)
    for e in range(entries.shape[0]):
        acc[:] = 0.0
        r = entries[e]
        for p in range(indptr[r], indptr[r + 1]):
            c = indices[p]
            v = np.float64(values[p])
            for u in range(start[c], stop[c]):
                acc[owner[u]] += v * wts[u]
        best = 0
        for j in range(1, n_cent):
            if acc[j] > acc[best]:
                best = j
        labels[e] = best
    for t in range(total):
        start[coord[t]] = 0
        stop[coord[t]] = 0
    return labels


@njit(cache=True)
def _mass_head(scratch, coords, alpha):
    """Shortest weight-descending prefix holding ``alpha`` of the mass.

    Returns ``(head, m)``: ``head`` is sorted descending and its first ``m``
    values form the prefix. Positive weights are pre-binned by their float
    bit pattern (monotone in value) so only the top bins get sorted.
    """
    n = coords.shape[0]
    w = np.empty(n, dtype=np.float32)
    total = 0.0
    positive = True
    for i in range(n):
        w[i] = scratch[coords[i]]
        total += np.float64(w[i])
        if w[i] <= 0:
            positive = False
    if total <= 0.0:
        return w, n
    target = alpha * total
    head = w
    if positive and n > 64:
        bins = w.view(np.int32) >> 16
        lo, hi = bins.min(), bins.max()
        mass = np.zeros(hi - lo + 1, dtype=np.float64)
        for i in range(n):
            mass[bins[i] - lo] += np.float64(w[i])
        acc = 0.0
        cut = lo
        for b in range(hi, lo - 1, -1):
            acc += mass[b - lo]
            if acc >= target * (1.0 + 1e-9):
                cut = b
                break
        if cut > lo:
            head = w[bins >= cut]
    head = np.sort(head)[::-1]
    acc = 0.0
    m = 0
    while m < head.shape[0] and acc < target:
        acc += np.float64(head[m])
        m += 1
    if acc < target and head.shape[0] < n:
        head = np.sort(w)[::-1]
        acc = 0.0
        m = 0
        while m < n and acc < target:
            acc += np.float64(head[m])
            m += 1
    return head, m


@njit(cache=True)
def group_summaries(group_ptr, group_docs, indptr, indices, values, alpha, scratch, seen, out_ids, out_weights, out_counts):
    """Coordinate-wise max per group, pruned to the shortest weight-descending
    prefix that holds ``alpha`` of the total weight; ids ascending on output."""
    pos = 0
    for g in range(group_ptr.shape[0] - 1):
        bound = 0
        for q in range(group_ptr[g], group_ptr[g + 1]):
            r = group_docs[q]
            bound += indptr[r + 1] - indptr[r]
        touched = np.empty(bound, dtype=np.int64)
        n_t = 0
        for q in range(group_ptr[g], group_ptr[g + 1]):
            r = group_docs[q]
            for p in range(indptr[r], indptr[r + 1]):
                c = indices[p]
                v = values[p]
                if not seen[c]:
                    seen[c] = True
                    scratch[c] = v
                    touched[n_t] = c
                    n_t += 1
                elif v > scratch[c]:
                    scratch[c] = v
        coords = touched[:n_t]
        m = n_t
        if alpha < 1.0:
            w, m = _mass_head(scratch, coords, alpha)
        if m < n_t:
            # weights above the cut value, then ties at the cut by ascending id
            cut = w[m - 1]
            above = 0
            for i in range(m):
                if w[i] > cut:
                    above += 1
            ties = m - above
            kept = np.empty(m, dtype=np.int64)
            at_cut = np.empty(n_t, dtype=np.int64)
            j = 0
            n_cut = 0
            for i in range(n_t):
                v = scratch[coords[i]]
                if v > cut:
                    kept[j] = coords[i]
                    j += 1
                elif v == cut:
                    at_cut[n_cut] = coords[i]
                    n_cut += 1
            at_cut = np.sort(at_cut[:n_cut])
            kept[j:] = at_cut[:ties]
            kept = np.sort(kept)
        else:
            kept = np.sort(coords)
        for i in range(n_t):
            seen[coords[i]] = False
        for i in range(kept.shape[0]):
            out_ids[pos] = kept[i]
            out_weights[pos] = scratch[kept[i]]
            pos += 1
        out_counts[g] = kept.shape[0]
    return pos
