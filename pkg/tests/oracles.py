"""Slow, independent reference implementations written from the contracts.

Nothing here imports engine internals; inputs are plain Python
structures. Scores are computed as float64 sums over shared coordinates
in ascending coordinate order, rounded once to float32.
"""

from __future__ import annotations

import math

import numpy as np


def as_dict(v) -> dict[int, float]:
    return {int(i): float(w) for i, w in zip(v.ids, v.weights)}


def ref_dot(u: dict, v: dict) -> np.float32:
    total = 0.0
    for i in sorted(set(u) & set(v)):
        total += u[i] * v[i]
    return np.float32(total)


def ref_topk(q: dict, docs: list[dict], k: int, exclude: int | None = None) -> list[tuple[int, float]]:
    scored = [(float(ref_dot(q, d)), i) for i, d in enumerate(docs) if i != exclude]
    scored.sort(key=lambda t: (-t[0], t[1]))
    return [(i, s) for s, i in scored[:k]]


class NaiveHeap:
    """Top-k by keeping everything seen, sorted; dedups by doc id."""

    def __init__(self, k: int):
        self.k = k
        self.entries: list[tuple[float, int]] = []

    def insert(self, score: float, doc: int) -> bool:
        if any(d == doc for _, d in self.entries):
            return False
        if len(self.entries) == self.k:
            worst = self.entries[-1]
            if not (score > worst[0] or (score == worst[0] and doc < worst[1])):
                return False
            self.entries.pop()
        self.entries.append((float(score), int(doc)))
        self.entries.sort(key=lambda t: (-t[0], t[1]))
        return True

    def min(self) -> float:
        return self.entries[-1][0] if len(self.entries) == self.k else -math.inf

    def items(self) -> list[tuple[int, float]]:
        return [(d, s) for s, d in self.entries]


def ref_query_coordinates(q: dict) -> list[int]:
    return [c for c, _ in sorted(q.items(), key=lambda t: (-t[1], t[0]))]


def ref_top_lambda(docs: list[dict], coord: int, lam: int) -> list[int]:
    holders = [(d[coord], i) for i, d in enumerate(docs) if coord in d]
    holders.sort(key=lambda t: (-t[0], t[1]))
    return sorted(i for _, i in holders[:lam])


def ref_summarize(group: list[dict], alpha: float) -> dict[int, float]:
    m: dict[int, float] = {}
    for d in group:
        for c, w in d.items():
            m[c] = max(m.get(c, -math.inf), w)
    if alpha >= 1.0:
        return m
    total = sum(m.values())
    out, acc = {}, 0.0
    for c, w in sorted(m.items(), key=lambda t: (-t[1], t[0])):
        if acc >= alpha * total:
            break
        out[c] = w
        acc += w
    return out


def ref_search(q: dict, lists: dict[int, list[tuple[list[int], dict]]], docs: list[dict], k, cut, heap_factor, policy):
    """Literal, unoptimized base search. ``lists[c]`` is a list of (block docs, summary).

    Returns (items, blocks_evaluated, docs_scored, per-query heap min).
    """
    heap = NaiveHeap(k)
    evaluated = scored = 0
    for rank, c in enumerate(ref_query_coordinates(q)[:cut]):
        blocks = lists.get(c, [])
        scores = [ref_dot(q, s) for _, s in blocks]
        order = list(range(len(blocks)))
        if policy == "all" or (policy == "first" and rank == 0):
            order.sort(key=lambda j: (-float(scores[j]), j))
        for j in order:
            if heap_factor * float(scores[j]) > heap.min():
                evaluated += 1
                for d in blocks[j][0]:
                    scored += 1
                    heap.insert(ref_dot(q, docs[d]), d)
    return heap.items(), evaluated, scored, heap.min()


def ref_refine(q: dict, items: list[tuple[int, float]], neighbors, docs: list[dict], k: int):
    """Algorithm-style refinement: every neighbor of every member is offered to the heap."""
    heap = NaiveHeap(k)
    for d, s in items:
        heap.insert(s, d)
    for u in [d for d, _ in items]:
        for v in neighbors[u]:
            heap.insert(ref_dot(q, docs[int(v)]), int(v))
    return heap.items()


def ref_knn(docs: list[dict], kappa: int) -> list[list[int]]:
    """Double loop over all pairs."""
    out = []
    for u, du in enumerate(docs):
        row = sorted(((float(ref_dot(du, dv)), v) for v, dv in enumerate(docs) if v != u), key=lambda t: (-t[0], t[1]))
        out.append([v for _, v in row[:kappa]])
    return out
