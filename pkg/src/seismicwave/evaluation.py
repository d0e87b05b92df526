"""Exact oracle, accuracy/latency measurement, budgeted sweeps, and reports."""

from __future__ import annotations

import csv
import itertools
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _kernels
from .core import SparseVector
from .graph import KnnGraph, build_knn_approx, build_knn_exact, graph_nbytes, search
from .index import BuildParams, ForwardIndex, InvertedIndex, build_inverted, index_size_bytes, within_budget
from .io import GroundTruth
from .search import SearchParams, SearchStats, TraversalPolicy

log = logging.getLogger(__name__)

CUTOFFS = tuple(range(90, 100))


def exact_topk(q: SparseVector, fwd: ForwardIndex, k: int) -> list[tuple[int, float]]:
    """Full scan; top-k by (score desc, id asc)."""
    truth = ground_truth([q], fwd, k)
    return [(int(d), float(s)) for d, s in zip(truth.ids[0], truth.scores[0])]


def ground_truth(queries: Sequence[SparseVector], fwd: ForwardIndex, k: int) -> GroundTruth:
    if not 1 <= k <= fwd.n:
        raise ValueError(f"k={k} must be in [1, n={fwd.n}]")
    nq = len(queries)
    ids = np.empty((nq, k), dtype=np.int64)
    scores = np.empty((nq, k), dtype=np.float32)
    if nq:
        colptr, rows, vals = fwd.csc
        q_indptr = np.concatenate([[0], np.cumsum([len(q) for q in queries], dtype=np.int64)])
        q_ids = np.concatenate([q.ids for q in queries])
        q_w = np.concatenate([q.weights for q in queries])
        _kernels.exact_topk_batch(q_indptr, q_ids, q_w, colptr, rows, vals, fwd.n, k, False, ids, scores)
    return GroundTruth(ids, scores)


def accuracy(result: Iterable[int], truth_ids: Iterable[int], k: int) -> float:
    """Fraction of the true top-k present in ``result``."""
    return len(set(int(r) for r in result) & set(int(t) for t in truth_ids)) / k


@dataclass
class RunReport:
    search: SearchParams
    build: BuildParams | None = None
    kappa: int | None = None
    latency_us: np.ndarray = field(default_factory=lambda: np.empty(0))
    per_query_accuracy: np.ndarray = field(default_factory=lambda: np.empty(0))
    result_ids: np.ndarray = field(default_factory=lambda: np.empty((0, 0), dtype=np.int64))
    forward_bytes: int = 0
    index_bytes: int = 0
    graph_bytes: int = 0
    stats: SearchStats = field(default_factory=SearchStats)

    @property
    def accuracy(self) -> float:
        return float(self.per_query_accuracy.mean()) if self.per_query_accuracy.size else 0.0

    @property
    def mean_latency(self) -> float:
        return float(self.latency_us.mean()) if self.latency_us.size else 0.0

    def latency_percentile(self, q: float) -> float:
        return float(np.percentile(self.latency_us, q)) if self.latency_us.size else 0.0

    @property
    def work(self) -> int:
        return self.stats.work

    @property
    def mean_work(self) -> float:
        n = self.latency_us.size or 1
        return self.work / n

    @property
    def size_ratio(self) -> float:
        """(inverted + graph) / forward, the quantity a memory budget bounds."""
        return (self.index_bytes + self.graph_bytes) / self.forward_bytes if self.forward_bytes else float("inf")

    def row(self) -> dict:
        b, s = self.build, self.search
        return {
            "lambda": b.lam if b else "",
            "beta": b.beta if b else "",
            "alpha": b.alpha if b else "",
            "kappa": self.kappa or "",
            "k": s.k,
            "cut": s.cut,
            "heap_factor": s.heap_factor,
            "obt": s.obt.value,
            "expand": int(s.expand),
            "accuracy": round(self.accuracy, 6),
            "mean_us": round(self.mean_latency, 2),
            "median_us": round(self.latency_percentile(50), 2),
            "p95_us": round(self.latency_percentile(95), 2),
            "p99_us": round(self.latency_percentile(99), 2),
            "forward_bytes": self.forward_bytes,
            "index_bytes": self.index_bytes,
            "graph_bytes": self.graph_bytes,
            "size_ratio": round(self.size_ratio, 4),
            "blocks_scored": self.stats.blocks_scored,
            "blocks_evaluated": self.stats.blocks_evaluated,
            "docs_scored": self.stats.docs_scored,
        }


REPORT_COLUMNS = list(RunReport(SearchParams()).row())


def run_benchmark(
    queries: Sequence[SparseVector],
    fwd: ForwardIndex,
    idx: InvertedIndex,
    graph: KnnGraph | None,
    p: SearchParams,
    truth: GroundTruth,
    *,
    repetitions: int = 3,
    warmup: bool = True,
) -> RunReport:
    """Run every query sequentially on this thread; latency covers search
    plus refinement only."""
    if p.expand and graph is None:
        raise ValueError("expand=True needs a kappa-NN graph")
    if len(truth) != len(queries):
        raise ValueError("ground truth and queries differ in length")
    if truth.k < p.k:
        raise ValueError(f"ground truth holds k={truth.k} < requested k={p.k}")
    nq = len(queries)
    if warmup:
        for q in queries:
            search(q, idx, fwd, p, graph)
    lat = np.zeros(nq)
    results = np.full((nq, p.k), -1, dtype=np.int64)
    total = SearchStats()
    clock = time.perf_counter_ns
    for rep in range(max(1, repetitions)):
        for i, q in enumerate(queries):
            t0 = clock()
            heap, stats = search(q, idx, fwd, p, graph)
            lat[i] += clock() - t0
            if rep == 0:
                items = heap.items()
                results[i, : len(items)] = [d for d, _ in items]
                total.merge(stats)
    lat /= max(1, repetitions) * 1e3
    acc = np.array([accuracy(results[i][results[i] >= 0], truth.ids[i, : p.k], p.k) for i in range(nq)])
    sizes = index_size_bytes(idx, fwd)
    return RunReport(
        search=p,
        build=idx.params,
        kappa=graph.kappa if (graph is not None and p.expand) else None,
        latency_us=lat,
        per_query_accuracy=acc,
        result_ids=results,
        forward_bytes=sizes.forward,
        index_bytes=sizes.inverted,
        graph_bytes=graph_nbytes(fwd.n, graph.kappa) if (graph is not None and p.expand) else 0,
        stats=total,
    )


MODES = {
    "seismic": (TraversalPolicy.ARBITRARY, False),
    "obt": (TraversalPolicy.FIRST_LIST, False),
    "knn": (TraversalPolicy.ARBITRARY, True),
    "wave": (TraversalPolicy.FIRST_LIST, True),
}


@dataclass(frozen=True)
class Grid:
    """Hyperparameter grid; ``beta_fractions`` multiply lambda."""

    lam: tuple[int, ...] = (2000, 2500, 3000, 4000, 5000, 6000)
    beta_fractions: tuple[float, ...] = (1 / 10, 1 / 5)
    alpha: tuple[float, ...] = (0.4, 0.5, 0.6)
    kappa: tuple[int, ...] = (10, 20, 30, 40, 50)
    cut: tuple[int, ...] = (1, 2, 3, 4, 5, 6, 7, 8, 10, 12, 14)
    heap_factor: tuple[float, ...] = (0.7, 0.8, 0.9, 1.0)

    def build_params(self, seed: int = 0) -> list[BuildParams]:
        out = []
        for lam, frac, alpha in itertools.product(self.lam, self.beta_fractions, self.alpha):
            out.append(BuildParams(lam, max(1, int(round(lam * frac))), alpha, seed))
        return out


# Grid for the 10,000-document desk corpus: lambda rescaled so indexes can
# fit a 2x budget at that collection size; the other axes are unchanged.
DESK_GRID = Grid(lam=(30, 50, 75, 100), alpha=(0.4, 0.5), kappa=(10, 20))


@dataclass
class SweepResult:
    mode: str
    budget: float
    reports: list[RunReport]
    objective: str = "latency"

    def cost(self, r: RunReport) -> float:
        return r.mean_latency if self.objective == "latency" else r.mean_work

    def best(self, cutoff: float) -> RunReport | None:
        """Cheapest report whose accuracy reaches ``cutoff`` (a fraction)."""
        ok = [r for r in self.reports if r.accuracy >= cutoff - 1e-12]
        return min(ok, key=self.cost) if ok else None

    def table(self, cutoffs: Sequence[int] = CUTOFFS) -> dict[int, RunReport | None]:
        return {c: self.best(c / 100) for c in cutoffs}


def sweep(
    fwd: ForwardIndex,
    queries: Sequence[SparseVector],
    truth: GroundTruth,
    *,
    grid: Grid = Grid(),
    budget: float = 2.0,
    mode: str = "wave",
    k: int = 10,
    objective: str = "latency",
    graph_builder: Callable[[ForwardIndex, int], KnnGraph] | str = "exact",
    repetitions: int = 1,
    seed: int = 0,
    indexes: dict | None = None,
) -> SweepResult:
    """Evaluate every grid point that fits the memory budget.

    The budget bounds inverted index plus graph relative to the forward
    index. ``indexes`` maps build parameters to ``(index or None, sizes)``
    and may be shared across calls with the same budget.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {sorted(MODES)}")
    if objective not in ("latency", "work"):
        raise ValueError("objective must be 'latency' or 'work'")
    obt, expand = MODES[mode]
    if isinstance(graph_builder, str):
        graph_builder = {"exact": build_knn_exact, "approx": build_knn_approx}[graph_builder]
    indexes = {} if indexes is None else indexes
    graph = None
    kappas: tuple[int | None, ...] = (None,)
    if expand:
        kappas = tuple(sorted(k_ for k_ in grid.kappa if k_ < fwd.n))
        if kappas:
            graph = graph_builder(fwd, max(kappas))
    reports = []
    for bp in grid.build_params(seed):
        lam = min(bp.lam, fwd.n)
        bp = BuildParams(lam, min(bp.beta, lam), bp.alpha, bp.seed)
        if bp not in indexes:
            idx = build_inverted(fwd, bp)
            sizes = index_size_bytes(idx, fwd)
            # an index over budget on its own stays over with any graph: keep only its sizes
            indexes[bp] = (idx if within_budget(sizes, budget) else None, sizes)
        idx, sizes = indexes[bp]
        for kappa in kappas:
            gbytes = graph_nbytes(fwd.n, kappa) if kappa else 0
            if idx is None or not within_budget(sizes, budget, gbytes):
                log.info("skip %s kappa=%s: over budget", bp, kappa)
                continue
            g = graph.truncate(kappa) if kappa else None
            for cut, hf in itertools.product(grid.cut, grid.heap_factor):
                p = SearchParams(k=k, cut=cut, heap_factor=hf, obt=obt, expand=expand)
                reports.append(
                    run_benchmark(queries, fwd, idx, g, p, truth, repetitions=repetitions, warmup=objective == "latency")
                )
    return SweepResult(mode, budget, reports, objective)


@dataclass
class Breakdown:
    """``shares[r]``: fraction of list-processing time spent on the r-th
    processed list. ``overhead``: fraction of wall time outside the list loop."""

    shares: np.ndarray
    overhead: float


def breakdown_report(
    queries: Sequence[SparseVector],
    fwd: ForwardIndex,
    idx: InvertedIndex,
    p: SearchParams,
    *,
    max_ranks: int = 10,
    repetitions: int = 1,
) -> Breakdown:
    """Per-rank time shares over the first ``min(cut, max_ranks)`` lists.

    Times are summed over all queries (and repetitions) before dividing,
    so long queries weigh more, as in a wall-clock profile.
    """
    from .search import _search

    ranks = min(p.cut, max_ranks)
    per_rank = np.zeros(ranks)
    in_lists = wall = 0
    clock = time.perf_counter_ns
    for q in queries:
        _search(q, idx, fwd, p, timed=True)
    for _ in range(max(1, repetitions)):
        for q in queries:
            t0 = clock()
            _, stats, _ = _search(q, idx, fwd, p, timed=True)
            wall += clock() - t0
            in_lists += sum(stats.per_list_nanos)
            for r, ns in enumerate(stats.per_list_nanos[:ranks]):
                per_rank[r] += ns
    shares = per_rank / in_lists if in_lists else per_rank
    return Breakdown(shares, 1.0 - in_lists / wall if wall else 0.0)


def write_reports_csv(reports: Sequence[RunReport], destination) -> None:
    with open(destination, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=REPORT_COLUMNS)
        w.writeheader()
        for r in reports:
            w.writerow(r.row())


def write_table_csv(result: SweepResult, destination, cutoffs: Sequence[int] = CUTOFFS) -> None:
    """One row per accuracy cutoff; unreachable cutoffs carry '-' in every field."""
    with open(destination, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["mode", "budget", "cutoff"] + REPORT_COLUMNS)
        for c, r in result.table(cutoffs).items():
            cells = list(r.row().values()) if r else ["-"] * len(REPORT_COLUMNS)
            w.writerow([result.mode, result.budget, c] + cells)


def format_table(results: Sequence[SweepResult], cutoffs: Sequence[int] = CUTOFFS) -> str:
    """Text table: one line per mode, mean latency (us) per accuracy cutoff."""
    head = f"{'mode':<8} {'budget':>6} " + " ".join(f"{c:>8}" for c in cutoffs)
    lines = [head, "-" * len(head)]
    for res in results:
        cells = []
        for c, r in res.table(cutoffs).items():
            if r is None:
                cells.append(f"{'-':>8}")
            elif res.objective == "latency":
                cells.append(f"{r.mean_latency:8.0f}")
            else:
                cells.append(f"{r.mean_work:8.0f}")
        lines.append(f"{res.mode:<8} {res.budget:>6g} " + " ".join(cells))
    return "\n".join(lines)
