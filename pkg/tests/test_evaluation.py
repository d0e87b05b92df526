import csv

import numpy as np
import pytest

from seismicwave.core import SparseVector
from seismicwave.evaluation import (
    CUTOFFS,
    MODES,
    Grid,
    accuracy,
    breakdown_report,
    exact_topk,
    format_table,
    ground_truth,
    run_benchmark,
    sweep,
    write_table_csv,
)
from seismicwave.graph import build_knn_exact, graph_nbytes
from seismicwave.index import BuildParams, build_inverted, index_size_bytes
from seismicwave.search import SearchParams

from conftest import random_vectors
from oracles import as_dict, ref_topk

SMALL_GRID = Grid(lam=(30, 60), beta_fractions=(0.1,), alpha=(0.4,), kappa=(5, 10), cut=(1, 3, 6), heap_factor=(0.8, 1.0))


class TestExactTopk:
    def test_orthogonal_query(self, small):
        fwd, _ = small
        out = exact_topk(SparseVector.from_pairs([(fwd.dim + 5, 1.0)]), fwd, 4)
        assert out == [(0, 0.0), (1, 0.0), (2, 0.0), (3, 0.0)]

    def test_k_equals_n(self, tiny):
        fwd, queries, docs, qd = tiny
        assert exact_topk(queries[0], fwd, fwd.n) == ref_topk(qd[0], docs, fwd.n)

    def test_k_too_large(self, tiny):
        fwd, queries, *_ = tiny
        with pytest.raises(ValueError):
            exact_topk(queries[0], fwd, fwd.n + 1)

    def test_dual_implementation(self):
        from seismicwave.index import build_forward

        rng = np.random.default_rng(21)
        for trial in range(4):
            docs = random_vectors(rng, 150, 60, 10, grid=bool(trial % 2))
            queries = random_vectors(rng, 15, 60, 8, grid=bool(trial % 2))
            fwd = build_forward(docs)
            dd = [as_dict(d) for d in docs]
            for q in queries:
                assert exact_topk(q, fwd, 12) == ref_topk(as_dict(q), dd, 12)


class TestAccuracy:
    def test_identical(self):
        assert accuracy([1, 2, 3], [3, 2, 1], 3) == 1.0

    def test_disjoint(self):
        assert accuracy([1, 2], [3, 4], 2) == 0.0

    def test_partial(self):
        assert accuracy(list(range(9)) + [99], list(range(10)), 10) == 0.9


class TestBenchmark:
    def test_exact_mode_accuracy_one(self, small):
        fwd, queries = small
        truth = ground_truth(queries, fwd, 10)
        idx = build_inverted(fwd, BuildParams(fwd.n, 10, 1.0))
        p = SearchParams(k=10, cut=max(len(q) for q in queries), heap_factor=1.0)
        r = run_benchmark(queries, fwd, idx, None, p, truth, repetitions=1)
        assert r.accuracy == 1.0 and r.per_query_accuracy.min() == 1.0

    def test_missing_graph(self, small):
        fwd, queries = small
        truth = ground_truth(queries, fwd, 10)
        idx = build_inverted(fwd, BuildParams(30, 3, 0.4))
        with pytest.raises(ValueError):
            run_benchmark(queries, fwd, idx, None, SearchParams(expand=True), truth)

    def test_report_fields_and_determinism(self, small):
        fwd, queries = small
        truth = ground_truth(queries, fwd, 10)
        idx = build_inverted(fwd, BuildParams(30, 3, 0.4))
        g = build_knn_exact(fwd, 10)
        p = SearchParams(k=10, cut=3, heap_factor=0.9, obt="first", expand=True)
        a = run_benchmark(queries, fwd, idx, g, p, truth, repetitions=2)
        b = run_benchmark(queries, fwd, idx, g, p, truth, repetitions=1)
        assert np.array_equal(a.result_ids, b.result_ids)
        assert a.accuracy == b.accuracy
        assert (a.stats.blocks_evaluated, a.stats.docs_scored) == (b.stats.blocks_evaluated, b.stats.docs_scored)
        assert 0.0 <= a.accuracy <= 1.0 and a.latency_us.min() >= 0
        assert a.latency_percentile(50) <= a.latency_percentile(95) <= a.latency_percentile(99)
        recomputed = [accuracy(a.result_ids[i], truth.ids[i], 10) for i in range(len(queries))]
        assert np.mean(recomputed) == a.accuracy
        sizes = index_size_bytes(idx, fwd)
        assert (a.forward_bytes, a.index_bytes, a.graph_bytes) == (sizes.forward, sizes.inverted, graph_nbytes(fwd.n, 10))
        assert a.stats.blocks_evaluated <= a.stats.blocks_scored

    def test_doubling_cut_keeps_accuracy(self, small):
        fwd, queries = small
        truth = ground_truth(queries, fwd, 10)
        idx = build_inverted(fwd, BuildParams(30, 3, 0.4))
        accs = [
            run_benchmark(queries, fwd, idx, None, SearchParams(cut=c, heap_factor=1.0), truth, repetitions=1).accuracy
            for c in (1, 2, 4, 8, 16)
        ]
        assert accs == sorted(accs)


class TestSweep:
    def test_impossible_budget_all_dashes(self, small, tmp_path):
        fwd, queries = small
        truth = ground_truth(queries, fwd, 10)
        res = sweep(fwd, queries, truth, grid=SMALL_GRID, budget=0.01, mode="seismic", repetitions=1)
        assert res.reports == []
        assert all(v is None for v in res.table().values())
        out = tmp_path / "t.csv"
        write_table_csv(res, out)
        rows = list(csv.reader(open(out)))
        assert [r[2] for r in rows[1:]] == [str(c) for c in CUTOFFS]
        assert all(set(r[3:]) == {"-"} for r in rows[1:])
        line = format_table([res]).splitlines()[-1].split()
        assert line[2:] == ["-"] * 10

    def test_budget_respected_and_modes(self, small):
        fwd, queries = small
        truth = ground_truth(queries, fwd, 10)
        cache: dict = {}
        budget = 20.0
        results = {m: sweep(fwd, queries, truth, grid=SMALL_GRID, budget=budget, mode=m, objective="work", indexes=cache) for m in MODES}
        assert set(results) == {"seismic", "obt", "knn", "wave"}
        for m, res in results.items():
            assert res.reports
            for r in res.reports:
                assert r.index_bytes + r.graph_bytes <= budget * r.forward_bytes
                assert r.search.expand == (m in ("knn", "wave"))
            best = res.table()
            for c, r in best.items():
                if r is not None:
                    assert r.accuracy >= c / 100 - 1e-12
                    assert all(res.cost(o) >= res.cost(r) for o in res.reports if o.accuracy >= c / 100)
        table = format_table(list(results.values()))
        assert len(table.splitlines()) == 6


class TestBreakdown:
    def test_single_list(self, small):
        fwd, queries = small
        idx = build_inverted(fwd, BuildParams(30, 3, 0.4))
        b = breakdown_report(queries, fwd, idx, SearchParams(cut=1))
        assert b.shares.tolist() == [1.0]

    def test_shares_bounded(self, small):
        fwd, queries = small
        idx = build_inverted(fwd, BuildParams(30, 3, 0.4))
        b = breakdown_report(queries, fwd, idx, SearchParams(cut=14))
        assert b.shares.size == 10
        assert np.all(b.shares >= 0) and b.shares.sum() <= 1.0 + 1e-12
        assert 0.0 <= b.overhead < 1.0
