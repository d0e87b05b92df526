"""Command-line entry point: ``seismicwave <subcommand> ...``.

Exit status is 0 on success, 2 for usage or configuration errors (bad
flags, parameters out of range, missing inputs) and 3 for data errors
(malformed or mutually inconsistent files).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .evaluation import (
    CUTOFFS,
    DESK_GRID,
    MODES,
    Grid,
    accuracy,
    breakdown_report,
    format_table,
    ground_truth,
    run_benchmark,
    sweep,
    write_reports_csv,
    write_table_csv,
)
from .graph import build_knn_approx, build_knn_exact, graph_nbytes, graph_read, graph_write, payload_bits, search
from .index import BuildParams, build_forward, build_inverted, index_size_bytes
from .search import SearchParams, TraversalPolicy

EXIT_USAGE = 2
EXIT_DATA = 3
DEFAULT_SEED = 42
# ids written for missing results when a query retrieves fewer than k documents
MISSING_ID = 2**32 - 1

log = logging.getLogger("seismicwave")


class UsageError(Exception):
    pass


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"input file not found: {path}")
    return p


def _build_params(a) -> BuildParams:
    try:
        return BuildParams(a.lam, a.beta, a.alpha, a.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _search_params(a) -> SearchParams:
    try:
        return SearchParams(k=a.k, cut=a.cut, heap_factor=a.heap_factor, obt=a.obt, expand=a.expand)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(","))


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(","))


def _load_corpus(path: str):
    return build_forward(io.read_csr(_existing(path)))


def _load_queries(path: str):
    return io.read_csr(_existing(path))


# --- subcommands -------------------------------------------------------------


def cmd_synth(a) -> None:
    from .datasets import make_synthetic

    docs, queries = make_synthetic(n_docs=a.n_docs, n_queries=a.n_queries, dim=a.dim, seed=a.seed)
    io.write_csr(docs, a.docs_out, ncols=a.dim)
    io.write_csr(queries, a.queries_out, ncols=a.dim)
    print(f"wrote {len(docs)} documents to {a.docs_out} and {len(queries)} queries to {a.queries_out}")


def cmd_build_index(a) -> None:
    params = _build_params(a)
    fwd = _load_corpus(a.corpus)
    if fwd.n == 0:
        raise UsageError("corpus is empty")
    idx = build_inverted(fwd, params)
    io.index_write(idx, fwd, a.out)
    s = index_size_bytes(idx, fwd)
    print(f"lists={idx.n_lists} blocks={idx.n_blocks} postings={idx.block_docs.size} summary_entries={idx.summary_ids.size}")
    print(f"forward_bytes={s.forward} inverted_bytes={s.inverted} total_bytes={s.total} inverted/forward={s.ratio:.4f}")


def cmd_build_graph(a) -> None:
    fwd = _load_corpus(a.corpus)
    if not 1 <= a.kappa < fwd.n:
        raise UsageError(f"kappa must be in [1, n) with n={fwd.n}, got {a.kappa}")
    if a.exact:
        g = build_knn_exact(fwd, a.kappa)
    else:
        over = dict(lam=a.lam, beta=a.beta, alpha=a.alpha, cut=a.cut, heap_factor=a.heap_factor)
        g = build_knn_approx(fwd, a.kappa, seed=a.seed, **over)
    graph_write(g, a.out)
    bits = payload_bits(g.n, g.kappa)
    payload = Path(a.out).stat().st_size - 24
    print(f"n={g.n} kappa={g.kappa} bits_per_id={(g.n - 1).bit_length()}")
    print(f"formula_bits={bits} formula_bytes={(bits + 7) // 8} payload_bytes={payload} file_bytes={graph_nbytes(g.n, g.kappa)}")


def cmd_search(a) -> None:
    p = _search_params(a)
    if p.expand and not a.graph:
        raise UsageError("--expand needs --graph")
    idx, fwd = io.index_read(_existing(a.index))
    queries = _load_queries(a.queries)
    g = graph_read(_existing(a.graph)) if a.graph else None
    if g is not None and g.n != fwd.n:
        raise io.FormatError(f"graph has n={g.n} but the index holds {fwd.n} documents", source=a.graph)
    ids = np.full((len(queries), p.k), MISSING_ID, dtype=np.int64)
    scores = np.full((len(queries), p.k), -np.inf, dtype=np.float32)
    for i, q in enumerate(queries):
        heap, _ = search(q, idx, fwd, p, g)
        for j, (d, s) in enumerate(heap.items()):
            ids[i, j], scores[i, j] = d, s
    io.write_ground_truth(io.GroundTruth(ids, scores), a.out)
    print(f"searched {len(queries)} queries single-threaded; results written to {a.out}")


def cmd_ground_truth(a) -> None:
    fwd = _load_corpus(a.corpus)
    queries = _load_queries(a.queries)
    if not 1 <= a.k <= fwd.n:
        raise UsageError(f"k must be in [1, n={fwd.n}]")
    io.write_ground_truth(ground_truth(queries, fwd, a.k), a.out)
    print(f"exact top-{a.k} for {len(queries)} queries written to {a.out}")


def cmd_evaluate(a) -> None:
    results = io.read_ground_truth(_existing(a.results))
    truth = io.read_ground_truth(_existing(a.truth))
    if len(results) != len(truth):
        raise io.FormatError(f"results hold {len(results)} queries, truth holds {len(truth)}")
    if results.k != truth.k:
        raise io.FormatError(f"k mismatch: results k={results.k}, truth k={truth.k}")
    k = truth.k if a.k is None else a.k
    if not 1 <= k <= truth.k:
        raise UsageError(f"--k must be in [1, {truth.k}]")
    acc = np.array([accuracy(results.ids[i, :k], truth.ids[i, :k], k) for i in range(len(truth))])
    if a.csv:
        with open(a.csv, "w") as f:
            f.write("query,accuracy\n")
            f.writelines(f"{i},{v:.6f}\n" for i, v in enumerate(acc))
    mean = float(acc.mean()) if acc.size else 0.0
    print(f"queries={len(truth)} k={k} mean_accuracy={mean:.6f}")


def cmd_sweep(a) -> None:
    modes = a.mode.split(",")
    for m in modes:
        if m not in MODES:
            raise UsageError(f"unknown mode {m!r}; choose from {sorted(MODES)}")
    fwd = _load_corpus(a.corpus)
    queries = _load_queries(a.queries)
    truth = io.read_ground_truth(_existing(a.truth))
    if len(truth) != len(queries):
        raise io.FormatError("truth and queries differ in length")
    if truth.k < a.k:
        raise io.FormatError(f"truth holds k={truth.k} < requested k={a.k}")
    base = DESK_GRID if a.grid == "desk" else Grid()
    try:
        grid = Grid(
            lam=_int_list(a.lam) if a.lam else base.lam,
            beta_fractions=_float_list(a.beta_fraction) if a.beta_fraction else base.beta_fractions,
            alpha=_float_list(a.alpha) if a.alpha else base.alpha,
            kappa=_int_list(a.kappa) if a.kappa else base.kappa,
            cut=_int_list(a.cut) if a.cut else base.cut,
            heap_factor=_float_list(a.heap_factor) if a.heap_factor else base.heap_factor,
        )
        grid.build_params(a.seed)
        for c in grid.cut:
            SearchParams(cut=c)
        for hf in grid.heap_factor:
            SearchParams(heap_factor=hf)
    except ValueError as exc:
        raise UsageError(f"bad grid: {exc}") from None
    cache: dict = {}
    results, reports = [], []
    for m in modes:
        res = sweep(
            fwd, queries, truth, grid=grid, budget=a.budget, mode=m, k=a.k, objective=a.objective,
            graph_builder=a.graph, repetitions=a.repetitions, seed=a.seed, indexes=cache,
        )
        results.append(res)
        reports.extend(res.reports)
        if a.csv:
            write_table_csv(res, f"{a.csv}.{m}.csv")
    if a.all_csv:
        write_reports_csv(reports, a.all_csv)
    unit = "mean latency (us/query)" if a.objective == "latency" else "mean work (blocks evaluated + docs scored per query)"
    print(f"budget {a.budget}x forward index; {unit} at accuracy cutoffs (%):")
    print(format_table(results, CUTOFFS))


def cmd_breakdown(a) -> None:
    if a.cut < 2:
        raise UsageError("breakdown needs --cut >= 2")
    p = SearchParams(k=a.k, cut=a.cut, heap_factor=a.heap_factor, obt=a.obt)
    idx, fwd = io.index_read(_existing(a.index))
    queries = _load_queries(a.queries)
    b = breakdown_report(queries, fwd, idx, p, repetitions=a.repetitions)
    print("share of list-processing time per list rank")
    print("rank,share")
    for r, s in enumerate(b.shares):
        print(f"{r},{s:.4f}")
    print(f"later ranks,{max(0.0, 1 - b.shares.sum()):.4f}")
    print(f"non-list overhead (fraction of wall time): {b.overhead:.4f}")


def cmd_benchmark(a) -> None:
    p = _search_params(a)
    if p.expand and not a.graph:
        raise UsageError("--expand needs --graph")
    idx, fwd = io.index_read(_existing(a.index))
    queries = _load_queries(a.queries)
    truth = io.read_ground_truth(_existing(a.truth))
    g = graph_read(_existing(a.graph)) if a.graph else None
    if len(truth) != len(queries) or truth.k < p.k:
        raise io.FormatError("truth does not match the queries or holds fewer than k results")
    r = run_benchmark(queries, fwd, idx, g, p, truth, repetitions=a.repetitions)
    print("single-threaded latency run")
    for key, value in r.row().items():
        print(f"{key}={value}")


# --- parser ------------------------------------------------------------------


def _add_build_flags(sp, required: bool):
    sp.add_argument("--lambda", dest="lam", type=int, required=required, default=None, help="entries kept per inverted list")
    sp.add_argument("--beta", type=int, required=required, default=None, help="blocks per full-length list")
    sp.add_argument("--alpha", type=float, required=required, default=None, help="summary mass fraction in (0,1]")


def _add_search_flags(sp):
    sp.add_argument("--k", type=int, default=10)
    sp.add_argument("--cut", type=int, default=10, help="query coordinates processed")
    sp.add_argument("--heap-factor", type=float, default=1.0)
    sp.add_argument("--obt", choices=[t.value for t in TraversalPolicy], default="arbitrary", help="block traversal order")
    sp.add_argument("--expand", action="store_true", help="refine results with the kappa-NN graph")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="seismicwave", description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed for clustering and synthetic data")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("synth", help="write a synthetic corpus and query set")
    sp.add_argument("--docs-out", required=True)
    sp.add_argument("--queries-out", required=True)
    sp.add_argument("--n-docs", type=int, default=10_000)
    sp.add_argument("--n-queries", type=int, default=500)
    sp.add_argument("--dim", type=int, default=30_000)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("build-index", help="build and serialize the inverted index")
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--out", required=True)
    _add_build_flags(sp, required=True)
    sp.set_defaults(func=cmd_build_index)

    sp = sub.add_parser("build-graph", help="build and serialize a kappa-NN graph")
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--kappa", type=int, required=True)
    how = sp.add_mutually_exclusive_group(required=True)
    how.add_argument("--exact", action="store_true")
    how.add_argument("--approx", action="store_true")
    _add_build_flags(sp, required=False)
    sp.add_argument("--cut", type=int, default=None)
    sp.add_argument("--heap-factor", type=float, default=None)
    sp.set_defaults(func=cmd_build_graph)

    sp = sub.add_parser("search", help="run queries and write results in ground-truth format")
    sp.add_argument("--index", required=True)
    sp.add_argument("--graph")
    sp.add_argument("--queries", required=True)
    sp.add_argument("--out", required=True)
    _add_search_flags(sp)
    sp.set_defaults(func=cmd_search)

    sp = sub.add_parser("ground-truth", help="exact top-k by full scan")
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--queries", required=True)
    sp.add_argument("--k", type=int, default=10)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_ground_truth)

    sp = sub.add_parser("evaluate", help="accuracy of a result file against ground truth")
    sp.add_argument("--results", required=True)
    sp.add_argument("--truth", required=True)
    sp.add_argument("--k", type=int, default=None)
    sp.add_argument("--csv", help="per-query accuracy CSV")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("benchmark", help="latency and accuracy of one configuration")
    sp.add_argument("--index", required=True)
    sp.add_argument("--graph")
    sp.add_argument("--queries", required=True)
    sp.add_argument("--truth", required=True)
    sp.add_argument("--repetitions", type=int, default=3)
    _add_search_flags(sp)
    sp.set_defaults(func=cmd_benchmark)

    sp = sub.add_parser("sweep", help="budgeted grid search; best config per accuracy cutoff")
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--queries", required=True)
    sp.add_argument("--truth", required=True)
    sp.add_argument("--budget", type=float, default=2.0, help="multiple of the forward-index size")
    sp.add_argument("--mode", default="wave", help=f"comma-separated subset of {','.join(MODES)}")
    sp.add_argument("--objective", choices=["latency", "work"], default="latency")
    sp.add_argument("--graph", choices=["exact", "approx"], default="exact", help="graph construction for knn/wave")
    sp.add_argument("--k", type=int, default=10)
    sp.add_argument("--repetitions", type=int, default=3)
    sp.add_argument("--grid", choices=["published", "desk"], default="published", help="preset for axes not given below")
    sp.add_argument("--lambda", dest="lam", help="comma-separated values")
    sp.add_argument("--beta-fraction", help="beta as fractions of lambda, comma-separated")
    sp.add_argument("--alpha")
    sp.add_argument("--kappa")
    sp.add_argument("--cut")
    sp.add_argument("--heap-factor")
    sp.add_argument("--csv", help="prefix for per-mode cutoff tables (<prefix>.<mode>.csv)")
    sp.add_argument("--all-csv", help="CSV with one row per evaluated configuration")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("breakdown", help="share of search time per processed list rank")
    sp.add_argument("--index", required=True)
    sp.add_argument("--queries", required=True)
    sp.add_argument("--cut", type=int, default=10)
    sp.add_argument("--k", type=int, default=10)
    sp.add_argument("--heap-factor", type=float, default=1.0)
    sp.add_argument("--obt", choices=[t.value for t in TraversalPolicy], default="arbitrary")
    sp.add_argument("--repetitions", type=int, default=3)
    sp.set_defaults(func=cmd_breakdown)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"seismicwave: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (io.FormatError, OSError) as exc:
        print(f"seismicwave: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        # remaining parameter checks raised by the library itself
        print(f"seismicwave: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
