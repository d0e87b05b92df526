"""Where does query time go? Share of list-processing time per list rank.

Query coordinates are processed heaviest first. The first list starts
from an empty heap, so every block passes the pruning test and it is the
most expensive one; later lists are pruned harder as the heap fills.

Run: python3 demos/list_time_breakdown.py
"""

from seismicwave.datasets import make_synthetic
from seismicwave.evaluation import breakdown_report
from seismicwave.index import BuildParams, build_forward, build_inverted
from seismicwave.search import SearchParams

docs, queries = make_synthetic(n_docs=5000, n_queries=300, seed=3)
fwd = build_forward(docs)
idx = build_inverted(fwd, BuildParams(lam=50, beta=5, alpha=0.4))

for obt in ("arbitrary", "first"):
    b = breakdown_report(queries, fwd, idx, SearchParams(k=10, cut=10, obt=obt), repetitions=3)
    bars = "\n".join(f"  rank {r}: {s:6.1%} {'#' * round(60 * s)}" for r, s in enumerate(b.shares))
    print(f"block order {obt!r} (time outside list processing: {b.overhead:.1%})\n{bars}")
