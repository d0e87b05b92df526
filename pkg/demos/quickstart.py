"""Build an index over a synthetic corpus, search it, and refine with a kNN graph.

Run: python3 demos/quickstart.py
"""

from seismicwave.datasets import make_synthetic
from seismicwave.evaluation import ground_truth, run_benchmark
from seismicwave.graph import build_knn_exact
from seismicwave.index import BuildParams, build_forward, build_inverted, index_size_bytes
from seismicwave.search import SearchParams

# A small corpus with a skewed coordinate distribution, shaped like learned sparse embeddings.
docs, queries = make_synthetic(n_docs=3000, n_queries=200, dim=12_000, n_topics=80, topic_vocab=300, seed=1)
fwd = build_forward(docs)
print(f"{fwd.n} documents, {fwd.nnz / fwd.n:.0f} nonzeros each on average")

# Exact top-10 for every query, by full scan.
truth = ground_truth(queries, fwd, 10)

# Inverted lists keep the 40 heaviest postings per coordinate, in up to 4 blocks,
# each block summarized by the coordinates holding 40% of its mass.
idx = build_inverted(fwd, BuildParams(lam=40, beta=4, alpha=0.4, seed=0))
sizes = index_size_bytes(idx, fwd)
print(f"inverted index is {sizes.ratio:.2f}x the forward index")

graph = build_knn_exact(fwd, 10)

print(f"{'cut':>4} {'plain':>7} {'ordered+graph':>14} {'work plain':>11} {'work graph':>11}")
for cut in (1, 2, 4, 8):
    plain = run_benchmark(queries, fwd, idx, None, SearchParams(k=10, cut=cut), truth, repetitions=1)
    wave = run_benchmark(queries, fwd, idx, graph, SearchParams(k=10, cut=cut, obt="first", expand=True), truth, repetitions=1)
    print(f"{cut:>4} {plain.accuracy:>7.3f} {wave.accuracy:>14.3f} {plain.mean_work:>11.1f} {wave.mean_work:>11.1f}")

# Accuracy climbs with the number of query coordinates processed; the graph step
# recovers neighbours of good candidates that the pruned lists dropped.
