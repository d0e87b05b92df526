"""Sweep the configuration grid under a memory budget and compare the four variants.

For every accuracy cutoff from 90% to 99% the table shows the cheapest
configuration that reaches it ("-" when none does within the budget).
Cost is deterministic work per query (blocks evaluated plus documents
scored), so the table is the same on any machine.

Run: python3 demos/tradeoff_sweep.py      (a few minutes)
"""

from seismicwave.datasets import make_synthetic
from seismicwave.evaluation import Grid, MODES, format_table, ground_truth, sweep
from seismicwave.index import build_forward

docs, queries = make_synthetic(n_docs=5000, n_queries=200, seed=2)
fwd = build_forward(docs)
truth = ground_truth(queries, fwd, 10)

grid = Grid(lam=(30, 50), beta_fractions=(0.1,), alpha=(0.4, 0.5), kappa=(10, 20),
            cut=(2, 3, 4, 6, 8, 10), heap_factor=(0.8, 0.9, 1.0))

cache: dict = {}  # indexes are shared between modes
results = [sweep(fwd, queries, truth, grid=grid, budget=2.0, mode=m, objective="work", indexes=cache) for m in MODES]
print(format_table(results))

for res in results:
    best = res.best(0.95)
    if best is not None:
        print(f"{res.mode:>8}: {best.mean_work:6.1f} work/query at accuracy {best.accuracy:.3f} "
              f"(lambda={best.build.lam}, cut={best.search.cut}, heap_factor={best.search.heap_factor}, kappa={best.kappa})")
