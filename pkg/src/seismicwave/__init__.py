"""Approximate maximum inner product search over learned sparse embeddings.

Block-clustered, summary-gated inverted index search with ordered block
traversal and kappa-NN graph refinement, plus exact oracles and an
evaluation harness.
"""

from .core import ScoredHeap, SparseVector, dot, heap_insert, query_coordinates
from .evaluation import (
    Grid,
    RunReport,
    SweepResult,
    accuracy,
    breakdown_report,
    exact_topk,
    ground_truth,
    run_benchmark,
    sweep,
)
from .graph import (
    KnnGraph,
    build_knn_approx,
    build_knn_exact,
    graph_read,
    graph_write,
    refine_with_knn,
    search,
)
from .index import (
    BuildParams,
    ForwardIndex,
    InvertedIndex,
    PostingBlock,
    build_forward,
    build_inverted,
    cluster_list,
    index_size_bytes,
    summarize,
)
from .io import (
    FormatError,
    GroundTruth,
    index_read,
    index_write,
    read_csr,
    read_ground_truth,
    write_csr,
    write_ground_truth,
)
from .search import SearchParams, SearchStats, TraversalPolicy, search_seismic, summary_scores, traversal_order

__version__ = "0.1.0"
