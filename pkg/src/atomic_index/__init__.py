"""Learned indexes for sorted 64-bit integer tables.

A single closed-form polynomial or a small feed-forward network models the
table's key-to-rank mapping; a query is answered by predicting a rank
interval from the model's worst-case error and finishing with binary
search (classic or branch-free) inside it.
"""

from .datasets import (
    QueryWorkload,
    SortedTable,
    generate_lognormal,
    generate_uniform,
    load_table,
    load_workload,
    make_workload,
    save_table,
    save_workload,
)
from .index import AtomicIndex, Predecessor, build_index, compute_epsilon, lookup, lookup_batch, predict_interval
from .neural import NeuralModel, TrainConfig, binarize, train_nn
from .regress import PolynomialModel, fit_polynomial
from .search import branch_free_search, branchy_search

__version__ = "0.1.0"

__all__ = [
    "AtomicIndex",
    "NeuralModel",
    "PolynomialModel",
    "Predecessor",
    "QueryWorkload",
    "SortedTable",
    "TrainConfig",
    "binarize",
    "branch_free_search",
    "branchy_search",
    "build_index",
    "compute_epsilon",
    "fit_polynomial",
    "generate_lognormal",
    "generate_uniform",
    "load_table",
    "load_workload",
    "lookup",
    "lookup_batch",
    "make_workload",
    "predict_interval",
    "save_table",
    "save_workload",
    "train_nn",
    "__version__",
]
