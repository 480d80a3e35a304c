"""Training-cost, interval-reduction, and query-latency measurements.

Reports one row per (dataset, model, search kind) cell: training time per
element, empirical reduction factor, and query time per element, plus the
epsilon bound behind the intervals. Timed sections run single-threaded on
a monotonic clock, take the median across repeats, and are preceded by one
untimed warm-up pass. Totals shorter than 100x the measured clock
granularity are flagged unreliable rather than trusted.
"""

from __future__ import annotations

import csv
import functools
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .datasets import QueryWorkload, SortedTable
from .index import DEFAULT_CHUNK, AtomicIndex, build_index, lookup_batch, predict_interval_many
from .neural import TrainConfig, train_nn
from .regress import fit_polynomial

MODEL_NAMES = ("L", "Q", "C", "NN0", "NN1", "NN2")
PLAIN_MODEL = "plain"
SEARCH_NAMES = ("branchy", "branch_free")

CSV_HEADER = [
    "dataset", "model", "search", "n", "epsilon",
    "train_s_per_elem", "rf_percent", "query_s_per_elem", "repeats", "flags",
]

FLAG_TIMER = "timer-resolution"
_GRANULARITY_FACTOR = 100


@dataclass(frozen=True)
class BenchReport:
    dataset: str
    model: str
    search: str
    n: int
    epsilon: int
    train_s_per_elem: float
    rf_percent: float
    query_s_per_elem: float
    repeats: int
    flags: str = ""


@dataclass(frozen=True)
class QueryTiming:
    seconds_per_query: float
    checksum: int
    flags: str = ""


@dataclass(frozen=True)
class SuiteConfig:
    query_repeats: int = 5
    train_repeats: int = 3
    nn_train_repeats: int = 1  # NN fits are minutes long; refitting buys little
    nn_config: TrainConfig = field(default_factory=TrainConfig)
    chunk: int = DEFAULT_CHUNK


@functools.lru_cache(maxsize=1)
def clock_granularity() -> float:
    """Smallest positive step the monotonic clock can resolve."""
    smallest = math.inf
    for _ in range(2000):
        a = time.perf_counter()
        b = time.perf_counter()
        if b > a:
            smallest = min(smallest, b - a)
    return smallest


def reduction_factor(index: AtomicIndex, workload: QueryWorkload) -> float:
    """Mean percentage of the table excluded by the predicted intervals.

    Uses post-repair interval bounds, so the cost of widening an interval
    to keep a lookup correct lowers the reported number.
    """
    if workload.size == 0:
        raise ValueError("workload must not be empty")
    lo, hi, _ = predict_interval_many(index, workload.queries)
    lengths = (hi - lo + 1).astype(np.float64)
    return float(100.0 * (1.0 - lengths / index.n).mean())


def time_training(
    fitter: Callable[[SortedTable], object], table: SortedTable, repeats: int = 3
) -> Tuple[float, object]:
    """Median wall-clock fit time divided by table size, plus a fitted model."""
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    model = None
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        model = fitter(table)
        times.append(time.perf_counter() - t0)
    return float(np.median(times)) / table.n, model


def time_queries(
    index: AtomicIndex,
    workload: QueryWorkload,
    repeats: int = 5,
    chunk: int = DEFAULT_CHUNK,
) -> QueryTiming:
    """Median per-query wall-clock time over full passes of the workload.

    Every pass folds its result ranks into a checksum, which both keeps
    the work observable and lets callers assert run-to-run determinism.
    """
    if workload.size == 0:
        raise ValueError("workload must not be empty")
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    queries = workload.queries

    ranks = lookup_batch(index, queries, chunk=chunk)  # warm-up, untimed
    checksum = int(np.add.reduce((ranks + 1).astype(np.uint64)))

    totals = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        ranks = lookup_batch(index, queries, chunk=chunk)
        totals.append(time.perf_counter() - t0)
        pass_sum = int(np.add.reduce((ranks + 1).astype(np.uint64)))
        if pass_sum != checksum:
            raise RuntimeError("lookup results changed between timing passes")
    median_total = float(np.median(totals))
    flags = FLAG_TIMER if median_total < _GRANULARITY_FACTOR * clock_granularity() else ""
    return QueryTiming(median_total / workload.size, checksum, flags)


def harness_overhead(repeats: int = 5) -> float:
    """Median measured time of a no-op through the same timing pattern."""
    totals = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        totals.append(time.perf_counter() - t0)
    return float(np.median(totals))


def model_fitter(name: str, nn_config: TrainConfig) -> Optional[Callable[[SortedTable], object]]:
    """Fitter callable for a model name; None for the plain-search row."""
    if name == "L":
        return lambda table: fit_polynomial(table, 1)
    if name == "Q":
        return lambda table: fit_polynomial(table, 2)
    if name == "C":
        return lambda table: fit_polynomial(table, 3)
    if name in ("NN0", "NN1", "NN2"):
        hidden = int(name[2])
        return lambda table: train_nn(table, hidden, nn_config)
    if name == PLAIN_MODEL:
        return None
    raise ValueError(f"unknown model name {name!r}")


def run_suite(
    datasets: Sequence[Tuple[str, SortedTable, QueryWorkload]],
    models: Sequence[str],
    search_kinds: Sequence[str],
    config: Optional[SuiteConfig] = None,
) -> List[BenchReport]:
    """Cross-product benchmark: every dataset x model x search kind.

    A failing cell (for example a diverged NN fit) becomes an error row
    with NaN measurements instead of aborting the suite. Row order is
    deterministic: datasets, then models, then search kinds, as given.
    """
    cfg = config or SuiteConfig()
    for kind in search_kinds:
        if kind not in SEARCH_NAMES:
            raise ValueError(f"unknown search kind {kind!r}")
    reports: List[BenchReport] = []
    for ds_name, table, workload in datasets:
        for model_name in models:
            fitter = model_fitter(model_name, cfg.nn_config)
            error = None
            train_per_elem = float("nan")
            model = None
            if fitter is not None:
                repeats = cfg.nn_train_repeats if model_name.startswith("NN") else cfg.train_repeats
                try:
                    train_per_elem, model = time_training(fitter, table, repeats)
                except Exception as exc:  # noqa: BLE001  error rows, not aborts
                    error = f"error:{type(exc).__name__}"
            for kind in search_kinds:
                if error is not None:
                    reports.append(BenchReport(
                        dataset=ds_name, model=model_name, search=kind, n=table.n,
                        epsilon=-1, train_s_per_elem=float("nan"),
                        rf_percent=float("nan"), query_s_per_elem=float("nan"),
                        repeats=0, flags=error,
                    ))
                    continue
                idx = build_index(table, model, search_kind=kind)
                rf = reduction_factor(idx, workload)
                timing = time_queries(idx, workload, cfg.query_repeats, cfg.chunk)
                reports.append(BenchReport(
                    dataset=ds_name, model=model_name, search=kind, n=table.n,
                    epsilon=idx.epsilon, train_s_per_elem=train_per_elem,
                    rf_percent=rf, query_s_per_elem=timing.seconds_per_query,
                    repeats=cfg.query_repeats, flags=timing.flags,
                ))
    return reports


def write_csv(reports: Sequence[BenchReport], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in reports:
            writer.writerow([
                r.dataset, r.model, r.search, r.n, r.epsilon,
                repr(r.train_s_per_elem), repr(r.rf_percent),
                repr(r.query_s_per_elem), r.repeats, r.flags,
            ])


def read_csv(path) -> List[BenchReport]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != CSV_HEADER:
        raise ValueError("unrecognized report header")
    out = []
    for row in rows[1:]:
        out.append(BenchReport(
            dataset=row[0], model=row[1], search=row[2], n=int(row[3]),
            epsilon=int(row[4]), train_s_per_elem=float(row[5]),
            rf_percent=float(row[6]), query_s_per_elem=float(row[7]),
            repeats=int(row[8]), flags=row[9],
        ))
    return out


def format_table(reports: Sequence[BenchReport]) -> str:
    """Fixed-width human-readable rendering of report rows."""
    lines = [f"{'dataset':<10} {'model':<6} {'search':<12} {'epsilon':>9} "
             f"{'TT (s/elem)':>12} {'RF (%)':>8} {'query (s/elem)':>15} flags"]
    for r in reports:
        lines.append(
            f"{r.dataset:<10} {r.model:<6} {r.search:<12} {r.epsilon:>9} "
            f"{r.train_s_per_elem:>12.3e} {r.rf_percent:>8.2f} "
            f"{r.query_s_per_elem:>15.3e} {r.flags}"
        )
    return "\n".join(lines)
