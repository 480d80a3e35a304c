"""HTTP service holding tables, workloads, and built indexes in memory.

Built artifacts are immutable, so concurrent lookups against a stored
index are safe; the registry itself is guarded by a lock. Training and
benchmarking run synchronously inside the request.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

from fastapi import FastAPI, HTTPException, Query

from .. import __version__
from ..bench import SuiteConfig, model_fitter, reduction_factor, run_suite, time_training
from ..datasets import (
    QueryWorkload,
    SortedTable,
    TableFileError,
    generate_lognormal,
    generate_uniform,
    load_table,
    lognormal_sampler,
    make_workload,
    uniform_sampler,
)
from ..index import AtomicIndex, build_index, lookup
from ..neural import DivergenceError, TrainConfig
from . import schemas


@dataclass
class Registry:
    lock: threading.Lock = field(default_factory=threading.Lock)
    tables: Dict[int, Tuple[str, SortedTable]] = field(default_factory=dict)
    workloads: Dict[int, Tuple[int, QueryWorkload]] = field(default_factory=dict)
    indexes: Dict[int, Tuple[int, AtomicIndex, float]] = field(default_factory=dict)
    next_id: int = 1

    def allocate(self) -> int:
        with self.lock:
            out = self.next_id
            self.next_id += 1
            return out


def _train_config(overrides: Optional[schemas.TrainOverrides]) -> TrainConfig:
    if overrides is None:
        return TrainConfig()
    return TrainConfig(
        learning_rate=overrides.learning_rate,
        momentum=overrides.momentum,
        batch_size=overrides.batch_size,
        epochs=overrides.epochs,
        stop_tolerance=overrides.stop_tolerance,
        seed=overrides.seed,
    )


def _none_if_nan(value: float) -> Optional[float]:
    return None if math.isnan(value) else value


def create_app() -> FastAPI:
    app = FastAPI(title="atomic-index", version=__version__)
    registry = Registry()

    def get_table(table_id: int) -> Tuple[str, SortedTable]:
        with registry.lock:
            if table_id not in registry.tables:
                raise HTTPException(status_code=404, detail=f"no table {table_id}")
            return registry.tables[table_id]

    def get_workload(workload_id: int) -> Tuple[int, QueryWorkload]:
        with registry.lock:
            if workload_id not in registry.workloads:
                raise HTTPException(status_code=404, detail=f"no workload {workload_id}")
            return registry.workloads[workload_id]

    def get_index(index_id: int) -> Tuple[int, AtomicIndex, float]:
        with registry.lock:
            if index_id not in registry.indexes:
                raise HTTPException(status_code=404, detail=f"no index {index_id}")
            return registry.indexes[index_id]

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/tables", response_model=schemas.TableInfo)
    def create_table(req: schemas.TableCreateRequest):
        try:
            if req.source == "file":
                if not req.path:
                    raise HTTPException(status_code=422, detail="file source needs a path")
                table = load_table(req.path)
                name = req.path
            else:
                if req.n is None:
                    raise HTTPException(status_code=422, detail="synthetic source needs n")
                if req.source == "uniform":
                    table = generate_uniform(req.n, req.seed)
                    name = "uni"
                else:
                    table = generate_lognormal(req.n, req.seed, scale=req.scale)
                    name = "logn"
        except (TableFileError, FileNotFoundError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        table_id = registry.allocate()
        with registry.lock:
            registry.tables[table_id] = (name, table)
        return schemas.TableInfo(
            table_id=table_id, n=table.n, min_key=table.min_key, max_key=table.max_key
        )

    @app.get("/tables/{table_id}", response_model=schemas.TableInfo)
    def table_info(table_id: int):
        _, table = get_table(table_id)
        return schemas.TableInfo(
            table_id=table_id, n=table.n, min_key=table.min_key, max_key=table.max_key
        )

    @app.post("/workloads", response_model=schemas.WorkloadInfo)
    def create_workload(req: schemas.WorkloadCreateRequest):
        _, table = get_table(req.table_id)
        sampler = None
        if req.absent_dist == "uniform":
            sampler = uniform_sampler
        elif req.absent_dist == "lognormal":
            sampler = lognormal_sampler(req.scale)
        workload = make_workload(table, req.seed, absent_sampler=sampler)
        workload_id = registry.allocate()
        with registry.lock:
            registry.workloads[workload_id] = (req.table_id, workload)
        return schemas.WorkloadInfo(
            workload_id=workload_id, table_id=req.table_id,
            size=workload.size, member_count=workload.member_count,
        )

    @app.post("/indexes", response_model=schemas.IndexInfo)
    def create_index(req: schemas.IndexCreateRequest):
        _, table = get_table(req.table_id)
        fitter = model_fitter(req.model, _train_config(req.train))
        try:
            per_elem, model = time_training(fitter, table, repeats=1)
        except DivergenceError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        index = build_index(table, model, search_kind=req.search)
        index_id = registry.allocate()
        train_seconds = per_elem * table.n
        with registry.lock:
            registry.indexes[index_id] = (req.table_id, index, train_seconds)
        return schemas.IndexInfo(
            index_id=index_id, table_id=req.table_id, model=req.model,
            search=req.search, epsilon=index.epsilon,
            train_seconds=train_seconds, train_s_per_elem=per_elem,
        )

    @app.get("/indexes/{index_id}", response_model=schemas.IndexInfo)
    def index_info(index_id: int):
        table_id, index, train_seconds = get_index(index_id)
        return schemas.IndexInfo(
            index_id=index_id, table_id=table_id, model=index.model.name,
            search=index.search_kind, epsilon=index.epsilon,
            train_seconds=train_seconds, train_s_per_elem=train_seconds / index.n,
        )

    @app.get("/indexes/{index_id}/lookup", response_model=schemas.LookupResponse)
    def lookup_key(index_id: int, key: int = Query(ge=0, le=2**64 - 1)):
        _, index, _ = get_index(index_id)
        result = lookup(index, key)
        if result is None:
            return schemas.LookupResponse(key=key, found=False)
        return schemas.LookupResponse(key=key, found=True, rank=result.rank, value=result.value)

    @app.post("/indexes/{index_id}/rf", response_model=schemas.ReductionFactorResponse)
    def index_rf(index_id: int, req: schemas.ReductionFactorRequest):
        table_id, index, _ = get_index(index_id)
        wl_table_id, workload = get_workload(req.workload_id)
        if wl_table_id != table_id:
            raise HTTPException(status_code=400, detail="workload belongs to another table")
        return schemas.ReductionFactorResponse(
            index_id=index_id, workload_id=req.workload_id,
            rf_percent=reduction_factor(index, workload),
        )

    @app.post("/bench", response_model=schemas.BenchResponse)
    def bench(req: schemas.BenchRequest):
        datasets = []
        for table_id in req.table_ids:
            name, table = get_table(table_id)
            workload = make_workload(table, req.workload_seed)
            datasets.append((f"{name}#{table_id}", table, workload))
        config = SuiteConfig(query_repeats=req.repeats, nn_config=_train_config(req.train))
        try:
            reports = run_suite(datasets, req.models, req.search_kinds, config)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        rows = [
            schemas.BenchRow(
                dataset=r.dataset, model=r.model, search=r.search, n=r.n,
                epsilon=r.epsilon, train_s_per_elem=_none_if_nan(r.train_s_per_elem),
                rf_percent=_none_if_nan(r.rf_percent),
                query_s_per_elem=_none_if_nan(r.query_s_per_elem),
                repeats=r.repeats, flags=r.flags,
            )
            for r in reports
        ]
        return schemas.BenchResponse(rows=rows)

    return app
