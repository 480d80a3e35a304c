"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import List, Literal, Optional

from pydantic import BaseModel, Field

ModelName = Literal["L", "Q", "C", "NN0", "NN1", "NN2"]
SearchKind = Literal["branchy", "branch_free"]


class HealthResponse(BaseModel):
    status: str
    version: str


class TableCreateRequest(BaseModel):
    source: Literal["uniform", "lognormal", "file"]
    n: Optional[int] = Field(default=None, ge=2)
    seed: int = 1
    scale: float = Field(default=1e9, gt=0)
    path: Optional[str] = None


class TableInfo(BaseModel):
    table_id: int
    n: int
    min_key: int
    max_key: int


class WorkloadCreateRequest(BaseModel):
    table_id: int
    seed: int = 1
    absent_dist: Literal["universe", "uniform", "lognormal"] = "universe"
    scale: float = Field(default=1e9, gt=0)


class WorkloadInfo(BaseModel):
    workload_id: int
    table_id: int
    size: int
    member_count: int


class TrainOverrides(BaseModel):
    learning_rate: float = Field(default=0.1, gt=0)
    momentum: float = Field(default=0.9, ge=0, lt=1)
    batch_size: int = Field(default=64, ge=1)
    epochs: int = Field(default=200, ge=1)
    stop_tolerance: float = Field(default=0.0, ge=0)
    seed: int = 0


class IndexCreateRequest(BaseModel):
    table_id: int
    model: ModelName
    search: SearchKind = "branch_free"
    train: Optional[TrainOverrides] = None


class IndexInfo(BaseModel):
    index_id: int
    table_id: int
    model: ModelName
    search: SearchKind
    epsilon: int
    train_seconds: float
    train_s_per_elem: float


class LookupResponse(BaseModel):
    key: int
    found: bool
    rank: Optional[int] = None
    value: Optional[int] = None


class ReductionFactorRequest(BaseModel):
    workload_id: int


class ReductionFactorResponse(BaseModel):
    index_id: int
    workload_id: int
    rf_percent: float


class BenchRequest(BaseModel):
    table_ids: List[int]
    models: List[str] = Field(default=["L", "Q", "C"])
    search_kinds: List[SearchKind] = Field(default=["branchy", "branch_free"])
    workload_seed: int = 99
    repeats: int = Field(default=5, ge=1)
    train: Optional[TrainOverrides] = None


class BenchRow(BaseModel):
    dataset: str
    model: str
    search: str
    n: int
    epsilon: int
    train_s_per_elem: Optional[float]  # None for cells whose fit failed
    rf_percent: Optional[float]
    query_s_per_elem: Optional[float]
    repeats: int
    flags: str


class BenchResponse(BaseModel):
    rows: List[BenchRow]
