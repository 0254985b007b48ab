"""Request/response models for the capacity service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

SolverName = Literal["auto", "basic", "fullrank", "singular",
                     "unitrank", "closedform", "waterfill"]


class ChannelPayload(BaseModel):
    n_r: int = Field(ge=1)
    n_t: int = Field(ge=1)
    re: list[list[float]]
    im: list[list[float]] | None = None


class MatrixPayload(BaseModel):
    re: list[list[float]]
    im: list[list[float]]


class CapacityRequest(BaseModel):
    channel: ChannelPayload
    p_tot: float = Field(gt=0)
    pap: list[float]
    solver: SolverName = "auto"
    units: Literal["bits", "nats"] = "bits"


class CapacityResponse(BaseModel):
    capacity: float
    units: str
    solver: str
    rank_h: int
    rank_q: int
    tp_active: bool
    pap_active: list[bool]
    n_var: int
    iterations: int
    kkt_residual: float
    q: MatrixPayload


class SweepRequest(BaseModel):
    channel: ChannelPayload
    sweep: Literal["ptot", "pap"]
    start: float = Field(gt=0)
    stop: float = Field(gt=0)
    count: int = Field(ge=1)
    p_tot: float | None = None
    pap: list[float] | None = None
    with_waterfill: bool = False


class SweepRowModel(BaseModel):
    x: float
    capacity: float
    rank_q: int
    tp_active: bool
    waterfill_capacity: float | None = None


class SweepResponse(BaseModel):
    rows: list[SweepRowModel]


class BenchmarkRequest(BaseModel):
    sizes: list[int] = Field(min_length=1)
    trials: int = Field(ge=1, default=10)
    seed: int = 0
    workers: int = Field(ge=1, default=1)


class BenchmarkRowModel(BaseModel):
    n: int
    solver: str
    mean_time: float
    median_time: float
    n_var: int
    mean_capacity_gap_vs_basic: float


class BenchmarkResponse(BaseModel):
    rows: list[BenchmarkRowModel]


class ValidateRequest(BaseModel):
    seed: int = 0


class CriterionModel(BaseModel):
    name: str
    passed: bool
    detail: str


class ValidateResponse(BaseModel):
    all_passed: bool
    criteria: list[CriterionModel]
