"""FastAPI service wrapping the capacity solvers.

The handler functions are plain request-model -> response-model calls so
the CLI can invoke them in-process; the FastAPI routes add the HTTP
surface on top.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..core import ChannelMatrix, PowerConstraints
from ..acceptance import run_all
from ..channelio import channel_from_dict
from ..dispatch import solve
from ..errors import DomainError, InputError, MimoCapError, RoutingError
from ..experiments import benchmark, sweep
from .schemas import (BenchmarkRequest, BenchmarkResponse, BenchmarkRowModel,
                      CapacityRequest, CapacityResponse, ChannelPayload,
                      CriterionModel, MatrixPayload, SweepRequest,
                      SweepResponse, SweepRowModel, ValidateRequest,
                      ValidateResponse)

LN2 = float(np.log(2.0))


def _channel(payload: ChannelPayload) -> ChannelMatrix:
    return channel_from_dict(payload.model_dump())


def handle_capacity(req: CapacityRequest) -> CapacityResponse:
    h = _channel(req.channel)
    if len(req.pap) != h.n_t:
        raise InputError(
            f"pap has {len(req.pap)} entries, channel has {h.n_t} antennas"
        )
    c = PowerConstraints(req.p_tot, np.asarray(req.pap, dtype=float))
    rep = solve(h, c, req.solver)
    capacity = rep.capacity_nats / LN2 if req.units == "bits" else rep.capacity_nats
    q = rep.q_opt.entries
    return CapacityResponse(
        capacity=capacity,
        units=req.units,
        solver=rep.solver.value,
        rank_h=h.nu,
        rank_q=rep.q_opt.rank(),
        tp_active=rep.tp_active,
        pap_active=[bool(b) for b in rep.pap_active],
        n_var=rep.n_var,
        iterations=rep.iterations,
        kkt_residual=rep.kkt_residual,
        q=MatrixPayload(re=q.real.tolist(), im=q.imag.tolist()),
    )


def handle_sweep(req: SweepRequest) -> SweepResponse:
    h = _channel(req.channel)
    grid = np.linspace(req.start, req.stop, req.count)
    if req.sweep == "ptot":
        if req.pap is None:
            raise InputError("ptot sweep needs fixed per-antenna caps")
        if len(req.pap) != h.n_t:
            raise InputError(
                f"pap has {len(req.pap)} entries, channel has {h.n_t} antennas"
            )
        rows = sweep(h, "ptot", grid, pap=req.pap,
                     with_waterfill=req.with_waterfill)
    else:
        if req.p_tot is None:
            raise InputError("pap sweep needs a fixed total power")
        rows = sweep(h, "pap", grid, p_tot=req.p_tot,
                     with_waterfill=req.with_waterfill)
    return SweepResponse(rows=[
        SweepRowModel(
            x=r.x, capacity=r.capacity_bits, rank_q=r.rank_q,
            tp_active=r.tp_active, waterfill_capacity=r.waterfill_capacity_bits,
        )
        for r in rows
    ])


def handle_benchmark(req: BenchmarkRequest) -> BenchmarkResponse:
    rows = benchmark(req.sizes, req.trials, req.seed, workers=req.workers)
    return BenchmarkResponse(rows=[
        BenchmarkRowModel(
            n=r.n, solver=r.solver, mean_time=r.mean_time,
            median_time=r.median_time, n_var=r.n_var,
            mean_capacity_gap_vs_basic=r.mean_capacity_gap_vs_basic,
        )
        for r in rows
    ])


def handle_validate(req: ValidateRequest) -> ValidateResponse:
    results = run_all(seed=req.seed)
    return ValidateResponse(
        all_passed=all(r.passed for r in results),
        criteria=[CriterionModel(name=r.name, passed=r.passed, detail=r.detail)
                  for r in results],
    )


app = FastAPI(
    title="mimocap",
    description="MIMO capacity under joint total and per-antenna power constraints",
    version="0.1.0",
)


@app.exception_handler(MimoCapError)
async def mimocap_error_handler(request: Request, exc: MimoCapError):
    status = 400 if isinstance(exc, (InputError, DomainError, RoutingError)) else 500
    return JSONResponse(status_code=status, content={"detail": str(exc)})


@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/capacity", response_model=CapacityResponse)
def capacity(req: CapacityRequest):
    return handle_capacity(req)


@app.post("/sweep", response_model=SweepResponse)
def sweep_endpoint(req: SweepRequest):
    return handle_sweep(req)


@app.post("/benchmark", response_model=BenchmarkResponse)
def benchmark_endpoint(req: BenchmarkRequest):
    return handle_benchmark(req)


@app.post("/validate", response_model=ValidateResponse)
def validate(req: ValidateRequest):
    return handle_validate(req)
