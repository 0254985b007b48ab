"""Sweep and benchmark experiments behind the service endpoints and CLI."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from statistics import mean, median

import numpy as np

from .core import ChannelMatrix, PowerConstraints
from .basic import solve_basic
from .channelio import random_channel
from .dispatch import SolveMode, solve
from .errors import InputError
from .optim import OptimSettings
from .waterfill import waterfill_tp

LN2 = float(np.log(2.0))


@dataclass
class SweepRow:
    x: float
    capacity_bits: float
    rank_q: int
    tp_active: bool
    waterfill_capacity_bits: float | None = None


def sweep(h: ChannelMatrix, kind: str, grid, p_tot: float | None = None,
          pap=None, with_waterfill: bool = False,
          s: OptimSettings | None = None) -> list[SweepRow]:
    """Capacity versus total power ('ptot') or a uniform per-antenna cap ('pap')."""
    rows = []
    for x in grid:
        x = float(x)
        if kind == "ptot":
            if pap is None:
                raise InputError("ptot sweep needs fixed per-antenna caps")
            c = PowerConstraints(x, np.asarray(pap, dtype=float))
        elif kind == "pap":
            if p_tot is None:
                raise InputError("pap sweep needs a fixed total power")
            c = PowerConstraints(p_tot, np.full(h.n_t, x))
        else:
            raise InputError(f"unknown sweep kind {kind!r}")
        rep = solve(h, c, SolveMode.auto, s)
        wf = None
        if with_waterfill:
            wf = waterfill_tp(h, c.p_tot).capacity_nats / LN2
        rows.append(SweepRow(
            x=x,
            capacity_bits=rep.capacity_nats / LN2,
            rank_q=rep.q_opt.rank(),
            tp_active=rep.tp_active,
            waterfill_capacity_bits=wf,
        ))
    return rows


@dataclass
class BenchmarkRow:
    n: int
    solver: str
    mean_time: float
    median_time: float
    n_var: int
    mean_capacity_gap_vs_basic: float


def benchmark_constraints(n: int) -> PowerConstraints:
    """One strong antenna, the rest tightly capped; unit total budget."""
    pap = np.full(n, 0.1)
    pap[0] = 1.0
    return PowerConstraints(1.0, pap)


def benchmark(sizes, trials: int, seed: int, workers: int = 1,
              s: OptimSettings | None = None) -> list[BenchmarkRow]:
    """Timing comparison of the direct oracle against the auto-routed
    reduced solver on square iid complex Gaussian channels."""
    sizes = [int(n) for n in sizes]
    if trials < 1 or any(n < 1 for n in sizes):
        raise InputError("benchmark needs trials >= 1 and positive sizes")
    rng = np.random.default_rng(seed)
    rows: list[BenchmarkRow] = []
    for n in sizes:
        channels = [random_channel(n, n, rng) for _ in range(trials)]
        c = benchmark_constraints(n)

        def one_trial(h):
            rb = solve_basic(h, c, s)
            rr = solve(h, c, SolveMode.auto, s)
            return rb, rr

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(one_trial, channels))
        else:
            results = [one_trial(h) for h in channels]

        basic_times = [rb.wall_time for rb, _ in results]
        reduced_times = [rr.wall_time for _, rr in results]
        gaps = [abs(rb.capacity_nats - rr.capacity_nats) for rb, rr in results]
        route_names = [rr.solver.value for _, rr in results]
        route = max(set(route_names), key=route_names.count)
        n_var_reduced = results[0][1].n_var
        rows.append(BenchmarkRow(
            n=n, solver="basic",
            mean_time=mean(basic_times), median_time=median(basic_times),
            n_var=n * n, mean_capacity_gap_vs_basic=0.0,
        ))
        rows.append(BenchmarkRow(
            n=n, solver=route,
            mean_time=mean(reduced_times), median_time=median(reduced_times),
            n_var=n_var_reduced, mean_capacity_gap_vs_basic=mean(gaps),
        ))
    return rows


def loglog_slope(ns, times) -> float:
    """Least-squares slope of log(time) against log(n)."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(times, dtype=float))
    x = x - x.mean()
    return float(np.dot(x, y - y.mean()) / np.dot(x, x))
