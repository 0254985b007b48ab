"""Total-power-only water-filling over the channel's eigen-directions.

This is the classic upper bound that the joint-constraint capacity
approaches as the per-antenna caps grow.
"""

from __future__ import annotations

import time

import numpy as np

from .core import (ChannelMatrix, CovarianceMatrix, PowerConstraints,
                   SolveReport, SolverKind, kkt_residual)
from .errors import DomainError


def waterfill_levels(gains: np.ndarray, p_tot: float) -> np.ndarray:
    """Optimal powers (mu - 1/g_i)_+ with the water level mu chosen so the
    powers sum to p_tot.  Exact active-set scan over sorted inverse gains."""
    gains = np.asarray(gains, dtype=float)
    if np.any(gains <= 0.0) or p_tot <= 0.0:
        raise DomainError("water-filling needs positive gains and budget")
    inv = 1.0 / gains
    order = np.argsort(inv)
    inv_sorted = inv[order]
    k_active = 1
    mu = p_tot + inv_sorted[0]
    cum = 0.0
    for k in range(1, gains.size + 1):
        cum += inv_sorted[k - 1]
        mu_k = (p_tot + cum) / k
        if k < gains.size and mu_k > inv_sorted[k]:
            continue
        k_active, mu = k, mu_k
        break
    powers = np.zeros_like(gains)
    active = order[:k_active]
    powers[active] = mu - inv[active]
    return np.maximum(powers, 0.0)


def waterfill_tp(h: ChannelMatrix, p_tot: float) -> SolveReport:
    """Capacity and covariance under the total-power constraint alone."""
    t0 = time.perf_counter()
    gains = h.sigma ** 2
    powers = waterfill_levels(gains, p_tot)
    q = (h.v * powers) @ h.v.conj().T
    capacity = float(np.sum(np.log1p(gains * powers)))
    wall = time.perf_counter() - t0
    # PAP vacuous for this baseline: residual computed against caps that
    # can never bind.
    loose = PowerConstraints(p_tot=p_tot, pap=np.full(h.n_t, p_tot + 1.0))
    return SolveReport(
        capacity_nats=capacity,
        q_opt=CovarianceMatrix(q),
        solver=SolverKind.waterfill,
        tp_active=True,
        pap_active=np.zeros(h.n_t, dtype=bool),
        kkt_residual=kkt_residual(h, loose, q),
        iterations=1,
        wall_time=wall,
        n_var=h.nu,
        objective_trace=[capacity],
    )
