"""Exact solver for rank-one channels (MISO included).

With H = g * u v^H the capacity-achieving covariance is an outer product
q q^H whose entry magnitudes follow a water-filling-like cap rule
|q_i|^2 = min(alpha |v_i|^2, P_i), with alpha found by an exact
breakpoint scan, and phases aligned with v so the inner product |v^H q|
is maximized.
"""

from __future__ import annotations

import time

import numpy as np

from .core import (ChannelMatrix, CovarianceMatrix, PowerConstraints,
                   SolveReport, SolverKind, kkt_residual, pap_active_flags)
from .errors import DomainError, InputError

# Sign applied to the phase copied from v; flipping it (test hook) breaks
# the alignment on complex channels and must be caught by the oracle
# cross-checks.
PHASE_SIGN = 1.0


def calculate_alpha(v: np.ndarray, pap: np.ndarray, p_tot: float) -> float:
    """Solve sum_i min(alpha |v_i|^2, P_i) = p_tot by breakpoint scan.

    Returns the unique nonnegative root; when p_tot exceeds the largest
    attainable left side (only possible when some v_i = 0) returns inf,
    meaning every reachable antenna is capped.
    """
    v = np.asarray(v, dtype=complex).ravel()
    pap = np.asarray(pap, dtype=float).ravel()
    if v.size != pap.size:
        raise InputError("v and pap must have matching length")
    if abs(np.linalg.norm(v) - 1.0) > 1e-8:
        raise InputError("v must be a unit vector")
    if p_tot <= 0.0:
        raise InputError("p_tot must be positive")
    attainable = float(np.sum(pap[np.abs(v) > 0.0]))
    if p_tot > attainable + 1e-12 * max(1.0, attainable):
        raise DomainError(
            f"budget {p_tot} exceeds the attainable per-antenna sum {attainable}"
        )
    p_tot = min(p_tot, attainable)

    w2 = np.abs(v) ** 2
    with np.errstate(divide="ignore"):
        rho = np.where(w2 > 0.0, pap / np.where(w2 > 0, w2, 1.0), np.inf)
    order = np.argsort(rho, kind="stable")
    consumed = 0.0
    tail_weight = float(np.sum(w2))
    for idx in order:
        if tail_weight <= 0.0:
            break
        alpha = (p_tot - consumed) / tail_weight
        # tolerance absorbs roundoff when the budget hits a breakpoint exactly
        if alpha <= rho[idx] * (1.0 + 1e-12):
            return float(alpha)
        consumed += pap[idx]
        tail_weight -= w2[idx]
    return float("inf")


def unitrank_allocation(v: np.ndarray, pap: np.ndarray,
                        p_tot: float) -> tuple[float, np.ndarray]:
    """Entry magnitudes and phases of the optimal rank-one factor q."""
    v = np.asarray(v, dtype=complex).ravel()
    pap = np.asarray(pap, dtype=float).ravel()
    w2 = np.abs(v) ** 2
    p_reach = min(p_tot, float(np.sum(pap[w2 > 0.0])))
    alpha = calculate_alpha(v, pap, p_reach)
    if np.isinf(alpha):
        mags2 = np.where(w2 > 0.0, pap, 0.0)
    else:
        mags2 = np.minimum(alpha * w2, pap)
        mags2[w2 == 0.0] = 0.0
    phases = np.where(np.abs(v) > 0.0, np.angle(v), 0.0)
    q_vec = np.sqrt(mags2) * np.exp(1j * PHASE_SIGN * phases)
    return alpha, q_vec


def solve_unitrank(h: ChannelMatrix, c: PowerConstraints) -> SolveReport:
    """Exact rank-one capacity via the breakpoint scan."""
    if h.nu != 1:
        raise DomainError(f"unit-rank solver needs rank 1, channel has rank {h.nu}")
    t0 = time.perf_counter()
    v = h.v[:, 0]
    gain = float(h.sigma[0])
    p_eff = min(c.effective_p_tot(),
                float(np.sum(c.pap[np.abs(v) > 0.0])))
    alpha, q_vec = unitrank_allocation(v, c.pap, p_eff)
    q = np.outer(q_vec, q_vec.conj())
    capacity = float(np.log1p(gain**2 * np.sum(np.abs(v) * np.abs(q_vec)) ** 2))
    wall = time.perf_counter() - t0
    return SolveReport(
        capacity_nats=capacity,
        q_opt=CovarianceMatrix(q),
        solver=SolverKind.unitrank,
        tp_active=p_eff >= c.p_tot - 1e-9 * max(1.0, c.p_tot),
        pap_active=pap_active_flags(q, c),
        kkt_residual=kkt_residual(h, c, q),
        iterations=1,
        wall_time=wall,
        n_var=2 * (h.n_t - 1) + h.n_t,
        objective_trace=[capacity],
    )
