"""Direct solver over the full Hermitian covariance: the trusted oracle.

Runs projected gradient ascent on the mutual information over the joint
constraint set, then refines through the multiplier-space finisher.  The
real n_T x n_T parameterization of a Hermitian matrix is implemented as
the encode/decode pair below; the optimizer itself works on Hermitian
matrices directly (identical mathematics, simpler gradients), with the
n_T^2 real-variable count reported for complexity accounting.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .core import (ChannelMatrix, CovarianceMatrix, PowerConstraints,
                   SolveReport, SolverKind, _reconstruct_multipliers,
                   hermitize, is_hermitian, kkt_residual, mi_value_and_grad,
                   mutual_information, pap_active_flags, tp_active_flag)
from .duals import refine_covariance
from .errors import DomainError
from .optim import OptimSettings, projected_gradient_ascent


@dataclass(frozen=True)
class RealParamX:
    """Real n x n matrix encoding a Hermitian Q: diagonal on the diagonal,
    real parts of the upper triangle above it, imaginary parts below."""

    x: np.ndarray

    @property
    def n_t(self) -> int:
        return self.x.shape[0]


def encode_hermitian(q: np.ndarray) -> RealParamX:
    q = np.asarray(q, dtype=complex)
    if not is_hermitian(q, atol=1e-6):
        raise DomainError("encoding requires a Hermitian matrix")
    q = hermitize(q)
    n = q.shape[0]
    x = np.zeros((n, n))
    iu = np.triu_indices(n, 1)
    x[np.diag_indices(n)] = np.real(np.diag(q))
    x[iu] = np.real(q[iu])
    x[iu[1], iu[0]] = np.imag(q[iu])
    return RealParamX(x=x)


def decode_hermitian(xp: RealParamX) -> np.ndarray:
    x = np.asarray(xp.x, dtype=float)
    n = x.shape[0]
    q = np.zeros((n, n), dtype=complex)
    iu = np.triu_indices(n, 1)
    q[iu] = x[iu] + 1j * x[iu[1], iu[0]]
    q = q + q.conj().T
    q[np.diag_indices(n)] = x[np.diag_indices(n)]
    return q


def default_start(h: ChannelMatrix, c: PowerConstraints) -> np.ndarray:
    """Strictly feasible scaled identity."""
    level = min(c.p_tot / h.n_t, float(np.min(c.pap)))
    return level * np.eye(h.n_t, dtype=complex)


def trace_snap(q: np.ndarray, c: PowerConstraints) -> np.ndarray:
    """Snap a converged covariance onto the exhausted-budget face.

    Roundoff-scale cap/trace overshoots are removed by congruence scaling
    (keeps the matrix PSD), then any remaining total-power deficit is
    spread over the per-antenna slack: the optimum always exhausts
    min(P_tot, sum P_i), and adding nonnegative diagonal power never
    lowers the mutual information.
    """
    p_eff = c.effective_p_tot()
    diag_q = np.real(np.diag(q))
    if np.any(diag_q > c.pap):
        scale = np.sqrt(np.minimum(1.0, c.pap / np.maximum(diag_q, 1e-300)))
        q = q * np.outer(scale, scale)
        diag_q = np.real(np.diag(q))
    tr = float(np.sum(diag_q))
    if tr > p_eff:
        q = q * (p_eff / tr)
        diag_q = np.real(np.diag(q))
        tr = p_eff
    deficit = p_eff - tr
    if deficit <= 0.0:
        return q
    slack = np.maximum(c.pap - diag_q, 0.0)
    total = float(np.sum(slack))
    if total <= 0.0:
        return q
    add = slack * min(1.0, deficit / total)
    out = q.copy()
    np.fill_diagonal(out, diag_q + add)
    return out


def finalize_report(h: ChannelMatrix, c: PowerConstraints, q: np.ndarray,
                    solver: SolverKind, n_var: int, iterations: int,
                    wall_time: float, objective_trace=None,
                    fallback: bool = False) -> SolveReport:
    q = trace_snap(q, c)
    capacity = mutual_information(h, q)
    return SolveReport(
        capacity_nats=capacity,
        q_opt=CovarianceMatrix(q),
        solver=solver,
        tp_active=tp_active_flag(q, c),
        pap_active=pap_active_flags(q, c),
        kkt_residual=kkt_residual(h, c, q),
        iterations=iterations,
        wall_time=wall_time,
        n_var=n_var,
        fallback=fallback,
        objective_trace=list(objective_trace or []),
    )


def solve_basic(h: ChannelMatrix, c: PowerConstraints,
                s: OptimSettings | None = None, q0=None) -> SolveReport:
    """Solve the capacity problem over the full covariance parameterization."""
    if c.n_t != h.n_t:
        raise DomainError(
            f"constraints are for {c.n_t} antennas, channel has {h.n_t}"
        )
    s = s or OptimSettings()
    t0 = time.perf_counter()
    start = default_start(h, c) if q0 is None else hermitize(
        q0.entries if isinstance(q0, CovarianceMatrix) else q0
    )
    step0 = 1.0 / float(np.max(h.sigma)) ** 2
    q_pg, trace = projected_gradient_ascent(
        lambda q: mi_value_and_grad(h, q), start, c, s, step0=step0
    )

    _, _, lam0, big_lam0, _, _ = _reconstruct_multipliers(
        h, c, q_pg.entries, active_tol=1e-6
    )
    dr = refine_covariance(h, c, lam0, big_lam0)
    refined = dr.residual <= 1e-6
    q_final = dr.q if refined else q_pg.entries
    wall = time.perf_counter() - t0
    report = finalize_report(
        h, c, q_final,
        solver=SolverKind.basic,
        n_var=h.n_t ** 2,
        iterations=(len(trace) - 1) + dr.iterations,
        wall_time=wall,
        objective_trace=trace,
    )
    if refined:
        report.d_check = dr.d_check
    return report
