"""Reduced solver for full-rank channels: optimize the n_T positive
diagonal entries of the inverted multiplier matrix instead of the n_T^2
covariance parameters, plus the closed-form fast path available when the
total-power budget keeps every antenna interior.

The covariance is recovered through

    Q(Dc) = K^-1 (K Dc K - I)_+ K^-1,   K = (H^H H)^(1/2),

which is PSD for every positive diagonal Dc, so positive
semidefiniteness never has to be enforced explicitly.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .core import (ChannelMatrix, DiagonalMultiplier, PowerConstraints,
                   SolveReport, SolverKind, gramian_sqrt, hermitize)
from .basic import finalize_report, solve_basic
from .errors import DomainError, MimoCapError
from .optim import OptimSettings


def q_from_dcheck(h: ChannelMatrix, d: DiagonalMultiplier) -> np.ndarray:
    """Covariance induced by a positive diagonal multiplier inverse."""
    if not h.is_full_rank():
        raise DomainError("reduced full-rank form needs rank(H) = n_t")
    k = gramian_sqrt(h)
    f = k @ np.diag(d.d_check).astype(complex) @ k
    w, u = np.linalg.eigh(hermitize(f))
    wp = np.clip(w - 1.0, 0.0, None)
    a = hermitize((u * wp) @ u.conj().T)
    k_inv = np.linalg.inv(k)
    return hermitize(k_inv @ a @ k_inv)


@dataclass(frozen=True)
class ClosedFormDiagnostics:
    eligible: bool
    lower_bound: float
    upper_bound: float
    lower_margin: float
    upper_margin: float


def closed_form_conditions(h: ChannelMatrix,
                           c: PowerConstraints) -> ClosedFormDiagnostics:
    """Both budget inequalities that admit the uniform closed form."""
    if not h.is_full_rank():
        raise DomainError("closed form applies to full-rank channels only")
    k = gramian_sqrt(h)
    k_inv2 = np.linalg.inv(hermitize(k @ k))
    tr_kinv2 = float(np.trace(k_inv2).real)
    lam_max = float(np.linalg.eigvalsh(k_inv2)[-1])
    n = h.n_t
    lower = n * lam_max - tr_kinv2
    upper = n * float(np.min(np.real(np.diag(k_inv2)) + c.pap)) - tr_kinv2
    return ClosedFormDiagnostics(
        eligible=bool(lower <= c.p_tot <= upper),
        lower_bound=lower,
        upper_bound=upper,
        lower_margin=c.p_tot - lower,
        upper_margin=upper - c.p_tot,
    )


def solve_closed_form(h: ChannelMatrix, c: PowerConstraints) -> SolveReport:
    """Uniform-trace closed form; precondition: closed_form_conditions."""
    diag = closed_form_conditions(h, c)
    if not diag.eligible:
        raise DomainError(
            "closed-form conditions violated "
            f"(lower margin {diag.lower_margin:.3e}, upper margin {diag.upper_margin:.3e})"
        )
    t0 = time.perf_counter()
    k = gramian_sqrt(h)
    k_inv2 = np.linalg.inv(hermitize(k @ k))
    n = h.n_t
    level = (c.p_tot + float(np.trace(k_inv2).real)) / n
    q = hermitize(level * np.eye(n, dtype=complex) - k_inv2)
    wall = time.perf_counter() - t0
    return finalize_report(
        h, c, q,
        solver=SolverKind.closedform,
        n_var=n,
        iterations=1,
        wall_time=wall,
    )


def _pos_part_grad_weights(w: np.ndarray, crossing_tol: float = 1e-12):
    """Divided-difference table of (x - 1)_+ on the spectrum w; eigenvalues
    within crossing_tol of 1 are treated as inactive (subgradient choice)."""
    phi = np.clip(w - 1.0, 0.0, None)
    active = w > 1.0 + crossing_tol
    dw = w[:, None] - w[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        table = (phi[:, None] - phi[None, :]) / dw
    deriv = active.astype(float)
    same = np.abs(dw) < 1e-14 * np.maximum(1.0, np.abs(w[:, None]))
    table[same] = np.broadcast_to(deriv[:, None], table.shape)[same]
    return phi, active, table


def _fullrank_descent(h, c, s, alpha, max_outer=8, inner_iter=30):
    """Augmented Lagrangian over theta = log(dcheck): trace equality via
    multiplier + growing quadratic, diagonal caps via growing penalty.

    Budgets are sized for a warm start: the oracle polish that follows
    finishes the job, so the loop stops once the constraint mismatch is
    well below the polish's basin.
    """
    n = h.n_t
    p_eff = c.effective_p_tot()
    k = gramian_sqrt(h)
    k_inv = np.linalg.inv(k)
    k_inv2 = hermitize(k_inv @ k_inv)
    tr_kinv2 = float(np.trace(k_inv2).real)

    d0 = (p_eff + alpha * tr_kinv2) / n
    theta = np.full(n, np.log(d0))

    def pieces(theta):
        dch = np.exp(theta)
        f = hermitize(k @ np.diag(dch).astype(complex) @ k)
        w, u = np.linalg.eigh(f)
        phi = np.clip(w - 1.0, 0.0, None)
        active = w > 1.0 + 1e-12
        a = hermitize((u * phi) @ u.conj().T)
        q = hermitize(k_inv @ a @ k_inv)
        fval = float(np.sum(np.log(w[active])))
        c_tr = float(np.trace(q).real) - p_eff
        viol = np.maximum(np.real(np.diag(q)) - c.pap, 0.0)
        return dch, w, u, active, q, fval, c_tr, viol

    def merit_only(theta, mu, rho, w_pen):
        _, _, _, _, q, fval, c_tr, viol = pieces(theta)
        return (-fval + mu * c_tr + 0.5 * rho * c_tr**2
                + 0.5 * w_pen * float(np.sum(viol**2))), q, c_tr, viol

    def merit_and_grad(theta, mu, rho, w_pen):
        dch, w, u, active, q, fval, c_tr, viol = pieces(theta)
        m = -fval + mu * c_tr + 0.5 * rho * c_tr**2 + 0.5 * w_pen * float(np.sum(viol**2))
        _, _, table = _pos_part_grad_weights(w)
        with np.errstate(divide="ignore"):
            g_f = (u * (active / np.maximum(w, 1e-300))) @ u.conj().T
        obj_part = np.real(np.diag(k @ g_f @ k))
        coeff = (mu + rho * c_tr) * np.eye(n) + w_pen * np.diag(viol)
        b_total = hermitize(k_inv @ coeff.astype(complex) @ k_inv)
        inner = u.conj().T @ b_total @ u
        dphi_b = hermitize(u @ (table * inner) @ u.conj().T)
        con_part = np.real(np.diag(k @ dphi_b @ k))
        grad_theta = dch * (-obj_part + con_part)
        return m, grad_theta, q, c_tr, viol

    mu, rho, w_pen = 0.0, 10.0 / max(1.0, p_eff), 10.0
    prev_ctr = np.inf
    prev_viol = np.inf
    total_inner = 0
    q = None
    for _outer in range(max_outer):
        m, g, q, c_tr, viol = merit_and_grad(theta, mu, rho, w_pen)
        hist = [m]
        t = 1.0 / max(1.0, float(np.linalg.norm(g)))
        th_old = g_old = None
        for _ in range(inner_iter):
            total_inner += 1
            if np.linalg.norm(g) <= 1e-9 * max(1.0, abs(m)):
                break
            if th_old is not None:
                dx, dg = theta - th_old, g - g_old
                den = float(np.dot(dx, dg))
                num = float(np.dot(dx, dx))
                if den > 1e-30 and num > 0:
                    t = num / den
            t = float(np.clip(t, 1e-12, 1e6))
            ref = max(hist[-6:])
            ok = False
            for _ls in range(50):
                th_new = theta - t * g
                m_new, q_new, ctr_new, viol_new = merit_only(th_new, mu, rho, w_pen)
                decrease = float(np.dot(g, theta - th_new))
                if np.isfinite(m_new) and m_new <= ref - 1e-4 * decrease:
                    ok = True
                    break
                t *= 0.5
            if not ok:
                break
            th_old, g_old = theta, g
            theta, m = th_new, m_new
            q, c_tr, viol = q_new, ctr_new, viol_new
            g = merit_and_grad(theta, mu, rho, w_pen)[1]
            hist.append(m)
        max_viol = float(np.max(viol, initial=0.0))
        if abs(c_tr) <= 1e-8 * max(1.0, p_eff) and max_viol <= 1e-8:
            break
        mu += rho * c_tr
        if abs(c_tr) > 0.25 * prev_ctr:
            rho *= 10.0
        if max_viol > 0.25 * prev_viol:
            w_pen *= 10.0
        prev_ctr, prev_viol = abs(c_tr), max_viol
    return np.exp(theta), q, total_inner


def solve_fullrank(h: ChannelMatrix, c: PowerConstraints,
                   s: OptimSettings | None = None,
                   alpha: float = 0.5) -> SolveReport:
    """Reduced n_T-variable solve, then a warm-started oracle polish."""
    if not h.is_full_rank():
        raise DomainError("full-rank solver needs rank(H) = n_t")
    s = s or OptimSettings()
    t0 = time.perf_counter()
    try:
        _, q_cand, al_iters = _fullrank_descent(h, c, s, alpha)
        polish = solve_basic(h, c, s, q0=_feasible_seed(q_cand, c))
        fallback = False
    except MimoCapError:
        polish = solve_basic(h, c, s)
        al_iters = 0
        fallback = True
    wall = time.perf_counter() - t0
    report = finalize_report(
        h, c, polish.q_opt.entries,
        solver=SolverKind.fullrank,
        n_var=h.n_t,
        iterations=al_iters + polish.iterations,
        wall_time=wall,
        objective_trace=polish.objective_trace,
        fallback=fallback,
    )
    report.d_check = polish.d_check
    return report


def _feasible_seed(q: np.ndarray, c: PowerConstraints) -> np.ndarray:
    """Pull an almost-feasible candidate strictly inside the constraint set."""
    q = hermitize(q)
    w, u = np.linalg.eigh(q)
    q = hermitize((u * np.clip(w, 0.0, None)) @ u.conj().T)
    diag_q = np.real(np.diag(q))
    scale = np.sqrt(np.minimum(1.0, c.pap / np.maximum(diag_q, 1e-300)))
    q = q * np.outer(scale, scale)
    tr = float(np.trace(q).real)
    p_eff = c.effective_p_tot()
    if tr > p_eff:
        q = q * (p_eff / tr)
    return q
