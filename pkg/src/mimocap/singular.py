"""Reduced solver for rank-deficient channels (1 < rank < n_T).

The covariance is parameterized as Q = B B^H with B of width equal to the
channel rank, which enforces the rank bound structurally, and is tied to
the diagonal multiplier through the coupling equation

    V^H Q V = S^-1 U^H (H Dc H^H - I)_+ U S^-1

(U, S, V the reduced SVD of H).  An augmented Lagrangian drives the
coupling to zero while the power constraints are kept by exact projection
of B; the multiplier-space finisher then lands the KKT point.
"""

from __future__ import annotations

import time

import numpy as np

from .core import (ChannelMatrix, CovarianceMatrix, DiagonalMultiplier,
                   PowerConstraints, SolveReport, SolverKind,
                   _reconstruct_multipliers, hermitize)
from .basic import finalize_report, solve_basic
from .duals import refine_covariance
from .errors import DomainError, InputError, MimoCapError
from .optim import OptimSettings
from .waterfill import waterfill_levels


def n_var_for(n_t: int, nu: int) -> int:
    """Real-parameter count of the reduced problem: 2(n_T - nu)nu + n_T."""
    if not (1 <= nu <= n_t):
        raise InputError(f"need 1 <= nu <= n_t, got nu={nu}, n_t={n_t}")
    return 2 * (n_t - nu) * nu + n_t


def coupling_target(h: ChannelMatrix, d_check: np.ndarray) -> np.ndarray:
    """Right side of the coupling equation as a nu x nu Hermitian matrix."""
    f = h.entries @ np.diag(d_check).astype(complex) @ h.entries.conj().T
    w, u = np.linalg.eigh(hermitize(f))
    wp = np.clip(w - 1.0, 0.0, None)
    a = hermitize((u * wp) @ u.conj().T)
    s_inv = 1.0 / h.sigma
    return hermitize((h.u.conj().T @ a @ h.u) * np.outer(s_inv, s_inv))


def coupling_residual(h: ChannelMatrix, d: DiagonalMultiplier, q) -> float:
    """Frobenius mismatch of the two sides of the coupling equation."""
    qm = q.entries if isinstance(q, CovarianceMatrix) else np.asarray(q, dtype=complex)
    if qm.shape != (h.n_t, h.n_t) or d.d_check.size != h.n_t:
        raise InputError("coupling residual: dimension mismatch")
    left = h.v.conj().T @ qm @ h.v
    return float(np.linalg.norm(left - coupling_target(h, d.d_check)))


def _project_factor(b: np.ndarray, pap: np.ndarray, p_tot: float) -> np.ndarray:
    """Exact projection of the factor onto {diag(BB^H) <= P, tr(BB^H) <= P_tot}:
    row shrinkage with a bisected total-power multiplier."""
    norms2 = np.real(np.sum(np.abs(b) ** 2, axis=1))
    capped = np.minimum(norms2, pap)
    if float(np.sum(capped)) <= p_tot + 1e-15 * max(1.0, p_tot):
        scale2 = np.where(norms2 > 0.0, capped / np.maximum(norms2, 1e-300), 0.0)
        return b * np.sqrt(scale2)[:, None]
    lo, hi = 0.0, 1.0
    def total(mu):
        shrunk = norms2 / (1.0 + mu) ** 2
        return float(np.sum(np.minimum(shrunk, pap)))
    while total(hi) > p_tot:
        hi *= 2.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if total(mid) > p_tot:
            lo = mid
        else:
            hi = mid
    mu = hi
    target2 = np.minimum(norms2 / (1.0 + mu) ** 2, pap)
    scale2 = np.where(norms2 > 0.0, target2 / np.maximum(norms2, 1e-300), 0.0)
    return b * np.sqrt(scale2)[:, None]


def _phi_dd_table(w: np.ndarray):
    phi = np.clip(w - 1.0, 0.0, None)
    active = w > 1.0 + 1e-12
    dw = w[:, None] - w[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        table = (phi[:, None] - phi[None, :]) / dw
    deriv = active.astype(float)
    same = np.abs(dw) < 1e-14 * np.maximum(1.0, np.abs(w[:, None]))
    table[same] = np.broadcast_to(deriv[:, None], table.shape)[same]
    return table


def _singular_al(h: ChannelMatrix, c: PowerConstraints, s: OptimSettings,
                 max_outer: int = 20, rounds: int = 60):
    """Augmented Lagrangian on the coupling equality; returns (d_check, Q, iters)."""
    n, nu = h.n_t, h.nu
    p_eff = c.effective_p_tot()
    lam_h = h.sigma
    v_h = h.v

    # start: capped water-filling covariance, factored; multiplier from the
    # water level so both sides of the coupling begin close
    p0 = waterfill_levels(lam_h**2, p_eff)
    q0 = hermitize((v_h * p0) @ v_h.conj().T)
    water_mu = float(np.max(p0 + 1.0 / lam_h**2))
    d_check = np.full(n, water_mu)
    w0, u0 = np.linalg.eigh(q0)
    b = u0[:, -nu:] * np.sqrt(np.clip(w0[-nu:], 0.0, None))
    b = _project_factor(b, c.pap, p_eff)
    theta = np.log(d_check)

    y = np.zeros((nu, nu), dtype=complex)
    rho = 10.0 / max(1.0, float(np.max(lam_h)) ** 2)
    prev_cnorm = np.inf
    iters = 0

    def coupling(b, theta):
        q = b @ b.conj().T
        return hermitize(v_h.conj().T @ q @ v_h - coupling_target(h, np.exp(theta)))

    def merit_b(b, theta, y, rho):
        z = h.entries @ b
        smat = np.eye(nu, dtype=complex) + z.conj().T @ z
        sign, logdet = np.linalg.slogdet(hermitize(smat))
        cc = coupling(b, theta)
        return (-float(logdet)
                + float(np.real(np.trace(y.conj().T @ cc)))
                + 0.5 * rho * float(np.linalg.norm(cc)) ** 2), cc

    def grad_b(b, theta, y, rho, cc):
        z = h.entries @ b
        smat = np.eye(nu, dtype=complex) + z.conj().T @ z
        gf = h.entries.conj().T @ np.linalg.solve(hermitize(smat).conj().T, z.conj().T).conj().T
        return -gf + v_h @ (y + rho * cc) @ (v_h.conj().T @ b)

    def grad_theta(b, theta, y, rho, cc):
        d_check = np.exp(theta)
        w_small = hermitize(np.diag(lam_h).astype(complex)
                            @ (v_h.conj().T @ np.diag(d_check).astype(complex) @ v_h)
                            @ np.diag(lam_h).astype(complex))
        w, om = np.linalg.eigh(w_small)
        table = _phi_dd_table(w)
        z = y + rho * cc
        s_inv = 1.0 / lam_h
        inner = om.conj().T @ hermitize(z * np.outer(s_inv, s_inv)) @ om
        s_mat = hermitize(om @ (table * inner) @ om.conj().T)
        core = hermitize(np.diag(lam_h).astype(complex) @ s_mat
                         @ np.diag(lam_h).astype(complex))
        full = np.real(np.diag(v_h @ core @ v_h.conj().T))
        return -full * d_check

    for _outer in range(max_outer):
        m, cc = merit_b(b, theta, y, rho)
        hist = [m]
        t_b = 1e-2
        t_t = 1e-2
        b_old = gb_old = None
        th_old = gt_old = None
        for _round in range(rounds):
            iters += 1
            gb = grad_b(b, theta, y, rho, cc)
            if b_old is not None:
                db = b - b_old
                dg = gb - gb_old
                den = float(np.real(np.vdot(db, dg)))
                num = float(np.real(np.vdot(db, db)))
                if den > 1e-30 and num > 0:
                    t_b = num / den
            t_b = float(np.clip(t_b, 1e-10, 1e8))
            ref = max(hist[-6:])
            moved = False
            for _ls in range(50):
                b_new = _project_factor(b - t_b * gb, c.pap, p_eff)
                m_new, cc_new = merit_b(b_new, theta, y, rho)
                decrease = float(np.real(np.vdot(gb, b - b_new)))
                if np.isfinite(m_new) and (m_new <= ref - 1e-4 * decrease
                                           or m_new < ref - 1e-15):
                    moved = True
                    break
                t_b *= 0.5
            if moved:
                b_old, gb_old = b, gb
                b, m, cc = b_new, m_new, cc_new
                hist.append(m)

            gt = grad_theta(b, theta, y, rho, cc)
            if th_old is not None:
                dth = theta - th_old
                dgt = gt - gt_old
                den = float(np.dot(dth, dgt))
                num = float(np.dot(dth, dth))
                if den > 1e-30 and num > 0:
                    t_t = num / den
            t_t = float(np.clip(t_t, 1e-10, 1e8))
            ref = max(hist[-6:])
            moved_t = False
            for _ls in range(50):
                th_new = theta - t_t * gt
                m_new, cc_new = merit_b(b, th_new, y, rho)
                decrease = float(np.dot(gt, theta - th_new))
                if np.isfinite(m_new) and (m_new <= ref - 1e-4 * decrease
                                           or m_new < ref - 1e-15):
                    moved_t = True
                    break
                t_t *= 0.5
            if moved_t:
                th_old, gt_old = theta, gt
                theta, m, cc = th_new, m_new, cc_new
                hist.append(m)
            if not moved and not moved_t:
                break
        c_norm = float(np.linalg.norm(cc))
        if c_norm <= 1e-9:
            break
        y = y + rho * cc
        if c_norm > 0.25 * prev_cnorm:
            rho *= 10.0
        prev_cnorm = c_norm

    return np.exp(theta), hermitize(b @ b.conj().T), iters, float(np.linalg.norm(cc))


def solve_singular(h: ChannelMatrix, c: PowerConstraints,
                   s: OptimSettings | None = None) -> SolveReport:
    """Reduced solver for 1 < rank(H) < n_T."""
    if not (1 < h.nu < h.n_t):
        raise DomainError(
            f"singular solver needs 1 < rank < n_t, got rank {h.nu} of {h.n_t}"
        )
    s = s or OptimSettings()
    t0 = time.perf_counter()
    fallback = False
    try:
        d_check, q_al, al_iters, c_norm = _singular_al(h, c, s)
        if c_norm > 1e-6:
            raise DomainError("coupling did not converge")
        _, _, lam0, big_lam0, _, _ = _reconstruct_multipliers(h, c, q_al, 1e-6)
        dr = refine_covariance(h, c, lam0, big_lam0)
        q_final = dr.q if dr.residual <= 1e-6 else q_al
        d_check_final = dr.d_check if dr.residual <= 1e-6 else d_check
        iterations = al_iters + dr.iterations
    except MimoCapError:
        rep = solve_basic(h, c, s)
        q_final = rep.q_opt.entries
        dr = refine_covariance(h, c)
        d_check_final = dr.d_check
        iterations = rep.iterations
        fallback = True
    wall = time.perf_counter() - t0
    report = finalize_report(
        h, c, q_final,
        solver=SolverKind.singular,
        n_var=n_var_for(h.n_t, h.nu),
        iterations=iterations,
        wall_time=wall,
        fallback=fallback,
    )
    report.d_check = np.asarray(d_check_final, dtype=float)
    return report
