"""Multiplier-space refinement for the joint power-constrained capacity
problem.

For a fixed positive diagonal price matrix D = lam*I + diag(Lam), the
inner problem

    max_{Q >= 0}  log det(I + H Q H^H) - tr(D Q)

has a closed water-filling solution over the whitened channel H D^{-1/2}
with water level 1.  The prices are then driven by projected
Barzilai-Borwein descent on the (convex) dual function until the power
budgets satisfy complementary slackness.  At every iterate the
stationarity and PSD parts of the KKT system hold exactly by
construction, so the returned covariance carries a KKT residual at the
level of the remaining budget mismatch (machine precision at
convergence).

This is the finishing stage behind every solver's reported optimum; the
first-order engine in optim.py gets close and this drives the point home.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ChannelMatrix, PowerConstraints, hermitize


@dataclass
class DualResult:
    q: np.ndarray
    lam: float
    big_lam: np.ndarray
    residual: float
    iterations: int

    @property
    def d_check(self) -> np.ndarray:
        return 1.0 / np.maximum(self.lam + self.big_lam, 1e-300)


def priced_waterfill(h: ChannelMatrix, d: np.ndarray) -> np.ndarray:
    """Maximizer of log det(I + H Q H^H) - tr(diag(d) Q) over Q >= 0."""
    d = np.asarray(d, dtype=float)
    dis = 1.0 / np.sqrt(d)
    ht = h.entries * dis[None, :]
    s, vh = np.linalg.svd(ht, full_matrices=False)[1:]
    s = np.maximum(s, 1e-300)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        powers = np.clip(1.0 - 1.0 / s**2, 0.0, None)
        vt = vh.conj().T
        qt = (vt * powers) @ vt.conj().T
        q = (qt * dis[None, :]) * dis[:, None]
    return hermitize(q)


def refine_covariance(h: ChannelMatrix, c: PowerConstraints,
                      lam0: float = 0.0, big_lam0=None,
                      max_iter: int = 4000, tol: float = 1e-13) -> DualResult:
    """Drive the budget prices to complementary slackness.

    lam0 / big_lam0 warm-start the total-power and per-antenna prices
    (e.g. from multipliers reconstructed at a gradient solver's iterate).
    """
    p_eff = c.effective_p_tot()
    n = h.n_t
    gram_diag = np.real(np.diag(h.gramian))
    d_tiny = 1e-14 * float(np.max(gram_diag))

    def eval_at(x):
        d = np.maximum(x[0] + x[1:], d_tiny)
        dis = 1.0 / np.sqrt(d)
        ht = h.entries * dis[None, :]
        s, vh = np.linalg.svd(ht, full_matrices=False)[1:]
        s = np.maximum(s, 1e-300)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            powers = np.clip(1.0 - 1.0 / s**2, 0.0, None)
            vt = vh.conj().T
            qt = (vt * powers) @ vt.conj().T
            q = hermitize((qt * dis[None, :]) * dis[:, None])
            diag_q = np.real(np.diag(q))
            tr_q = float(np.sum(diag_q))
            fval = float(np.sum(2.0 * np.log(np.maximum(s, 1.0))))
            phi = fval - x[0] * (tr_q - p_eff) - float(np.dot(x[1:], diag_q - c.pap))
        grad = np.concatenate([[p_eff - tr_q], c.pap - diag_q])
        return phi, grad, q

    big_lam0 = np.zeros(n) if big_lam0 is None else np.asarray(big_lam0, float)
    x = np.maximum(np.concatenate([[lam0], big_lam0]), 0.0)
    if x[0] + float(np.min(x[1:])) <= d_tiny:
        # cold start: a total-power price at the scale of the end-point gradient
        m0 = np.eye(h.n_r, dtype=complex) + p_eff * (h.entries @ h.entries.conj().T)
        g_lo = np.real(np.diag(h.entries.conj().T @ np.linalg.solve(m0, h.entries)))
        x[0] = max(x[0], 0.5 * float(np.median(g_lo)))

    phi, grad, q = eval_at(x)
    if not np.isfinite(phi):
        x = np.maximum(x, np.max(gram_diag))
        phi, grad, q = eval_at(x)

    def natural_residual(x, grad):
        return float(np.linalg.norm(x - np.maximum(x - grad, 0.0))) / max(1.0, p_eff)

    hist = [phi]
    best_res = natural_residual(x, grad)
    best = (x.copy(), q)
    x_old = grad_old = None
    t = 1.0 / max(1.0, float(np.linalg.norm(grad)))
    it = 0
    for it in range(max_iter):
        res = natural_residual(x, grad)
        if res < best_res:
            best_res, best = res, (x.copy(), q)
        if res <= tol:
            break
        if x_old is not None:
            dx = x - x_old
            dg = grad - grad_old
            denom = float(np.dot(dx, dg))
            num = float(np.dot(dx, dx))
            if denom > 1e-30 and num > 0.0:
                t = num / denom
        t = float(np.clip(t, 1e-12, 1e12))
        ref = max(hist[-6:])
        accepted = False
        for _ in range(70):
            x_new = np.maximum(x - t * grad, 0.0)
            decrease = float(np.dot(grad, x - x_new))
            if decrease <= 0.0:
                break
            phi_new, grad_new, q_new = eval_at(x_new)
            if np.isfinite(phi_new) and phi_new <= ref - 1e-4 * decrease:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        x_old, grad_old = x, grad
        x, phi, grad, q = x_new, phi_new, grad_new, q_new
        hist.append(phi)

    x, q = best
    return DualResult(q=q, lam=float(x[0]), big_lam=x[1:].copy(),
                      residual=best_res, iterations=it)
