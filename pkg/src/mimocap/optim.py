"""First-order engine: projections onto the feasible set and a monotone
projected gradient ascent used by the direct covariance solver.

The feasible set is the intersection of three convex sets: the PSD cone,
the per-antenna diagonal box and the trace half-space.  Projection onto
the intersection uses Dykstra's algorithm, which (unlike plain cyclic
projection) converges to the nearest point, so gradient steps keep their
ascent property.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CovarianceMatrix, PowerConstraints, hermitize
from .errors import ConvergenceError, StepError


@dataclass
class OptimSettings:
    max_iter: int = 5000
    obj_tol: float = 1e-10
    feas_tol: float = 1e-10
    armijo_c: float = 1e-4
    armijo_shrink: float = 0.5
    dykstra_max_sweeps: int = 500

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        for name in ("obj_tol", "feas_tol"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0")
        if not (0.0 < self.armijo_c < 1.0 and 0.0 < self.armijo_shrink < 1.0):
            raise ValueError("armijo parameters must lie in (0, 1)")


def project_psd(q: np.ndarray) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm: clip eigenvalues at zero."""
    q = hermitize(q)
    w, u = np.linalg.eigh(q)
    if w[0] >= 0.0:
        return q
    wp = np.clip(w, 0.0, None)
    return hermitize((u * wp) @ u.conj().T)


def project_diag_cap(q: np.ndarray, pap: np.ndarray) -> np.ndarray:
    """Clamp offending diagonal entries to their caps; off-diagonals kept."""
    q = hermitize(q)
    d = np.real(np.diag(q))
    out = q.copy()
    np.fill_diagonal(out, np.minimum(d, pap))
    return out


def project_trace_cap(q: np.ndarray, p_tot: float) -> np.ndarray:
    """Shift by a multiple of the identity onto the trace half-space."""
    q = hermitize(q)
    tr = float(np.trace(q).real)
    if tr <= p_tot:
        return q
    n = q.shape[0]
    return q - ((tr - p_tot) / n) * np.eye(n, dtype=complex)


def feasibility_violation(q: np.ndarray, c: PowerConstraints) -> float:
    ev_min = float(np.linalg.eigvalsh(q)[0])
    diag_q = np.real(np.diag(q))
    return max(
        max(0.0, float(np.sum(diag_q)) - c.p_tot),
        float(np.max(np.maximum(0.0, diag_q - c.pap), initial=0.0)),
        max(0.0, -ev_min),
    )


def dykstra_project(q: np.ndarray, c: PowerConstraints,
                    s: OptimSettings | None = None) -> CovarianceMatrix:
    """Project onto {PSD} ∩ {diag(Q) <= P} ∩ {tr(Q) <= P_tot}.

    When the trace cap is implied by the diagonal caps (P_tot >= sum P_i)
    the trace set is skipped: the intersection is unchanged and dropping
    the redundant set avoids a degenerate-geometry slowdown.
    """
    s = s or OptimSettings()
    x = hermitize(q)
    inc_psd = np.zeros_like(x)
    inc_diag = np.zeros_like(x)
    inc_tr = np.zeros_like(x)
    trace_redundant = c.p_tot >= c.pap_sum - 1e-15
    scale = max(1.0, float(np.linalg.norm(x)))
    for _ in range(s.dykstra_max_sweeps):
        x_prev = x
        incs_prev = (inc_psd, inc_diag, inc_tr)
        y = project_psd(x + inc_psd)
        inc_psd = x + inc_psd - y
        z = project_diag_cap(y + inc_diag, c.pap)
        inc_diag = y + inc_diag - z
        if trace_redundant:
            x = z
        else:
            x = project_trace_cap(z + inc_tr, c.p_tot)
            inc_tr = z + inc_tr - x
        # the iterate can plateau for a sweep while the corrections still
        # move, so convergence is measured on the full Dykstra state
        state_change = (np.linalg.norm(x - x_prev)
                        + np.linalg.norm(inc_psd - incs_prev[0])
                        + np.linalg.norm(inc_diag - incs_prev[1])
                        + np.linalg.norm(inc_tr - incs_prev[2]))
        if state_change <= s.feas_tol * scale:
            out = project_psd(x)
            if feasibility_violation(out, c) <= s.feas_tol:
                return CovarianceMatrix(out)
    raise ConvergenceError(
        f"Dykstra projection did not settle within {s.dykstra_max_sweeps} sweeps",
        last_iterate=project_psd(x),
    )


def _project_tolerant(y: np.ndarray, c: PowerConstraints,
                      s: OptimSettings) -> np.ndarray | None:
    """Dykstra projection that accepts a stalled-but-nearly-feasible iterate.

    The gradient loop only needs feasibility to ~feas_tol; a cycle that
    stopped making progress at that scale is good enough to continue.
    Returns None when the cycle stalled far from feasibility (the trial
    point was too far out), which callers treat like a failed step.
    """
    try:
        return dykstra_project(y, c, s).entries
    except ConvergenceError as err:
        x = err.last_iterate
        if x is not None and feasibility_violation(x, c) <= 1e4 * s.feas_tol:
            return x
        return None


def projected_gradient_ascent(f_value_and_grad, start, c: PowerConstraints,
                              s: OptimSettings | None = None,
                              step0: float | None = None):
    """Maximize a concave objective over the joint power constraint set.

    Iterates q <- Dykstra(q + t * grad f(q)) with Armijo backtracking on t;
    the trial step each iteration follows a Barzilai-Borwein estimate from
    the previous accepted move, so the recorded objective trace is
    nondecreasing while steps adapt to local curvature.

    Returns (CovarianceMatrix, list of objective values).  Stops when the
    relative objective change stays below obj_tol, or when the projected
    step is no longer an ascent direction (stationary within projection
    accuracy).
    """
    s = s or OptimSettings()
    q = start.entries if isinstance(start, CovarianceMatrix) else hermitize(start)
    val, grad = f_value_and_grad(q)
    trace = [val]
    t = step0 if step0 and step0 > 0 else 1.0
    t_prev = t
    q_old = None
    grad_old = None
    small_count = 0
    converged = False

    for _ in range(s.max_iter):
        if q_old is not None:
            dq = q - q_old
            dg = grad_old - grad
            denom = float(np.real(np.vdot(dq, dg)))
            num = float(np.real(np.vdot(dq, dq)))
            if denom > 1e-18 * max(num, 1.0) and num > 0.0:
                t = num / denom
            else:
                t = t_prev * 2.0
        t = float(np.clip(t, 1e-14, 1e8))

        accepted = False
        stationary = False
        val_new = val
        grad_new = grad
        for _ls in range(80):
            q_new = _project_tolerant(q + t * grad, c, s)
            if q_new is None:
                # trial point too far out for the projection to settle
                t *= s.armijo_shrink
                continue
            gain = float(np.real(np.vdot(grad, q_new - q)))
            if gain <= 0.0:
                # projection no longer moves along the ascent direction:
                # stationary to within the projection's resolution
                stationary = True
                break
            val_new, grad_new = f_value_and_grad(q_new)
            if val_new >= val + s.armijo_c * gain:
                accepted = True
                break
            t *= s.armijo_shrink
        if stationary:
            converged = True
            break
        if not accepted:
            raise StepError("Armijo line search failed to make progress")

        t_prev = t
        q_old, grad_old = q, grad
        q, val, grad = q_new, val_new, grad_new
        trace.append(val)

        rel_change = abs(trace[-1] - trace[-2]) / max(1.0, abs(trace[-1]))
        if rel_change <= s.obj_tol:
            small_count += 1
            if small_count >= 3:
                converged = True
                break
        else:
            small_count = 0

    if not converged:
        raise ConvergenceError(
            f"projected gradient did not converge within {s.max_iter} iterations",
            last_iterate=CovarianceMatrix(project_psd(q)),
            trace=trace,
        )
    return CovarianceMatrix(project_psd(q)), trace
