"""Domain types and complex-Hermitian primitives shared by every solver.

All capacities and mutual informations are in nats; the CLI converts to
bits on request.  Every covariance passed across a module boundary is
re-symmetrized to (Q + Q^H) / 2 so eigendecompositions stay well posed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DomainError, InputError

ATOL = 1e-9
RTOL = 1e-8

# Slack below which an inequality constraint is treated as active when
# reconstructing multipliers or reporting activity flags.
ACTIVE_TOL = 1e-6


def hermitize(a: np.ndarray) -> np.ndarray:
    """Return (A + A^H) / 2 as a complex array."""
    a = np.asarray(a, dtype=complex)
    return 0.5 * (a + a.conj().T)


def is_hermitian(a: np.ndarray, atol: float = ATOL) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and \
        np.linalg.norm(a - a.conj().T) <= atol * max(1.0, np.linalg.norm(a))


class ChannelMatrix:
    """Complex n_R x n_T channel with cached reduced SVD and numerical rank.

    Raises DomainError if the matrix is zero or any column has zero norm
    (an all-zero column would make the corresponding transmit antenna
    useless and breaks the positivity of the diagonal multiplier).
    """

    def __init__(self, entries):
        h = np.atleast_2d(np.asarray(entries, dtype=complex))
        if h.ndim != 2 or h.size == 0:
            raise InputError("channel matrix must be a nonempty 2-D array")
        self.entries = h
        self.n_r, self.n_t = h.shape
        self.frob_norm = float(np.linalg.norm(h))
        if self.frob_norm == 0.0:
            raise DomainError("channel matrix is identically zero")
        col_norms = np.linalg.norm(h, axis=0)
        if np.any(col_norms <= 0.0):
            raise DomainError("every channel column must have positive norm")

        u, s, vh = np.linalg.svd(h, full_matrices=False)
        tol = max(self.n_r, self.n_t) * np.finfo(float).eps * s[0]
        nu = int(np.count_nonzero(s > tol))
        nu = max(nu, 1)
        self.nu = nu
        self.u = u[:, :nu]
        self.sigma = s[:nu].astype(float)
        self.v = vh[:nu, :].conj().T  # n_t x nu

    @property
    def gramian(self) -> np.ndarray:
        return self.entries.conj().T @ self.entries

    def is_full_rank(self) -> bool:
        return self.nu == self.n_t

    def __repr__(self):
        return f"ChannelMatrix({self.n_r}x{self.n_t}, rank={self.nu})"


@dataclass(frozen=True)
class PowerConstraints:
    """Total-power budget and per-antenna power bounds (linear units)."""

    p_tot: float
    pap: np.ndarray

    def __post_init__(self):
        pap = np.asarray(self.pap, dtype=float).ravel()
        object.__setattr__(self, "pap", pap)
        if not np.all(pap > 0.0):
            raise InputError("all per-antenna power bounds must be > 0")
        if not self.p_tot > 0.0:
            raise InputError("total power budget must be > 0")

    @property
    def n_t(self) -> int:
        return self.pap.size

    @property
    def pap_sum(self) -> float:
        return float(np.sum(self.pap))

    @property
    def tp_active_possible(self) -> bool:
        """True when the total-power budget can be met with equality."""
        return self.pap_sum >= self.p_tot

    def effective_p_tot(self) -> float:
        """Budget after clamping to the attainable sum of per-antenna caps."""
        return min(self.p_tot, self.pap_sum)


class CovarianceMatrix:
    """Hermitian PSD transmit covariance.  Symmetrizes on construction."""

    def __init__(self, entries, atol: float = ATOL):
        q = np.atleast_2d(np.asarray(entries, dtype=complex))
        if q.shape[0] != q.shape[1]:
            raise InputError("covariance matrix must be square")
        asym = np.linalg.norm(q - q.conj().T)
        if asym > 1e-6 * max(1.0, np.linalg.norm(q)):
            raise DomainError("covariance matrix is not Hermitian")
        self.entries = hermitize(q)
        lam_min = float(np.linalg.eigvalsh(self.entries)[0])
        if lam_min < -1e-7 * max(1.0, float(np.trace(self.entries).real)):
            raise DomainError(f"covariance matrix is not PSD (lambda_min={lam_min:.3e})")
        self._atol = atol

    @property
    def n_t(self) -> int:
        return self.entries.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def diag(self) -> np.ndarray:
        return np.real(np.diag(self.entries)).copy()

    def rank(self, rel_tol: float = 1e-6) -> int:
        """Numerical rank: eigenvalues above rel_tol * largest."""
        ev = np.linalg.eigvalsh(self.entries)
        top = max(float(ev[-1]), 0.0)
        if top <= 0.0:
            return 0
        return int(np.count_nonzero(ev > rel_tol * top))

    def __repr__(self):
        return f"CovarianceMatrix({self.n_t}x{self.n_t}, tr={self.trace():.4g})"


@dataclass(frozen=True)
class DiagonalMultiplier:
    """Diagonal of the inverted multiplier matrix; strictly positive."""

    d_check: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d_check, dtype=float).ravel()
        object.__setattr__(self, "d_check", d)
        if not np.all(d > 0.0):
            raise DomainError("diagonal multiplier entries must be strictly positive")

    def as_matrix(self) -> np.ndarray:
        return np.diag(self.d_check).astype(complex)


class SolverKind(str, Enum):
    basic = "basic"
    fullrank = "fullrank"
    closedform = "closedform"
    singular = "singular"
    unitrank = "unitrank"
    waterfill = "waterfill"


@dataclass
class SolveReport:
    """Outcome of one capacity solve.

    objective_trace records the monotone first-order phase when one ran;
    capacity_nats is evaluated at the final (refined) covariance and may
    differ from the last trace entry at roundoff level.  d_check carries
    the diagonal multiplier inverse when the route produced one.
    """

    capacity_nats: float
    q_opt: CovarianceMatrix
    solver: SolverKind
    tp_active: bool
    pap_active: np.ndarray
    kkt_residual: float
    iterations: int
    wall_time: float
    n_var: int
    fallback: bool = False
    objective_trace: list = field(default_factory=list)
    d_check: np.ndarray | None = None

    @property
    def capacity_bits(self) -> float:
        return self.capacity_nats / np.log(2.0)


def mutual_information(h: ChannelMatrix, q) -> float:
    """log det(I + H Q H^H) in nats for a Hermitian PSD input covariance."""
    qm = q.entries if isinstance(q, CovarianceMatrix) else np.asarray(q, dtype=complex)
    if qm.shape != (h.n_t, h.n_t):
        raise InputError(
            f"covariance must be {h.n_t}x{h.n_t}, got {qm.shape}"
        )
    if np.linalg.norm(qm - qm.conj().T) > 1e-6 * max(1.0, np.linalg.norm(qm)):
        raise DomainError("covariance matrix is not Hermitian")
    qm = hermitize(qm)
    lam_min = float(np.linalg.eigvalsh(qm)[0])
    scale = max(1.0, float(np.trace(qm).real))
    if lam_min < -1e-7 * scale:
        raise DomainError(f"covariance matrix is not PSD (lambda_min={lam_min:.3e})")
    m = np.eye(h.n_r, dtype=complex) + h.entries @ qm @ h.entries.conj().T
    sign, logdet = np.linalg.slogdet(hermitize(m))
    return max(float(logdet), 0.0)


def mi_value_and_grad(h: ChannelMatrix, q: np.ndarray) -> tuple[float, np.ndarray]:
    """Mutual information and its matrix gradient H^H (I + H Q H^H)^-1 H."""
    m = np.eye(h.n_r, dtype=complex) + h.entries @ q @ h.entries.conj().T
    m = hermitize(m)
    sign, logdet = np.linalg.slogdet(m)
    hm = np.linalg.solve(m, h.entries)
    grad = hermitize(h.entries.conj().T @ hm)
    return float(logdet), grad


def positive_part_hermitian(a: np.ndarray, atol: float = ATOL) -> np.ndarray:
    """Eigenvalue-wise clipping of a Hermitian matrix at zero."""
    a = np.asarray(a, dtype=complex)
    if not is_hermitian(a, atol=1e-6):
        raise DomainError("positive part requires a Hermitian matrix")
    a = hermitize(a)
    w, u = np.linalg.eigh(a)
    wp = np.clip(w, 0.0, None)
    return hermitize((u * wp) @ u.conj().T)


def gramian_sqrt(h: ChannelMatrix) -> np.ndarray:
    """Positive-definite square root of H^H H; requires a full-rank channel."""
    if not h.is_full_rank():
        raise DomainError(
            f"channel rank {h.nu} < n_t {h.n_t}: Gramian square root is singular"
        )
    w, u = np.linalg.eigh(hermitize(h.gramian))
    if w[0] <= 0.0:
        raise DomainError("Gramian is numerically singular")
    return hermitize((u * np.sqrt(w)) @ u.conj().T)


def numerical_rank(h: ChannelMatrix) -> int:
    """Count of singular values above max(n_r, n_t) * eps * sigma_max."""
    return h.nu


def _reconstruct_multipliers(h, c, q, active_tol):
    """Estimate (lambda, Lambda_diag) from G Q = D Q and complementary slackness.

    At any point satisfying the first-order optimality system the row-wise
    least-squares estimates recover the exact diagonal multiplier, so the
    residual built from them vanishes there.
    """
    g = mi_value_and_grad(h, q)[1]
    n = h.n_t
    diag_q = np.real(np.diag(q))
    tr_q = float(np.sum(diag_q))

    pap_active = diag_q >= c.pap - active_tol * np.maximum(1.0, c.pap)
    tp_active = tr_q >= c.effective_p_tot() - active_tol * max(1.0, c.effective_p_tot())

    gq = g @ q
    row_norm2 = np.sum(np.abs(q) ** 2, axis=1)
    identifiable = row_norm2 > (ATOL * max(1.0, tr_q)) ** 2
    d_rows = np.zeros(n)
    for i in range(n):
        if identifiable[i]:
            d_rows[i] = float(np.real(np.vdot(q[i, :], gq[i, :])) / row_norm2[i])

    inactive_ident = identifiable & ~pap_active
    if not tp_active:
        lam = 0.0
    elif np.any(inactive_ident):
        lam = float(np.mean(d_rows[inactive_ident]))
    elif np.any(identifiable):
        lam = float(np.min(d_rows[identifiable]))
    else:
        lam = 0.0
    lam = max(lam, 0.0)

    big_lam = np.zeros(n)
    for i in range(n):
        if pap_active[i]:
            base = d_rows[i] if identifiable[i] else float(np.real(g[i, i]))
            big_lam[i] = max(base - lam, 0.0)
    d_diag = lam + big_lam
    for i in range(n):
        if not pap_active[i] and not identifiable[i]:
            # antenna carries no power; stationarity only needs d_i >= grad
            d_diag[i] = max(lam, float(np.real(g[i, i])))
    return g, d_diag, lam, big_lam, pap_active, tp_active


def kkt_residual(h: ChannelMatrix, c: PowerConstraints, q,
                 active_tol: float = ACTIVE_TOL) -> float:
    """Scalar aggregate of stationarity, complementary-slackness and
    feasibility violations; zero (within tolerance) exactly at the optimum."""
    qm = q.entries if isinstance(q, CovarianceMatrix) else hermitize(q)
    if qm.shape != (h.n_t, h.n_t):
        raise InputError("covariance/channel dimension mismatch")
    ev_min = float(np.linalg.eigvalsh(qm)[0])
    diag_q = np.real(np.diag(qm))
    tr_q = float(np.sum(diag_q))
    feas_viol = (
        max(0.0, tr_q - c.p_tot)
        + float(np.sum(np.maximum(0.0, diag_q - c.pap)))
        + max(0.0, -ev_min)
    )
    if feas_viol > 1e-3 * max(1.0, c.p_tot):
        raise DomainError(f"covariance is infeasible (violation {feas_viol:.3e})")

    g, d_diag, lam, big_lam, _, _ = _reconstruct_multipliers(h, c, qm, active_tol)
    d_mat = np.diag(d_diag).astype(complex)
    m_mat = positive_part_hermitian(d_mat - g)
    stationarity = float(np.linalg.norm((d_mat - m_mat) - g))
    comp_slack = float(np.linalg.norm(m_mat @ qm))
    return stationarity + comp_slack + feas_viol


def pap_active_flags(q: np.ndarray, c: PowerConstraints,
                     active_tol: float = ACTIVE_TOL) -> np.ndarray:
    diag_q = np.real(np.diag(q))
    return diag_q >= c.pap - active_tol * np.maximum(1.0, c.pap)


def tp_active_flag(q: np.ndarray, c: PowerConstraints,
                   active_tol: float = ACTIVE_TOL) -> bool:
    tr_q = float(np.trace(q).real)
    return tr_q >= c.p_tot - active_tol * max(1.0, c.p_tot)
