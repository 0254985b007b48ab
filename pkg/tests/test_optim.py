import numpy as np
import pytest

from mimocap.core import (ChannelMatrix, PowerConstraints, hermitize,
                          kkt_residual, mi_value_and_grad)
from mimocap.errors import ConvergenceError
from mimocap.optim import (OptimSettings, dykstra_project,
                           feasibility_violation, project_diag_cap,
                           project_psd, project_trace_cap,
                           projected_gradient_ascent)

from conftest import assert_nondecreasing


class TestSettings:
    def test_defaults_valid(self):
        s = OptimSettings()
        assert s.max_iter == 5000 and s.dykstra_max_sweeps == 500

    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            OptimSettings(max_iter=0)
        with pytest.raises(ValueError):
            OptimSettings(armijo_c=1.5)


class TestProjections:
    def test_psd_clips_negative_eigenvalue(self):
        assert np.allclose(project_psd(np.diag([1.0, -2.0])), np.diag([1.0, 0.0]))

    def test_psd_keeps_feasible(self):
        q = np.array([[2.0, 0.5], [0.5, 1.0]])
        assert np.allclose(project_psd(q), hermitize(q))

    def test_psd_symmetric_example(self):
        got = project_psd(np.array([[1.0, 2.0], [2.0, 1.0]]))
        assert np.allclose(got, np.full((2, 2), 1.5), atol=1e-12)

    def test_diag_cap_clamps(self):
        got = project_diag_cap(np.diag([2.0, 0.5]), np.array([1.0, 1.0]))
        assert np.allclose(got, np.diag([1.0, 0.5]))

    def test_diag_cap_keeps_offdiagonal(self):
        q = np.array([[2.0, 1j], [-1j, 2.0]])
        got = project_diag_cap(q, np.array([1.0, 1.0]))
        assert np.allclose(got, np.array([[1.0, 1j], [-1j, 1.0]]))

    def test_trace_cap_shifts(self):
        assert np.allclose(project_trace_cap(np.eye(2), 1.0), 0.5 * np.eye(2))
        assert np.allclose(project_trace_cap(np.diag([3.0, 1.0]), 2.0),
                           np.diag([2.0, 0.0]))

    def test_trace_cap_noop_when_feasible(self):
        q = np.diag([0.3, 0.3])
        assert np.allclose(project_trace_cap(q, 1.0), q)

    def test_projections_idempotent(self):
        rng = np.random.default_rng(11)
        pap = np.array([0.7, 0.9, 0.5])
        for _ in range(10):
            a = hermitize(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
            for proj in (project_psd,
                         lambda x: project_diag_cap(x, pap),
                         lambda x: project_trace_cap(x, 1.3)):
                once = proj(a)
                assert np.allclose(proj(once), once, atol=1e-10)


class TestDykstra:
    def test_feasible_point_is_fixed(self):
        c = PowerConstraints(2.0, np.array([1.0, 1.0]))
        q = np.diag([0.5, 0.5]).astype(complex)
        out = dykstra_project(q, c)
        assert np.allclose(out.entries, q, atol=1e-9)

    def test_scaled_identity_case(self):
        # nearest feasible point of 10 I; grid search over feasible c I
        c = PowerConstraints(1.0, np.array([1.0, 1.0]))
        grid = np.linspace(0.0, 0.5, 2001)
        best = grid[np.argmin([np.linalg.norm(10 * np.eye(2) - g * np.eye(2))
                               for g in grid])]
        out = dykstra_project(10 * np.eye(2, dtype=complex), c)
        assert best == pytest.approx(0.5, abs=1e-3)
        assert np.allclose(out.entries, 0.5 * np.eye(2), atol=1e-8)

    def test_diagonal_case_against_brute_force(self):
        c = PowerConstraints(2.0, np.array([1.0, 1.0]))
        target = np.diag([2.0, 0.0]).astype(complex)
        grid = np.linspace(0.0, 1.0, 201)
        pairs = [(a, b) for a in grid for b in grid if a + b <= 2.0]
        best = min(pairs, key=lambda ab: (2.0 - ab[0]) ** 2 + (0.0 - ab[1]) ** 2)
        out = dykstra_project(target, c)
        assert best[0] == pytest.approx(1.0, abs=1e-2)
        assert np.allclose(out.entries, np.diag([1.0, 0.0]), atol=1e-8)

    def test_output_feasible_and_idempotent(self):
        rng = np.random.default_rng(12)
        s = OptimSettings()
        for _ in range(15):
            n = int(rng.integers(2, 5))
            a = hermitize(rng.normal(size=(n, n), scale=2.0)
                          + 1j * rng.normal(size=(n, n)))
            pap = rng.uniform(0.2, 1.0, n)
            c = PowerConstraints(float(rng.uniform(0.4, 1.2) * np.sum(pap)), pap)
            try:
                out = dykstra_project(a, c, s).entries
            except ConvergenceError:
                continue
            assert feasibility_violation(out, c) <= s.feas_tol
            again = dykstra_project(out, c, s).entries
            assert np.allclose(again, out, atol=1e-8)

    def test_projection_inequality(self):
        # <y - P(y), w - P(y)> <= 0 for feasible w characterizes the projection
        rng = np.random.default_rng(13)
        c = PowerConstraints(0.9, np.array([0.5, 0.7]))
        y = hermitize(rng.normal(size=(2, 2), scale=2.0)
                      + 1j * rng.normal(size=(2, 2)))
        p = dykstra_project(y, c).entries
        for _ in range(40):
            w = np.diag(rng.uniform(0.0, 0.45, 2)).astype(complex)
            ip = float(np.real(np.vdot(y - p, w - p)))
            assert ip <= 1e-7


def identity_channel_objective(h):
    return lambda q: mi_value_and_grad(h, q)


class TestProjectedGradientAscent:
    def test_identity_channel_full_budget(self):
        h = ChannelMatrix(np.eye(2))
        c = PowerConstraints(2.0, np.array([1.0, 1.0]))
        q0 = 0.3 * np.eye(2, dtype=complex)
        q, trace = projected_gradient_ascent(identity_channel_objective(h), q0, c)
        assert trace[-1] == pytest.approx(2 * np.log(2), abs=1e-8)
        assert np.allclose(q.entries, np.eye(2), atol=1e-4)

    def test_identity_channel_half_budget_matches_scan(self):
        h = ChannelMatrix(np.eye(2))
        c = PowerConstraints(1.0, np.array([1.0, 1.0]))
        scan = max(np.log1p(a) + np.log1p(1 - a) for a in np.linspace(0, 1, 20001))
        q0 = 0.2 * np.eye(2, dtype=complex)
        q, trace = projected_gradient_ascent(identity_channel_objective(h), q0, c)
        assert scan == pytest.approx(2 * np.log(1.5), abs=1e-8)
        assert trace[-1] == pytest.approx(scan, abs=1e-8)
        assert np.allclose(q.entries, 0.5 * np.eye(2), atol=1e-5)

    def test_trace_is_nondecreasing(self, h_3x3):
        c = PowerConstraints(1.0, np.array([0.2, 0.4, 0.6]))
        q0 = 0.05 * np.eye(3, dtype=complex)
        _, trace = projected_gradient_ascent(identity_channel_objective(h_3x3),
                                             q0, c)
        assert_nondecreasing(trace)
        assert len(trace) > 3

    def test_stationarity_on_random_instances(self):
        # value-based stopping floors the first-order engine around 1e-5;
        # the multiplier finisher in the solvers goes the rest of the way
        from mimocap.channelio import random_channel
        from mimocap.basic import default_start
        worst = 0.0
        for i in range(8):
            rng = np.random.default_rng(300 + i)
            n = int(rng.integers(2, 5))
            h = random_channel(n + 1, n, rng)
            pap = rng.uniform(0.3, 1.0, n)
            c = PowerConstraints(float(rng.uniform(0.5, 1.1) * np.sum(pap)), pap)
            q, _ = projected_gradient_ascent(
                identity_channel_objective(h), default_start(h, c), c,
                OptimSettings(), step0=1.0 / np.max(h.sigma) ** 2)
            worst = max(worst, kkt_residual(h, c, q.entries))
        assert worst <= 1e-5

    def test_deterministic(self, h_3x3):
        c = PowerConstraints(1.0, np.array([0.2, 0.4, 0.6]))
        q0 = 0.05 * np.eye(3, dtype=complex)
        q1, t1 = projected_gradient_ascent(identity_channel_objective(h_3x3), q0, c)
        q2, t2 = projected_gradient_ascent(identity_channel_objective(h_3x3), q0, c)
        assert t1 == t2
        assert np.array_equal(q1.entries, q2.entries)
