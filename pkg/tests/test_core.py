import numpy as np
import pytest

from mimocap.core import (ChannelMatrix, CovarianceMatrix, PowerConstraints,
                          gramian_sqrt, hermitize, kkt_residual,
                          mi_value_and_grad, mutual_information,
                          numerical_rank, positive_part_hermitian)
from mimocap.errors import DomainError, InputError

# direct log-det evaluation of the bundled 3x3 demo channel with Q = I/3,
# frozen as a regression constant
MI_3X3_UNIFORM = 2.2282000888353473


def random_hermitian(rng, n, scale=1.0):
    a = rng.normal(size=(n, n), scale=scale) + 1j * rng.normal(size=(n, n), scale=scale)
    return hermitize(a)


class TestChannelMatrix:
    def test_reduced_svd_is_orthonormal_and_reconstructs(self, h_4x3):
        u, s, v = h_4x3.u, h_4x3.sigma, h_4x3.v
        nu = h_4x3.nu
        assert np.allclose(u.conj().T @ u, np.eye(nu), atol=1e-12)
        assert np.allclose(v.conj().T @ v, np.eye(nu), atol=1e-12)
        recon = (u * s) @ v.conj().T
        assert np.linalg.norm(recon - h_4x3.entries) <= 1e-12 * h_4x3.frob_norm

    def test_zero_matrix_rejected(self):
        with pytest.raises(DomainError):
            ChannelMatrix(np.zeros((2, 2)))

    def test_zero_column_rejected(self):
        with pytest.raises(DomainError):
            ChannelMatrix(np.array([[1.0, 0.0], [2.0, 0.0]]))

    def test_rank_of_demo_channels(self, h_4x3, h_2x3):
        assert numerical_rank(h_4x3) == 3
        assert numerical_rank(h_2x3) == 2

    def test_rank_one_outer_product(self):
        u = np.array([3.0, 4.0]) / 5.0
        v = np.array([1.0, 2.0, 2.0]) / 3.0
        h = ChannelMatrix(np.outer(u, v))
        assert numerical_rank(h) == 1


class TestPowerConstraints:
    def test_validation(self):
        with pytest.raises(InputError):
            PowerConstraints(1.0, np.array([0.5, 0.0]))
        with pytest.raises(InputError):
            PowerConstraints(0.0, np.array([0.5, 0.5]))

    def test_tp_attainability(self):
        c = PowerConstraints(1.0, np.array([0.4, 0.4]))
        assert not c.tp_active_possible
        assert c.effective_p_tot() == pytest.approx(0.8)
        c2 = PowerConstraints(0.5, np.array([0.4, 0.4]))
        assert c2.tp_active_possible


class TestCovarianceMatrix:
    def test_rejects_non_hermitian(self):
        with pytest.raises(DomainError):
            CovarianceMatrix(np.array([[1.0, 1.0], [0.0, 1.0]]))

    def test_rejects_indefinite(self):
        with pytest.raises(DomainError):
            CovarianceMatrix(np.diag([1.0, -0.5]))

    def test_rank_counts_significant_eigenvalues(self):
        q = CovarianceMatrix(np.diag([1.0, 1e-12, 0.0]))
        assert q.rank() == 1


class TestMutualInformation:
    def test_identity_channel_identity_input(self):
        h = ChannelMatrix(np.eye(2))
        assert mutual_information(h, np.eye(2)) == pytest.approx(2 * np.log(2))

    def test_zero_input(self):
        h = ChannelMatrix(np.eye(2))
        assert mutual_information(h, np.zeros((2, 2))) == 0.0

    def test_frozen_uniform_input_value(self, h_3x3):
        got = mutual_information(h_3x3, np.eye(3) / 3)
        assert got == pytest.approx(MI_3X3_UNIFORM, abs=1e-12)

    def test_dimension_mismatch(self, h_3x3):
        with pytest.raises(InputError):
            mutual_information(h_3x3, np.eye(2))

    def test_non_psd_rejected(self, h_3x3):
        with pytest.raises(DomainError):
            mutual_information(h_3x3, np.diag([1.0, -0.2, 0.1]))

    def test_concave_along_segments(self, h_3x3):
        rng = np.random.default_rng(1)
        for _ in range(10):
            a = random_hermitian(rng, 3)
            q1 = hermitize(a @ a.conj().T) / 3
            b = random_hermitian(rng, 3)
            q2 = hermitize(b @ b.conj().T) / 3
            t = rng.uniform()
            mixed = mutual_information(h_3x3, t * q1 + (1 - t) * q2)
            bound = (t * mutual_information(h_3x3, q1)
                     + (1 - t) * mutual_information(h_3x3, q2))
            assert mixed >= bound - 1e-9

    def test_monotone_in_loewner_order(self, h_3x3):
        rng = np.random.default_rng(2)
        for _ in range(10):
            a = random_hermitian(rng, 3)
            q1 = hermitize(a @ a.conj().T)
            b = random_hermitian(rng, 3)
            q2 = q1 + hermitize(b @ b.conj().T)
            assert (mutual_information(h_3x3, q2)
                    >= mutual_information(h_3x3, q1) - 1e-9)

    def test_gradient_matches_finite_differences(self, h_3x3):
        rng = np.random.default_rng(3)
        q0 = 0.4 * np.eye(3, dtype=complex)
        _, grad = mi_value_and_grad(h_3x3, q0)
        eps = 1e-6
        for _ in range(20):
            d = random_hermitian(rng, 3)
            d /= np.linalg.norm(d)
            fd = (mutual_information(h_3x3, q0 + eps * d)
                  - mutual_information(h_3x3, q0 - eps * d)) / (2 * eps)
            analytic = float(np.real(np.vdot(grad, d)))
            assert fd == pytest.approx(analytic, rel=1e-5, abs=1e-9)


class TestPositivePart:
    def test_diagonal_clipping(self):
        got = positive_part_hermitian(np.diag([2.0, -1.0]))
        assert np.allclose(got, np.diag([2.0, 0.0]))

    def test_identity_on_psd(self):
        rng = np.random.default_rng(4)
        a = random_hermitian(rng, 3)
        psd = hermitize(a @ a.conj().T)
        assert np.allclose(positive_part_hermitian(psd), psd, atol=1e-9)

    def test_offdiagonal_example(self):
        got = positive_part_hermitian(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert np.allclose(got, np.full((2, 2), 0.5), atol=1e-12)

    def test_idempotent(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            a = random_hermitian(rng, 4)
            once = positive_part_hermitian(a)
            twice = positive_part_hermitian(once)
            assert np.allclose(once, twice, atol=1e-9)

    def test_monotone_on_commuting_pairs(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            a = random_hermitian(rng, 3)
            w, u = np.linalg.eigh(a)
            bigger = hermitize((u * (w + rng.uniform(0, 1, 3))) @ u.conj().T)
            pa = positive_part_hermitian(a)
            pb = positive_part_hermitian(bigger)
            assert np.linalg.eigvalsh(pb - pa)[0] >= -1e-9

    def test_rejects_non_hermitian(self):
        with pytest.raises(DomainError):
            positive_part_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestGramianSqrt:
    def test_scaled_identity(self):
        assert np.allclose(gramian_sqrt(ChannelMatrix(2 * np.eye(2))), 2 * np.eye(2))
        assert np.allclose(gramian_sqrt(ChannelMatrix(np.eye(3))), np.eye(3))

    def test_reconstruction(self, h_4x3):
        k = gramian_sqrt(h_4x3)
        gram = h_4x3.gramian
        assert np.linalg.norm(k @ k - gram) <= 1e-8 * np.linalg.norm(gram)

    def test_rank_deficient_rejected(self, h_2x3):
        with pytest.raises(DomainError):
            gramian_sqrt(h_2x3)


class TestKktResidual:
    def test_zero_input_is_not_stationary(self, h_3x3):
        c = PowerConstraints(1.0, np.ones(3))
        assert kkt_residual(h_3x3, c, np.zeros((3, 3))) > 0.01

    def test_converged_solution_is_stationary(self, h_3x3):
        from mimocap.basic import solve_basic
        c = PowerConstraints(2.0, np.array([0.9, 0.8, 0.7]))
        rep = solve_basic(h_3x3, c)
        assert kkt_residual(h_3x3, c, rep.q_opt) <= 1e-6

    def test_unitrank_solution_is_stationary(self):
        from mimocap.channelio import random_unit_rank_channel
        from mimocap.unitrank import solve_unitrank
        rng = np.random.default_rng(7)
        h = random_unit_rank_channel(2, 4, rng)
        c = PowerConstraints(1.0, np.array([0.4, 0.5, 0.3, 0.6]))
        rep = solve_unitrank(h, c)
        assert kkt_residual(h, c, rep.q_opt) <= 1e-8

    def test_infeasible_rejected(self, h_3x3):
        c = PowerConstraints(0.5, np.array([0.1, 0.1, 0.1]))
        with pytest.raises(DomainError):
            kkt_residual(h_3x3, c, np.eye(3))
