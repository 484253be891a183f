"""
Unit tests for the dense linear-algebra kernels.
"""
import pytest
import numpy as np

from numkernel import (
    eig_dense,
    hard_threshold_coefficient,
    lstsq,
    optimal_rank,
    stage_timer,
    svd_truncated,
    thin_svd,
)


class TestSvd:
    """Test thin and truncated SVD."""

    def test_full_rank_reconstruction(self):
        """A full-rank thin SVD reproduces M."""
        M = np.random.default_rng(0).standard_normal((30, 8))
        svd = thin_svd(M)
        assert svd.k == 8
        assert np.allclose(svd.reconstruct(), M, atol=1e-12)

    def test_orthonormal_factors(self):
        """U and V have orthonormal columns."""
        M = np.random.default_rng(1).standard_normal((40, 10)) + 1j * np.random.default_rng(2).standard_normal((40, 10))
        svd = svd_truncated(M, 4)
        assert np.allclose(svd.U.conj().T @ svd.U, np.eye(4), atol=1e-10)
        assert np.allclose(svd.V.conj().T @ svd.V, np.eye(4), atol=1e-10)

    def test_sign_convention(self):
        """Each U column's largest-magnitude entry is real-positive."""
        M = np.random.default_rng(3).standard_normal((20, 6))
        svd = thin_svd(M)
        pivots = svd.U[np.argmax(np.abs(svd.U), axis=0), np.arange(6)]
        assert np.all(pivots > 0)

    def test_eckart_young(self):
        """Rank-k truncation error equals the tail of the spectrum."""
        M = np.random.default_rng(4).standard_normal((25, 12))
        svd = svd_truncated(M, 5)
        error = np.linalg.norm(M - svd.reconstruct())
        assert error == pytest.approx(np.sqrt(np.sum(svd.spectrum[5:] ** 2)))

    def test_rank_one(self):
        """k=1 on an outer product is exact."""
        u, v = np.arange(1.0, 6.0), np.arange(1.0, 4.0)
        svd = svd_truncated(np.outer(u, v), 1)
        assert np.allclose(svd.reconstruct(), np.outer(u, v))

    def test_k_out_of_range(self):
        """k above min(rows, cols) is rejected."""
        with pytest.raises(ValueError):
            svd_truncated(np.ones((3, 2)), 3)

    def test_singular_values_match_gram_eigenvalues(self):
        """Singular values equal the square roots of the eigenvalues of M^T M on small matrices."""
        rng = np.random.default_rng(2)
        for rows, cols in [(3, 3), (8, 5), (5, 8), (8, 8)]:
            M = rng.standard_normal((rows, cols))
            gram = np.linalg.eigvalsh(M.T @ M)[::-1][:min(rows, cols)]
            assert np.allclose(thin_svd(M).S, np.sqrt(np.clip(gram, 0.0, None)), rtol=1e-8, atol=1e-10)

    def test_non_finite(self):
        """NaN input is rejected."""
        with pytest.raises(ValueError, match="non-finite"):
            thin_svd(np.array([[1.0, np.nan]]))


class TestEigLstsq:
    """Test eigendecomposition and least squares."""

    def test_eig_residual(self):
        """A W = W diag(lambda) with unit eigenvectors."""
        A = np.random.default_rng(5).standard_normal((6, 6))
        eig = eig_dense(A)
        assert np.allclose(A @ eig.W, eig.W * eig.lambdas, atol=1e-10)
        assert np.allclose(np.linalg.norm(eig.W, axis=0), 1.0)
        assert not eig.defective

    def test_rotation_eigenvalues(self):
        """A rotation has eigenvalues e^{+-i theta}."""
        theta = 0.3
        A = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        lambdas = np.sort_complex(eig_dense(A).lambdas)
        assert np.allclose(lambdas, [np.exp(-1j * theta), np.exp(1j * theta)])

    def test_eig_requires_square(self):
        """Non-square input is rejected."""
        with pytest.raises(ValueError):
            eig_dense(np.ones((2, 3)))

    def test_lstsq_minimum_norm(self):
        """Underdetermined systems get the minimum-norm solution."""
        x = lstsq(np.array([[1.0, 1.0]]), np.array([2.0]))
        assert np.allclose(x, [1.0, 1.0])

    def test_trace_and_determinant(self):
        """trace(A) = sum of eigenvalues and det(A) = their product on random k <= 8."""
        rng = np.random.default_rng(21)
        for k in range(1, 9):
            A = rng.standard_normal((k, k))
            lambdas = eig_dense(A).lambdas
            assert np.sum(lambdas) == pytest.approx(np.trace(A), rel=1e-8, abs=1e-8)
            assert np.prod(lambdas) == pytest.approx(np.linalg.det(A), rel=1e-8, abs=1e-8)

    def test_companion_matrix(self):
        """The companion matrix of z^2 - 3z + 2 has eigenvalues 1 and 2."""
        A = np.array([[3.0, -2.0], [1.0, 0.0]])
        lambdas = np.sort(eig_dense(A).lambdas.real)
        assert np.allclose(lambdas, [1.0, 2.0], atol=1e-12)

    def test_lstsq_rank_deficient_matches_pseudoinverse(self):
        """A rank-deficient system gets the pseudoinverse solution, the shortest residual minimizer."""
        rng = np.random.default_rng(4)
        A = rng.standard_normal((6, 4))
        A[:, 2] = 0.0
        b = rng.standard_normal(6)
        U, S, Vh = np.linalg.svd(A)
        keep = S > 1e-12 * S[0]
        assert np.count_nonzero(keep) == 3
        oracle = Vh[keep].T @ ((U[:, keep].T @ b) / S[keep])
        x = lstsq(A, b)
        assert np.allclose(x, oracle, atol=1e-10)
        assert abs(x[2]) <= 1e-12
        other = x.copy()
        other[2] = 0.5
        assert np.linalg.norm(A @ other - b) == pytest.approx(np.linalg.norm(A @ x - b), rel=1e-12)
        assert np.linalg.norm(x) < np.linalg.norm(other)

    def test_lstsq_wide_minimum_norm(self):
        """An underdetermined full-row-rank system matches the pseudoinverse oracle."""
        rng = np.random.default_rng(5)
        A = rng.standard_normal((3, 6))
        b = rng.standard_normal(3)
        U, S, Vh = np.linalg.svd(A, full_matrices=False)
        oracle = Vh.T @ ((U.T @ b) / S)
        assert np.allclose(lstsq(A, b), oracle, atol=1e-10)

    def test_lstsq_complex(self):
        """Complex systems are solved."""
        rng = np.random.default_rng(6)
        A = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
        x_true = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        assert np.allclose(lstsq(A, A @ x_true), x_true, atol=1e-10)

    def test_lstsq_shape_mismatch(self):
        """Row counts must agree."""
        with pytest.raises(ValueError, match="Shape mismatch"):
            lstsq(np.ones((3, 2)), np.ones(2))


class TestOptimalRank:
    """Test hard-threshold rank selection."""

    def test_square_coefficient(self):
        """omega(1) is about 2.858."""
        assert hard_threshold_coefficient(1.0) == pytest.approx(2.86, abs=1e-9)

    def test_never_below_one(self):
        """A flat spectrum still yields rank 1."""
        assert optimal_rank(np.ones(10), 10, 10) == 1

    def test_scale_invariant(self):
        """optimal_rank(cS) = optimal_rank(S) for c > 0."""
        rng = np.random.default_rng(9)
        for trial in range(20):
            S = np.sort(np.concatenate([rng.uniform(5.0, 10.0, size=trial % 5 + 1), rng.uniform(0.5, 1.0, size=30)]))[::-1]
            base = optimal_rank(S, 40, 60)
            for c in (2.0 ** -20, 0.25, 3.7, 1e6):
                assert optimal_rank(c * S, 40, 60) == base

    def test_recovers_planted_rank(self):
        """Planted rank r in 1..8 at SNR 1e3 on 200x200 is recovered in at least 95 of 100 trials."""
        hits = 0
        for trial in range(100):
            rng = np.random.default_rng(trial)
            r = 1 + trial % 8
            U, _ = np.linalg.qr(rng.standard_normal((200, r)))
            V, _ = np.linalg.qr(rng.standard_normal((200, r)))
            signal = U @ np.diag(rng.uniform(1.0, 2.0, size=r)) @ V.T
            noise = rng.standard_normal((200, 200))
            noise *= np.linalg.norm(signal) / (1e3 * np.linalg.norm(noise))
            S = np.linalg.svd(signal + noise, compute_uv=False)
            hits += optimal_rank(S, 200, 200) == r
        assert hits >= 95


class TestStageTimer:
    """Test stage timing accumulation."""

    def test_accumulates(self):
        """Repeated stages add up."""
        timings = {}
        for _ in range(2):
            with stage_timer(timings, "svd"):
                pass
        assert set(timings) == {"svd"}
        assert timings["svd"] >= 0.0

    def test_records_on_error(self):
        """Timing is recorded even when the block raises."""
        timings = {}
        with pytest.raises(RuntimeError):
            with stage_timer(timings, "eig"):
                raise RuntimeError("boom")
        assert "eig" in timings
