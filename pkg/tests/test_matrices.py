"""
Tests for the dense kernels and SPD certificates.
"""

import numpy as np
import pytest

from pcsplit.errors import DimensionError, RankDeficientError, SingularMatrixError
from pcsplit.matrices import (
    BlockLowerOnes, as_matrix, block_row_ones, build_L_inv_T, dense_solve, factorize,
    least_squares_recover, numerical_rank, range_projection, require_full_column_rank, spd_check,
)


class TestSpdCheck:
    """spd_check verdicts and reported quantities."""

    @pytest.mark.unit
    def test_identity_is_spd(self):
        cert = spd_check(np.eye(3))
        assert cert.is_spd
        assert cert.min_eig == pytest.approx(1.0)
        assert cert.symmetry_defect == 0.0

    @pytest.mark.unit
    def test_singular_is_not_spd(self):
        cert = spd_check(np.array([[1.0, 1.0], [1.0, 1.0]]))
        assert not cert.is_spd
        assert cert.min_eig == pytest.approx(0.0, abs=1e-14)

    @pytest.mark.unit
    def test_asymmetric_is_not_spd(self):
        cert = spd_check(np.array([[2.0, 1.0], [0.0, 2.0]]))
        assert not cert.is_spd
        assert cert.symmetry_defect > 0.1

    @pytest.mark.unit
    def test_scale_makes_tiny_eigenvalues_fail(self):
        S = 1e-12 * np.eye(2)
        assert spd_check(S).is_spd
        assert not spd_check(S, scale=100.0).is_spd

    @pytest.mark.unit
    def test_rejects_non_square(self):
        with pytest.raises(DimensionError):
            spd_check(np.ones((2, 3)))

    @pytest.mark.unit
    def test_to_json_keys(self):
        assert set(spd_check(np.eye(2)).to_json()) == {'is_spd', 'min_eig', 'symmetry_defect'}


class TestFactorization:
    """LU factorization and solves."""

    @pytest.mark.unit
    def test_solve_and_transpose_solve(self, full_rank):
        A = full_rank(4, 4)
        b = np.arange(4.0)
        f = factorize(A)
        np.testing.assert_allclose(A @ f.solve(b), b, atol=1e-10)
        np.testing.assert_allclose(A.T @ f.solve(b, trans=1), b, atol=1e-10)

    @pytest.mark.unit
    def test_singular_reports_pivot(self):
        with pytest.raises(SingularMatrixError) as exc:
            dense_solve(np.array([[1.0, 2.0], [2.0, 4.0]]), np.ones(2))
        assert exc.value.pivot < 1e-10

    @pytest.mark.unit
    def test_wrong_rhs_length(self):
        with pytest.raises(DimensionError):
            factorize(np.eye(2)).solve(np.ones(3))

    @pytest.mark.unit
    def test_as_matrix_rejects_nan(self):
        with pytest.raises(ValueError, match="non-finite"):
            as_matrix([[1.0, np.nan]])

    @pytest.mark.unit
    def test_as_matrix_scalar(self):
        assert as_matrix(3.0).shape == (1, 1)


class TestRank:
    """Column-rank checks and least-squares recovery."""

    @pytest.mark.unit
    def test_rank_deficient_raises(self):
        A = np.array([[1.0, 2.0], [2.0, 4.0], [0.0, 0.0]])
        assert numerical_rank(A) == 1
        with pytest.raises(RankDeficientError, match="rank 1 < 2"):
            require_full_column_rank(A, 'B')

    @pytest.mark.unit
    def test_wide_matrix_is_rank_deficient(self):
        with pytest.raises(RankDeficientError):
            require_full_column_rank(np.ones((1, 2)))

    @pytest.mark.unit
    def test_recover_inverts_image(self, full_rank):
        A = full_rank(5, 3)
        x = np.array([1.0, -2.0, 0.5])
        np.testing.assert_allclose(least_squares_recover(A, A @ x), x, atol=1e-10)

    @pytest.mark.unit
    def test_range_projection_is_idempotent(self, full_rank, rng):
        A = full_rank(5, 2)
        r = rng.standard_normal(5)
        once = range_projection(A, r)
        np.testing.assert_allclose(range_projection(A, once), once, atol=1e-10)
        np.testing.assert_allclose(A.T @ (r - once), np.zeros(2), atol=1e-10)


class TestBlockMatrices:
    """The multi-block constructors 𝓛, 𝓔 and 𝓛⁻ᵀ."""

    @pytest.mark.unit
    @pytest.mark.parametrize("p,m", [(1, 1), (3, 1), (4, 2), (5, 3)])
    def test_inverse_transpose(self, p, m):
        L = BlockLowerOnes(p, m).materialize()
        np.testing.assert_allclose(L.T @ build_L_inv_T(p, m), np.eye(p * m), atol=1e-14)

    @pytest.mark.unit
    @pytest.mark.parametrize("p,m", [(3, 1), (4, 2)])
    def test_symmetric_part_identity(self, p, m):
        L = BlockLowerOnes(p, m).materialize()
        E = block_row_ones(p, m)
        np.testing.assert_allclose(L + L.T, np.eye(p * m) + E.T @ E, atol=1e-14)

    @pytest.mark.unit
    def test_apply_matches_materialized(self, rng):
        L = BlockLowerOnes(4, 2)
        d = rng.standard_normal(8)
        np.testing.assert_allclose(L.apply_inverse_transpose(d), L.inverse_transpose() @ d, atol=1e-14)

    @pytest.mark.unit
    def test_rejects_empty(self):
        with pytest.raises(DimensionError):
            BlockLowerOnes(0, 2)
