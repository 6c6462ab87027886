"""
Tests for the exact block subproblem solvers.
"""

import numpy as np
import pytest

from pcsplit.errors import UnsupportedSubproblemError
from pcsplit.problem import L1, Block, Box, BoxIndicator, Free, LambdaSet, Quadratic, Zero
from pcsplit.subproblems import (
    SolvabilityClass, SubproblemSpec, classify, orthogonal_scale, project_lambda, prox,
    soft_threshold, solve_subproblem, unsupported_reason,
)


def _objective(spec: SubproblemSpec):
    def f(x: np.ndarray) -> float:
        r = spec.A @ x + spec.shift
        return spec.theta.value(x) + spec.linear @ x + 0.5 * spec.beta * r @ r
    return f


class TestClassify:
    """Solvability classes."""

    @pytest.mark.unit
    def test_quadratic_free_is_exact(self, full_rank):
        spec = SubproblemSpec(Quadratic(np.eye(2), np.zeros(2)), full_rank(3, 2), 1.0, np.zeros(2), np.zeros(3))
        assert classify(spec) is SolvabilityClass.QUADRATIC_EXACT

    @pytest.mark.unit
    def test_l1_needs_orthogonal_columns(self, full_rank, orthonormal):
        l1 = L1(1.0, 2)
        assert classify(SubproblemSpec(l1, 3.0 * orthonormal(4, 2), 1.0, np.zeros(2), np.zeros(4))) \
            is SolvabilityClass.PROX_EXACT
        A = np.array([[1.0, 1.0], [0.0, 1.0]])
        assert classify(SubproblemSpec(l1, A, 1.0, np.zeros(2), np.zeros(2))) is SolvabilityClass.UNSUPPORTED

    @pytest.mark.unit
    def test_quadratic_on_box_needs_diagonal_P(self):
        box = Box(np.zeros(2), np.ones(2))
        diag = Quadratic(np.diag([1.0, 2.0]), np.zeros(2))
        full = Quadratic(np.array([[2.0, 1.0], [1.0, 2.0]]), np.zeros(2))
        assert classify(SubproblemSpec(diag, np.eye(2), 1.0, np.zeros(2), np.zeros(2), box)) \
            is SolvabilityClass.PROX_EXACT
        assert classify(SubproblemSpec(full, np.eye(2), 1.0, np.zeros(2), np.zeros(2), box)) \
            is SolvabilityClass.UNSUPPORTED

    @pytest.mark.unit
    def test_unsupported_raises(self):
        spec = SubproblemSpec(Zero(2), np.array([[1.0, 1.0], [0.0, 1.0]]), 1.0, np.zeros(2), np.zeros(2))
        with pytest.raises(UnsupportedSubproblemError, match="Zero with a non-orthogonal A has no exact solver"):
            solve_subproblem(spec)

    @pytest.mark.unit
    def test_unsupported_reports_the_cause(self):
        box = Box(np.zeros(2), np.ones(2))
        full = Quadratic(np.array([[2.0, 1.0], [1.0, 2.0]]), np.zeros(2))
        spec = SubproblemSpec(full, np.eye(2), 1.0, np.zeros(2), np.zeros(2), box)
        with pytest.raises(UnsupportedSubproblemError, match="non-diagonal P on a box") as exc:
            solve_subproblem(spec)
        assert "orthogonal" not in str(exc.value)
        assert unsupported_reason(spec.block) == "Quadratic with a non-diagonal P on a box"
        assert unsupported_reason(Block(full, np.eye(2))) is None

    @pytest.mark.unit
    def test_orthogonal_scale(self, orthonormal):
        assert orthogonal_scale(2.0 * orthonormal(3, 2)) == pytest.approx(4.0)
        assert orthogonal_scale(np.array([[1.0, 1.0], [0.0, 1.0]])) is None


class TestProx:
    """Componentwise proximal maps."""

    @pytest.mark.unit
    def test_soft_threshold(self):
        np.testing.assert_array_equal(soft_threshold(np.array([-2.0, -0.5, 0.0, 0.5, 2.0]), 1.0),
                                      [-1.0, 0.0, 0.0, 0.0, 1.0])

    @pytest.mark.unit
    def test_box_indicator_clips(self):
        theta = BoxIndicator(np.array([0.0, 0.0]), np.array([1.0, 1.0]))
        np.testing.assert_array_equal(prox(theta, Free(), np.array([-1.0, 2.0]), 1.0), [0.0, 1.0])

    @pytest.mark.unit
    def test_l1_then_box(self):
        x = prox(L1(1.0, 1), Box(np.array([-0.5]), np.array([0.5])), np.array([3.0]), 1.0)
        assert x[0] == 0.5

    @pytest.mark.unit
    def test_diagonal_quadratic(self):
        x = prox(Quadratic(np.diag([1.0, 3.0]), np.array([1.0, 0.0])), Free(), np.array([2.0, 4.0]), 1.0)
        np.testing.assert_allclose(x, [0.5, 1.0])

    @pytest.mark.unit
    def test_project_lambda(self):
        lam = np.array([-1.0, 2.0])
        np.testing.assert_array_equal(project_lambda(lam, LambdaSet.NONNEG), [0.0, 2.0])
        np.testing.assert_array_equal(project_lambda(lam, LambdaSet.FREE), lam)


class TestSolveSubproblem:
    """Exact solves are optimal."""

    @pytest.mark.unit
    def test_quadratic_matches_normal_equations(self, full_rank, rng):
        A = full_rank(4, 3)
        P = np.diag([1.0, 2.0, 0.0])
        spec = SubproblemSpec(Quadratic(P, rng.standard_normal(3)), A, 2.0,
                              rng.standard_normal(3), rng.standard_normal(4))
        x = solve_subproblem(spec)
        grad = spec.theta.gradient(x) + spec.linear + spec.beta * A.T @ (A @ x + spec.shift)
        np.testing.assert_allclose(grad, np.zeros(3), atol=1e-10)

    @pytest.mark.unit
    @pytest.mark.parametrize("theta,cset", [
        (L1(0.7, 2), Free()),
        (Zero(2), Box(np.array([-0.2, -0.2]), np.array([0.2, 0.2]))),
        (BoxIndicator(np.array([0.0, -1.0]), np.array([1.0, 0.0])), Free()),
        (Quadratic(np.diag([1.0, 0.5]), np.array([0.3, -0.3])), Box(np.array([-0.1, -0.1]), np.array([0.1, 0.1]))),
    ])
    def test_prox_exact_is_optimal(self, theta, cset, orthonormal, rng):
        A = 1.5 * orthonormal(3, 2)
        spec = SubproblemSpec(theta, A, 1.3, rng.standard_normal(2), rng.standard_normal(3), cset)
        x = solve_subproblem(spec)
        f = _objective(spec)
        lo = np.full(2, -np.inf)
        hi = np.full(2, np.inf)
        for box in (theta, cset):
            if isinstance(box, (Box, BoxIndicator)):
                lo, hi = np.maximum(lo, box.lo), np.minimum(hi, box.hi)
        assert np.all(x >= lo - 1e-12) and np.all(x <= hi + 1e-12)
        # no feasible perturbation improves on x
        for _ in range(200):
            y = np.clip(x + 0.05 * rng.standard_normal(2), lo, hi)
            assert f(y) >= f(x) - 1e-12

    @pytest.mark.unit
    def test_l1_closed_form(self, orthonormal, rng):
        A = orthonormal(3, 2)
        spec = SubproblemSpec(L1(0.4, 2), A, 1.0, rng.standard_normal(2), rng.standard_normal(3))
        expected = soft_threshold(-(spec.linear + A.T @ spec.shift), 0.4)
        np.testing.assert_allclose(solve_subproblem(spec), expected, atol=1e-12)
