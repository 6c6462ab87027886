"""
Tests for convergence certificates, the contraction monitor and the oracle.
"""

from unittest.mock import patch

import numpy as np
import pytest

from pcsplit.certify import ContractionMonitor, certify, monitor_step, reference_solution
from pcsplit.correction import AlphaBlend, Preset, PresetName, build_plan, correct_dense
from pcsplit.errors import DimensionError, MissingReferenceError, OracleError
from pcsplit.fixtures import FIXTURES
from pcsplit.predictors import Order, q_multiblock, scprsm_matrices
from pcsplit.problem import L1, Block, ProblemInstance, Quadratic, kkt_residual
from pcsplit.solver import RunConfig, SchemeName, make_runner


class TestCertificate:
    """certify() verdicts."""

    @pytest.mark.unit
    def test_scprsm_half_is_ok(self):
        cert = certify(*scprsm_matrices(FIXTURES['qp2'].problem, 1.0, 0.5))
        assert cert.ok
        assert cert.failures() == []
        assert cert.hm_residual <= 1e-14

    @pytest.mark.unit
    def test_scprsm_one_is_not_ok(self):
        cert = certify(*scprsm_matrices(FIXTURES['qp2'].problem, 1.0, 1.0))
        assert not cert.ok
        assert any(f.startswith("G not SPD") for f in cert.failures())
        assert any(f.startswith("Qᵀ+Q not SPD") for f in cert.failures())

    @pytest.mark.unit
    def test_profit_eigenvalue_scales_with_damping(self):
        # G = (1 − μ)·[[1, −1], [−1, 2]] on qp2 with β = 1
        base = (3.0 - np.sqrt(5.0)) / 2.0
        for mu in (0.1, 0.5, 0.9, 0.99):
            cert = certify(*scprsm_matrices(FIXTURES['qp2'].problem, 1.0, mu))
            assert cert.g_cert.min_eig == pytest.approx((1.0 - mu) * base, rel=1e-9)

    @pytest.mark.unit
    def test_proximal_point(self, rng):
        R = rng.standard_normal((3, 3))
        Q = R.T @ R + np.eye(3)
        alpha = 0.8
        cert = certify(Q, alpha * np.eye(3), Q / alpha, (2.0 - alpha) * Q)
        assert cert.ok

    @pytest.mark.unit
    def test_wrong_H_is_caught(self):
        Q = 2.0 * np.eye(2)
        cert = certify(Q, np.eye(2), np.eye(2), np.eye(2))
        assert not cert.ok
        assert cert.failures()[0].startswith("HM ≠ Q")

    @pytest.mark.unit
    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            certify(np.eye(2), np.eye(2), np.eye(3), np.eye(2))

    @pytest.mark.unit
    def test_to_json(self):
        cert = certify(*scprsm_matrices(FIXTURES['qp2'].problem, 1.0, 0.5))
        data = cert.to_json()
        assert set(data) == {'ok', 'hm_residual', 'H', 'G', 'QtQ'}
        assert data['ok'] is True

    @pytest.mark.slow
    @pytest.mark.parametrize("columns", ['orthonormal', 'full_rank'])
    @pytest.mark.parametrize("nu", [0.1, 0.5, 0.9])
    @pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
    def test_schemes_certify_on_random_blocks(self, beta, nu, columns, request, rng):
        draw = request.getfixturevalue(columns)

        def problem(count: int) -> ProblemInstance:
            m = int(rng.integers(1, 7))
            blocks = []
            for _ in range(count):
                n = int(rng.integers(1, min(m, 4) + 1))
                blocks.append(Block(Quadratic(np.eye(n), np.zeros(n)), draw(m, n)))
            return ProblemInstance(tuple(blocks), rng.standard_normal(m))

        for _ in range(12):
            cases = [(problem(3), scheme) for scheme in
                     (SchemeName.GS3_ALG1, SchemeName.GS3_ALG2, SchemeName.GS3_ALG3)]
            multi = problem(int(rng.integers(3, 6)))
            cases += [(multi, scheme) for scheme in (SchemeName.MULTI_PD, SchemeName.MULTI_DP)]
            two = problem(2)
            for p, scheme in cases:
                cert = make_runner(p, RunConfig(scheme=scheme, beta=beta, nu=nu)).plan.certificate
                assert cert.ok, (scheme, p.dims, cert.failures())
                assert cert.hm_residual <= 1e-10
            for mu in (0.1, 0.5, 0.9):
                cert = make_runner(two, RunConfig(scheme=SchemeName.SCPRSM, beta=beta, mu=mu)).plan.certificate
                assert cert.ok, (mu, two.dims, cert.failures())
                assert cert.hm_residual <= 1e-10

    @pytest.mark.unit
    def test_multiblock_plan_on_scaled_coordinates(self, random_problem):
        p = random_problem(3, 2)
        pm = q_multiblock(p, 1.0, Order.PD)
        plan = build_plan(pm.calQ, Preset(PresetName.MULTI_PD, (2,) * 4, 0.5))
        assert plan.certificate.ok


class TestMonitor:
    """The contraction inequality per step."""

    @staticmethod
    def _plan():
        return build_plan(np.array([[2.0, 0.0], [1.0, 2.0]]), AlphaBlend(0.5))

    @pytest.mark.unit
    def test_at_the_solution(self):
        plan = self._plan()
        v_star = np.array([1.0, -1.0])
        record = monitor_step(plan, v_star, correct_dense(plan, v_star, v_star), v_star, v_star)
        assert record.slack == pytest.approx(0.0, abs=1e-14)
        assert not record.violated

    @pytest.mark.unit
    def test_corrupted_step_is_flagged(self, caplog):
        plan = self._plan()
        v_star = np.zeros(2)
        v_k = np.array([1.0, 1.0])
        v_tilde = np.array([0.5, 0.5])
        good = monitor_step(plan, v_k, correct_dense(plan, v_k, v_tilde), v_tilde, v_star)
        assert not good.violated
        with caplog.at_level('WARNING', logger='pcsplit'):
            bad = monitor_step(plan, v_k, np.array([5.0, 5.0]), v_tilde, v_star, k=7)
        assert bad.violated
        assert bad.k == 7
        assert "contraction violated at k=7" in caplog.text

    @pytest.mark.unit
    def test_needs_reference(self):
        with pytest.raises(MissingReferenceError):
            monitor_step(self._plan(), np.zeros(2), np.zeros(2), np.zeros(2), None)

    @pytest.mark.unit
    def test_monitor_accumulates(self):
        plan = self._plan()
        monitor = ContractionMonitor(plan, np.zeros(2))
        v = np.array([3.0, -2.0])
        for _ in range(20):
            # a proximal-point style prediction: ṽ = v/2 for the map v ↦ 0
            v_tilde = 0.5 * v
            v_next = correct_dense(plan, v, v_tilde)
            monitor.observe(v, v_next, v_tilde)
            v = v_next
        assert len(monitor.records) == 20
        assert [r.k for r in monitor.records] == list(range(20))
        assert monitor.violations == []
        assert monitor.nonincreasing()
        assert monitor.tail_progress(5) >= 0.0


class TestOracle:
    """reference_solution on the hand-derived fixtures."""

    @pytest.mark.unit
    @pytest.mark.parametrize("name,method", [
        ('qp2', 'kkt'),
        ('qp3', 'kkt'),
        ('multi-qp5', 'kkt'),
        ('l1-qp2', 'enumeration'),
        ('l1-qp3', 'enumeration'),
        ('box-qp3', 'enumeration'),
        ('clipped-qp3', 'enumeration'),
        ('ineq2', 'enumeration'),
        ('ineq-inactive', 'enumeration'),
    ])
    def test_matches_hand_derivation(self, name, method):
        fixture = FIXTURES[name]
        ref = reference_solution(fixture.problem)
        assert ref.method == method
        np.testing.assert_allclose(ref.w_star, fixture.w_star, atol=1e-9)
        assert ref.quality.worst <= 1e-10

    @pytest.mark.slow
    def test_long_run_on_larger_problem(self):
        # n > 3 with an ℓ₁ block rules out the first two methods
        blocks = (
            Block(Quadratic(np.eye(2), np.zeros(2)), np.eye(2)),
            Block(L1(0.3, 2), np.eye(2)),
            Block(Quadratic(np.diag([1.0, 2.0]), np.array([0.5, -0.5])), np.eye(2)),
        )
        p = ProblemInstance(blocks, np.array([2.0, -1.0]))
        ref = reference_solution(p)
        assert ref.method == 'long-run'
        assert kkt_residual(p, ref.w_star).worst <= 1e-10

    @pytest.mark.unit
    def test_keeps_the_better_candidate(self):
        p = FIXTURES['qp3'].problem
        near = FIXTURES['qp3'].w_star + 1e-7
        far = FIXTURES['qp3'].w_star + 1e-2
        with patch('pcsplit.certify._closed_form_kkt', return_value=near), \
             patch('pcsplit.certify._long_run', return_value=far):
            with pytest.raises(OracleError, match=r"oracle \(kkt\)") as exc:
                reference_solution(p)
        assert exc.value.achieved == pytest.approx(kkt_residual(p, near).worst)

    @pytest.mark.unit
    def test_long_run_replaces_a_worse_candidate(self):
        p = FIXTURES['qp3'].problem
        with patch('pcsplit.certify._closed_form_kkt', return_value=FIXTURES['qp3'].w_star + 1e-7), \
             patch('pcsplit.certify._long_run', return_value=FIXTURES['qp3'].w_star.copy()):
            ref = reference_solution(p)
        assert ref.method == 'long-run'
        assert ref.quality.worst <= 1e-10
