"""
Convergence certificates, the contraction monitor, and reference solutions.

A plan (Q, M, H, G) converges when

    H·M = Q,   H ≻ 0,   G = Qᵀ+Q − MᵀHM ≻ 0

and then every iteration satisfies

    ‖vᵏ⁺¹ − v*‖²_H ≤ ‖vᵏ − v*‖²_H − ‖vᵏ − ṽᵏ‖²_G.

`certify` checks the first set numerically; `ContractionMonitor` checks the
inequality along a run against a reference point from `reference_solution`.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg as sla
from numpy.typing import ArrayLike

from pcsplit.config import ENUMERATION_MAX_N, HM_TOL, ORACLE_MAX_ITERS, ORACLE_TOL, SLACK_TOL
from pcsplit.errors import DimensionError, MissingReferenceError, OracleError, SingularMatrixError
from pcsplit.matrices import (
    Matrix, SpdCertificate, Vector, as_matrix, as_vector, factorize, quad_norm_sq, relative_residual, spd_check,
)
from pcsplit.problem import L1, KktResidual, ProblemInstance, Quadratic, Free, Sense, kkt_residual
from pcsplit.utils import JsonObject

if TYPE_CHECKING:
    from pcsplit.correction import CorrectionPlan
    from pcsplit.predictors import IterateState, PredictionMatrix, PredictionOutput

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConvergenceCertificate:
    """Numerical check of H·M = Q, H ≻ 0, G ≻ 0 and Qᵀ+Q ≻ 0."""
    hm_residual: float
    h_cert: SpdCertificate
    g_cert: SpdCertificate
    qtq_cert: SpdCertificate

    @property
    def ok(self) -> bool:
        return (self.hm_residual <= HM_TOL and self.h_cert.is_spd
                and self.g_cert.is_spd and self.qtq_cert.is_spd)

    def failures(self) -> list[str]:
        out = []
        if self.hm_residual > HM_TOL:
            out.append(f"HM ≠ Q (relative residual {self.hm_residual:.3g})")
        for name, cert in (('H', self.h_cert), ('G', self.g_cert), ('Qᵀ+Q', self.qtq_cert)):
            if not cert.is_spd:
                out.append(f"{name} not SPD (min_eig={cert.min_eig:.3g})")
        return out

    def to_json(self) -> JsonObject:
        return {
            'ok': self.ok,
            'hm_residual': self.hm_residual,
            'H': self.h_cert.to_json(),
            'G': self.g_cert.to_json(),
            'QtQ': self.qtq_cert.to_json(),
        }


def certify(Q: ArrayLike, M: ArrayLike, H: ArrayLike, G: ArrayLike) -> ConvergenceCertificate:
    """
    Certify a correction plan.

    G is judged against ‖Qᵀ+Q‖₂ rather than its own norm, so a G that
    vanishes as a parameter approaches its limit is flagged.

    Raises:
        DimensionError: Unless all four are square of the same size.
    """
    Q, M, H, G = (as_matrix(a, name) for a, name in ((Q, 'Q'), (M, 'M'), (H, 'H'), (G, 'G')))
    shapes = {a.shape for a in (Q, M, H, G)}
    if len(shapes) != 1 or Q.shape[0] != Q.shape[1]:
        raise DimensionError(f"certify needs square matrices of one size, got {sorted(shapes)}")
    S = Q.T + Q
    return ConvergenceCertificate(
        hm_residual=relative_residual(H @ M, Q),
        h_cert=spd_check(H),
        g_cert=spd_check(G, scale=float(np.linalg.norm(S, 2))),
        qtq_cert=spd_check(S),
    )


@dataclass(frozen=True)
class ContractionRecord:
    """One iteration of the contraction inequality."""
    k: int
    dist_sq_H: float
    progress_sq_G: float
    dist_sq_H_next: float
    slack: float
    violated: bool


def monitor_step(plan: CorrectionPlan, v_k: ArrayLike, v_next: ArrayLike, v_tilde: ArrayLike,
                 v_star: ArrayLike | None, k: int = 0) -> ContractionRecord:
    """
    Evaluate ‖vᵏ − v*‖²_H − ‖vᵏ⁺¹ − v*‖²_H − ‖vᵏ − ṽᵏ‖²_G.

    Flags a violation when the slack is below −1e-8·max(1, ‖vᵏ − v*‖²_H).

    Raises:
        MissingReferenceError: If `v_star` is None.
    """
    if v_star is None:
        raise MissingReferenceError("contraction monitoring needs a reference solution")
    vk, vn, vt, vs = (as_vector(a, n) for a, n in ((v_k, 'v_k'), (v_next, 'v_next'),
                                                   (v_tilde, 'v_tilde'), (v_star, 'v_star')))
    if not vk.size == vn.size == vt.size == vs.size == plan.size:
        raise DimensionError(f"monitor vectors must all have length {plan.size}")
    dist = quad_norm_sq(plan.H, vk - vs)
    dist_next = quad_norm_sq(plan.H, vn - vs)
    progress = quad_norm_sq(plan.G, vk - vt)
    slack = dist - dist_next - progress
    violated = slack < -SLACK_TOL * max(1.0, dist)
    if violated:
        logger.warning("contraction violated at k=%d: slack %.3g", k, slack)
    return ContractionRecord(k, dist, progress, dist_next, slack, violated)


@dataclass
class ContractionMonitor:
    """Accumulates records of one sequential run."""
    plan: CorrectionPlan
    v_star: Vector
    records: list[ContractionRecord] = field(default_factory=list)

    def observe(self, v_k: Vector, v_next: Vector, v_tilde: Vector) -> ContractionRecord:
        record = monitor_step(self.plan, v_k, v_next, v_tilde, self.v_star, k=len(self.records))
        self.records.append(record)
        return record

    @property
    def violations(self) -> list[ContractionRecord]:
        return [r for r in self.records if r.violated]

    def nonincreasing(self) -> bool:
        """‖vᵏ − v*‖²_H never grows by more than the slack tolerance."""
        return all(r.dist_sq_H_next <= r.dist_sq_H + SLACK_TOL * max(1.0, r.dist_sq_H)
                   for r in self.records)

    def tail_progress(self, count: int = 100) -> float:
        tail = self.records[-count:]
        return float(np.mean([r.progress_sq_G for r in tail])) if tail else 0.0


def probe_prediction_vi(problem: ProblemInstance, state: IterateState, pred: PredictionOutput,
                        matrix: PredictionMatrix, v_k: Vector, beta: float,
                        rng: np.random.Generator, count: int = 200, radius: float = 1.0) -> float:
    """
    Smallest value over random w ∈ Ω near w̃ᵏ of

        θ(u) − θ(ũᵏ) + (w − w̃ᵏ)ᵀF(w̃ᵏ) − (v − ṽᵏ)ᵀQ(vᵏ − ṽᵏ).

    A correct predictor keeps this nonnegative up to rounding.
    """
    from pcsplit.predictors import corrected_coordinates
    from pcsplit.subproblems import project_lambda

    w_t = pred.w_tilde
    F_t = np.concatenate([*(-(b.A.T @ pred.lam_tilde) for b in problem.blocks),
                          problem.constraint_value(pred.x_tilde)])
    theta_t = problem.objective(pred.x_tilde)
    Qv = matrix.v_matrix
    rhs = Qv @ (v_k - pred.v_tilde)
    worst = math.inf
    for _ in range(count):
        w = w_t + radius * rng.standard_normal(w_t.size)
        xs, lam = problem.split(w)
        xs = [b.project(x) for b, x in zip(problem.blocks, xs)]
        lam = project_lambda(lam, problem.lambda_set)
        w = problem.stack(xs, lam)
        v = corrected_coordinates(matrix.structure, problem, beta, w)
        value = problem.objective(xs) - theta_t + (w - w_t) @ F_t - (v - pred.v_tilde) @ rhs
        worst = min(worst, float(value))
    return worst


@dataclass(frozen=True, eq=False)
class ReferenceSolution:
    """An oracle point w* with its KKT quality and the method that found it."""
    w_star: Vector
    quality: KktResidual
    method: str


def _closed_form_kkt(p: ProblemInstance) -> Vector | None:
    """[[P, −Aᵀ], [A, 0]]·(x, λ) = (−q, b) for all-quadratic equality problems."""
    if p.sense is not Sense.EQUALITY:
        return None
    if not all(isinstance(b.theta, Quadratic) and isinstance(b.set, Free) for b in p.blocks):
        return None
    P = sla.block_diag(*(b.theta.P for b in p.blocks if isinstance(b.theta, Quadratic)))
    q = np.concatenate([b.theta.q for b in p.blocks if isinstance(b.theta, Quadratic)])
    A = np.hstack(p.matrices())
    K = np.block([[P, -A.T], [A, np.zeros((p.m, p.m))]])
    try:
        return factorize(K, 'KKT matrix').solve(np.concatenate([-q, p.rhs]))
    except SingularMatrixError:
        return None


def _candidate_states(p: ProblemInstance) -> list[list[tuple[str, float]]]:
    """For each component of x, the (state, value) pairs to try."""
    options: list[list[tuple[str, float]]] = []
    for block in p.blocks:
        lo, hi = block.bounds
        weight = block.theta.weight if isinstance(block.theta, L1) else 0.0
        for j in range(block.dim):
            opts: list[tuple[str, float]] = []
            if weight > 0.0:
                opts += [('pos', weight), ('neg', -weight)]
                if lo[j] <= 0.0 <= hi[j]:
                    opts.append(('fixed', 0.0))
            else:
                opts.append(('free', 0.0))
            if math.isfinite(lo[j]):
                opts.append(('fixed', float(lo[j])))
            if math.isfinite(hi[j]) and hi[j] != lo[j]:
                opts.append(('fixed', float(hi[j])))
            options.append(opts)
    return options


def _enumerate_active_sets(p: ProblemInstance) -> Vector | None:
    """
    Brute-force oracle for n ≤ 3: try every sign/active-set pattern, solve
    the resulting linear KKT system, and keep the best point.
    """
    n, m = p.n, p.m
    P = np.zeros((n, n))
    q = np.zeros(n)
    for block, start in zip(p.blocks, p.offsets):
        if isinstance(block.theta, Quadratic):
            P[start:start + block.dim, start:start + block.dim] = block.theta.P
            q[start:start + block.dim] = block.theta.q
    A = np.hstack(p.matrices())
    row_options = [(True, False)] * m if p.sense is Sense.GREATER_EQUAL else [(True,)] * m
    best: tuple[float, Vector] | None = None
    for states in itertools.product(*_candidate_states(p)):
        free = [k for k, (kind, _) in enumerate(states) if kind != 'fixed']
        fixed = [k for k, (kind, _) in enumerate(states) if kind == 'fixed']
        x = np.zeros(n)
        for k in fixed:
            x[k] = states[k][1]
        shift = np.array([states[k][1] if states[k][0] in ('pos', 'neg') else 0.0 for k in free])
        for rows in itertools.product(*row_options):
            act = [r for r in range(m) if rows[r]]
            nf, na = len(free), len(act)
            K = np.zeros((nf + na, nf + na))
            rhs = np.zeros(nf + na)
            K[:nf, :nf] = P[np.ix_(free, free)]
            K[:nf, nf:] = -A[np.ix_(act, free)].T
            K[nf:, :nf] = A[np.ix_(act, free)]
            rhs[:nf] = -q[free] - shift - P[np.ix_(free, fixed)] @ x[fixed]
            rhs[nf:] = p.rhs[act] - A[np.ix_(act, fixed)] @ x[fixed]
            if K.size:
                z, *_ = sla.lstsq(K, rhs)
                if np.linalg.norm(K @ z - rhs) > 1e-9 * (1.0 + np.linalg.norm(rhs)):
                    continue
            else:
                z = np.zeros(0)
            xc = x.copy()
            xc[free] = z[:nf]
            lam = np.zeros(m)
            lam[act] = z[nf:]
            w = np.concatenate([xc, lam])
            worst = kkt_residual(p, w).worst
            if best is None or worst < best[0]:
                best = (worst, w)
    if best is None or not math.isfinite(best[0]):
        return None
    return best[1]


def _long_run(p: ProblemInstance) -> Vector:
    from pcsplit.solver import RunConfig, SchemeName, run

    if p.p == 3 and p.sense is Sense.EQUALITY:
        scheme = SchemeName.GS3_ALG3
    elif p.sense is Sense.GREATER_EQUAL:
        scheme = SchemeName.MULTI_DP
    else:
        scheme = SchemeName.MULTI_PD
    config = RunConfig(scheme=scheme, nu=0.9, max_iters=ORACLE_MAX_ITERS, tol=0.0, kkt_tol=ORACLE_TOL)
    logger.info("oracle: long certified run with %s", scheme)
    return run(p, config).solution.w_tilde


def reference_solution(p: ProblemInstance) -> ReferenceSolution:
    """
    An oracle solution, independent of the scheme under test where possible.

    Tried in order: the KKT linear system for all-quadratic equality
    problems; enumeration of sign and active-set patterns when n ≤ 3; a long
    certified run (alg3 for three blocks, otherwise multi-block PD, or DP for
    ≥ constraints) stopped at KKT residual 1e-10.

    Raises:
        OracleError: If the best point misses the oracle tolerance.
    """
    candidates: list[tuple[str, Vector]] = []
    w = _closed_form_kkt(p)
    if w is not None:
        candidates.append(('kkt', w))
    elif p.n <= ENUMERATION_MAX_N:
        w = _enumerate_active_sets(p)
        if w is not None:
            candidates.append(('enumeration', w))
    if w is None or kkt_residual(p, w).worst > ORACLE_TOL:
        candidates.append(('long-run', _long_run(p)))
    scored = [(kkt_residual(p, point), method, point) for method, point in candidates]
    quality, method, w_star = min(scored, key=lambda c: c[0].worst)
    if quality.worst > ORACLE_TOL:
        raise OracleError(f"oracle ({method}) did not reach {ORACLE_TOL:g}", achieved=quality.worst)
    logger.info("oracle: %s, residual %.3g", method, quality.worst)
    return ReferenceSolution(w_star=w_star, quality=quality, method=method)
