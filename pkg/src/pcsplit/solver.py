"""
The prediction-correction driver.

A run validates the problem for its predictor, builds and certifies the
correction plan, then alternates prediction and correction until the step
‖vᵏ − ṽᵏ‖∞ and the primal residual both fall below the tolerance, or the
iteration cap is hit.

Use `run` directly, `compare` for several schemes on one problem, or
`invoke_run` for a `RunResult` record as the CLI consumes it.
"""

from __future__ import annotations

import csv
import logging
import math
from abc import ABC, abstractmethod
from collections.abc import Callable, Generator, Sequence
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from enum import StrEnum
from functools import cached_property
from pathlib import Path
from typing import Final, TextIO

import numpy as np
from numpy.typing import ArrayLike

from pcsplit.certify import ContractionMonitor, ContractionRecord, certify, reference_solution
from pcsplit.config import DEFAULT_ALPHA, DEFAULT_MAX_ITERS, DEFAULT_NU, DEFAULT_TOL
from pcsplit.correction import (
    AlphaBlend, CorrectionPlan, FromD, FromG, Gs3Images, Preset, PresetName, SplitChoice,
    build_plan, correct_dense, correct_gs3_structured, correct_multiblock,
)
from pcsplit.errors import CertificationError, PcsplitError, ValidationError
from pcsplit.matrices import Matrix, Vector, as_matrix, least_squares_recover, quad_norm_sq, symmetrize
from pcsplit.predictors import (
    IterateState, Order, PredictionMatrix, PredictionOutput, ScPrsmMatrices, Structure, corrected_coordinates,
    gs3_prediction_matrix, predict_gs3, predict_multiblock, predict_scprsm, q_multiblock, scprsm_matrices,
    split_xi, xi_from,
)
from pcsplit.problem import KktResidual, PredictorKind, ProblemInstance, Sense, kkt_residual, validate_problem
from pcsplit.utils import JsonObject, RunResult, error_result, format_float, json_number, to_json_array

logger = logging.getLogger(__name__)

EXIT_OK: Final[int] = 0
EXIT_ERROR: Final[int] = 1
EXIT_ITERATION_CAP: Final[int] = 2

TRACE_HEADER: Final[tuple[str, ...]] = (
    'k', 'primal_res', 'dual_res', 'pred_norm', 'dist_sq_H', 'progress_sq_G', 'slack',
)
COMPARE_HEADER: Final[tuple[str, ...]] = (
    'scheme', 'status', 'iterations', 'primal_res', 'dual_res', 'compl_res', 'total_progress_G', 'reason',
)


class SchemeName(StrEnum):
    SCPRSM = 'scprsm'
    GS3_ALG1 = 'gs3-alg1'
    GS3_ALG2 = 'gs3-alg2'
    GS3_ALG3 = 'gs3-alg3'
    MULTI_PD = 'multi-pd'
    MULTI_DP = 'multi-dp'
    MULTI_PD_G = 'multi-pd-g'
    MULTI_DP_G = 'multi-dp-g'
    CUSTOM = 'custom-split'


_GS3_SCHEMES: Final = {
    SchemeName.GS3_ALG1: PresetName.ALG1,
    SchemeName.GS3_ALG2: PresetName.ALG2,
    SchemeName.GS3_ALG3: PresetName.ALG3,
}
_MULTI_SCHEMES: Final = {
    SchemeName.MULTI_PD: (Order.PD, PresetName.MULTI_PD),
    SchemeName.MULTI_DP: (Order.DP, PresetName.MULTI_DP),
    SchemeName.MULTI_PD_G: (Order.PD, PresetName.MULTI_PD_G),
    SchemeName.MULTI_DP_G: (Order.DP, PresetName.MULTI_DP_G),
}


class RunStatus(StrEnum):
    CONVERGED = 'converged'
    ITERATION_CAP = 'iteration-cap'
    REJECTED = 'rejected'

    @property
    def exit_code(self) -> int:
        match self:
            case RunStatus.CONVERGED:
                return EXIT_OK
            case RunStatus.ITERATION_CAP:
                return EXIT_ITERATION_CAP
            case _:
                return EXIT_ERROR


def _open_unit(name: str, value: float, *, closed_right: bool = False) -> None:
    upper_ok = value <= 1.0 if closed_right else value < 1.0
    if not (math.isfinite(value) and value > 0.0 and upper_ok):
        raise ValueError(f"{name} must lie in (0,1{']' if closed_right else ')'}, got {value}")


@dataclass(frozen=True, eq=False)
class RunConfig:
    """
    Everything that determines a run.

    `mu` is used by SC-PRSM only; μ = 1 is accepted here so that the
    degenerate scheme can be certified (and refused). `alpha`, `custom_d`,
    `custom_g` and `predictor` apply to `custom-split` only. `kkt_tol`
    replaces the step-norm stopping rule by max KKT residual ≤ kkt_tol.
    """
    scheme: SchemeName = SchemeName.GS3_ALG1
    beta: float = 1.0
    mu: float = 0.5
    nu: float = DEFAULT_NU
    alpha: float = DEFAULT_ALPHA
    max_iters: int = DEFAULT_MAX_ITERS
    tol: float = DEFAULT_TOL
    seed: int = 0
    monitor: bool = False
    force: bool = False
    dense: bool = False
    predictor: PredictorKind | None = None
    custom_d: Matrix | None = None
    custom_g: Matrix | None = None
    kkt_tol: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, 'scheme', SchemeName(self.scheme))
        if self.predictor is not None:
            object.__setattr__(self, 'predictor', PredictorKind(self.predictor))
        if not (math.isfinite(self.beta) and self.beta > 0.0):
            raise ValueError(f"β must be positive, got {self.beta}")
        _open_unit('μ', self.mu, closed_right=True)
        _open_unit('ν', self.nu)
        _open_unit('α', self.alpha)
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")
        if not (self.tol >= 0.0):
            raise ValueError(f"tol must be nonnegative, got {self.tol}")
        if self.custom_d is not None and self.custom_g is not None:
            raise ValueError("give at most one of a D matrix and a G matrix")
        for name in ('custom_d', 'custom_g'):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, as_matrix(value, name[-1].upper()))
        if self.scheme is not SchemeName.CUSTOM and (
                self.predictor is not None or self.custom_d is not None or self.custom_g is not None):
            raise ValueError("--predictor, --d-file and --g-file apply to custom-split only")


def default_predictor(problem: ProblemInstance) -> PredictorKind:
    """Predictor for `custom-split` when none is named."""
    if problem.sense is Sense.GREATER_EQUAL:
        return PredictorKind.MULTI_DP
    if problem.p == 3:
        return PredictorKind.GS3
    return PredictorKind.MULTI_PD


def scheme_predictor(problem: ProblemInstance, config: RunConfig) -> PredictorKind:
    match config.scheme:
        case SchemeName.SCPRSM:
            return PredictorKind.SCPRSM
        case SchemeName.GS3_ALG1 | SchemeName.GS3_ALG2 | SchemeName.GS3_ALG3:
            return PredictorKind.GS3
        case SchemeName.MULTI_PD | SchemeName.MULTI_PD_G:
            return PredictorKind.MULTI_PD
        case SchemeName.MULTI_DP | SchemeName.MULTI_DP_G:
            return PredictorKind.MULTI_DP
        case _:
            return config.predictor or default_predictor(problem)


class SchemeRunner(ABC):
    """
    One scheme bound to one problem: its predictor, its corrected
    coordinates v, and its correction plan.

    The default correction is the dense solve with the plan; subclasses
    replace it with structured correctors where a preset has one.
    """

    def __init__(self, problem: ProblemInstance, config: RunConfig, kind: PredictorKind) -> None:
        self.problem = problem
        self.config = config
        self.kind = kind

    @abstractmethod
    def build_matrix(self) -> PredictionMatrix: ...

    @cached_property
    def matrix(self) -> PredictionMatrix:
        return self.build_matrix()

    @abstractmethod
    def default_choice(self) -> SplitChoice: ...

    @abstractmethod
    def predict(self, state: IterateState) -> PredictionOutput: ...

    @abstractmethod
    def v_of(self, state: IterateState) -> Vector:
        """Corrected coordinates of a state."""

    @abstractmethod
    def state_from_v(self, v: Vector, pred: PredictionOutput) -> IterateState: ...

    def choice(self) -> SplitChoice:
        if self.config.scheme is not SchemeName.CUSTOM:
            return self.default_choice()
        if self.config.custom_d is not None:
            return FromD(self.config.custom_d)
        if self.config.custom_g is not None:
            return FromG(self.config.custom_g)
        return AlphaBlend(self.config.alpha)

    @cached_property
    def plan(self) -> CorrectionPlan:
        plan = build_plan(self.matrix.v_matrix, self.choice(), enforce=False)
        logger.info("%s: plan of size %d, certificate ok=%s",
                    self.config.scheme, plan.size, plan.certificate.ok)
        return plan

    def initial_state(self) -> IterateState:
        return IterateState.zeros(self.problem, self.kind)

    @property
    def structured(self) -> bool:
        return False

    def correct(self, state: IterateState, pred: PredictionOutput) -> IterateState:
        v_next = correct_dense(self.plan, self.v_of(state), pred.v_tilde)
        return self.state_from_v(v_next, pred)

    def v_star(self, w_star: ArrayLike) -> Vector:
        return corrected_coordinates(self.matrix.structure, self.problem, self.config.beta, w_star)

    def corrected_point(self, state: IterateState) -> tuple[list[Vector], Vector]:
        """Blocks of a corrected state, recovered from images where not kept."""
        blocks = [x if x is not None else least_squares_recover(block.A, image)
                  for block, x, image in zip(self.problem.blocks, state.x_blocks, state.images)]
        return blocks, state.lam


class ScPrsmRunner(SchemeRunner):
    """SC-PRSM on v = (y, λ)."""

    @cached_property
    def matrices(self) -> ScPrsmMatrices:
        return scprsm_matrices(self.problem, self.config.beta, self.config.mu)

    def build_matrix(self) -> PredictionMatrix:
        return PredictionMatrix(Q=self.matrices.Q, structure=Structure.SCPRSM)

    def default_choice(self) -> SplitChoice:
        # D = QᵀM reproduces the scheme's own correction
        mats = self.matrices
        return FromD(symmetrize(mats.Q.T @ mats.M))

    @cached_property
    def plan(self) -> CorrectionPlan:
        if self.config.scheme is SchemeName.CUSTOM:
            return super().plan
        # the scheme's own M and H; D = QᵀM is singular at μ = 1
        Q, M, H, G = self.matrices
        choice = self.default_choice()
        assert isinstance(choice, FromD)
        return CorrectionPlan(Q=Q, D=choice.D, G=G, M=M, H=H,
                              certificate=certify(Q, M, H, G), choice=choice)

    def predict(self, state: IterateState) -> PredictionOutput:
        return predict_scprsm(state, self.problem, self.config.beta, self.config.mu)

    def v_of(self, state: IterateState) -> Vector:
        y = state.x_blocks[1]
        assert y is not None
        return np.concatenate([y, state.lam])

    def state_from_v(self, v: Vector, pred: PredictionOutput) -> IterateState:
        n2 = self.problem.dims[1]
        y, lam = v[:n2], v[n2:]
        return IterateState(
            x_blocks=(pred.x_tilde[0], y),
            lam=lam,
            images=(pred.images_tilde[0], self.problem.blocks[1].A @ y),
            scheme=self.kind,
        )


class Gs3Runner(SchemeRunner):
    """The three-block predictor on v = (y, z, λ), tracked through (By, Cz, λ)."""

    def build_matrix(self) -> PredictionMatrix:
        return gs3_prediction_matrix(self.problem, self.config.beta)

    @property
    def preset(self) -> PresetName | None:
        return _GS3_SCHEMES.get(self.config.scheme)

    def default_choice(self) -> SplitChoice:
        assert self.preset is not None
        _, ny, nz = self.problem.dims
        return Preset(self.preset, (ny, nz, self.problem.m), self.config.nu)

    @property
    def structured(self) -> bool:
        return self.preset is not None and not self.config.dense

    def predict(self, state: IterateState) -> PredictionOutput:
        return predict_gs3(state, self.problem, self.config.beta)

    def v_of(self, state: IterateState) -> Vector:
        _, y, z = state.x_blocks
        if y is None:
            y = least_squares_recover(self.problem.blocks[1].A, state.images[1])
        if z is None:
            z = least_squares_recover(self.problem.blocks[2].A, state.images[2])
        return np.concatenate([y, z, state.lam])

    def state_from_v(self, v: Vector, pred: PredictionOutput) -> IterateState:
        _, ny, nz = self.problem.dims
        y, z, lam = v[:ny], v[ny:ny + nz], v[ny + nz:]
        return IterateState(
            x_blocks=(pred.x_tilde[0], y, z),
            lam=lam,
            images=(pred.images_tilde[0], self.problem.blocks[1].A @ y, self.problem.blocks[2].A @ z),
            scheme=self.kind,
        )

    def correct(self, state: IterateState, pred: PredictionOutput) -> IterateState:
        if not self.structured:
            return super().correct(state, pred)
        assert self.preset is not None
        B, C = self.problem.blocks[1].A, self.problem.blocks[2].A
        nxt = correct_gs3_structured(
            Gs3Images(state.images[1], state.images[2], state.lam),
            Gs3Images(pred.images_tilde[1], pred.images_tilde[2], pred.lam_tilde),
            self.preset, self.config.nu, self.config.beta, B, C,
        )
        return IterateState(
            x_blocks=(pred.x_tilde[0], None, None),
            lam=nxt.lam,
            images=(pred.images_tilde[0], nxt.by, nxt.cz),
            scheme=self.kind,
        )


class MultiBlockRunner(SchemeRunner):
    """The multi-block predictors on ξ = (√β·Aᵢxᵢ, λ/√β)."""

    @property
    def order(self) -> Order:
        return Order.PD if self.kind is PredictorKind.MULTI_PD else Order.DP

    def build_matrix(self) -> PredictionMatrix:
        return q_multiblock(self.problem, self.config.beta, self.order)

    @property
    def preset(self) -> PresetName | None:
        entry = _MULTI_SCHEMES.get(self.config.scheme)
        return entry[1] if entry else None

    def default_choice(self) -> SplitChoice:
        assert self.preset is not None
        return Preset(self.preset, (self.problem.m,) * (self.problem.p + 1), self.config.nu)

    @property
    def structured(self) -> bool:
        return self.preset in (PresetName.MULTI_PD, PresetName.MULTI_DP) and not self.config.dense

    def predict(self, state: IterateState) -> PredictionOutput:
        return predict_multiblock(state, self.problem, self.config.beta, self.order)

    def v_of(self, state: IterateState) -> Vector:
        return xi_from(state.images, state.lam, self.config.beta)

    def state_from_v(self, v: Vector, pred: PredictionOutput) -> IterateState:
        images, lam = split_xi(v, self.problem.p, self.problem.m, self.config.beta)
        return IterateState(
            x_blocks=(None,) * self.problem.p,
            lam=lam,
            images=images,
            scheme=self.kind,
        )

    def correct(self, state: IterateState, pred: PredictionOutput) -> IterateState:
        if not self.structured:
            return super().correct(state, pred)
        xi_next = correct_multiblock(self.v_of(state), pred.v_tilde, self.order,
                                     self.config.nu, self.problem.p, self.problem.m)
        return self.state_from_v(xi_next, pred)


def make_runner(problem: ProblemInstance, config: RunConfig) -> SchemeRunner:
    kind = scheme_predictor(problem, config)
    match kind:
        case PredictorKind.SCPRSM:
            return ScPrsmRunner(problem, config, kind)
        case PredictorKind.GS3:
            return Gs3Runner(problem, config, kind)
        case _:
            return MultiBlockRunner(problem, config, kind)


@dataclass(frozen=True)
class TraceRow:
    """One line of `trace.csv`; monitor columns are None without a reference."""
    k: int
    primal_res: float
    dual_res: float
    pred_norm: float
    dist_sq_H: float | None
    progress_sq_G: float
    slack: float | None

    def cells(self) -> list[str]:
        return [str(self.k), *('' if v is None else format_float(v) for v in (
            self.primal_res, self.dual_res, self.pred_norm, self.dist_sq_H, self.progress_sq_G, self.slack))]


@contextmanager
def trace_writer(path: Path | str | TextIO) -> Generator[Callable[[TraceRow], None], None, None]:
    """
    Open a trace CSV and yield a row callback for `run(on_row=...)`.

    Each row is flushed as it is written, so an interrupted run leaves a
    readable file.
    """
    if isinstance(path, (str, Path)):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        stream: TextIO = open(path, 'w', newline='')
        owned = True
    else:
        stream, owned = path, False
    try:
        writer = csv.writer(stream, lineterminator='\n')
        writer.writerow(TRACE_HEADER)
        stream.flush()

        def write(row: TraceRow) -> None:
            writer.writerow(row.cells())
            stream.flush()

        yield write
    finally:
        if owned:
            stream.close()


@dataclass(eq=False)
class RunOutcome:
    """What a finished run produced."""
    config: RunConfig
    status: RunStatus
    iterations: int
    solution: PredictionOutput
    state: IterateState
    residuals: KktResidual
    plan: CorrectionPlan
    runner: SchemeRunner
    total_progress: float
    monitor: ContractionMonitor | None = None

    @property
    def records(self) -> list[ContractionRecord]:
        return self.monitor.records if self.monitor is not None else []

    @property
    def exit_code(self) -> int:
        return self.status.exit_code

    def to_json(self) -> JsonObject:
        """The `solution.json` document."""
        blocks, lam = self.runner.corrected_point(self.state)
        return {
            'scheme': str(self.config.scheme),
            'status': str(self.status),
            'iterations': self.iterations,
            'blocks': [to_json_array(x) for x in self.solution.x_tilde],
            'lambda': to_json_array(self.solution.lam_tilde),
            'residuals': {
                'primal': json_number(self.residuals.primal),
                'dual': json_number(self.residuals.dual),
                'complementarity': json_number(self.residuals.compl),
            },
            'corrected': {
                'blocks': [to_json_array(x) for x in blocks],
                'lambda': to_json_array(lam),
            },
            'certificate': self.plan.certificate.to_json(),
        }


def prepare(problem: ProblemInstance, config: RunConfig) -> SchemeRunner:
    """
    Validate, build and certify, without iterating.

    Raises:
        ValidationError: If the problem does not suit the scheme's predictor.
        CertificationError: If the plan fails certification and `force` is off.
    """
    runner = make_runner(problem, config)
    report = validate_problem(problem, runner.kind)
    for note in report.notes:
        logger.warning("%s: %s", config.scheme, note)
    report.raise_if_invalid()
    cert = runner.plan.certificate
    if not cert.ok:
        reasons = cert.failures()
        if runner.kind is PredictorKind.SCPRSM and config.mu >= 1.0:
            reasons.append(f"μ must lie in (0,1), got {config.mu}")
        message = f"plan for {config.scheme} is not certified: {'; '.join(reasons)}"
        if not config.force:
            raise CertificationError(message, certificate=cert)
        logger.warning("%s (running anyway)", message)
    return runner


def run(problem: ProblemInstance, config: RunConfig,
        on_row: Callable[[TraceRow], None] | None = None) -> RunOutcome:
    """
    Run one scheme to convergence or to the iteration cap.

    With `config.monitor` the contraction inequality is evaluated against a
    reference solution every iteration and reported in the trace rows.
    """
    runner = prepare(problem, config)
    plan = runner.plan
    monitor = None
    if config.monitor:
        monitor = ContractionMonitor(plan, runner.v_star(reference_solution(problem).w_star))
    state = runner.initial_state()
    total_progress = 0.0
    status = RunStatus.ITERATION_CAP
    logger.info("%s: starting, max_iters=%d tol=%g", config.scheme, config.max_iters, config.tol)
    k = 0
    pred = None
    residuals = None
    for k in range(config.max_iters):
        v_k = runner.v_of(state)
        pred = runner.predict(state)
        step = v_k - pred.v_tilde
        pred_norm = float(np.max(np.abs(step))) if step.size else 0.0
        residuals = kkt_residual(problem, pred.w_tilde)
        state = runner.correct(state, pred)
        progress = quad_norm_sq(plan.G, step)
        total_progress += progress
        record = monitor.observe(v_k, runner.v_of(state), pred.v_tilde) if monitor is not None else None
        if on_row is not None:
            on_row(TraceRow(k, residuals.primal, residuals.dual, pred_norm,
                            record.dist_sq_H if record else None, progress,
                            record.slack if record else None))
        logger.debug("k=%d pred_norm=%.3g primal=%.3g dual=%.3g", k, pred_norm, residuals.primal, residuals.dual)
        if config.kkt_tol is not None:
            done = residuals.worst <= config.kkt_tol
        else:
            done = pred_norm <= config.tol and residuals.primal <= config.tol
        if done:
            status = RunStatus.CONVERGED
            break
    assert pred is not None and residuals is not None
    logger.info("%s: %s after %d iterations", config.scheme, status, k + 1)
    if monitor is not None and monitor.violations:
        logger.warning("%s: contraction violated in %d of %d iterations",
                       config.scheme, len(monitor.violations), len(monitor.records))
    return RunOutcome(
        config=config,
        status=status,
        iterations=k + 1,
        solution=pred,
        state=state,
        residuals=residuals,
        plan=plan,
        runner=runner,
        total_progress=total_progress,
        monitor=monitor,
    )


@dataclass(frozen=True)
class CompareRow:
    scheme: str
    status: RunStatus
    iterations: int | None = None
    primal_res: float | None = None
    dual_res: float | None = None
    compl_res: float | None = None
    total_progress_G: float | None = None
    reason: str = ''

    @classmethod
    def from_outcome(cls, outcome: RunOutcome) -> CompareRow:
        return cls(
            scheme=str(outcome.config.scheme),
            status=outcome.status,
            iterations=outcome.iterations,
            primal_res=outcome.residuals.primal,
            dual_res=outcome.residuals.dual,
            compl_res=outcome.residuals.compl,
            total_progress_G=outcome.total_progress,
        )

    def cells(self) -> list[str]:
        def num(v: float | None) -> str:
            return '' if v is None else format_float(v)
        return [self.scheme, str(self.status), '' if self.iterations is None else str(self.iterations),
                num(self.primal_res), num(self.dual_res), num(self.compl_res),
                num(self.total_progress_G), self.reason]


def _compare_one(problem: ProblemInstance, config: RunConfig) -> CompareRow:
    try:
        return CompareRow.from_outcome(run(problem, config))
    except ValidationError as e:
        return CompareRow(scheme=str(config.scheme), status=RunStatus.REJECTED,
                          reason='; '.join(e.report.messages))
    except Exception as e:
        e.add_note(f"while running {config.scheme}")
        raise


def compare(problem: ProblemInstance, configs: Sequence[RunConfig], jobs: int = 1) -> list[CompareRow]:
    """
    Run several schemes on one problem; rows come back in `configs` order.

    A scheme whose predictor does not suit the problem yields a `rejected`
    row; any other error aborts the comparison.
    """
    if jobs < 1:
        raise ValueError(f"jobs must be at least 1, got {jobs}")
    if jobs == 1 or len(configs) <= 1:
        return [_compare_one(problem, c) for c in configs]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda c: _compare_one(problem, c), configs))


def write_compare(rows: Sequence[CompareRow], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(COMPARE_HEADER)
    for row in rows:
        writer.writerow(row.cells())


@contextmanager
def run_guard(label: str) -> Generator[list[RunResult], None, None]:
    """
    Turn library errors into a failed `RunResult`.

    Use this as a context manager:

        with run_guard('solve') as box:
            box.append({'success': True, 'result': ...})
        result = box[0]

    Expected failures (bad input, validation, certification, numerical
    breakdown) become `error_result`; anything else propagates.
    """
    box: list[RunResult] = []
    try:
        yield box
    except (PcsplitError, ValueError, np.linalg.LinAlgError, OSError) as e:
        notes = getattr(e, '__notes__', [])
        message = '; '.join([str(e), *notes])
        logger.debug("%s failed: %s", label, message)
        box.clear()
        box.append(error_result(message))


def invoke_run(problem: ProblemInstance, config: RunConfig,
               on_row: Callable[[TraceRow], None] | None = None) -> RunResult:
    """`run` as a result record; the exit code is carried in the record."""
    with run_guard(str(config.scheme)) as box:
        outcome = run(problem, config, on_row=on_row)
        box.append({'success': True,
                     'result': outcome.to_json(),
                     'exit_code': outcome.exit_code})
    return box[0]
