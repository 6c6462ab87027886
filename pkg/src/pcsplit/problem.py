"""
Separable convex programs and their variational-inequality form.

A problem is

    minimize    Σ θᵢ(xᵢ)
    subject to  Σ Aᵢxᵢ = b   (or ≥ b),   xᵢ ∈ 𝒳ᵢ

with each θᵢ one of the closed-form classes below and 𝒳ᵢ either free or a
box. Stacking w = (x₁, …, xₚ, λ), the optimality conditions read

    w* ∈ Ω,   θ(u) − θ(u*) + (w − w*)ᵀF(w*) ≥ 0   for all w ∈ Ω

with the affine, skew-symmetric operator

    F(w) = (−A₁ᵀλ, …, −Aₚᵀλ, ΣAᵢxᵢ − b).

Problem files are JSON; see `parse_problem` for the schema.
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from functools import cached_property
from pathlib import Path
from typing import TYPE_CHECKING, Any, NamedTuple, TypeAlias

import numpy as np
import scipy.linalg as sla
from numpy.typing import ArrayLike

from pcsplit.config import BOUND_TOL, PSD_REL_TOL, SYMMETRY_TOL
from pcsplit.errors import DimensionError, ProblemFormatError, UnsupportedSubproblemError, ValidationError
from pcsplit.matrices import Matrix, Vector, as_matrix, as_vector, frozen, numerical_rank
from pcsplit.utils import JsonObject, to_json_array

if TYPE_CHECKING:
    from pcsplit.subproblems import SolvabilityClass

logger = logging.getLogger(__name__)


class Sense(StrEnum):
    """Constraint sense of ΣAᵢxᵢ against b."""
    EQUALITY = 'eq'
    GREATER_EQUAL = 'ge'


class LambdaSet(StrEnum):
    """Multiplier set Λ: all of ℝᵐ for equalities, ℝᵐ₊ for ≥ constraints."""
    FREE = 'free'
    NONNEG = 'nonneg'


class PredictorKind(StrEnum):
    """The four prediction steps."""
    SCPRSM = 'scprsm'
    GS3 = 'gs3'
    MULTI_PD = 'multi-pd'
    MULTI_DP = 'multi-dp'


# Block functions θᵢ

@dataclass(frozen=True, eq=False)
class Quadratic:
    """θ(x) = ½xᵀPx + qᵀx with P symmetric positive semidefinite."""
    P: Matrix
    q: Vector

    def __post_init__(self) -> None:
        P = as_matrix(self.P, 'P')
        q = as_vector(self.q, 'q')
        if P.shape != (q.size, q.size):
            raise DimensionError(f"P has shape {P.shape} but q has length {q.size}")
        norm = float(np.linalg.norm(P, 2))
        if norm > 0.0:
            if np.linalg.norm(P - P.T) > SYMMETRY_TOL * np.linalg.norm(P):
                raise ValueError("P must be symmetric")
            if sla.eigvalsh(0.5 * (P + P.T))[0] < -PSD_REL_TOL * norm:
                raise ValueError("P must be positive semidefinite")
        object.__setattr__(self, 'P', frozen(P))
        object.__setattr__(self, 'q', frozen(q))

    @property
    def dim(self) -> int:
        return self.q.size

    @cached_property
    def is_diagonal(self) -> bool:
        return bool(np.count_nonzero(self.P - np.diag(np.diag(self.P))) == 0)

    def value(self, x: Vector) -> float:
        return float(0.5 * x @ (self.P @ x) + self.q @ x)

    def gradient(self, x: Vector) -> Vector:
        return self.P @ x + self.q


@dataclass(frozen=True)
class L1:
    """θ(x) = weight·‖x‖₁."""
    weight: float
    dim: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.weight) and self.weight >= 0.0):
            raise ValueError(f"L1 weight must be finite and nonnegative, got {self.weight}")
        if self.dim < 1:
            raise DimensionError(f"dimension must be positive, got {self.dim}")

    def value(self, x: Vector) -> float:
        return float(self.weight * np.sum(np.abs(x)))


@dataclass(frozen=True)
class Zero:
    """θ(x) = 0."""
    dim: int

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise DimensionError(f"dimension must be positive, got {self.dim}")

    def value(self, x: Vector) -> float:
        return 0.0


@dataclass(frozen=True, eq=False)
class BoxIndicator:
    """θ(x) = 0 on [lo, hi], +∞ outside."""
    lo: Vector
    hi: Vector

    def __post_init__(self) -> None:
        lo, hi = _checked_bounds(self.lo, self.hi)
        object.__setattr__(self, 'lo', lo)
        object.__setattr__(self, 'hi', hi)

    @property
    def dim(self) -> int:
        return self.lo.size

    def value(self, x: Vector) -> float:
        return 0.0 if bool(np.all((x >= self.lo) & (x <= self.hi))) else math.inf


BlockFunction: TypeAlias = Quadratic | L1 | Zero | BoxIndicator
'''One of the closed-form block function classes.'''


# Constraint sets 𝒳ᵢ

@dataclass(frozen=True)
class Free:
    """𝒳 = ℝⁿ."""


@dataclass(frozen=True, eq=False)
class Box:
    """𝒳 = [lo, hi]; bounds may be infinite."""
    lo: Vector
    hi: Vector

    def __post_init__(self) -> None:
        lo, hi = _checked_bounds(self.lo, self.hi)
        object.__setattr__(self, 'lo', lo)
        object.__setattr__(self, 'hi', hi)

    @property
    def dim(self) -> int:
        return self.lo.size


ConstraintSet: TypeAlias = Free | Box
'''Block constraint set: free or a box.'''


def _checked_bounds(lo: ArrayLike, hi: ArrayLike) -> tuple[Vector, Vector]:
    lo_v = np.array(lo, dtype=np.float64).reshape(-1)
    hi_v = np.array(hi, dtype=np.float64).reshape(-1)
    if lo_v.size != hi_v.size or lo_v.size == 0:
        raise DimensionError(f"box bounds have lengths {lo_v.size} and {hi_v.size}")
    if np.any(np.isnan(lo_v)) or np.any(np.isnan(hi_v)):
        raise ValueError("box bounds must not be NaN")
    if np.any(lo_v > hi_v):
        raise ValueError("box requires lo ≤ hi componentwise")
    return frozen(lo_v), frozen(hi_v)


@dataclass(frozen=True, eq=False)
class Block:
    """One block (θᵢ, Aᵢ, 𝒳ᵢ) of a separable program."""
    theta: BlockFunction
    A: Matrix
    set: ConstraintSet = field(default_factory=Free)

    def __post_init__(self) -> None:
        A = as_matrix(self.A, 'A')
        if A.shape[1] != self.theta.dim:
            raise DimensionError(f"A has {A.shape[1]} columns but θ has dimension {self.theta.dim}")
        if isinstance(self.set, Box) and self.set.dim != self.theta.dim:
            raise DimensionError(f"box has dimension {self.set.dim} but θ has dimension {self.theta.dim}")
        object.__setattr__(self, 'A', frozen(A))
        lo, hi = self.bounds
        if np.any(lo > hi):
            raise ValueError("θ's box and the block set do not intersect")

    @property
    def dim(self) -> int:
        return self.theta.dim

    @cached_property
    def bounds(self) -> tuple[Vector, Vector]:
        """Componentwise bounds of dom θ ∩ 𝒳 (infinite when unconstrained)."""
        lo = np.full(self.dim, -np.inf)
        hi = np.full(self.dim, np.inf)
        for box in (self.theta, self.set):
            if isinstance(box, (BoxIndicator, Box)):
                lo = np.maximum(lo, box.lo)
                hi = np.minimum(hi, box.hi)
        return frozen(lo), frozen(hi)

    def project(self, x: Vector) -> Vector:
        lo, hi = self.bounds
        return np.clip(x, lo, hi)

    def value(self, x: Vector) -> float:
        lo, hi = self.bounds
        if np.any(x < lo) or np.any(x > hi):
            return math.inf
        return self.theta.value(x)


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """
    A separable convex program with linear coupling constraints.

    Immutable once built; safe to share between threads.
    """
    blocks: tuple[Block, ...]
    rhs: Vector
    sense: Sense = Sense.EQUALITY

    def __post_init__(self) -> None:
        blocks = tuple(self.blocks)
        if not blocks:
            raise DimensionError("a problem needs at least one block")
        rhs = as_vector(self.rhs, 'rhs')
        for i, block in enumerate(blocks):
            if block.A.shape[0] != rhs.size:
                raise DimensionError(
                    f"block {i + 1}: A has {block.A.shape[0]} rows but b has length {rhs.size}"
                )
        object.__setattr__(self, 'blocks', blocks)
        object.__setattr__(self, 'rhs', frozen(rhs))
        object.__setattr__(self, 'sense', Sense(self.sense))

    @property
    def p(self) -> int:
        return len(self.blocks)

    @property
    def m(self) -> int:
        return self.rhs.size

    @cached_property
    def dims(self) -> tuple[int, ...]:
        return tuple(b.dim for b in self.blocks)

    @property
    def n(self) -> int:
        return sum(self.dims)

    @property
    def lambda_set(self) -> LambdaSet:
        return LambdaSet.NONNEG if self.sense is Sense.GREATER_EQUAL else LambdaSet.FREE

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        return tuple(int(v) for v in np.cumsum((0,) + self.dims))

    def matrices(self) -> tuple[Matrix, ...]:
        return tuple(b.A for b in self.blocks)

    def split(self, w: ArrayLike) -> tuple[list[Vector], Vector]:
        """Split a stacked w = (x₁, …, xₚ, λ) into blocks and λ."""
        w = as_vector(w, 'w')
        if w.size != self.n + self.m:
            raise DimensionError(f"w has length {w.size}, expected n + m = {self.n + self.m}")
        xs = [w[self.offsets[i]:self.offsets[i + 1]] for i in range(self.p)]
        return xs, w[self.n:]

    def stack(self, xs: Sequence[Vector], lam: Vector) -> Vector:
        return np.concatenate([*xs, lam])

    def constraint_value(self, xs: Sequence[Vector]) -> Vector:
        """ΣAᵢxᵢ − b."""
        return sum((b.A @ x for b, x in zip(self.blocks, xs)), -self.rhs)

    def objective(self, xs: Sequence[Vector]) -> float:
        return sum(b.value(x) for b, x in zip(self.blocks, xs))


# The variational inequality

@dataclass(frozen=True, eq=False)
class ViDescription:
    """The affine operator F and the set Ω = 𝒳₁ × … × 𝒳ₚ × Λ of a problem."""
    problem: ProblemInstance

    @property
    def lambda_set(self) -> LambdaSet:
        return self.problem.lambda_set

    def F(self, w: ArrayLike) -> Vector:
        xs, lam = self.problem.split(w)
        parts = [-(b.A.T @ lam) for b in self.problem.blocks]
        return np.concatenate([*parts, self.problem.constraint_value(xs)])

    def contains(self, w: ArrayLike) -> bool:
        xs, lam = self.problem.split(w)
        for block, x in zip(self.problem.blocks, xs):
            lo, hi = block.bounds
            if np.any(x < lo) or np.any(x > hi):
                return False
        return not (self.lambda_set is LambdaSet.NONNEG and np.any(lam < 0.0))


def vi_description(p: ProblemInstance) -> ViDescription:
    return ViDescription(p)


def evaluate_F(vi: ViDescription, w: ArrayLike) -> Vector:
    """
    Evaluate F(w) = (−A₁ᵀλ, …, −Aₚᵀλ, ΣAᵢxᵢ − b).

    Raises:
        DimensionError: If `w` does not have length n + m.
    """
    return vi.F(w)


class KktResidual(NamedTuple):
    """Residuals of the saddle-point conditions."""
    primal: float
    dual: float
    compl: float

    @property
    def worst(self) -> float:
        return max(self.primal, self.dual, self.compl)

    def to_json(self) -> JsonObject:
        return {'primal': self.primal, 'dual': self.dual, 'complementarity': self.compl}


def _dual_distance(block: Block, x: Vector, lam_term: Vector) -> Vector:
    """Componentwise distance of 0 from ∂θ(x) − Aᵀλ + N_𝒳(x)."""
    match block.theta:
        case Quadratic() as theta:
            g = theta.gradient(x) - lam_term
        case L1() | Zero() | BoxIndicator():
            g = -lam_term
        case _:
            raise UnsupportedSubproblemError(
                f"no subdifferential for {type(block.theta).__name__}"
            )
    target = -g
    lo_s = np.zeros_like(x)
    hi_s = np.zeros_like(x)
    if isinstance(block.theta, L1):
        w = block.theta.weight
        at_zero = np.abs(x) <= BOUND_TOL
        lo_s = np.where(at_zero, -w, w * np.sign(x))
        hi_s = np.where(at_zero, w, w * np.sign(x))
    lo, hi = block.bounds
    tol_lo = BOUND_TOL * np.maximum(1.0, np.abs(np.where(np.isfinite(lo), lo, 0.0)))
    tol_hi = BOUND_TOL * np.maximum(1.0, np.abs(np.where(np.isfinite(hi), hi, 0.0)))
    outside = (x < lo - tol_lo) | (x > hi + tol_hi)
    lo_s = np.where(np.abs(x - lo) <= tol_lo, -np.inf, lo_s)
    hi_s = np.where(np.abs(x - hi) <= tol_hi, np.inf, hi_s)
    dist = np.maximum(np.maximum(lo_s - target, target - hi_s), 0.0)
    return np.where(outside, np.inf, dist)


def kkt_residual(p: ProblemInstance, w: ArrayLike) -> KktResidual:
    """
    Residuals of the KKT conditions at w = (x, λ).

    Returns:
        primal: ‖ΣAᵢxᵢ − b‖, or ‖min(ΣAᵢxᵢ − b, 0)‖ for ≥ constraints.
        dual: Distance of 0 from ∂θᵢ(xᵢ) − Aᵢᵀλ + N_𝒳ᵢ(xᵢ), over all blocks.
            Infinite when some xᵢ lies outside its set. For ≥ constraints
            it also counts min(λ, 0).
        compl: |λᵀ(ΣAᵢxᵢ − b)| for ≥ constraints, else 0.

    Raises:
        DimensionError: For a wrongly sized `w`.
        UnsupportedSubproblemError: For a block function without a known
            subdifferential.
    """
    xs, lam = p.split(w)
    r = p.constraint_value(xs)
    if p.sense is Sense.GREATER_EQUAL:
        primal = float(np.linalg.norm(np.minimum(r, 0.0)))
        compl = abs(float(lam @ r))
    else:
        primal = float(np.linalg.norm(r))
        compl = 0.0
    dists = [_dual_distance(b, x, b.A.T @ lam) for b, x in zip(p.blocks, xs)]
    if p.sense is Sense.GREATER_EQUAL:
        dists.append(np.minimum(lam, 0.0))
    stacked = np.concatenate(dists)
    dual = math.inf if np.any(np.isinf(stacked)) else float(np.linalg.norm(stacked))
    return KktResidual(primal=primal, dual=dual, compl=compl)


# Validation

@dataclass(frozen=True)
class RankRequirements:
    """What a predictor needs from a problem."""
    predictor: PredictorKind

    @property
    def min_blocks(self) -> int:
        match self.predictor:
            case PredictorKind.SCPRSM:
                return 2
            case PredictorKind.GS3:
                return 3
            case _:
                return 2

    @property
    def max_blocks(self) -> int | None:
        match self.predictor:
            case PredictorKind.SCPRSM:
                return 2
            case PredictorKind.GS3:
                return 3
            case _:
                return None

    @property
    def allows_inequality(self) -> bool:
        return self.predictor is PredictorKind.MULTI_DP

    def rank_required(self, index: int) -> bool:
        """The first block of the two- and three-block schemes is never part of v."""
        if self.predictor in (PredictorKind.SCPRSM, PredictorKind.GS3):
            return index > 0
        return True

    def block_name(self, index: int, p: int) -> str:
        if self.predictor in (PredictorKind.SCPRSM, PredictorKind.GS3) and p <= 3:
            return 'ABC'[index]
        return f"A{index + 1}"


@dataclass(frozen=True)
class BlockStatus:
    """Per-block findings of `validate_problem`."""
    index: int
    name: str
    rows: int
    cols: int
    rank: int
    rank_required: bool
    solvability: SolvabilityClass

    @property
    def full_rank(self) -> bool:
        return self.rank == self.cols

    def to_json(self) -> JsonObject:
        return {
            'block': self.name,
            'shape': [self.rows, self.cols],
            'rank': self.rank,
            'full_rank': self.full_rank,
            'rank_required': self.rank_required,
            'solvability': str(self.solvability),
        }


@dataclass(frozen=True)
class ValidationReport:
    """
    Result of `validate_problem`.

    `messages` lists failed checks; `notes` lists accepted oddities such as
    a two-block multi-block run. `ok` is true iff `messages` is empty.
    """
    predictor: PredictorKind
    blocks: tuple[BlockStatus, ...]
    messages: tuple[str, ...]
    notes: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.messages

    def raise_if_invalid(self) -> None:
        if not self.ok:
            raise ValidationError(self)

    def to_json(self) -> JsonObject:
        return {
            'predictor': str(self.predictor),
            'ok': self.ok,
            'blocks': [b.to_json() for b in self.blocks],
            'messages': list(self.messages),
            'notes': list(self.notes),
        }


def validate_problem(p: ProblemInstance,
                     requirements: RankRequirements | PredictorKind) -> ValidationReport:
    """
    Check a problem against a predictor's needs.

    Checks block count, column rank of the blocks the predictor's theory
    needs, solvability class of every block subproblem, and the
    sense/predictor rule (≥ constraints only with the dual-primal
    predictor). Never raises; solver entry points reject a report that is
    not ok.
    """
    from pcsplit.subproblems import SolvabilityClass, classify_block, unsupported_reason

    req = requirements if isinstance(requirements, RankRequirements) else RankRequirements(requirements)
    messages: list[str] = []
    notes: list[str] = []
    if p.p < req.min_blocks or (req.max_blocks is not None and p.p > req.max_blocks):
        expected = (f"exactly {req.max_blocks}" if req.max_blocks == req.min_blocks
                    else f"at least {req.min_blocks}")
        messages.append(f"{req.predictor} needs {expected} blocks, got {p.p}")
    elif req.max_blocks is None and p.p == 2:
        notes.append("two-block multi-block prediction is an extension")
    if p.sense is Sense.GREATER_EQUAL and not req.allows_inequality:
        messages.append("inequality sense requires DP predictor")

    statuses: list[BlockStatus] = []
    for i, block in enumerate(p.blocks):
        name = req.block_name(i, p.p)
        status = BlockStatus(
            index=i,
            name=name,
            rows=block.A.shape[0],
            cols=block.A.shape[1],
            rank=numerical_rank(block.A),
            rank_required=req.rank_required(i),
            solvability=classify_block(block),
        )
        statuses.append(status)
        if status.rank_required and not status.full_rank:
            messages.append(f"{name} rank-deficient")
        if status.solvability is SolvabilityClass.UNSUPPORTED:
            messages.append(f"{name} subproblem has no exact solver ({unsupported_reason(block)})")
    report = ValidationReport(req.predictor, tuple(statuses), tuple(messages), tuple(notes))
    logger.debug("validation for %s: ok=%s %s", req.predictor, report.ok, report.messages)
    return report


# Problem files

def _field_error(message: str, path: str) -> ProblemFormatError:
    return ProblemFormatError(message, field=path)


def _get(obj: Mapping[str, Any], key: str, path: str, default: Any = ...) -> Any:
    if key in obj:
        return obj[key]
    if default is ...:
        raise _field_error("missing required field", f"{path}.{key}" if path else key)
    return default


def _vector_field(value: Any, path: str) -> Vector:
    try:
        return as_vector(value, path)
    except (ValueError, TypeError) as e:
        raise _field_error(str(e), path) from e


def _bounds_field(value: Any, path: str, n: int) -> Vector:
    """Bounds may be a scalar (broadcast) or a list; null means unbounded."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return np.full(n, float(value))
    if not isinstance(value, list):
        raise _field_error("bounds must be a number or a list", path)
    try:
        out = np.array([np.nan if v is None else v for v in value], dtype=np.float64)
    except (ValueError, TypeError) as e:
        raise _field_error(str(e), path) from e
    if out.ndim != 1 or out.size != n:
        raise _field_error(f"expected {n} bounds, got {out.size}", path)
    return out


def _unbounded(bounds: Vector, fill: float) -> Vector:
    """Null entries become ±∞; infinite entries stay infinite."""
    return np.where(np.isnan(bounds), fill, bounds)


def _matrix_field(value: Any, path: str, rows: int | None = None) -> Matrix:
    try:
        arr = np.array(value, dtype=np.float64)
    except (ValueError, TypeError) as e:
        raise _field_error(f"not a numeric matrix: {e}", path) from e
    if arr.ndim == 1 and rows is not None and arr.size % rows == 0 and arr.size > 0:
        arr = arr.reshape(rows, -1)
    try:
        return as_matrix(arr, path)
    except (ValueError, TypeError) as e:
        raise _field_error(str(e), path) from e


def _theta_from_json(kind: str, params: Mapping[str, Any], dim: int, path: str) -> BlockFunction:
    ppath = f"{path}.params"
    try:
        match kind.lower():
            case 'quadratic':
                P = _matrix_field(_get(params, 'P', ppath), f"{ppath}.P")
                q = _vector_field(_get(params, 'q', ppath, [0.0] * dim), f"{ppath}.q")
                return Quadratic(P, q)
            case 'l1':
                return L1(float(_get(params, 'weight', ppath, 1.0)), dim)
            case 'zero':
                return Zero(dim)
            case 'box_indicator' | 'box':
                lo = _bounds_field(_get(params, 'lo', ppath), f"{ppath}.lo", dim)
                hi = _bounds_field(_get(params, 'hi', ppath), f"{ppath}.hi", dim)
                return BoxIndicator(_unbounded(lo, -np.inf), _unbounded(hi, np.inf))
            case _:
                raise _field_error(
                    f"unknown kind {kind!r} (expected quadratic, l1, zero or box_indicator)",
                    f"{path}.kind")
    except ProblemFormatError:
        raise
    except (ValueError, TypeError) as e:
        raise _field_error(str(e), ppath) from e


def _set_from_json(value: Any, dim: int, path: str) -> ConstraintSet:
    if value is None or value == 'free':
        return Free()
    if isinstance(value, Mapping) and 'box' in value:
        box = value['box']
        if not isinstance(box, Mapping):
            raise _field_error("box must be an object with lo and hi", f"{path}.box")
        lo = _bounds_field(_get(box, 'lo', f"{path}.box", -np.inf), f"{path}.box.lo", dim)
        hi = _bounds_field(_get(box, 'hi', f"{path}.box", np.inf), f"{path}.box.hi", dim)
        try:
            return Box(_unbounded(lo, -np.inf), _unbounded(hi, np.inf))
        except ValueError as e:
            raise _field_error(str(e), f"{path}.box") from e
    raise _field_error(f"expected \"free\" or {{\"box\": ...}}, got {value!r}", path)


_SENSES: dict[str, Sense] = {
    'eq': Sense.EQUALITY, 'equality': Sense.EQUALITY, '=': Sense.EQUALITY, '==': Sense.EQUALITY,
    'ge': Sense.GREATER_EQUAL, 'greater_equal': Sense.GREATER_EQUAL, '>=': Sense.GREATER_EQUAL,
}


def problem_from_json(data: Any) -> ProblemInstance:
    """
    Build a problem from decoded JSON.

    Raises:
        ProblemFormatError: Naming the offending field.
    """
    if not isinstance(data, Mapping):
        raise ProblemFormatError("problem must be a JSON object")
    rhs = _vector_field(_get(data, 'rhs', ''), 'rhs')
    m = _get(data, 'm', '', rhs.size)
    if m != rhs.size:
        raise _field_error(f"m = {m} but rhs has length {rhs.size}", 'm')
    sense_raw = str(_get(data, 'sense', '', 'eq')).lower()
    if sense_raw not in _SENSES:
        raise _field_error(f"unknown sense {sense_raw!r}", 'sense')
    raw_blocks = _get(data, 'blocks', '')
    if not isinstance(raw_blocks, list) or not raw_blocks:
        raise _field_error("blocks must be a non-empty list", 'blocks')
    blocks: list[Block] = []
    for i, raw in enumerate(raw_blocks):
        path = f"blocks[{i}]"
        if not isinstance(raw, Mapping):
            raise _field_error("block must be an object", path)
        A = _matrix_field(_get(raw, 'A', path), f"{path}.A", rows=rhs.size)
        if A.shape[0] != rhs.size:
            raise _field_error(f"A has {A.shape[0]} rows, expected m = {rhs.size}", f"{path}.A")
        params = _get(raw, 'params', path, {})
        if not isinstance(params, Mapping):
            raise _field_error("params must be an object", f"{path}.params")
        theta = _theta_from_json(str(_get(raw, 'kind', path)), params, A.shape[1], path)
        cset = _set_from_json(raw.get('set'), A.shape[1], f"{path}.set")
        try:
            blocks.append(Block(theta, A, cset))
        except ValueError as e:
            raise _field_error(str(e), path) from e
    return ProblemInstance(tuple(blocks), rhs, _SENSES[sense_raw])


def parse_problem(text: str, source: str = '<string>') -> ProblemInstance:
    """
    Parse a problem document.

    Schema::

        {"m": 1, "sense": "eq" | "ge", "rhs": [...],
         "blocks": [{"kind": "quadratic" | "l1" | "zero" | "box_indicator",
                     "params": {...}, "A": [[row], ...], "set": "free" | {"box": {"lo": ..., "hi": ...}}}]}

    Raises:
        ProblemFormatError: With the line of a JSON syntax error or the path of
            an invalid field.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProblemFormatError(f"{source}: invalid JSON: {e.msg}", line=e.lineno) from e
    try:
        return problem_from_json(data)
    except ProblemFormatError as e:
        raise ProblemFormatError(f"{source}: {e.detail}", field=e.field, line=e.line) from e


def load_problem(path: Path | str) -> ProblemInstance:
    path = Path(path)
    return parse_problem(path.read_text(), source=str(path))


def load_matrix(path: Path | str) -> Matrix:
    """Read a matrix file: a list of rows, or {"matrix": [...]}."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ProblemFormatError(f"{path}: invalid JSON: {e.msg}", line=e.lineno) from e
    if isinstance(data, Mapping):
        data = _get(data, 'matrix', '')
    return _matrix_field(data, 'matrix')


def _bounds_json(v: Vector) -> list[float | None]:
    return [float(x) if math.isfinite(x) else None for x in v]


def block_to_json(block: Block) -> JsonObject:
    theta = block.theta
    match theta:
        case Quadratic():
            kind, params = 'quadratic', {'P': to_json_array(theta.P), 'q': to_json_array(theta.q)}
        case L1():
            kind, params = 'l1', {'weight': theta.weight}
        case Zero():
            kind, params = 'zero', {}
        case BoxIndicator():
            kind, params = 'box_indicator', {'lo': _bounds_json(theta.lo), 'hi': _bounds_json(theta.hi)}
    out: JsonObject = {'kind': kind, 'params': params, 'A': to_json_array(block.A)}
    if isinstance(block.set, Box):
        out['set'] = {'box': {'lo': _bounds_json(block.set.lo), 'hi': _bounds_json(block.set.hi)}}
    else:
        out['set'] = 'free'
    return out


def problem_to_json(p: ProblemInstance) -> JsonObject:
    """Inverse of `problem_from_json`."""
    return {
        'm': p.m,
        'sense': str(p.sense),
        'rhs': to_json_array(p.rhs),
        'blocks': [block_to_json(b) for b in p.blocks],
    }
