"""
Exact solvers for the block subproblems of every predictor.

Each prediction step minimizes, over one block,

    θ(x) + linearᵀx + (β/2)‖A·x + shift‖²    subject to x ∈ 𝒳

Only two classes are solved, both exactly:

* quadratic θ on a free set, via the normal equations;
* θ with a componentwise proximal map (ℓ₁, zero, box indicator, or a
  diagonal quadratic on a box) when AᵀA = c·I, via one prox step from the
  unconstrained minimizer.

Anything else is rejected; there is no inner iterative loop.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np
from numpy.typing import ArrayLike

from pcsplit.config import ORTHO_TOL
from pcsplit.errors import DimensionError, UnsupportedSubproblemError
from pcsplit.matrices import Matrix, Vector, as_matrix, as_vector, dense_solve
from pcsplit.problem import (
    L1, Block, BlockFunction, Box, BoxIndicator, ConstraintSet, Free, LambdaSet, Quadratic, Zero,
)

logger = logging.getLogger(__name__)


class SolvabilityClass(StrEnum):
    QUADRATIC_EXACT = 'quadratic-exact'
    PROX_EXACT = 'prox-exact'
    UNSUPPORTED = 'unsupported'


@dataclass(frozen=True, eq=False)
class SubproblemSpec:
    """min θ(x) + linearᵀx + (β/2)‖A·x + shift‖² over `set`."""
    theta: BlockFunction
    A: Matrix
    beta: float
    linear: Vector
    shift: Vector
    set: ConstraintSet = field(default_factory=Free)

    def __post_init__(self) -> None:
        A = as_matrix(self.A, 'A')
        linear = as_vector(self.linear, 'linear')
        shift = as_vector(self.shift, 'shift')
        if not self.beta > 0.0:
            raise ValueError(f"β must be positive, got {self.beta}")
        if A.shape[1] != self.theta.dim or linear.size != A.shape[1] or shift.size != A.shape[0]:
            raise DimensionError(
                f"inconsistent subproblem: A {A.shape}, θ dim {self.theta.dim}, "
                f"linear {linear.size}, shift {shift.size}"
            )
        object.__setattr__(self, 'A', A)
        object.__setattr__(self, 'linear', linear)
        object.__setattr__(self, 'shift', shift)

    @property
    def block(self) -> Block:
        return Block(self.theta, self.A, self.set)


def orthogonal_scale(A: Matrix) -> float | None:
    """The c with AᵀA = c·I (within ‖AᵀA − cI‖_F ≤ 1e-10·c), or None."""
    gram = A.T @ A
    c = float(np.trace(gram)) / gram.shape[0]
    if c <= 0.0:
        return None
    if np.linalg.norm(gram - c * np.eye(gram.shape[0])) > ORTHO_TOL * c:
        return None
    return c


def _unsupported_reason(theta: BlockFunction, A: Matrix, cset: ConstraintSet) -> str | None:
    on = ' on a box' if isinstance(cset, Box) else ''
    if isinstance(theta, Quadratic):
        if isinstance(cset, Free):
            return None
        if not theta.is_diagonal:
            return "Quadratic with a non-diagonal P on a box"
    if orthogonal_scale(A) is None:
        return f"{type(theta).__name__}{on} with a non-orthogonal A"
    return None


def _classify(theta: BlockFunction, A: Matrix, cset: ConstraintSet) -> SolvabilityClass:
    if _unsupported_reason(theta, A, cset) is not None:
        return SolvabilityClass.UNSUPPORTED
    if isinstance(theta, Quadratic) and isinstance(cset, Free):
        return SolvabilityClass.QUADRATIC_EXACT
    return SolvabilityClass.PROX_EXACT


def classify(spec: SubproblemSpec) -> SolvabilityClass:
    """
    Which exact solver applies.

    QuadraticExact for quadratic θ on a free set; ProxExact for ℓ₁, zero and
    box-indicator θ, or any box set, when AᵀA = c·I; Unsupported otherwise.
    A quadratic θ on a box is only ProxExact when P is diagonal, since only
    then is the proximal map componentwise.
    """
    return _classify(spec.theta, spec.A, spec.set)


def classify_block(block: Block) -> SolvabilityClass:
    """Solvability of a block's subproblem; independent of β and the data terms."""
    return _classify(block.theta, block.A, block.set)


def unsupported_reason(block: Block) -> str | None:
    """Why a block's subproblem has no exact solver, or None when it has one."""
    return _unsupported_reason(block.theta, block.A, block.set)


def soft_threshold(v: Vector, tau: float) -> Vector:
    """Componentwise shrinkage sign(v)·max(|v| − τ, 0)."""
    return np.maximum(v - tau, 0.0) - np.maximum(-v - tau, 0.0)


def prox(theta: BlockFunction, cset: ConstraintSet, v: Vector, t: float) -> Vector:
    """
    argmin_x θ(x) + ι_𝒳(x) + ‖x − v‖²/(2t) for componentwise θ and box 𝒳.

    In one dimension the prox of a convex function plus an interval
    indicator is the prox clipped to the interval, so the set is applied
    last.
    """
    match theta:
        case L1(weight=w):
            x = soft_threshold(v, t * w)
        case Zero():
            x = v.copy()
        case BoxIndicator(lo=lo, hi=hi):
            x = np.clip(v, lo, hi)
        case Quadratic(P=P, q=q):
            d = np.diag(P)
            x = (v - t * q) / (1.0 + t * d)
        case _:
            raise UnsupportedSubproblemError(f"no proximal map for {type(theta).__name__}")
    if isinstance(cset, Box):
        x = np.clip(x, cset.lo, cset.hi)
    return x


def solve_subproblem(spec: SubproblemSpec) -> Vector:
    """
    Solve a block subproblem exactly.

    Returns:
        x̃ minimizing θ(x) + linearᵀx + (β/2)‖A·x + shift‖² over the set.

    Raises:
        UnsupportedSubproblemError: When `classify(spec)` is Unsupported.
        SingularMatrixError: When P + βAᵀA is singular.
    """
    A, beta = spec.A, spec.beta
    rhs = spec.linear + beta * (A.T @ spec.shift)
    match classify(spec):
        case SolvabilityClass.QUADRATIC_EXACT:
            assert isinstance(spec.theta, Quadratic)
            K = spec.theta.P + beta * (A.T @ A)
            return dense_solve(K, -(spec.theta.q + rhs))
        case SolvabilityClass.PROX_EXACT:
            c = orthogonal_scale(A)
            assert c is not None
            x_hat = -rhs / (beta * c)
            return prox(spec.theta, spec.set, x_hat, 1.0 / (beta * c))
        case _:
            reason = _unsupported_reason(spec.theta, spec.A, spec.set)
            raise UnsupportedSubproblemError(f"{reason} has no exact solver")


def solve_block(block: Block, beta: float, linear: ArrayLike, shift: ArrayLike) -> Vector:
    """`solve_subproblem` for one block of a problem."""
    return solve_subproblem(SubproblemSpec(block.theta, block.A, beta,
                                           as_vector(linear), as_vector(shift), block.set))


def project_lambda(lam: ArrayLike, Lambda: LambdaSet) -> Vector:
    """Project onto Λ: identity for ℝᵐ, max(·, 0) for ℝᵐ₊."""
    lam = as_vector(lam, 'lambda')
    match Lambda:
        case LambdaSet.NONNEG:
            return np.maximum(lam, 0.0)
        case _:
            return lam
