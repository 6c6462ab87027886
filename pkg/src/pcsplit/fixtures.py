"""
Named fixture problems with hand-derived solutions.

Each fixture carries its optimal point w* = (x₁, …, xₚ, λ) and the
derivation, so tests can check schemes and the oracle against arithmetic
done by hand. `pcsplit example NAME` writes a fixture as a problem file.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
from typing import Final

import numpy as np

from pcsplit.matrices import Vector
from pcsplit.problem import (
    L1, Block, BlockFunction, Box, BoxIndicator, ConstraintSet, ProblemInstance, Quadratic, Sense,
)


@dataclass(frozen=True)
class Fixture:
    name: str
    description: str
    build: Callable[[], ProblemInstance]
    solution: tuple[float, ...]
    derivation: str

    @property
    def problem(self) -> ProblemInstance:
        return self.build()

    @property
    def w_star(self) -> Vector:
        return np.array(self.solution, dtype=np.float64)


def _half_square(n: int = 1) -> Quadratic:
    return Quadratic(np.eye(n), np.zeros(n))


def _scalar(theta: BlockFunction, cset: ConstraintSet | None = None) -> Block:
    return Block(theta, np.eye(1)) if cset is None else Block(theta, np.eye(1), cset)


def qp2() -> ProblemInstance:
    return ProblemInstance((_scalar(_half_square()), _scalar(_half_square())), np.array([1.0]))


def qp3() -> ProblemInstance:
    return ProblemInstance(tuple(_scalar(_half_square()) for _ in range(3)), np.array([3.0]))


def l1_qp2() -> ProblemInstance:
    return ProblemInstance((_scalar(L1(1.0, 1)), _scalar(_half_square())), np.array([1.0]))


def l1_qp3() -> ProblemInstance:
    return ProblemInstance(
        (_scalar(_half_square()), _scalar(L1(1.0, 1)), _scalar(_half_square())),
        np.array([3.0]),
    )


def box_qp3() -> ProblemInstance:
    return ProblemInstance(
        (_scalar(_half_square()), _scalar(BoxIndicator(np.array([0.0]), np.array([0.5]))),
         _scalar(_half_square())),
        np.array([3.0]),
    )


def clipped_qp3() -> ProblemInstance:
    return ProblemInstance(
        (_scalar(_half_square()), _scalar(_half_square(), Box(np.array([-1.0]), np.array([0.5]))),
         _scalar(_half_square())),
        np.array([3.0]),
    )


def multi_qp5() -> ProblemInstance:
    return ProblemInstance(
        tuple(Block(_half_square(2), np.eye(2)) for _ in range(5)),
        np.array([5.0, 10.0]),
    )


def ineq2() -> ProblemInstance:
    return ProblemInstance((_scalar(_half_square()), _scalar(_half_square())), np.array([1.0]),
                           Sense.GREATER_EQUAL)


def ineq3() -> ProblemInstance:
    return ProblemInstance(tuple(_scalar(_half_square()) for _ in range(3)), np.array([3.0]),
                           Sense.GREATER_EQUAL)


def ineq_inactive() -> ProblemInstance:
    return ProblemInstance((_scalar(_half_square()), _scalar(_half_square())), np.array([-1.0]),
                           Sense.GREATER_EQUAL)


FIXTURES: Final[dict[str, Fixture]] = {f.name: f for f in (
    Fixture(
        'qp2', "min ½x² + ½y²  s.t. x + y = 1", qp2, (0.5, 0.5, 0.5),
        "x − λ = 0 and y − λ = 0 give x = y = λ; x + y = 1 gives λ = ½.",
    ),
    Fixture(
        'qp3', "min ½x² + ½y² + ½z²  s.t. x + y + z = 3", qp3, (1.0, 1.0, 1.0, 1.0),
        "Each block gives xᵢ = λ; 3λ = 3.",
    ),
    Fixture(
        'l1-qp2', "min |x| + ½y²  s.t. x + y = 1", l1_qp2, (0.0, 1.0, 1.0),
        "Try x = 0: then y = 1 and λ = y = 1, and λ ∈ ∂|0| = [−1, 1] holds. "
        "x > 0 would need λ = 1, y = 1, x = 0, a contradiction; x < 0 needs λ = −1, y = −1, x = 2.",
    ),
    Fixture(
        'l1-qp3', "min ½x² + |y| + ½z²  s.t. x + y + z = 3", l1_qp3, (1.0, 1.0, 1.0, 1.0),
        "Try y > 0: λ = 1, so x = z = 1 and y = 3 − 2 = 1 > 0, consistent.",
    ),
    Fixture(
        'box-qp3', "min ½x² + ι_[0,½](y) + ½z²  s.t. x + y + z = 3", box_qp3, (1.25, 0.5, 1.25, 1.25),
        "Try y at its upper bound ½: x = z = λ and 2λ + ½ = 3 give λ = 5/4 ≥ 0, "
        "the sign the upper bound's normal cone needs.",
    ),
    Fixture(
        'clipped-qp3', "min ½x² + ½y² + ½z²  s.t. x + y + z = 3, y ∈ [−1, ½]", clipped_qp3,
        (1.25, 0.5, 1.25, 1.25),
        "Unclipped y would be 1; at the bound y = ½ the rest gives x = z = λ = 5/4, "
        "and y − λ = −¾ ≤ 0 matches the upper bound.",
    ),
    Fixture(
        'multi-qp5', "min Σ ½‖xᵢ‖² over five blocks in ℝ²  s.t. Σ xᵢ = (5, 10)", multi_qp5,
        (1.0, 2.0) * 5 + (1.0, 2.0),
        "Each block gives xᵢ = λ; 5λ = (5, 10).",
    ),
    Fixture(
        'ineq2', "min ½x² + ½y²  s.t. x + y ≥ 1", ineq2, (0.5, 0.5, 0.5),
        "The unconstrained minimizer 0 is infeasible, so the row is active: as qp2, with λ = ½ ≥ 0.",
    ),
    Fixture(
        'ineq3', "min ½x² + ½y² + ½z²  s.t. x + y + z ≥ 3", ineq3, (1.0, 1.0, 1.0, 1.0),
        "Active row, as qp3; λ = 1 ≥ 0.",
    ),
    Fixture(
        'ineq-inactive', "min ½x² + ½y²  s.t. x + y ≥ −1", ineq_inactive, (0.0, 0.0, 0.0),
        "The unconstrained minimizer 0 is feasible, so λ = 0.",
    ),
)}

# One step of each scheme from the zero state with β = 1, reproduced by the tests.
SCPRSM_FIRST_STEP: Final[dict[str, float]] = {
    'x_tilde': 0.5, 'lambda_half': 0.25, 'y_tilde': 0.375, 'lambda_tilde': 0.5,
    'y_next': 0.375, 'lambda_next': 0.3125,
}
'''SC-PRSM on qp2 with μ = ½.'''
GS3_FIRST_STEP: Final[dict[str, float]] = {
    'x_tilde': 1.5, 'y_tilde': 0.75, 'z_tilde': 0.375, 'lambda_tilde': 1.5,
}
'''The three-block predictor on qp3.'''
