"""
Prediction steps and their prediction matrices.

Every predictor maps the corrected iterate vᵏ to a predicted point
w̃ᵏ ∈ Ω satisfying

    θ(u) − θ(ũᵏ) + (w − w̃ᵏ)ᵀF(w̃ᵏ) ≥ (v − ṽᵏ)ᵀQ(vᵏ − ṽᵏ)   for all w ∈ Ω

for the scheme's matrix Q. The corrected coordinates v are:

    scprsm     v = (y, λ)
    gs3        v = (y, z, λ)
    multi-*    ξ = P·w = (√β·A₁x₁, …, √β·Aₚxₚ, λ/√β)

The multi-block schemes use 𝒬 on ξ (Q = Pᵀ𝒬P on w).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla
from numpy.typing import ArrayLike

from pcsplit.errors import DimensionError
from pcsplit.matrices import (
    BlockLowerOnes, Matrix, Vector, as_vector, block_row_ones, dense_solve, frozen,
    require_full_column_rank, symmetrize,
)
from pcsplit.problem import PredictorKind, ProblemInstance, Sense
from pcsplit.subproblems import project_lambda, solve_block

logger = logging.getLogger(__name__)


class Structure(StrEnum):
    """Which scheme a prediction matrix belongs to."""
    SCPRSM = 'scprsm'
    GS3 = 'gs3'
    MULTI_PD = 'multi-pd'
    MULTI_DP = 'multi-dp'


class Order(StrEnum):
    """Multi-block sweep order: multiplier after (PD) or before (DP) the primal sweep."""
    PD = 'pd'
    DP = 'dp'


@dataclass(frozen=True, eq=False)
class IterateState:
    """
    The corrected iterate and the products the predictors consume.

    `x_blocks[i]` may be None where only the image Aᵢxᵢ is tracked (the
    structured three-block correction and the multi-block schemes). Where a
    block is present, `images[i] == Aᵢ·x_blocks[i]`.
    """
    x_blocks: tuple[Vector | None, ...]
    lam: Vector
    images: tuple[Vector, ...]
    scheme: PredictorKind

    @classmethod
    def zeros(cls, problem: ProblemInstance, scheme: PredictorKind) -> IterateState:
        return cls(
            x_blocks=tuple(np.zeros(n) for n in problem.dims),
            lam=np.zeros(problem.m),
            images=tuple(np.zeros(problem.m) for _ in problem.blocks),
            scheme=scheme,
        )

    @classmethod
    def from_point(cls, problem: ProblemInstance, w: ArrayLike, scheme: PredictorKind) -> IterateState:
        xs, lam = problem.split(w)
        return cls(
            x_blocks=tuple(xs),
            lam=lam,
            images=tuple(b.A @ x for b, x in zip(problem.blocks, xs)),
            scheme=scheme,
        )


@dataclass(frozen=True, eq=False)
class PredictionOutput:
    """
    A predicted point w̃ᵏ plus its corrected coordinates ṽᵏ.

    `aux` carries scheme intermediates such as λ^{k+½} for SC-PRSM.
    """
    x_tilde: tuple[Vector, ...]
    lam_tilde: Vector
    images_tilde: tuple[Vector, ...]
    v_tilde: Vector
    aux: Mapping[str, Vector] = field(default_factory=dict)

    @property
    def w_tilde(self) -> Vector:
        return np.concatenate([*self.x_tilde, self.lam_tilde])


@dataclass(frozen=True, eq=False)
class PredictionMatrix:
    """
    The matrix Q of a prediction step.

    For the multi-block schemes `P` is the scaling ξ = P·w and `calQ` the
    matrix 𝒬 acting on ξ, with Q = Pᵀ𝒬P.
    """
    Q: Matrix
    structure: Structure
    P: Matrix | None = None
    calQ: Matrix | None = None

    @property
    def v_matrix(self) -> Matrix:
        """The matrix acting on the corrected coordinates."""
        return self.calQ if self.calQ is not None else self.Q


def _check_beta(beta: float) -> None:
    if not (math.isfinite(beta) and beta > 0.0):
        raise ValueError(f"β must be positive, got {beta}")


def _require_blocks(p: ProblemInstance, count: int, what: str) -> None:
    if p.p != count:
        raise ValueError(f"{what} needs exactly {count} blocks, got {p.p}")


def _require_equality(p: ProblemInstance, what: str) -> None:
    if p.sense is not Sense.EQUALITY:
        raise ValueError(f"{what} supports equality constraints only; inequality sense requires DP predictor")


# Strictly contractive Peaceman-Rachford (two blocks)

def predict_scprsm(state: IterateState, p: ProblemInstance, beta: float, mu: float) -> PredictionOutput:
    """
    One SC-PRSM sweep, read as a prediction.

        x̃  = argmin θ₁(x) − xᵀAᵀλᵏ + (β/2)‖Ax + Byᵏ − b‖²
        λ^{k+½} = λᵏ − μβ(Ax̃ + Byᵏ − b)
        ỹ  = argmin θ₂(y) − yᵀBᵀλ^{k+½} + (β/2)‖Ax̃ + By − b‖²
        λ̃  = λᵏ − β(Ax̃ + Byᵏ − b)

    Raises:
        ValueError: For a wrong block count, inequality sense, or μ ∉ (0,1).
    """
    _require_blocks(p, 2, "SC-PRSM")
    _require_equality(p, "SC-PRSM")
    _check_beta(beta)
    if not 0.0 < mu < 1.0:
        raise ValueError(f"μ must lie in (0,1), got {mu}")
    first, second = p.blocks
    by, lam, b = state.images[1], state.lam, p.rhs
    x = solve_block(first, beta, -(first.A.T @ lam), by - b)
    ax = first.A @ x
    r = ax + by - b
    lam_half = lam - mu * beta * r
    y = solve_block(second, beta, -(second.A.T @ lam_half), ax - b)
    lam_tilde = lam - beta * r
    return PredictionOutput(
        x_tilde=(x, y),
        lam_tilde=lam_tilde,
        images_tilde=(ax, second.A @ y),
        v_tilde=np.concatenate([y, lam_tilde]),
        aux={'lambda_half': lam_half},
    )


class ScPrsmMatrices(NamedTuple):
    Q: Matrix
    M: Matrix
    H: Matrix
    G: Matrix


def scprsm_matrices(p: ProblemInstance, beta: float, mu: float) -> ScPrsmMatrices:
    """
    Q, M, H = QM⁻¹ and G = Qᵀ+Q − MᵀHM for SC-PRSM on v = (y, λ).

        Q = [[βBᵀB, −μBᵀ], [−B, I/β]]
        M = [[I, 0], [−μβB, 2μI]]

    μ = 1 is accepted so the degenerate case can be certified (and fail).

    Raises:
        RankDeficientError: If B lacks full column rank.
        ValueError: For μ ∉ (0,1].
    """
    _require_blocks(p, 2, "SC-PRSM")
    _check_beta(beta)
    if not 0.0 < mu <= 1.0:
        raise ValueError(f"μ must lie in (0,1], got {mu}")
    B = p.blocks[1].A
    require_full_column_rank(B, 'B')
    n, m = B.shape[1], p.m
    Q = np.block([[beta * B.T @ B, -mu * B.T], [-B, np.eye(m) / beta]])
    M = np.block([[np.eye(n), np.zeros((n, m))], [-mu * beta * B, 2.0 * mu * np.eye(m)]])
    H = symmetrize(dense_solve(M.T, Q.T).T)
    G = symmetrize(Q.T + Q - M.T @ H @ M)
    return ScPrsmMatrices(Q, M, H, G)


def scprsm_prediction_matrix(p: ProblemInstance, beta: float, mu: float) -> PredictionMatrix:
    return PredictionMatrix(Q=scprsm_matrices(p, beta, mu).Q, structure=Structure.SCPRSM)


# Three-block Gauss-Seidel

def predict_gs3(state: IterateState, p: ProblemInstance, beta: float) -> PredictionOutput:
    """
    The direct three-block extension of ADMM, with λ̃ taken from the
    uncorrected images:

        x̃ = argmin θ₁(x) − xᵀAᵀλᵏ + (β/2)‖Ax + Byᵏ + Czᵏ − b‖²
        ỹ = argmin θ₂(y) − yᵀBᵀλᵏ + (β/2)‖Ax̃ + By + Czᵏ − b‖²
        z̃ = argmin θ₃(z) − zᵀCᵀλᵏ + (β/2)‖Ax̃ + Bỹ + Cz − b‖²
        λ̃ = λᵏ − β(Ax̃ + Byᵏ + Czᵏ − b)

    Only the images Byᵏ, Czᵏ and λᵏ of the state are read.
    """
    _require_blocks(p, 3, "the three-block predictor")
    _require_equality(p, "the three-block predictor")
    _check_beta(beta)
    a_blk, b_blk, c_blk = p.blocks
    by, cz, lam, b = state.images[1], state.images[2], state.lam, p.rhs
    x = solve_block(a_blk, beta, -(a_blk.A.T @ lam), by + cz - b)
    ax = a_blk.A @ x
    y = solve_block(b_blk, beta, -(b_blk.A.T @ lam), ax + cz - b)
    by_t = b_blk.A @ y
    z = solve_block(c_blk, beta, -(c_blk.A.T @ lam), ax + by_t - b)
    lam_tilde = lam - beta * (ax + by + cz - b)
    return PredictionOutput(
        x_tilde=(x, y, z),
        lam_tilde=lam_tilde,
        images_tilde=(ax, by_t, c_blk.A @ z),
        v_tilde=np.concatenate([y, z, lam_tilde]),
    )


def gs3_prediction_matrix(p: ProblemInstance, beta: float) -> PredictionMatrix:
    """
    Q on v = (y, z, λ):

        [[βBᵀB, 0,    0  ],
         [βCᵀB, βCᵀC, 0  ],
         [−B,   −C,   I/β]]
    """
    _require_blocks(p, 3, "the three-block predictor")
    _check_beta(beta)
    B, C = p.blocks[1].A, p.blocks[2].A
    require_full_column_rank(B, 'B')
    require_full_column_rank(C, 'C')
    ny, nz, m = B.shape[1], C.shape[1], p.m
    Q = np.block([
        [beta * B.T @ B, np.zeros((ny, nz)), np.zeros((ny, m))],
        [beta * C.T @ B, beta * C.T @ C, np.zeros((nz, m))],
        [-B, -C, np.eye(m) / beta],
    ])
    return PredictionMatrix(Q=Q, structure=Structure.GS3)


# Multi-block primal-dual / dual-primal

def xi_from(images: Sequence[Vector], lam: Vector, beta: float) -> Vector:
    """ξ = (√β·A₁x₁, …, √β·Aₚxₚ, λ/√β) from the images Aᵢxᵢ."""
    s = math.sqrt(beta)
    return np.concatenate([*(s * img for img in images), lam / s])


def split_xi(xi: Vector, p: int, m: int, beta: float) -> tuple[tuple[Vector, ...], Vector]:
    """Inverse of `xi_from`: the images and λ."""
    if xi.size != (p + 1) * m:
        raise DimensionError(f"ξ has length {xi.size}, expected (p+1)m = {(p + 1) * m}")
    s = math.sqrt(beta)
    blocks = xi.reshape(p + 1, m)
    return tuple(blocks[i] / s for i in range(p)), blocks[p] * s


def predict_multiblock(state: IterateState, p: ProblemInstance, beta: float, order: Order) -> PredictionOutput:
    """
    Gauss-Seidel sweep over all blocks with proximal terms (β/2)‖Aᵢ(xᵢ − xᵢᵏ)‖².

    PD: the primal sweep uses λᵏ, then λ̃ = P_Λ(λᵏ − β(ΣAⱼx̃ⱼ − b)).
    DP: λ̃ = P_Λ(λᵏ − β(ΣAⱼxⱼᵏ − b)) first, then the sweep uses λ̃.

    Block i minimizes θᵢ(xᵢ) − xᵢᵀAᵢᵀλ + (β/2)‖Σ_{j<i}Aⱼ(x̃ⱼ − xⱼᵏ) + Aᵢ(xᵢ − xᵢᵏ)‖².
    The sweep is sequential.

    Raises:
        ValueError: For fewer than two blocks, or ≥ constraints with PD order.
    """
    if p.p < 2:
        raise ValueError(f"multi-block prediction needs at least 2 blocks, got {p.p}")
    if p.sense is Sense.GREATER_EQUAL and order is not Order.DP:
        raise ValueError("inequality sense requires DP predictor")
    _check_beta(beta)
    images, lam, b = state.images, state.lam, p.rhs
    if order is Order.DP:
        lam_tilde = project_lambda(lam - beta * (sum(images, -b)), p.lambda_set)
        lam_used = lam_tilde
    else:
        lam_used = lam
    acc = np.zeros(p.m)
    xs: list[Vector] = []
    imgs: list[Vector] = []
    for block, s in zip(p.blocks, images):
        x = solve_block(block, beta, -(block.A.T @ lam_used), acc - s)
        img = block.A @ x
        acc = acc + img - s
        xs.append(x)
        imgs.append(img)
    if order is Order.PD:
        lam_tilde = project_lambda(lam - beta * (sum(imgs, -b)), p.lambda_set)
    return PredictionOutput(
        x_tilde=tuple(xs),
        lam_tilde=lam_tilde,
        images_tilde=tuple(imgs),
        v_tilde=xi_from(imgs, lam_tilde, beta),
    )


def scaling_matrix(p: ProblemInstance, beta: float) -> Matrix:
    """P = diag(√β·A₁, …, √β·Aₚ, I/√β), so ξ = P·w."""
    s = math.sqrt(beta)
    return sla.block_diag(*(s * b.A for b in p.blocks), np.eye(p.m) / s)


def multiblock_calq(p: int, m: int, order: Order) -> Matrix:
    """
    𝒬 on ξ, from 𝓛 and 𝓔:

        PD: [[𝓛, 𝓔ᵀ], [0, I]]
        DP: [[𝓛, 0], [−𝓔, I]]
    """
    L = BlockLowerOnes(p, m).materialize()
    E = block_row_ones(p, m)
    if order is Order.PD:
        return np.block([[L, E.T], [np.zeros((m, p * m)), np.eye(m)]])
    return np.block([[L, np.zeros((p * m, m))], [-E, np.eye(m)]])


def q_multiblock(p: ProblemInstance, beta: float, order: Order) -> PredictionMatrix:
    """
    Q on w for the multi-block schemes, with its factorization Q = Pᵀ𝒬P.

    Block (i, j) of the primal part is βAᵢᵀAⱼ for j ≤ i. PD adds Aᵢᵀ in the
    λ column; DP adds −Aⱼ in the λ row. The λ diagonal block is I/β.

    Raises:
        RankDeficientError: If some Aᵢ lacks full column rank.
    """
    _check_beta(beta)
    for i, block in enumerate(p.blocks):
        require_full_column_rank(block.A, f"A{i + 1}")
    dims, m, nb = p.dims, p.m, p.p
    rows: list[list[Matrix]] = []
    for i, bi in enumerate(p.blocks):
        row = [beta * bi.A.T @ bj.A if j <= i else np.zeros((dims[i], dims[j]))
               for j, bj in enumerate(p.blocks)]
        row.append(bi.A.T if order is Order.PD else np.zeros((dims[i], m)))
        rows.append(row)
    last = [(-bj.A if order is Order.DP else np.zeros((m, dims[j]))) for j, bj in enumerate(p.blocks)]
    last.append(np.eye(m) / beta)
    rows.append(last)
    Q = np.block(rows)
    structure = Structure.MULTI_PD if order is Order.PD else Structure.MULTI_DP
    return PredictionMatrix(
        Q=frozen(Q),
        structure=structure,
        P=frozen(scaling_matrix(p, beta)),
        calQ=frozen(multiblock_calq(nb, m, order)),
    )


def corrected_coordinates(structure: Structure | PredictorKind, p: ProblemInstance,
                          beta: float, w: ArrayLike) -> Vector:
    """Map a full point w = (x, λ) to the scheme's corrected coordinates."""
    xs, lam = p.split(as_vector(w, 'w'))
    match str(structure):
        case 'scprsm':
            return np.concatenate([xs[1], lam])
        case 'gs3':
            return np.concatenate([xs[1], xs[2], lam])
        case 'multi-pd' | 'multi-dp':
            return xi_from([b.A @ x for b, x in zip(p.blocks, xs)], lam, beta)
        case _:
            raise ValueError(f"no corrected coordinates for {structure}")
