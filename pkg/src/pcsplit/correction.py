"""
Correction matrices from a split of Qᵀ+Q.

Any split Qᵀ + Q = D + G with D ≻ 0 and G ≻ 0 yields a convergent
correction

    M = Q⁻ᵀD,   H = QD⁻¹Qᵀ,   vᵏ⁺¹ = vᵏ − M(vᵏ − ṽᵏ)

which is carried out by solving Qᵀ(vᵏ⁺¹ − vᵏ) = D(ṽᵏ − vᵏ). One may pick D
directly, pick G and take D = Qᵀ+Q − G, blend, or use one of the named
presets below.

The three-block presets and the multi-block presets also have structured
correctors that avoid the dense solve.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import StrEnum
from functools import cached_property
from typing import NamedTuple, TypeAlias

import numpy as np
from numpy.typing import ArrayLike

from pcsplit.certify import ConvergenceCertificate, certify
from pcsplit.config import DEFAULT_ALPHA, DEFAULT_NU
from pcsplit.errors import DimensionError, SplitError
from pcsplit.matrices import (
    BlockLowerOnes, LuFactorization, Matrix, Vector, as_matrix, as_vector, block_identity, block_row_ones,
    dense_solve, factorize, range_projection, spd_check, symmetrize,
)
from pcsplit.predictors import Order

logger = logging.getLogger(__name__)


class PresetName(StrEnum):
    """Named splits of Qᵀ+Q."""
    ALG1 = 'alg1'
    ALG2 = 'alg2'
    ALG3 = 'alg3'
    MULTI_PD = 'multi-pd'
    MULTI_DP = 'multi-dp'
    MULTI_PD_G = 'multi-pd-g'
    MULTI_DP_G = 'multi-dp-g'


GS3_PRESETS = (PresetName.ALG1, PresetName.ALG2, PresetName.ALG3)
MULTI_PRESETS = (PresetName.MULTI_PD, PresetName.MULTI_DP, PresetName.MULTI_PD_G, PresetName.MULTI_DP_G)


def _check_open_unit(name: str, value: float) -> None:
    if not (math.isfinite(value) and 0.0 < value < 1.0):
        raise ValueError(f"{name} must lie in (0,1), got {value}")


@dataclass(frozen=True, eq=False)
class FromD:
    """Choose D; G = Qᵀ+Q − D."""
    D: Matrix


@dataclass(frozen=True, eq=False)
class FromG:
    """Choose G; D = Qᵀ+Q − G."""
    G: Matrix


@dataclass(frozen=True)
class AlphaBlend:
    """D = α(Qᵀ+Q), G = (1−α)(Qᵀ+Q)."""
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self) -> None:
        _check_open_unit('α', self.alpha)


@dataclass(frozen=True)
class Preset:
    """
    A named split.

    Attributes:
        name: Which preset.
        blocks: Block sizes of the corrected coordinates, e.g. (n_y, n_z, m)
            for the three-block presets or (m,)*(p+1) for multi-block.
        nu: ν ∈ (0,1); unused by `alg3`.
    """
    name: PresetName
    blocks: tuple[int, ...]
    nu: float = DEFAULT_NU

    def __post_init__(self) -> None:
        object.__setattr__(self, 'name', PresetName(self.name))
        if self.name is not PresetName.ALG3:
            _check_open_unit('ν', self.nu)
        if self.name in GS3_PRESETS and len(self.blocks) != 3:
            raise DimensionError(f"{self.name} needs three block sizes (y, z, λ), got {self.blocks}")
        if self.name in MULTI_PRESETS and (len(self.blocks) < 2 or len(set(self.blocks)) != 1):
            raise DimensionError(f"{self.name} needs p+1 equal block sizes, got {self.blocks}")


SplitChoice: TypeAlias = FromD | FromG | AlphaBlend | Preset
'''How to split Qᵀ+Q into D + G.'''


def _diag_blocks(S: Matrix, sizes: tuple[int, ...]) -> list[Matrix]:
    offsets = np.cumsum((0,) + sizes)
    return [S[offsets[i]:offsets[i + 1], offsets[i]:offsets[i + 1]] for i in range(len(sizes))]


def scaled_diagonal(Q: Matrix, sizes: tuple[int, ...], nu: float) -> Matrix:
    """blockdiag(ν·Q₁₁, …, ν·Q_kk, Q_λλ) from Q's diagonal blocks."""
    if sum(sizes) != Q.shape[0]:
        raise DimensionError(f"block sizes {sizes} do not add up to {Q.shape[0]}")
    parts = _diag_blocks(Q, sizes)
    out = np.zeros_like(Q)
    start = 0
    for i, (size, part) in enumerate(zip(sizes, parts)):
        scale = 1.0 if i == len(sizes) - 1 else nu
        out[start:start + size, start:start + size] = scale * part
        start += size
    return out


def multiblock_d(order: Order, nu: float, p: int, m: int) -> Matrix:
    """
    𝒟 for the multi-block presets:

        PD: diag(ν𝓘, I)
        DP: [[ν𝓘 + 𝓔ᵀ𝓔, −𝓔ᵀ], [−𝓔, I]]
    """
    E = block_row_ones(p, m)
    eye = block_identity(p, m)
    if order is Order.PD:
        return np.block([[nu * eye, np.zeros((p * m, m))], [np.zeros((m, p * m)), np.eye(m)]])
    return np.block([[nu * eye + E.T @ E, -E.T], [-E, np.eye(m)]])


def multiblock_correction_matrix(order: Order, nu: float, p: int, m: int) -> Matrix:
    """
    Closed-form 𝓜 = 𝒬⁻ᵀ𝒟:

        PD: [[ν𝓛⁻ᵀ, 0], [−ν𝓔𝓛⁻ᵀ, I]]
        DP: [[ν𝓛⁻ᵀ, 0], [−𝓔, I]]
    """
    L = BlockLowerOnes(p, m)
    Lit = L.inverse_transpose()
    E = L.row_ones()
    lower = -nu * E @ Lit if order is Order.PD else -E
    return np.block([[nu * Lit, np.zeros((p * m, m))], [lower, np.eye(m)]])


def preset_matrices(Q: Matrix, preset: Preset) -> tuple[Matrix, Matrix]:
    """Materialize (D, G) for a preset, without SPD checks."""
    S = Q.T + Q
    match preset.name:
        case PresetName.ALG1:
            D = scaled_diagonal(Q, preset.blocks, preset.nu)
            return D, S - D
        case PresetName.ALG2:
            G = scaled_diagonal(Q, preset.blocks, preset.nu)
            return S - G, G
        case PresetName.ALG3:
            half = 0.5 * S
            return half, half.copy()
    p, m = len(preset.blocks) - 1, preset.blocks[0]
    if Q.shape[0] != (p + 1) * m:
        raise DimensionError(f"{preset.name} with blocks {preset.blocks} does not fit Q of size {Q.shape[0]}")
    match preset.name:
        case PresetName.MULTI_PD:
            D = multiblock_d(Order.PD, preset.nu, p, m)
            return D, S - D
        case PresetName.MULTI_DP:
            D = multiblock_d(Order.DP, preset.nu, p, m)
            return D, S - D
        case PresetName.MULTI_PD_G:
            G = multiblock_d(Order.PD, preset.nu, p, m)
            return S - G, G
        case _:
            G = multiblock_d(Order.DP, preset.nu, p, m)
            return S - G, G


def split(Q: ArrayLike, choice: SplitChoice, *, enforce: bool = True) -> tuple[Matrix, Matrix]:
    """
    Split Qᵀ+Q into D + G.

    Args:
        Q: The prediction matrix.
        choice: The split strategy.
        enforce: Require Qᵀ+Q and both parts to be SPD. Turned off when the
            certificate is to report the failure instead.

    Raises:
        SplitError: If Qᵀ+Q, D or G is not SPD; reports which and its
            smallest eigenvalue.
    """
    Q = as_matrix(Q, 'Q')
    if Q.shape[0] != Q.shape[1]:
        raise DimensionError(f"Q must be square, got {Q.shape}")
    S = Q.T + Q
    if enforce:
        qtq = spd_check(S)
        if not qtq.is_spd:
            raise SplitError('Qᵀ+Q', qtq.min_eig)
    match choice:
        case FromD(D=D):
            D = as_matrix(D, 'D')
            if D.shape != S.shape:
                raise DimensionError(f"D has shape {D.shape}, expected {S.shape}")
            G = S - D
        case FromG(G=G):
            G = as_matrix(G, 'G')
            if G.shape != S.shape:
                raise DimensionError(f"G has shape {G.shape}, expected {S.shape}")
            D = S - G
        case AlphaBlend(alpha=alpha):
            D, G = alpha * S, (1.0 - alpha) * S
        case Preset():
            D, G = preset_matrices(Q, choice)
    if enforce:
        scale = float(np.linalg.norm(S, 2))
        for part, mat in (('D', D), ('G', G)):
            cert = spd_check(mat, scale=scale)
            if not cert.is_spd:
                raise SplitError(part, cert.min_eig)
    return D, G


@dataclass(frozen=True, eq=False)
class CorrectionPlan:
    """
    A split (D, G) of Qᵀ+Q and the derived M = Q⁻ᵀD, H = QD⁻¹Qᵀ.

    Δ = Qᵀ+Q − G equals D, so a single matrix serves both.
    """
    Q: Matrix
    D: Matrix
    G: Matrix
    M: Matrix
    H: Matrix
    certificate: ConvergenceCertificate
    choice: SplitChoice | None = field(default=None)

    @property
    def Delta(self) -> Matrix:
        return self.D

    @property
    def size(self) -> int:
        return self.Q.shape[0]

    @cached_property
    def qt_factor(self) -> LuFactorization:
        return factorize(self.Q.T, 'Qᵀ')

    def summary(self) -> dict[str, object]:
        return {
            'size': self.size,
            **self.certificate.to_json(),
        }


def build_plan(Q: ArrayLike, choice: SplitChoice, *, enforce: bool = True) -> CorrectionPlan:
    """
    Build and certify a correction plan.

    Raises:
        SingularMatrixError: If Q (or D) is singular.
        SplitError: If the split is not SPD and `enforce` is set.
    """
    Q = as_matrix(Q, 'Q')
    D, G = split(Q, choice, enforce=enforce)
    qt = factorize(Q.T, 'Qᵀ')
    M = qt.solve(D)
    H = symmetrize(Q @ dense_solve(D, Q.T))
    cert = certify(Q, M, H, G)
    plan = CorrectionPlan(Q=Q, D=D, G=G, M=M, H=H, certificate=cert, choice=choice)
    object.__setattr__(plan, 'qt_factor', qt)
    logger.debug("plan of size %d: hm_residual=%.3g ok=%s", plan.size, cert.hm_residual, cert.ok)
    return plan


def correct_dense(plan: CorrectionPlan, v_k: ArrayLike, v_tilde: ArrayLike) -> Vector:
    """vᵏ⁺¹ from Qᵀ(vᵏ⁺¹ − vᵏ) = D(ṽᵏ − vᵏ)."""
    v_k = as_vector(v_k, 'v_k')
    v_tilde = as_vector(v_tilde, 'v_tilde')
    if v_k.size != plan.size or v_tilde.size != plan.size:
        raise DimensionError(f"vectors of length {v_k.size}/{v_tilde.size} for a plan of size {plan.size}")
    return v_k + plan.qt_factor.solve(plan.D @ (v_tilde - v_k))


class Gs3Images(NamedTuple):
    """(By, Cz, λ): the three-block corrected iterate in image space."""
    by: Vector
    cz: Vector
    lam: Vector


def correct_gs3_structured(current: Gs3Images, predicted: Gs3Images, algo: PresetName,
                           nu: float, beta: float,
                           B: Matrix | None = None, C: Matrix | None = None) -> Gs3Images:
    """
    Three-block correction carried out on the images (By, Cz, λ).

    With a = B(yᵏ⁺¹ − yᵏ), c = C(zᵏ⁺¹ − zᵏ), l = λᵏ⁺¹ − λᵏ and the predicted
    differences ã, c̃, l̃, all three presets share the left factor

        [[I, I, −I/β],
         [0, I, −I/β],
         [0, 0,  I  ]] · (a, c, l) = R · (ã, c̃, l̃)

    and differ in R. Back-substitution gives l, then c, then a. When B or C
    does not span ℝᵐ the images c and a are projected onto range(C) and
    range(B), which is what Qᵀ(vᵏ⁺¹ − vᵏ) = D(ṽᵏ − vᵏ) requires; pass B and C
    for that, or leave them out when both are square.

    Raises:
        ValueError: For ν ∉ (0,1) with alg1/alg2, or a non three-block preset.
    """
    algo = PresetName(algo)
    if algo not in GS3_PRESETS:
        raise ValueError(f"{algo} is not a three-block preset")
    if algo is not PresetName.ALG3:
        _check_open_unit('ν', nu)
    m = current.lam.size
    for name, vec in (*zip(('By', 'Cz', 'λ'), current), *zip(('Bỹ', 'Cz̃', 'λ̃'), predicted)):
        if vec.shape != (m,):
            raise DimensionError(f"{name} has shape {vec.shape}, expected ({m},)")
    da = predicted.by - current.by
    dc = predicted.cz - current.cz
    dl = predicted.lam - current.lam
    match algo:
        case PresetName.ALG1:
            r1, r2, r3 = nu * da, nu * dc, dl
        case PresetName.ALG2:
            r1 = (2.0 - nu) * da + dc - dl / beta
            r2 = da + (2.0 - nu) * dc - dl / beta
            r3 = -beta * da - beta * dc + dl
        case _:
            r1 = da + 0.5 * dc - dl / (2.0 * beta)
            r2 = 0.5 * da + dc - dl / (2.0 * beta)
            r3 = -0.5 * beta * da - 0.5 * beta * dc + dl
    lam_step = r3
    cz_step = r2 + lam_step / beta
    if C is not None:
        cz_step = range_projection(C, cz_step)
    by_step = r1 - cz_step + lam_step / beta
    if B is not None:
        by_step = range_projection(B, by_step)
    return Gs3Images(current.by + by_step, current.cz + cz_step, current.lam + lam_step)


def correct_multiblock(xi: ArrayLike, xi_tilde: ArrayLike, order: Order, nu: float, p: int, m: int) -> Vector:
    """
    ξᵏ⁺¹ = ξᵏ − 𝓜(ξᵏ − ξ̃ᵏ) with the closed-form 𝓜, applied blockwise.

    With d = ξᵏ − ξ̃ᵏ the primal blocks move by ν𝓛⁻ᵀd_x (block i gets
    dᵢ − dᵢ₊₁); λ moves by −ν·d₁ + d_λ (PD) or −Σdᵢ + d_λ (DP).
    """
    _check_open_unit('ν', nu)
    xi = as_vector(xi, 'xi')
    xi_tilde = as_vector(xi_tilde, 'xi_tilde')
    if xi.size != (p + 1) * m or xi_tilde.size != xi.size:
        raise DimensionError(f"ξ has length {xi.size}/{xi_tilde.size}, expected (p+1)m = {(p + 1) * m}")
    d = xi - xi_tilde
    dx, dl = d[:p * m], d[p * m:]
    step_x = nu * BlockLowerOnes(p, m).apply_inverse_transpose(dx)
    if order is Order.PD:
        step_l = -nu * dx[:m] + dl
    else:
        step_l = -dx.reshape(p, m).sum(axis=0) + dl
    return xi - np.concatenate([step_x, step_l])
