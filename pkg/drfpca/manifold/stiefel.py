"""
Stiefel 流形 {U ∈ R^{d×p}: UᵀU = I_p} 上的基本运算
随机点、正交性检查、切空间投影、QR 与极分解两种收缩映射
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Union

import numpy as np
from scipy import linalg

from drfpca.exceptions import NumericalError, ValidationError

logger = logging.getLogger(__name__)

ORTHO_TOL = 1e-10
REPAIR_TOL = 1e-6
TANGENT_TOL = 1e-8
RANK_TOL = 1e-12


def orthonormality_residual(U: np.ndarray) -> float:
    """||UᵀU - I||_F"""
    return float(np.linalg.norm(U.T @ U - np.eye(U.shape[1])))


def _inv_sqrt_gram(G: np.ndarray) -> np.ndarray:
    w, V = linalg.eigh(G)
    return (V / np.sqrt(w)) @ V.T


def _polar_pass(A: np.ndarray) -> np.ndarray:
    return A @ _inv_sqrt_gram(A.T @ A)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StiefelPoint:
    """
    列正交矩阵 U (d×p)
    残差在 (1e-10, 1e-6] 之间时做一次极分解修正，更大的残差视为错误
    """
    U: np.ndarray

    def __post_init__(self):
        U = np.asarray(self.U, dtype=float)
        if U.ndim != 2 or not 1 <= U.shape[1] <= U.shape[0]:
            raise ValidationError(f"a Stiefel point needs shape d×p with 1 <= p <= d, got {U.shape}")
        residual = orthonormality_residual(U)
        if residual > REPAIR_TOL:
            raise NumericalError(f"matrix is off the manifold: ||UᵀU - I||_F = {residual:.3e}")
        if residual > ORTHO_TOL:
            logger.debug("Re-orthonormalizing point with residual %.3e", residual)
            U = _polar_pass(U)
        object.__setattr__(self, "U", _frozen(U))

    def __array__(self, dtype=None, copy=None):
        return self.U if dtype is None else self.U.astype(dtype)

    @property
    def d(self) -> int:
        return self.U.shape[0]

    @property
    def p(self) -> int:
        return self.U.shape[1]

    def projector(self) -> np.ndarray:
        return self.U @ self.U.T

    def complement(self) -> np.ndarray:
        """正交补的一组标准正交基 (d×(d-p))"""
        return linalg.null_space(self.U.T)


@dataclass(frozen=True, eq=False)
class TangentVector:
    """U 处的切向量：ΔᵀU + UᵀΔ = 0"""
    delta: np.ndarray
    base: StiefelPoint

    def __post_init__(self):
        delta = np.asarray(self.delta, dtype=float)
        if delta.shape != self.base.U.shape:
            raise ValidationError(f"tangent shape {delta.shape} does not match base {self.base.U.shape}")
        residual = tangency_residual(self.base.U, delta)
        if residual > TANGENT_TOL * (1.0 + float(np.linalg.norm(delta))):
            raise NumericalError(f"matrix is not tangent at its base point: residual {residual:.3e}")
        object.__setattr__(self, "delta", _frozen(delta))

    def __array__(self, dtype=None, copy=None):
        return self.delta if dtype is None else self.delta.astype(dtype)

    def norm(self) -> float:
        return float(np.linalg.norm(self.delta))


PointLike = Union[StiefelPoint, np.ndarray]
TangentLike = Union[TangentVector, np.ndarray]


def as_point(U: PointLike) -> StiefelPoint:
    return U if isinstance(U, StiefelPoint) else StiefelPoint(U)


def tangency_residual(U: np.ndarray, delta: np.ndarray) -> float:
    """||ΔᵀU + UᵀΔ||_F"""
    S = U.T @ delta
    return float(np.linalg.norm(S + S.T))


def _qf(A: np.ndarray) -> np.ndarray:
    """QR 的 Q 因子，翻转列符号使 R 的对角元非负"""
    Q, R = np.linalg.qr(A)
    diag = np.diag(R)
    if np.min(np.abs(diag)) <= RANK_TOL * max(1.0, float(np.max(np.abs(diag)))):
        raise NumericalError("matrix is rank deficient, QR factor is not unique")
    signs = np.where(diag < 0, -1.0, 1.0)
    return Q * signs


def random_point(d: int, p: int, seed) -> StiefelPoint:
    """
    标准正态 d×p 矩阵的 Q 因子，服从流形上的不变测度
    :param seed: 整数或 numpy SeedSequence
    """
    if not 1 <= p <= d:
        raise ValidationError(f"random_point needs 1 <= p <= d, got d={d}, p={p}")
    rng = np.random.default_rng(seed)
    return StiefelPoint(_qf(rng.standard_normal((d, p))))


def project_tangent(U: PointLike, D: np.ndarray) -> TangentVector:
    """Proj(D) = (I - UUᵀ)D + ½ U (UᵀD - DᵀU)"""
    point = as_point(U)
    U = point.U
    D = np.asarray(D, dtype=float)
    if D.shape != U.shape:
        raise ValidationError(f"cannot project a {D.shape} matrix onto the tangent space at a {U.shape} point")
    UtD = U.T @ D
    delta = D - U @ UtD + 0.5 * U @ (UtD - UtD.T)
    return TangentVector(delta, point)


def _step(U: PointLike, delta: TangentLike):
    point = as_point(U)
    delta = np.asarray(delta, dtype=float)
    if delta.shape != point.U.shape:
        raise ValidationError(f"step shape {delta.shape} does not match point {point.U.shape}")
    return point.U, delta


def retract_qf(U: PointLike, delta: TangentLike) -> StiefelPoint:
    """Rtr(Δ) = qf(U + Δ)"""
    U, delta = _step(U, delta)
    return StiefelPoint(_qf(U + delta))


def retract_polar(U: PointLike, delta: TangentLike) -> StiefelPoint:
    """Rtr(Δ) = (U + Δ)(I + ΔᵀΔ)^{-1/2}，Gram 矩阵特征值不小于 1"""
    U, delta = _step(U, delta)
    return StiefelPoint((U + delta) @ _inv_sqrt_gram(np.eye(U.shape[1]) + delta.T @ delta))


RETRACTIONS: Dict[str, Callable[[PointLike, TangentLike], StiefelPoint]] = {
    "qf": retract_qf,
    "polar": retract_polar,
}


def get_retraction(name: str):
    try:
        return RETRACTIONS[name]
    except KeyError:
        raise ValidationError(f"unknown retraction '{name}', expected one of {sorted(RETRACTIONS)}") from None
