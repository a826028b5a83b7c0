"""
二值属性目标 F(U) = max{F_0(U), F_1(U)}、黎曼次梯度与 Lipschitz 常数
F_a(U) = kappa_a + theta_a sqrt<UUᵀ, M_a> + vartheta_a' sqrt<UUᵀ, M_a'> + <UUᵀ, C_a>
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from drfpca.exceptions import NumericalError, ValidationError
from drfpca.manifold.stiefel import PointLike, TangentVector, as_point, project_tangent
from drfpca.robust.ambiguity import ReformParams

logger = logging.getLogger(__name__)

# 平方根项的奇异下限与负值容差
SQRT_FLOOR = 1e-12
NEG_TOL = 1e-12


@dataclass(frozen=True)
class ObjectiveEval:
    value: float
    active_branch: int
    branch_values: Tuple[float, float]


def quad(U: np.ndarray, M: np.ndarray) -> float:
    """<UUᵀ, M> = Σ_j u_jᵀ M u_j，不构造 UUᵀ"""
    return float(np.einsum("ij,ij->", U, M @ U))


def safe_sqrt(t: float) -> float:
    if t < -NEG_TOL:
        raise NumericalError(f"negative quadratic form {t:.3e} under a square root, second moment is not PSD")
    return float(np.sqrt(max(t, 0.0)))


def sqrt_gradient_weight(coef: float, t: float) -> float:
    """coef * d sqrt(t)，t 低于下限且系数非零时报奇异"""
    if coef == 0.0:
        return 0.0
    if t < SQRT_FLOOR:
        raise NumericalError(
            f"subgradient is singular: <UUᵀ, M> = {t:.3e} below {SQRT_FLOOR:g} with coefficient {coef:.6g}")
    return coef / np.sqrt(t)


def _check_shape(U: np.ndarray, rp: ReformParams):
    expected = (rp.dim, rp.dim - rp.k)
    if U.shape != expected:
        raise ValidationError(f"U must have shape {expected}, got {U.shape}")


def _branches(U: np.ndarray, rp: ReformParams):
    t = [quad(U, rp.M[a]) for a in (0, 1)]
    roots = [safe_sqrt(v) for v in t]
    values = []
    for a in (0, 1):
        b = 1 - a
        values.append(float(rp.kappa[a] + rp.theta[a] * roots[a] + rp.vartheta[b] * roots[b]
                            + quad(U, rp.C[a])))
    return t, values


def eval_F(U: PointLike, rp: ReformParams) -> ObjectiveEval:
    U = as_point(U).U
    _check_shape(U, rp)
    _, values = _branches(U, rp)
    # 相等时取分支 0
    active = 0 if values[0] >= values[1] else 1
    return ObjectiveEval(value=values[active], active_branch=active, branch_values=(values[0], values[1]))


def riemannian_subgradient(U: PointLike, rp: ReformParams) -> TangentVector:
    """
    活跃分支 a 的欧氏梯度投影到切空间:
        G = theta_a / sqrt(t_a) M_a U + vartheta_a' / sqrt(t_a') M_a' U + 2 C_a U
    """
    point = as_point(U)
    U = point.U
    _check_shape(U, rp)
    t, values = _branches(U, rp)
    a = 0 if values[0] >= values[1] else 1
    b = 1 - a
    G = (sqrt_gradient_weight(rp.theta[a], t[a]) * (rp.M[a] @ U)
         + sqrt_gradient_weight(rp.vartheta[b], t[b]) * (rp.M[b] @ U)
         + 2.0 * (rp.C[a] @ U))
    return project_tangent(point, G)


def _spectral_norm(S: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvalsh(S))))


def lipschitz_constant(rp: ReformParams, d: Optional[int] = None, k: Optional[int] = None) -> float:
    """
    L = max{theta_a s_max(M_a)/sqrt(s_min(M_a)), vartheta_a s_max(M_a)/sqrt(s_min(M_a)), 2 sqrt(d-k) s_max(C_a)}
    系数非零而 M_a 奇异时 L 无定义
    """
    d = rp.dim if d is None else d
    k = rp.k if k is None else k
    terms = []
    for a in (0, 1):
        eigs = np.linalg.eigvalsh(rp.M[a])
        s_min, s_max = float(eigs[0]), float(eigs[-1])
        for coef in (rp.theta[a], rp.vartheta[a]):
            if coef == 0.0:
                continue
            if s_min <= 0.0:
                raise NumericalError(
                    f"Lipschitz constant undefined: second moment of group {a} is singular "
                    f"(smallest eigenvalue {s_min:.3e}) while its radius coefficient is {coef:.6g}")
            terms.append(coef * s_max / np.sqrt(s_min))
        terms.append(2.0 * np.sqrt(d - k) * _spectral_norm(rp.C[a]))
    L = float(max(terms))
    if L <= 0.0:
        raise NumericalError("Lipschitz constant is zero, all moments vanish")
    return L
