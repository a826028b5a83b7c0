"""
多组 (m > 2) 属性的扩展：对每个有序组对 (a, a') 的目标取最大
    Σ_b p_b (t_b + eps_b) + Σ_b 2 c_{a,a',b} sqrt(eps_b t_b) + lam (t_a - t_a' + eps_a - eps_a')
其中 t_b = <UUᵀ, M_b>，c_{a,a',b} = p_a + lam (b = a)，|p_a' - lam| (b = a')，否则 p_b
公共项 Σ_b p_b (t_b + eps_b) 随 U 变化，保留在目标中
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from drfpca.data.dataset import GroupMoments
from drfpca.exceptions import ConditionError, ValidationError
from drfpca.manifold.stiefel import PointLike, TangentVector, as_point, project_tangent
from drfpca.robust.ambiguity import ConditionReport, RobustConfig, check_conditions
from drfpca.robust.objective import quad, safe_sqrt, sqrt_gradient_weight

logger = logging.getLogger(__name__)

Pair = Tuple[int, int]


@dataclass(frozen=True)
class PairParams:
    """
    pairs 按字典序排列，coefficients[i] 为第 i 个组对的 c_{a,a',·}
    矩阵只存 m 份二阶矩，组对之间共享
    """
    pairs: Tuple[Pair, ...]
    coefficients: np.ndarray
    p: np.ndarray
    eps: np.ndarray
    M: np.ndarray
    lam: float
    k: int
    conditions: Optional[ConditionReport] = field(default=None, compare=False)

    @property
    def n_groups(self) -> int:
        return self.p.shape[0]

    @property
    def dim(self) -> int:
        return self.M.shape[1]

    def shift(self, index: int) -> float:
        """lam (eps_a - eps_a')"""
        a, b = self.pairs[index]
        return self.lam * (self.eps[a] - self.eps[b])

    def pair_matrix(self, index: int) -> np.ndarray:
        """lam (M_a - M_a')"""
        a, b = self.pairs[index]
        return self.lam * (self.M[a] - self.M[b])


@dataclass(frozen=True)
class PairEval:
    value: float
    active_pair: Pair
    pair_values: Tuple[float, ...]


def pair_coefficients(p, lam: float, a: int, b: int) -> np.ndarray:
    c = np.array(p, dtype=float)
    c[a] = p[a] + lam
    c[b] = abs(p[b] - lam)
    return c


def pair_params(gm: GroupMoments, cfg: RobustConfig, strict: bool = False) -> PairParams:
    if gm.n_groups < 2:
        raise ValidationError(f"the pair objective needs at least 2 groups, got {gm.n_groups}")
    cfg.validate_for(gm)
    report = check_conditions(gm, cfg)
    if strict and not report.valid:
        raise ConditionError(report.describe(), report)
    pairs = tuple(itertools.permutations(range(gm.n_groups), 2))
    coefficients = np.array([pair_coefficients(gm.p, cfg.lam, a, b) for a, b in pairs])
    coefficients.setflags(write=False)
    eps = np.asarray(cfg.eps, dtype=float)
    eps.setflags(write=False)
    logger.debug("Built %d ordered pairs for %d groups", len(pairs), gm.n_groups)
    return PairParams(pairs=pairs, coefficients=coefficients, p=gm.p, eps=eps, M=gm.M,
                      lam=float(cfg.lam), k=cfg.k, conditions=report)


def _check_shape(U: np.ndarray, pp: PairParams):
    expected = (pp.dim, pp.dim - pp.k)
    if U.shape != expected:
        raise ValidationError(f"U must have shape {expected}, got {U.shape}")


def _pair_values(U: np.ndarray, pp: PairParams):
    t = np.array([quad(U, M) for M in pp.M])
    roots = np.array([safe_sqrt(v) for v in t])
    common = float(np.dot(pp.p, t + pp.eps))
    radius_terms = pp.coefficients @ (2.0 * np.sqrt(pp.eps) * roots)
    values = []
    for i, (a, b) in enumerate(pp.pairs):
        values.append(common + float(radius_terms[i]) + pp.lam * (t[a] - t[b]) + pp.shift(i))
    return t, values


def eval_F_multi(U: PointLike, pp: PairParams) -> PairEval:
    U = as_point(U).U
    _check_shape(U, pp)
    _, values = _pair_values(U, pp)
    # argmax 取第一个最大值，即字典序最小的组对
    i = int(np.argmax(values))
    return PairEval(value=values[i], active_pair=pp.pairs[i], pair_values=tuple(values))


def riemannian_subgradient_multi(U: PointLike, pp: PairParams) -> TangentVector:
    point = as_point(U)
    U = point.U
    _check_shape(U, pp)
    t, values = _pair_values(U, pp)
    i = int(np.argmax(values))
    c = pp.coefficients[i]
    S = 2.0 * np.einsum("b,bij->ij", pp.p, pp.M) + 2.0 * pp.pair_matrix(i)
    G = S @ U
    for b in range(pp.n_groups):
        weight = sqrt_gradient_weight(2.0 * c[b] * np.sqrt(pp.eps[b]), t[b])
        if weight:
            G = G + weight * (pp.M[b] @ U)
    return project_tangent(point, G)
