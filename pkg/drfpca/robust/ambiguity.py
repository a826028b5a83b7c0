"""
Wasserstein 型矩散度、最坏情形期望的闭式解与重构参数
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from drfpca.data.dataset import GroupMoments
from drfpca.exceptions import ConditionError, ValidationError

logger = logging.getLogger(__name__)

# 半正定性与投影矩阵的容差
PSD_TOL = 1e-9
PROJECTOR_TOL = 1e-8


def _check_psd(S, name):
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {S.shape}")
    scale = max(1.0, float(np.max(np.abs(S))))
    if np.max(np.abs(S - S.T)) > PSD_TOL * scale:
        raise ValidationError(f"{name} is not symmetric")
    if np.linalg.eigvalsh(0.5 * (S + S.T))[0] < -PSD_TOL * scale:
        raise ValidationError(f"{name} is not positive semidefinite")
    return 0.5 * (S + S.T)


def psd_sqrt(S):
    """
    对称半正定矩阵的平方根：特征分解后把负特征值截断为 0 再开方
    """
    w, V = linalg.eigh(0.5 * (S + S.T))
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T


def w_divergence(mu1, sigma1, mu2, sigma2) -> float:
    """
    W = ||mu1 - mu2||^2 + Tr[S1 + S2 - 2 (S2^{1/2} S1 S2^{1/2})^{1/2}]
    """
    mu1 = np.asarray(mu1, dtype=float).ravel()
    mu2 = np.asarray(mu2, dtype=float).ravel()
    sigma1 = _check_psd(sigma1, "Sigma1")
    sigma2 = _check_psd(sigma2, "Sigma2")
    d = mu1.shape[0]
    if mu2.shape != (d,) or sigma1.shape != (d, d) or sigma2.shape != (d, d):
        raise ValidationError("w_divergence: dimension mismatch between moment pairs")
    root2 = psd_sqrt(sigma2)
    cross = psd_sqrt(root2 @ sigma1 @ root2)
    value = float(np.sum((mu1 - mu2) ** 2) + np.trace(sigma1) + np.trace(sigma2) - 2.0 * np.trace(cross))
    return max(value, 0.0)


def worst_case_expectation(upsilon: float, eps: float, M, P) -> float:
    """
    sup{ upsilon * E_Q[x^T P x] : W(Q, P_hat) <= eps } 的三段闭式解，t = <P, M>:
        upsilon >= 0           -> upsilon (sqrt(t) + sqrt(eps))^2
        upsilon < 0, t >= eps  -> upsilon (sqrt(t) - sqrt(eps))^2
        upsilon < 0, t < eps   -> 0
    t = 0 且 eps > 0 时第一段退化为 upsilon * eps
    """
    if eps < 0:
        raise ValidationError(f"radius must be nonnegative, got {eps}")
    M = np.asarray(M, dtype=float)
    P = np.asarray(P, dtype=float)
    if P.shape != M.shape or P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValidationError(f"P and M must be square with equal shapes, got {P.shape} and {M.shape}")
    if np.max(np.abs(P - P.T)) > PROJECTOR_TOL or np.max(np.abs(P @ P - P)) > PROJECTOR_TOL:
        raise ValidationError("P is not an orthogonal projector")
    t = max(float(np.sum(P * M)), 0.0)
    if upsilon >= 0:
        return upsilon * (np.sqrt(t) + np.sqrt(eps)) ** 2
    if t >= eps:
        return upsilon * (np.sqrt(t) - np.sqrt(eps)) ** 2
    return 0.0


def epsilon_from_alpha(alpha: float, counts: Sequence[int]) -> Tuple[float, ...]:
    """eps_a = alpha / sqrt(N_a)"""
    if alpha < 0:
        raise ValidationError(f"alpha must be nonnegative, got {alpha}")
    return tuple(float(alpha) / float(np.sqrt(n)) for n in counts)


@dataclass(frozen=True)
class RobustConfig:
    """惩罚系数 lam、各组半径 eps 与目标维数 k"""
    lam: float
    eps: Tuple[float, ...]
    k: int

    def __post_init__(self):
        object.__setattr__(self, "eps", tuple(float(e) for e in self.eps))
        if self.lam < 0:
            raise ValidationError(f"lambda must be nonnegative, got {self.lam}")
        if any(e < 0 for e in self.eps):
            raise ValidationError(f"radii must be nonnegative, got {self.eps}")
        if self.k < 1:
            raise ValidationError(f"k must be at least 1, got {self.k}")

    @classmethod
    def from_alpha(cls, lam: float, alpha: float, counts: Sequence[int], k: int) -> "RobustConfig":
        return cls(lam=lam, eps=epsilon_from_alpha(alpha, counts), k=k)

    def validate_for(self, gm: GroupMoments):
        if len(self.eps) != gm.n_groups:
            raise ValidationError(f"{len(self.eps)} radii given for {gm.n_groups} groups")
        if not 1 <= self.k <= gm.dim - 1:
            raise ValidationError(f"k must satisfy 1 <= k <= d-1 = {gm.dim - 1}, got {self.k}")


@dataclass(frozen=True)
class GroupCondition:
    group: int
    marginal_bound: bool
    eigenvalue_bound: bool
    tail_eigen_sum: float
    eps: float
    p: float

    @property
    def valid(self) -> bool:
        return self.marginal_bound or self.eigenvalue_bound


@dataclass(frozen=True)
class ConditionReport:
    """
    每组条件 (i) 0 <= lam <= p_a 与 (ii) M_a 最小 d-k 个特征值之和 >= eps_a
    每组至少一个成立时整体有效
    """
    lam: float
    groups: Tuple[GroupCondition, ...]

    @property
    def valid(self) -> bool:
        return all(g.valid for g in self.groups)

    def failures(self):
        return [g for g in self.groups if not g.valid]

    def describe(self) -> str:
        if self.valid:
            return "conditions hold for every group"
        parts = []
        for g in self.failures():
            parts.append(
                f"group {g.group}: (i) lambda={self.lam:g} > p={g.p:.6g}; "
                f"(ii) tail eigenvalue sum {g.tail_eigen_sum:.6g} < eps={g.eps:.6g}")
        return "; ".join(parts)

    def to_dict(self):
        return {
            "valid": self.valid,
            "lambda": self.lam,
            "groups": [
                {
                    "group": g.group,
                    "marginal_bound": g.marginal_bound,
                    "eigenvalue_bound": g.eigenvalue_bound,
                    "tail_eigen_sum": g.tail_eigen_sum,
                    "eps": g.eps,
                    "p": g.p,
                }
                for g in self.groups
            ],
        }


def check_conditions(gm: GroupMoments, cfg: RobustConfig) -> ConditionReport:
    """条件检查只报告不抛错，由求解器入口拒绝无效配置"""
    cfg.validate_for(gm)
    tail = gm.dim - cfg.k
    groups = []
    for a in range(gm.n_groups):
        eigs = np.linalg.eigvalsh(gm.M[a])
        tail_sum = float(np.sum(eigs[:tail]))
        groups.append(GroupCondition(
            group=a,
            marginal_bound=bool(0.0 <= cfg.lam <= gm.p[a]),
            eigenvalue_bound=bool(tail_sum >= cfg.eps[a]),
            tail_eigen_sum=tail_sum,
            eps=cfg.eps[a],
            p=float(gm.p[a]),
        ))
    return ConditionReport(lam=cfg.lam, groups=tuple(groups))


@dataclass(frozen=True)
class ReformParams:
    """
    二值属性的重构参数，下标 a 对应分支 (a, a') ∈ {(0,1), (1,0)}:
        kappa[a]    = (p_a + lam) eps_a + (p_a' - lam) eps_a'
        theta[a]    = 2 |p_a + lam| sqrt(eps_a)
        vartheta[b] = 2 |p_b - lam| sqrt(eps_b)   （在分支 a 中以 b = a' 出现）
        C[a]        = (p_a + lam) M_a + (p_a' - lam) M_a'
    """
    kappa: np.ndarray
    theta: np.ndarray
    vartheta: np.ndarray
    C: np.ndarray
    M: np.ndarray
    p: np.ndarray
    eps: np.ndarray
    lam: float
    k: int
    conditions: Optional[ConditionReport] = field(default=None, compare=False)

    @property
    def dim(self) -> int:
        return self.M.shape[1]


def reform_params(gm: GroupMoments, cfg: RobustConfig, strict: bool = False) -> ReformParams:
    """
    计算重构参数；条件报告挂在结果上，strict=True 时条件不满足直接抛 ConditionError
    """
    if gm.n_groups != 2:
        raise ValidationError(
            f"the binary reformulation needs exactly 2 groups, got {gm.n_groups}; "
            "use drfpca.robust.nonbinary.pair_params for multi-group attributes")
    cfg.validate_for(gm)
    report = check_conditions(gm, cfg)
    if strict and not report.valid:
        raise ConditionError(report.describe(), report)
    p = np.asarray(gm.p, dtype=float)
    eps = np.asarray(cfg.eps, dtype=float)
    lam = float(cfg.lam)
    kappa = np.empty(2)
    theta = np.empty(2)
    C = np.empty_like(gm.M)
    for a in (0, 1):
        b = 1 - a
        kappa[a] = (p[a] + lam) * eps[a] + (p[b] - lam) * eps[b]
        theta[a] = 2.0 * abs(p[a] + lam) * np.sqrt(eps[a])
        C[a] = (p[a] + lam) * gm.M[a] + (p[b] - lam) * gm.M[b]
    vartheta = 2.0 * np.abs(p - lam) * np.sqrt(eps)
    for name, arr in (("kappa", kappa), ("theta", theta), ("vartheta", vartheta), ("C", C)):
        arr.setflags(write=False)
    return ReformParams(kappa=kappa, theta=theta, vartheta=vartheta, C=C, M=gm.M, p=gm.p,
                        eps=eps, lam=lam, k=cfg.k, conditions=report)
