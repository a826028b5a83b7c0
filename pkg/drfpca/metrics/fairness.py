"""
重建误差、公平性指标、普通 PCA 基线与公平投影存在性的秩检验
"""

import itertools
import logging
from collections import OrderedDict
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from drfpca.data.dataset import Dataset, GroupMoments
from drfpca.exceptions import NumericalError, ValidationError

logger = logging.getLogger(__name__)

ORTHO_TOL = 1e-10
RANK_TOL = 1e-8
SYM_TOL = 1e-9

PROVENANCES = ("robust-fair", "nominal-pca", "external")

# 报告 JSON 的字段顺序
REPORT_FIELDS = ("are", "group_errors", "abdiff", "unfairness")


def sign_fix(V: np.ndarray) -> np.ndarray:
    """每列绝对值最大的元素取正"""
    V = np.array(V, dtype=float)
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


@dataclass(frozen=True, eq=False)
class Projection:
    """k 维子空间的标准正交基 V (d×k) 及其来源"""
    V: np.ndarray
    provenance: str = "external"

    def __post_init__(self):
        V = np.array(self.V, dtype=float)
        if V.ndim == 1:
            V = V[:, None]
        if V.ndim != 2 or not 1 <= V.shape[1] <= V.shape[0]:
            raise ValidationError(f"projection basis must be d×k with 1 <= k <= d, got {V.shape}")
        residual = float(np.linalg.norm(V.T @ V - np.eye(V.shape[1])))
        if residual > ORTHO_TOL:
            raise NumericalError(f"projection basis is not orthonormal: residual {residual:.3e}")
        if self.provenance not in PROVENANCES:
            raise ValidationError(f"unknown provenance {self.provenance!r}")
        V.setflags(write=False)
        object.__setattr__(self, "V", V)

    @property
    def d(self) -> int:
        return self.V.shape[0]

    @property
    def k(self) -> int:
        return self.V.shape[1]

    def projector(self) -> np.ndarray:
        return self.V @ self.V.T


ProjectionLike = Union[Projection, np.ndarray]


def _basis(V: ProjectionLike) -> np.ndarray:
    return V.V if isinstance(V, Projection) else Projection(V).V


def reconstruction_loss(V: ProjectionLike, x) -> float:
    """l(V, x) = ||x - VVᵀx||^2"""
    V = _basis(V)
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != V.shape[0]:
        raise ValidationError(f"sample has dimension {x.shape[0]}, projection expects {V.shape[0]}")
    residual = x - V @ (V.T @ x)
    return float(residual @ residual)


def reconstruction_losses(V: ProjectionLike, X) -> np.ndarray:
    """逐样本重建误差"""
    V = _basis(V)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != V.shape[0]:
        raise ValidationError(f"samples have shape {X.shape}, projection expects d={V.shape[0]}")
    residual = X - (X @ V) @ V.T
    return np.einsum("ij,ij->i", residual, residual)


def expected_group_errors(V: ProjectionLike, gm: GroupMoments) -> np.ndarray:
    """矩形式的组条件误差 <I - VVᵀ, M_a>"""
    V = _basis(V)
    return np.array([np.trace(M) - np.einsum("ij,ij->", V, M @ V) for M in gm.M])


def nominal_pca(moment: Union[GroupMoments, np.ndarray], k: int) -> Projection:
    """
    二阶矩最大 k 个特征值对应的特征向量，按特征值降序，符号规范化
    :param moment: GroupMoments（使用合并二阶矩）或 d×d 半正定矩阵
    """
    M = moment.pooled_second_moment() if isinstance(moment, GroupMoments) else np.asarray(moment, dtype=float)
    d = M.shape[0]
    if not 1 <= k < d:
        raise ValidationError(f"k must satisfy 1 <= k < d = {d}, got {k}")
    w, vecs = np.linalg.eigh(0.5 * (M + M.T))
    order = np.argsort(w)[::-1][:k]
    return Projection(sign_fix(vecs[:, order]), provenance="nominal-pca")


@dataclass(frozen=True)
class FairnessReport:
    """
    are: 全部样本的平均重建误差
    group_errors: 各组平均误差
    abdiff: 组间平均误差的最大两两差
    unfairness: 二值属性下即 |e_0 - e_1|，多组时为最大两两差
    """
    are: float
    group_errors: Tuple[float, ...]
    abdiff: float
    unfairness: float

    @property
    def score(self) -> float:
        """交叉验证的选择准则 ARE + ABDiff"""
        return self.are + self.abdiff

    def to_dict(self) -> "OrderedDict[str, object]":
        return OrderedDict([
            ("are", float(self.are)),
            ("group_errors", [float(e) for e in self.group_errors]),
            ("abdiff", float(self.abdiff)),
            ("unfairness", float(self.unfairness)),
        ])

    @classmethod
    def from_dict(cls, data: dict) -> "FairnessReport":
        missing = [f for f in REPORT_FIELDS if f not in data]
        if missing:
            raise ValidationError(f"report is missing fields {missing}")
        return cls(are=float(data["are"]), group_errors=tuple(float(e) for e in data["group_errors"]),
                   abdiff=float(data["abdiff"]), unfairness=float(data["unfairness"]))


def max_pairwise_gap(errors) -> float:
    errors = list(errors)
    return max((abs(a - b) for a, b in itertools.combinations(errors, 2)), default=0.0)


def evaluate(V: ProjectionLike, ds: Dataset) -> FairnessReport:
    """
    在给定数据上计算 ARE、各组误差与 ABDiff
    测试集应已用训练集中心中心化；组均值使用该数据自身的组样本数
    """
    if not ds.centered:
        raise ValidationError("evaluate requires centered data")
    losses = reconstruction_losses(V, ds.X)
    group_errors = []
    for a in range(ds.n_groups):
        mask = ds.A == a
        if not np.any(mask):
            raise ValidationError(f"group {ds.group_names[a]!r} is empty in the evaluation data")
        group_errors.append(float(losses[mask].mean()))
    gap = max_pairwise_gap(group_errors)
    return FairnessReport(are=float(losses.mean()), group_errors=tuple(group_errors), abdiff=gap, unfairness=gap)


def unfairness_max(V: ProjectionLike, ds: Dataset) -> float:
    """max_{a,a'} |E[l | A=a] - E[l | A=a']|"""
    return evaluate(V, ds).unfairness


@dataclass(frozen=True)
class FairTestResult:
    exists: bool
    rank: int
    k: int
    eigenvalues: Tuple[float, ...]
    projection: Optional[Projection] = None

    def to_dict(self) -> dict:
        return {
            "exists": self.exists,
            "rank": self.rank,
            "k": self.k,
            "eigenvalues": list(self.eigenvalues),
            "V": None if self.projection is None else self.projection.V.tolist(),
        }


def numerical_rank(eigenvalues) -> int:
    mags = np.abs(np.asarray(eigenvalues, dtype=float))
    top = float(mags.max()) if mags.size else 0.0
    if top == 0.0:
        return 0
    return int(np.sum(mags > RANK_TOL * top))


def fair_projection_test(S, k: int) -> FairTestResult:
    """
    组二阶矩之差 S 的秩不超过 k 时存在使两组条件误差相等的投影
    存在时取 S 的 d-k 个零特征值的特征向量为 U，V 为其正交补
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValidationError(f"S must be square, got shape {S.shape}")
    d = S.shape[0]
    if not 1 <= k < d:
        raise ValidationError(f"k must satisfy 1 <= k < d = {d}, got {k}")
    if np.max(np.abs(S - S.T)) > SYM_TOL * max(1.0, float(np.max(np.abs(S)))):
        raise ValidationError("S is not symmetric")
    w, vecs = np.linalg.eigh(0.5 * (S + S.T))
    rank = numerical_rank(w)
    exists = rank <= k
    projection = None
    if exists:
        # 按 |特征值| 降序，前 k 列张成 V，其余 d-k 列对应零特征值
        order = np.argsort(-np.abs(w), kind="stable")
        projection = Projection(sign_fix(vecs[:, order[:k]]), provenance="external")
    logger.info("Rank test: rank=%d, k=%d, fair projection %s", rank, k, "exists" if exists else "does not exist")
    return FairTestResult(exists=exists, rank=rank, k=k, eigenvalues=tuple(float(x) for x in w), projection=projection)


def pairwise_fair_tests(gm: GroupMoments, k: int):
    """多组属性时对每个无序组对做秩检验"""
    return {(a, b): fair_projection_test(gm.M[a] - gm.M[b], k)
            for a, b in itertools.combinations(range(gm.n_groups), 2)}
