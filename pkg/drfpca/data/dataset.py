"""
数据集加载、校验、中心化与分组矩估计
"""

import io
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from drfpca.exceptions import ValidationError

logger = logging.getLogger(__name__)

# 中心化后列均值为零的绝对容差
_CENTER_TOL = 1e-9

# 玩具数据：两组零均值二维高斯
TOY_COVARIANCES = (
    np.array([[4.0, 0.0], [0.0, 0.2]]),
    np.array([[0.2, 0.4], [0.4, 3.0]]),
)


def _frozen(arr, dtype=float):
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Dataset:
    """
    样本矩阵 X (N×d) 与敏感属性标签 A (取值 0..m-1)
    center_source:
        "none"     未中心化
        "self"     减去自身列均值（列均值为零）
        "external" 减去外部提供的向量（如训练集均值作用于测试集）
    """
    X: np.ndarray
    A: np.ndarray
    n_groups: int
    center_source: str = "none"
    center: Optional[np.ndarray] = None
    feature_names: Tuple[str, ...] = ()
    group_names: Tuple[str, ...] = ()

    def __post_init__(self):
        X = _frozen(self.X)
        A = _frozen(self.A, dtype=np.int64)
        if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
            raise ValidationError(f"X must be a non-empty 2-D matrix, got shape {X.shape}")
        if A.shape != (X.shape[0],):
            raise ValidationError(f"A must have length {X.shape[0]}, got shape {A.shape}")
        if not np.all(np.isfinite(X)):
            raise ValidationError("X contains non-finite values")
        if A.min() < 0 or A.max() >= self.n_groups:
            raise ValidationError(f"labels must lie in 0..{self.n_groups - 1}")
        counts = np.bincount(A, minlength=self.n_groups)
        if np.any(counts == 0):
            missing = [int(a) for a in np.flatnonzero(counts == 0)]
            raise ValidationError(f"every group must be non-empty, empty groups: {missing}")
        if self.center_source not in ("none", "self", "external"):
            raise ValidationError(f"unknown center source {self.center_source!r}")
        center = None
        if self.center_source != "none":
            if self.center is None:
                raise ValidationError("a centered dataset must record its center")
            center = _frozen(self.center)
            if center.shape != (X.shape[1],):
                raise ValidationError(f"center must have length {X.shape[1]}")
        if self.center_source == "self":
            worst = float(np.max(np.abs(X.mean(axis=0))))
            if worst > _CENTER_TOL:
                raise ValidationError(f"self-centered data has column mean {worst:.3e}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "center", center)
        if not self.feature_names:
            object.__setattr__(self, "feature_names", tuple(f"x{j + 1}" for j in range(X.shape[1])))
        if not self.group_names:
            object.__setattr__(self, "group_names", tuple(str(a) for a in range(self.n_groups)))

    @property
    def centered(self) -> bool:
        return self.center_source != "none"

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @property
    def counts(self) -> np.ndarray:
        return np.bincount(self.A, minlength=self.n_groups)


@dataclass(frozen=True)
class GroupMoments:
    """
    每组的边际概率 p、均值 mu、协方差 Sigma、二阶矩 M 与样本数
    协方差按 1/N_a 归一化，使 M_a = Sigma_a + mu_a mu_a^T = (1/N_a) Σ x x^T
    """
    p: np.ndarray
    mu: np.ndarray
    Sigma: np.ndarray
    M: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        for name in ("p", "mu", "Sigma", "M", "counts"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def n_groups(self) -> int:
        return self.p.shape[0]

    @property
    def dim(self) -> int:
        return self.mu.shape[1]

    def pooled_second_moment(self) -> np.ndarray:
        """Σ_a p_a M_a，即全体数据的二阶矩"""
        return np.einsum("a,aij->ij", self.p, self.M)


def _resolve_column(columns, column):
    if isinstance(column, (int, np.integer)):
        if not 0 <= column < len(columns):
            raise ValidationError(f"column index {column} out of range (0..{len(columns) - 1})")
        return columns[column]
    if column in columns:
        return column
    if isinstance(column, str) and column.strip().isdigit() and int(column) < len(columns):
        return columns[int(column)]
    raise ValidationError(f"column {column!r} not found; available: {list(columns)}")


def load_csv(path, attribute_column: Union[str, int], feature_columns: Optional[Sequence] = None,
             delimiter: str = ",", std_min: float = 1e-5, std_max: float = 1000.0) -> Dataset:
    """
    读取带表头的 CSV：
    1. 属性列按名称或零起始下标选择，标签按首次出现顺序重映射为 0..m-1
    2. 特征列默认取除属性列外的全部列，空白或非数值单元格报出行号与列名
    3. 标准差 <= std_min 或 >= std_max 的列被丢弃并记录警告
    返回未中心化的 Dataset
    """
    try:
        with open(path, "rb") as f:
            content = f.read()
    except FileNotFoundError as e:
        raise ValidationError(f"input file not found: {path}") from e
    except OSError as e:
        raise ValidationError(f"cannot read input file {path}: {e}") from e
    try:
        text = content.decode("utf-8-sig")
    except UnicodeDecodeError as e:
        line = content.count(b"\n", 0, e.start) + 1
        raise ValidationError(f"{path}: invalid UTF-8 byte 0x{content[e.start]:02x} on line {line}") from e
    try:
        frame = pd.read_csv(io.StringIO(text), sep=delimiter, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError as e:
        raise ValidationError(f"input file is empty: {path}") from e
    except pd.errors.ParserError as e:
        raise ValidationError(f"{path}: malformed CSV: {e}") from e
    if frame.shape[0] == 0:
        raise ValidationError(f"input file has a header but no data rows: {path}")

    columns = list(frame.columns)
    attr_name = _resolve_column(columns, attribute_column)
    if feature_columns:
        features = [_resolve_column(columns, c) for c in feature_columns]
    else:
        features = [c for c in columns if c != attr_name]
    if attr_name in features:
        raise ValidationError(f"attribute column {attr_name!r} cannot also be a feature")
    if not features:
        raise ValidationError("no feature columns selected")

    values = np.empty((frame.shape[0], len(features)))
    for j, name in enumerate(features):
        raw = frame[name].str.strip()
        numeric = pd.to_numeric(raw, errors="coerce")
        bad = np.flatnonzero(numeric.isna().to_numpy())
        if bad.size:
            row = int(bad[0])
            raise ValidationError(
                f"non-numeric cell {raw.iloc[row]!r} at data row {row + 1} (line {row + 2}), column {name!r}")
        values[:, j] = numeric.to_numpy(dtype=float)

    codes, uniques = pd.factorize(frame[attr_name].str.strip(), sort=False)
    if len(uniques) < 2:
        raise ValidationError(f"attribute column {attr_name!r} has a single group; need at least two")

    std = values.std(axis=0)
    keep = (std > std_min) & (std < std_max)
    if not np.all(keep):
        dropped = [features[j] for j in np.flatnonzero(~keep)]
        logger.warning("Dropping %d column(s) with std outside (%g, %g): %s",
                       len(dropped), std_min, std_max, dropped)
    if not np.any(keep):
        raise ValidationError("every feature column was dropped by the standard deviation filter")

    ds = Dataset(
        X=values[:, keep],
        A=codes,
        n_groups=len(uniques),
        feature_names=tuple(f for f, k in zip(features, keep) if k),
        group_names=tuple(str(u) for u in uniques),
    )
    logger.info("Loaded %s: N=%d, d=%d, groups=%s", path, ds.n_samples, ds.dim, list(ds.group_names))
    return ds


def save_csv(ds: Dataset, path, attribute_name: str = "group", delimiter: str = ","):
    """写出可被 load_csv 读回的 CSV（属性列在首列，写组名）"""
    frame = pd.DataFrame(ds.X, columns=list(ds.feature_names))
    frame.insert(0, attribute_name, [ds.group_names[a] for a in ds.A])
    frame.to_csv(path, sep=delimiter, index=False, float_format="%.17g")


def center(ds: Dataset, center_vector: Optional[np.ndarray] = None) -> Dataset:
    """
    中心化：未给出向量时减去自身列均值，否则减去给定向量（训练集中心作用于测试集）
    自身均值分两遍求：第二遍去掉大偏移列相减后残留的舍入均值
    """
    if center_vector is None:
        first = ds.X.mean(axis=0)
        shifted = ds.X - first
        residual = shifted.mean(axis=0)
        X = shifted - residual
        vec = first + residual
        source = "self"
    else:
        vec = np.asarray(center_vector, dtype=float)
        if vec.shape != (ds.dim,):
            raise ValidationError(f"center has shape {vec.shape}, expected ({ds.dim},)")
        X = ds.X - vec
        source = "external"
    base = ds.center if ds.centered else np.zeros(ds.dim)
    return Dataset(
        X=X,
        A=ds.A,
        n_groups=ds.n_groups,
        center_source=source,
        center=base + vec,
        feature_names=ds.feature_names,
        group_names=ds.group_names,
    )


def group_moments(ds: Dataset) -> GroupMoments:
    """
    分组样本统计量，协方差使用 1/N_a 归一化
    """
    if not ds.centered:
        raise ValidationError("group_moments requires centered data; call center() first")
    m, d = ds.n_groups, ds.dim
    counts = ds.counts
    mu = np.zeros((m, d))
    sigma = np.zeros((m, d, d))
    second = np.zeros((m, d, d))
    for a in range(m):
        Xa = ds.X[ds.A == a]
        if Xa.shape[0] == 0:
            raise ValidationError(f"group {a} is empty")
        mu[a] = Xa.mean(axis=0)
        second[a] = Xa.T @ Xa / Xa.shape[0]
        second[a] = 0.5 * (second[a] + second[a].T)
        diff = Xa - mu[a]
        sigma[a] = diff.T @ diff / Xa.shape[0]
        sigma[a] = 0.5 * (sigma[a] + sigma[a].T)
    return GroupMoments(p=counts / counts.sum(), mu=mu, Sigma=sigma, M=second, counts=counts)


def subset(ds: Dataset, idx) -> Dataset:
    """
    行子集；子集不再保证列均值为零，因此自中心化的来源降级为 external
    """
    idx = np.asarray(idx, dtype=np.int64)
    source = "external" if ds.centered else "none"
    return Dataset(
        X=ds.X[idx],
        A=ds.A[idx],
        n_groups=ds.n_groups,
        center_source=source,
        center=ds.center,
        feature_names=ds.feature_names,
        group_names=ds.group_names,
    )


def stratified_split(ds: Dataset, train_ratio: float, seed: int) -> Tuple[Dataset, Dataset]:
    """
    按组分层划分，每个组在训练集与测试集中至少各保留一个样本
    """
    if not 0.0 < train_ratio < 1.0:
        raise ValidationError(f"split ratio must lie in (0, 1), got {train_ratio}")
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for a in range(ds.n_groups):
        members = np.flatnonzero(ds.A == a)
        if members.size < 2:
            raise ValidationError(f"group {ds.group_names[a]!r} has {members.size} sample(s); need at least 2 to split")
        members = rng.permutation(members)
        n_train = int(np.clip(round(train_ratio * members.size), 1, members.size - 1))
        train_idx.append(members[:n_train])
        test_idx.append(members[n_train:])
    return subset(ds, np.sort(np.concatenate(train_idx))), subset(ds, np.sort(np.concatenate(test_idx)))


def stratified_folds(ds: Dataset, folds: int, seed: int):
    """
    分层 K 折：每组随机排列后轮转分配，返回 [(train_idx, val_idx), ...]
    """
    if folds < 2:
        raise ValidationError(f"cross validation needs at least 2 folds, got {folds}")
    counts = ds.counts
    if np.any(counts < folds):
        small = [ds.group_names[a] for a in np.flatnonzero(counts < folds)]
        raise ValidationError(f"groups {small} have fewer samples than folds ({folds})")
    rng = np.random.default_rng(seed)
    assignment = np.empty(ds.n_samples, dtype=np.int64)
    for a in range(ds.n_groups):
        members = rng.permutation(np.flatnonzero(ds.A == a))
        assignment[members] = np.arange(members.size) % folds
    rows = np.arange(ds.n_samples)
    return [(rows[assignment != f], rows[assignment == f]) for f in range(folds)]


def make_toy(n0: int = 200, n1: int = 100, seed: int = 0) -> Dataset:
    """
    两组零均值二维高斯，协方差分别为 diag(4, 0.2) 与 [[0.2, 0.4], [0.4, 3.0]]
    """
    if n0 < 1 or n1 < 1:
        raise ValidationError("toy groups need at least one sample each")
    rng = np.random.default_rng(seed)
    x0 = rng.multivariate_normal(np.zeros(2), TOY_COVARIANCES[0], size=n0)
    x1 = rng.multivariate_normal(np.zeros(2), TOY_COVARIANCES[1], size=n1)
    return Dataset(
        X=np.vstack([x0, x1]),
        A=np.concatenate([np.zeros(n0, dtype=np.int64), np.ones(n1, dtype=np.int64)]),
        n_groups=2,
        feature_names=("x1", "x2"),
        group_names=("0", "1"),
    )
