"""
实验控制器：fit / pca / sweep / cv / fairtest / toy / radius / components 命令的编排
负责数据划分与中心化、网格并行、结果合并与报告输出
"""

import itertools
import logging
import os
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import linalg

from drfpca.cache_manager.cache_manager import CacheManager
from drfpca.config.config_manager import Config, get_config
from drfpca.data.dataset import (
    Dataset,
    center,
    group_moments,
    load_csv,
    make_toy,
    save_csv,
    stratified_folds,
    stratified_split,
    subset,
)
from drfpca.exceptions import ConditionError, DrfpcaError, NumericalError, ValidationError
from drfpca.metrics.fairness import (
    FairnessReport,
    Projection,
    evaluate,
    fair_projection_test,
    nominal_pca,
    pairwise_fair_tests,
)
from drfpca.optimizer.fit import fit_projection
from drfpca.optimizer.problem import build_problem
from drfpca.optimizer.subgradient import SolveReport, SolverOptions, convergence_proxy
from drfpca.robust.ambiguity import RobustConfig, check_conditions, epsilon_from_alpha
from drfpca.task.task_thread_pool import default_workers, run_ordered
from drfpca.utilities.model_io import save_model, write_json
from drfpca.utilities.svg_plot import line_svg, pareto_svg

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["lambda", "alpha", "are", "abdiff", "objective", "seconds", "status"]
TEST_CENTERS = ("train", "test")
STATUS_BY_ERROR = (
    (ConditionError, "condition_failed"),
    (NumericalError, "numerical_failed"),
    (ValidationError, "invalid"),
)

# ExperimentConfig 字段与配置文件 (分组, 键) 的对应关系
SETTINGS_FIELDS = {
    "k": ("experiment", "k"),
    "lambda_grid": ("experiment", "lambda_grid"),
    "alpha_grid": ("experiment", "alpha_grid"),
    "split": ("experiment", "split"),
    "folds": ("experiment", "folds"),
    "test_center": ("experiment", "test_center"),
    "iterations": ("solver", "iterations"),
    "restarts": ("solver", "restarts"),
    "retraction": ("solver", "retraction"),
    "seed": ("solver", "seed"),
    "step_override": ("solver", "step_override"),
    "workers": ("solver", "workers"),
    "delimiter": ("data", "delimiter"),
    "std_min": ("data", "std_min"),
    "std_max": ("data", "std_max"),
    "out": ("output", "directory"),
    "matrix_encoding": ("output", "matrix_encoding"),
}

# 半径实验：固定测试集规模与随机种子偏移
RADIUS_TEST_SIZE = (8000, 4000)
RADIUS_TEST_SEED_OFFSET = 100_000


@dataclass(frozen=True)
class ExperimentConfig:
    """
    一次命令运行的全部参数；CLI 参数覆盖配置文件，配置文件覆盖默认值
    split 为 None 时不划分测试集，全部数据用于训练
    """
    input: Optional[str] = None
    attr: Optional[str] = None
    k: int = 3
    lam: float = 0.0
    alpha: float = 0.0
    lambda_grid: Tuple[float, ...] = (0.0, 0.5, 1.0, 1.5, 2.0, 2.5)
    alpha_grid: Tuple[float, ...] = (0.05, 0.1, 0.15)
    iterations: int = 200
    restarts: int = 5
    retraction: str = "polar"
    seed: int = 0
    step_override: Optional[float] = None
    workers: Optional[int] = None
    split: Optional[float] = 0.3
    folds: int = 3
    out: str = "output"
    test_center: str = "train"
    repeats: int = 1
    eps0: Optional[float] = 0.0
    delimiter: str = ","
    std_min: float = 1e-5
    std_max: float = 1000.0
    matrix_encoding: str = "nested"
    toy_sizes: Tuple[int, int] = (200, 100)

    def __post_init__(self):
        object.__setattr__(self, "lambda_grid", tuple(float(v) for v in self.lambda_grid))
        object.__setattr__(self, "alpha_grid", tuple(float(v) for v in self.alpha_grid))
        if not self.lambda_grid or not self.alpha_grid:
            raise ValidationError("lambda and alpha grids must be nonempty")
        if self.split is not None and not 0.0 < self.split < 1.0:
            raise ValidationError(f"split ratio must lie in (0, 1), got {self.split}")
        if self.test_center not in TEST_CENTERS:
            raise ValidationError(f"test center must be one of {TEST_CENTERS}, got {self.test_center!r}")
        if self.k < 1:
            raise ValidationError(f"k must be at least 1, got {self.k}")
        if self.repeats < 1:
            raise ValidationError(f"repeats must be at least 1, got {self.repeats}")
        if self.lam < 0 or self.alpha < 0 or min(self.lambda_grid) < 0 or min(self.alpha_grid) < 0:
            raise ValidationError("lambda and alpha values must be nonnegative")
        if self.eps0 is not None and self.eps0 < 0:
            raise ValidationError(f"eps0 must be nonnegative, got {self.eps0}")

    @classmethod
    def from_config(cls, config: Optional[Config] = None, **overrides) -> "ExperimentConfig":
        """按配置分组取值，overrides 中为 None 的项不覆盖"""
        config = config or get_config()
        defaults = cls()
        values = {
            name: config.get(section, key, getattr(defaults, name))
            for name, (section, key) in SETTINGS_FIELDS.items()
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def store(self, config: Config):
        """把生效参数写回配置对象（不落盘），供 --save-config 导出"""
        data = self.to_dict()
        for name, (section, key) in SETTINGS_FIELDS.items():
            config.set(section, key, data[name], persist=False)

    def grid(self) -> List[Tuple[float, float]]:
        """lambda 为外层、alpha 为内层的网格顺序"""
        return list(itertools.product(self.lambda_grid, self.alpha_grid))

    def to_dict(self) -> dict:
        data = asdict(self)
        data["lambda_grid"] = list(self.lambda_grid)
        data["alpha_grid"] = list(self.alpha_grid)
        data["toy_sizes"] = list(self.toy_sizes)
        return data


@dataclass
class GridResult:
    lam: float
    alpha: float
    are: float = float("nan")
    abdiff: float = float("nan")
    objective: float = float("nan")
    seconds: float = 0.0
    status: str = "ok"
    message: str = ""
    fold_scores: List[float] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def score(self) -> float:
        return self.are + self.abdiff

    def label(self) -> str:
        return f"lambda={self.lam:g}, alpha={self.alpha:g}"


def _status_for(error: DrfpcaError) -> str:
    for cls, status in STATUS_BY_ERROR:
        if isinstance(error, cls):
            return status
    return "failed"


class ExperimentController:
    """
    实验命令控制器
    网格点可并行；并行时每个求解内部的多起点顺序执行，输出在全部完成后按网格顺序写出
    """

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.cache = CacheManager()
        self._load_csv = self.cache.cached()(load_csv)
        self.commands: Dict[str, Callable[[], dict]] = {
            "fit": self.cmd_fit,
            "pca": self.cmd_pca,
            "sweep": self.cmd_sweep,
            "cv": self.cmd_cv,
            "fairtest": self.cmd_fairtest,
            "toy": self.cmd_toy,
            "radius": self.cmd_radius,
            "components": self.cmd_components,
        }

    def run(self, command: str) -> dict:
        if command not in self.commands:
            raise ValidationError(f"unknown command {command!r}, expected one of {sorted(self.commands)}")
        logger.info("Running %s", command)
        start = time.perf_counter()
        result = self.commands[command]()
        logger.info("%s finished in %.2fs", command, time.perf_counter() - start)
        stats = self.cache.get_stats()
        if stats["hits"] or stats["misses"]:
            logger.debug("Cache: %s", stats)
        return result

    # ------------------------------------------------------------------
    # 数据与求解辅助
    # ------------------------------------------------------------------

    def _path(self, name: str) -> str:
        return os.path.join(self.config.out, name)

    def load_dataset(self) -> Dataset:
        cfg = self.config
        if not cfg.input:
            raise ValidationError("an input CSV is required (--input)")
        if cfg.attr is None:
            raise ValidationError("the sensitive attribute column is required (--attr)")
        return self._load_csv(cfg.input, cfg.attr, delimiter=cfg.delimiter, std_min=cfg.std_min, std_max=cfg.std_max)

    def check_dataset(self, ds: Dataset, split: bool = True) -> Dataset:
        """网格运行前检查与数据相关的参数，使所有网格点共同的错误以校验错误退出"""
        cfg = self.config
        if not 1 <= cfg.k <= ds.dim - 1:
            raise ValidationError(f"k must satisfy 1 <= k <= d-1 = {ds.dim - 1}, got {cfg.k}")
        if split and cfg.split is not None:
            stratified_split(ds, cfg.split, cfg.seed)
        return ds

    def center_pair(self, train: Dataset, test: Optional[Dataset]):
        """训练部分减自身均值；测试部分按 test_center 减训练均值或自身均值"""
        train_c = center(train)
        if test is None:
            return train_c, None
        if self.config.test_center == "train":
            return train_c, center(test, train.X.mean(axis=0))
        return train_c, center(test)

    def prepare(self, ds: Dataset, seed: int, ratio: Optional[float] = None, use_split: bool = True):
        ratio = self.config.split if ratio is None else ratio
        if not use_split or ratio is None:
            return self.center_pair(ds, None)
        train, test = self.cache.get_or_compute(("split", id(ds), ratio, seed),
                                                lambda: stratified_split(ds, ratio, seed))
        return self.center_pair(train, test)

    def solver_options(self, workers: Optional[int] = None, seed: Optional[int] = None) -> SolverOptions:
        cfg = self.config
        return SolverOptions(iterations=cfg.iterations, restarts=cfg.restarts, retraction=cfg.retraction,
                             seed=cfg.seed if seed is None else seed, step_override=cfg.step_override,
                             workers=cfg.workers if workers is None else workers)

    def _grid_workers(self, n_points: int) -> int:
        workers = self.config.workers or default_workers()
        return max(1, min(workers, n_points))

    def fit(self, train: Dataset, lam: float, alpha: float, k: Optional[int] = None, eps=None,
            workers: Optional[int] = None, seed: Optional[int] = None) -> Tuple[Projection, SolveReport, RobustConfig]:
        k = self.config.k if k is None else k
        eps = epsilon_from_alpha(alpha, train.counts) if eps is None else eps
        rc = RobustConfig(lam=lam, eps=eps, k=k)
        projection, report = fit_projection(train, rc, self.solver_options(workers, seed))
        return projection, report, rc

    @staticmethod
    def lipschitz(train: Dataset, rc: RobustConfig) -> Optional[float]:
        """目标的 Lipschitz 常数；多组目标没有该常数，矩奇异时常数无定义，均返回 None"""
        try:
            return build_problem(group_moments(train), rc).lipschitz()
        except NumericalError as e:
            logger.warning("Lipschitz constant undefined: %s", e)
            return None

    @staticmethod
    def split_reports(V, train: Dataset, test: Optional[Dataset]) -> Dict[str, FairnessReport]:
        reports = {"train": evaluate(V, train)}
        if test is not None:
            reports["test"] = evaluate(V, test)
        return reports

    def _model_config(self, **extra) -> dict:
        cfg = self.config
        data = {
            "input": cfg.input,
            "attr": cfg.attr,
            "k": cfg.k,
            "iterations": cfg.iterations,
            "restarts": cfg.restarts,
            "retraction": cfg.retraction,
            "seed": cfg.seed,
            "split": cfg.split,
            "test_center": cfg.test_center,
        }
        data.update(extra)
        return data

    # ------------------------------------------------------------------
    # 命令
    # ------------------------------------------------------------------

    def cmd_pca(self) -> dict:
        """普通 PCA 基线"""
        ds = self.check_dataset(self.load_dataset())
        train, test = self.prepare(ds, self.config.seed)
        projection = nominal_pca(group_moments(train), self.config.k)
        reports = self.split_reports(projection, train, test)
        U = linalg.null_space(projection.V.T)
        save_model(self._path("pca_model.json"), projection, U, train.center, self._model_config(),
                   encoding=self.config.matrix_encoding)
        result = {"command": "pca", "k": self.config.k, **{name: r.to_dict() for name, r in reports.items()}}
        write_json(self._path("pca_report.json"), result)
        self._log_reports("pca", reports)
        return result

    def cmd_fit(self) -> dict:
        """单个 (lambda, alpha) 的鲁棒公平 PCA"""
        cfg = self.config
        ds = self.check_dataset(self.load_dataset())
        train, test = self.prepare(ds, cfg.seed)
        projection, report, rc = self.fit(train, cfg.lam, cfg.alpha)
        reports = self.split_reports(projection, train, test)
        summary = report.summary()
        summary.pop("seconds")
        summary["lipschitz"] = self.lipschitz(train, rc)
        summary["convergence_proxy"] = convergence_proxy(report, summary["lipschitz"])
        extra = {"lambda": cfg.lam, "alpha": cfg.alpha, "eps": list(rc.eps)}
        save_model(self._path("fit_model.json"), projection, report.best_U.U, train.center,
                   self._model_config(**extra), encoding=cfg.matrix_encoding)
        result = {
            "command": "fit",
            **extra,
            "k": cfg.k,
            "objective": report.best_value,
            "solver": summary,
            "conditions": check_conditions(group_moments(train), rc).to_dict(),
            **{name: r.to_dict() for name, r in reports.items()},
        }
        write_json(self._path("fit_report.json"), result)
        self._log_reports("fit", reports)
        return result

    def _sweep_point(self, ds: Dataset, lam: float, alpha: float, workers: int) -> GridResult:
        result = GridResult(lam, alpha)
        start = time.perf_counter()
        metrics = []
        try:
            for r in range(self.config.repeats):
                seed = self.config.seed + r
                train, test = self.prepare(ds, seed)
                projection, report, _ = self.fit(train, lam, alpha, workers=workers, seed=seed)
                rep = evaluate(projection, test if test is not None else train)
                metrics.append((rep.are, rep.abdiff, report.best_value))
        except DrfpcaError as e:
            result.status, result.message = _status_for(e), str(e)
            logger.warning("Grid point %s failed: %s", result.label(), e)
        else:
            result.are, result.abdiff, result.objective = (float(v) for v in np.mean(metrics, axis=0))
        result.seconds = time.perf_counter() - start
        return result

    def _run_grid(self, point_func, grid) -> List[GridResult]:
        workers = self._grid_workers(len(grid))
        inner = 1 if workers > 1 else self.config.workers
        tasks = run_ordered(lambda lam, alpha: point_func(lam, alpha, inner), grid, workers=workers, name="grid")
        results = []
        for task in tasks:
            if task.exception is not None:
                raise task.exception
            results.append(task.result)
        return results

    def cmd_sweep(self) -> dict:
        """网格扫描，写出 Pareto CSV 与 SVG"""
        ds = self.check_dataset(self.load_dataset())
        results = self._run_grid(lambda lam, alpha, w: self._sweep_point(ds, lam, alpha, w), self.config.grid())
        frame = pd.DataFrame(
            [[r.lam, r.alpha, r.are, r.abdiff, r.objective, r.seconds, r.status] for r in results],
            columns=SWEEP_COLUMNS)
        os.makedirs(self.config.out, exist_ok=True)
        frame.to_csv(self._path("sweep.csv"), index=False, float_format="%.10g")
        pareto_svg([(r.are, r.abdiff, r.label()) for r in results if r.ok], self._path("sweep.svg"),
                   title="ARE vs ABDiff")
        failed = [r for r in results if not r.ok]
        logger.info("Sweep: %d grid points, %d failed", len(results), len(failed))
        return {"command": "sweep", "rows": frame.to_dict(orient="records")}

    def _fold_data(self, train: Dataset, folds, seed: int, f: int):
        def build():
            train_idx, val_idx = folds[f]
            return self.center_pair(subset(train, train_idx), subset(train, val_idx))

        return self.cache.get_or_compute(("fold", seed, self.config.split, len(folds), f), build)

    def _cv_point(self, train: Dataset, folds, seed: int, lam: float, alpha: float, workers: int) -> GridResult:
        result = GridResult(lam, alpha)
        start = time.perf_counter()
        try:
            for f in range(len(folds)):
                fold_train, fold_val = self._fold_data(train, folds, seed, f)
                projection, _, _ = self.fit(fold_train, lam, alpha, workers=workers, seed=seed)
                result.fold_scores.append(evaluate(projection, fold_val).score)
        except DrfpcaError as e:
            result.status, result.message = _status_for(e), str(e)
            logger.warning("Grid point %s failed in cross validation: %s", result.label(), e)
        else:
            result.objective = float(np.mean(result.fold_scores))
        result.seconds = time.perf_counter() - start
        return result

    @staticmethod
    def select_grid_point(results: List[GridResult]) -> GridResult:
        """
        折均值最小的网格点，相同取网格顺序靠前者
        全部失败时：都是条件失败抛 ConditionError，只含条件失败与校验失败抛 ValidationError，否则 NumericalError
        """
        valid = [r for r in results if r.ok]
        if not valid:
            first = results[0]
            message = f"every grid point failed; first failure ({first.label()}): {first.message}"
            statuses = {r.status for r in results}
            if statuses == {"condition_failed"}:
                raise ConditionError(message)
            if statuses <= {"condition_failed", "invalid"}:
                raise ValidationError(message)
            raise NumericalError(message)
        best = valid[0]
        for r in valid[1:]:
            if r.objective < best.objective:
                best = r
        return best

    def _cv_repeat(self, ds: Dataset, r: int) -> dict:
        cfg = self.config
        seed = cfg.seed + r
        if cfg.split is not None:
            raw_train, raw_test = stratified_split(ds, cfg.split, seed)
        else:
            raw_train, raw_test = ds, None
        folds = stratified_folds(raw_train, cfg.folds, seed)
        results = self._run_grid(lambda lam, alpha, w: self._cv_point(raw_train, folds, seed, lam, alpha, w),
                                 cfg.grid())
        for f in range(len(folds)):
            self.cache.clear(("fold", seed, cfg.split, len(folds), f))
        best = self.select_grid_point(results)
        logger.info("Repeat %d: selected %s with mean fold score %.6g", r, best.label(), best.objective)

        train, test = self.center_pair(raw_train, raw_test)
        projection, report, rc = self.fit(train, best.lam, best.alpha, seed=seed)
        return {
            "repeat": r,
            "seed": seed,
            "results": results,
            "best": best,
            "projection": projection,
            "report": report,
            "selected": {"lambda": best.lam, "alpha": best.alpha, "eps": list(rc.eps)},
            "train": train,
            "reports": self.split_reports(projection, train, test),
        }

    @staticmethod
    def cv_summary(runs: List[dict]) -> dict:
        """各次重复的 ARE、ABDiff 与 ARE + ABDiff：均值与总体标准差"""
        summary = {}
        for name in runs[0]["reports"]:
            reports = [run["reports"][name] for run in runs]
            values = {
                "are": [rep.are for rep in reports],
                "abdiff": [rep.abdiff for rep in reports],
                "score": [rep.score for rep in reports],
            }
            summary[name] = {metric: {"mean": float(np.mean(v)), "std": float(np.std(v))}
                             for metric, v in values.items()}
        return summary

    def cmd_cv(self) -> dict:
        """
        K 折交叉验证，重复 repeats 次：第 r 次用种子 seed + r 重新划分训练/测试集与折，
        选点后在该次的完整训练集上重新拟合；模型文件取第一次重复，指标另报各次的均值与标准差
        """
        cfg = self.config
        if cfg.folds < 2:
            raise ValidationError(f"cross validation needs at least 2 folds, got {cfg.folds}")
        ds = self.check_dataset(self.load_dataset())
        runs = [self._cv_repeat(ds, r) for r in range(cfg.repeats)]

        rows = []
        for run in runs:
            for g in run["results"]:
                scores = g.fold_scores if g.ok else [float("nan")] * cfg.folds
                rows.append([run["repeat"], g.lam, g.alpha, g.objective, g.status] + scores)
        columns = ["repeat", "lambda", "alpha", "mean_score", "status"] + [f"fold{f}" for f in range(cfg.folds)]
        frame = pd.DataFrame(rows, columns=columns)
        os.makedirs(cfg.out, exist_ok=True)
        frame.to_csv(self._path("cv.csv"), index=False, float_format="%.10g")

        first = runs[0]
        save_model(self._path("cv_model.json"), first["projection"], first["report"].best_U.U, first["train"].center,
                   self._model_config(folds=cfg.folds, **first["selected"]), encoding=cfg.matrix_encoding)
        summary = self.cv_summary(runs)
        result = {
            "command": "cv",
            "selected": {**first["selected"], "mean_score": first["best"].objective},
            "objective": first["report"].best_value,
            "folds": cfg.folds,
            "repeats": cfg.repeats,
            **{name: rep.to_dict() for name, rep in first["reports"].items()},
            "runs": [
                {
                    "repeat": run["repeat"],
                    "seed": run["seed"],
                    "selected": run["selected"],
                    "objective": run["report"].best_value,
                    **{name: rep.to_dict() for name, rep in run["reports"].items()},
                }
                for run in runs
            ],
            "summary": summary,
        }
        write_json(self._path("cv_report.json"), result)
        self._log_reports("cv", first["reports"])
        for name, metrics in summary.items():
            logger.info("cv %s over %d repeat(s): ARE=%.6g±%.3g ABDiff=%.6g±%.3g", name, cfg.repeats,
                        metrics["are"]["mean"], metrics["are"]["std"],
                        metrics["abdiff"]["mean"], metrics["abdiff"]["std"])
        return result

    def cmd_fairtest(self) -> dict:
        """组二阶矩之差的秩检验；多组属性时逐对检验"""
        ds = self.check_dataset(self.load_dataset(), split=False)
        gm = group_moments(center(ds))
        k = self.config.k
        if gm.n_groups == 2:
            tests = {(0, 1): fair_projection_test(gm.M[0] - gm.M[1], k)}
        else:
            tests = pairwise_fair_tests(gm, k)
        result = {
            "command": "fairtest",
            "k": k,
            "groups": list(ds.group_names),
            "pairs": [
                {"groups": [ds.group_names[a], ds.group_names[b]], **t.to_dict()}
                for (a, b), t in tests.items()
            ],
            "exists": all(t.exists for t in tests.values()),
        }
        write_json(self._path("fairtest.json"), result)
        return result

    def cmd_toy(self) -> dict:
        """写出两组二维高斯玩具数据"""
        n0, n1 = self.config.toy_sizes
        ds = make_toy(n0, n1, self.config.seed)
        path = self.config.input or self._path("toy.csv")
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        save_csv(ds, path, attribute_name="group", delimiter=self.config.delimiter)
        logger.info("Wrote toy dataset with %d + %d samples to %s", n0, n1, path)
        return {"command": "toy", "path": path, "counts": [n0, n1]}

    def _radius_eps(self, train: Dataset, alpha: float):
        """eps_1 = alpha/sqrt(N_1)；eps_0 固定或同样按 alpha 缩放"""
        scaled = epsilon_from_alpha(alpha, train.counts)
        if self.config.eps0 is None:
            return scaled
        return (float(self.config.eps0),) + tuple(scaled[1:])

    def _radius_repeat(self, r: int, alphas: Sequence[float], lam: float, workers: int) -> List[float]:
        cfg = self.config
        n0, n1 = cfg.toy_sizes
        seed = cfg.seed + r
        train_raw = make_toy(n0, n1, seed)
        test_raw = make_toy(*RADIUS_TEST_SIZE, seed=cfg.seed + RADIUS_TEST_SEED_OFFSET)
        train, test = self.center_pair(train_raw, test_raw)
        scores = []
        for alpha in alphas:
            try:
                projection, _, _ = self.fit(train, lam, alpha, k=1, eps=self._radius_eps(train, alpha),
                                            workers=workers, seed=seed)
                scores.append(evaluate(projection, test).score)
            except DrfpcaError as e:
                logger.warning("Radius study: alpha=%g failed in repeat %d: %s", alpha, r, e)
                scores.append(float("nan"))
        return scores

    def cmd_radius(self) -> dict:
        """
        玩具数据上的半径实验：固定 lambda，扫描 alpha，测试集 (ARE + ABDiff) 取重复均值与标准差
        """
        cfg = self.config
        lam = cfg.lam
        alphas = cfg.alpha_grid
        workers = self._grid_workers(cfg.repeats)
        inner = 1 if workers > 1 else cfg.workers
        tasks = run_ordered(lambda r: self._radius_repeat(r, alphas, lam, inner),
                            [(r,) for r in range(cfg.repeats)], workers=workers, name="radius")
        for task in tasks:
            if task.exception is not None:
                raise task.exception
        scores = np.array([task.result for task in tasks])
        mean = np.nanmean(scores, axis=0)
        std = np.nanstd(scores, axis=0)
        frame = pd.DataFrame({"alpha": alphas, "mean_score": mean, "std_score": std})
        os.makedirs(cfg.out, exist_ok=True)
        frame.to_csv(self._path("radius.csv"), index=False, float_format="%.10g")
        line_svg({f"lambda={lam:g}": (list(alphas), list(mean))}, self._path("radius.svg"),
                 xlabel="alpha", ylabel="test ARE + ABDiff", title="Ambiguity radius",
                 errors={f"lambda={lam:g}": list(std)})
        wins = None
        if 0.0 in alphas:
            zero = alphas.index(0.0)
            wins = int(np.sum(np.nanmin(scores, axis=1) <= scores[:, zero]))
        return {"command": "radius", "lambda": lam, "rows": frame.to_dict(orient="records"),
                "scores": scores.tolist(), "best_not_worse_than_zero": wins}

    def _components_repeat(self, ds: Dataset, r: int, ks: Sequence[int], workers: int):
        cfg = self.config
        seed = cfg.seed + r
        train, test = self.prepare(ds, seed, ratio=0.5)
        gm = group_moments(train)
        rows = []
        for k in ks:
            nominal = evaluate(nominal_pca(gm, k), test)
            rows.append(("nominal-pca", k, nominal.group_errors))
            try:
                projection, _, _ = self.fit(train, cfg.lam, cfg.alpha, k=k, workers=workers, seed=seed)
                rows.append(("robust-fair", k, evaluate(projection, test).group_errors))
            except DrfpcaError as e:
                logger.warning("Components study: k=%d failed in repeat %d: %s", k, r, e)
                rows.append(("robust-fair", k, tuple(float("nan") for _ in nominal.group_errors)))
        return rows

    def cmd_components(self) -> dict:
        """
        各组重建误差随主成分个数 k 的变化（50/50 划分，重复取均值）
        """
        cfg = self.config
        if cfg.input:
            ds = self.load_dataset()
        else:
            ds = make_toy(*cfg.toy_sizes, seed=cfg.seed)
        ks = list(range(1, ds.dim))
        workers = self._grid_workers(cfg.repeats)
        inner = 1 if workers > 1 else cfg.workers
        tasks = run_ordered(lambda r: self._components_repeat(ds, r, ks, inner),
                            [(r,) for r in range(cfg.repeats)], workers=workers, name="components")
        for task in tasks:
            if task.exception is not None:
                raise task.exception
        records = []
        for rows in (task.result for task in tasks):
            for method, k, errors in rows:
                for a, err in enumerate(errors):
                    records.append({"method": method, "k": k, "group": ds.group_names[a], "error": err})
        frame = (pd.DataFrame(records).groupby(["method", "k", "group"], sort=False)["error"]
                 .mean().reset_index().rename(columns={"error": "mean_error"}))
        os.makedirs(cfg.out, exist_ok=True)
        frame.to_csv(self._path("components.csv"), index=False, float_format="%.10g")
        series = {}
        for (method, group), part in frame.groupby(["method", "group"], sort=False):
            series[f"{method} / {group}"] = (part["k"].tolist(), part["mean_error"].tolist())
        line_svg(series, self._path("components.svg"), xlabel="k", ylabel="test reconstruction error",
                 title="Subgroup error by number of components")
        return {"command": "components", "rows": frame.to_dict(orient="records")}

    def _log_reports(self, command: str, reports: Dict[str, FairnessReport]):
        for name, rep in reports.items():
            logger.info("%s %s: ARE=%.6g ABDiff=%.6g group errors=%s", command, name, rep.are, rep.abdiff,
                        ", ".join(f"{e:.6g}" for e in rep.group_errors))

