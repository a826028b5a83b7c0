"""
Stiefel 流形上的黎曼次梯度下降（常数步长）与多起点调度
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Hashable, Optional, Tuple

import numpy as np

from drfpca.exceptions import ConditionError, ValidationError
from drfpca.manifold.stiefel import StiefelPoint, get_retraction, random_point
from drfpca.optimizer.problem import FairPCAProblem, as_problem
from drfpca.task.task_thread_pool import run_ordered

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverOptions:
    """
    iterations: 每个起点的迭代次数 tau
    restarts: 随机起点个数
    step_override: 给定时替换 1/sqrt(tau+1)
    workers: 并行执行起点的线程数，None 为物理核数
    """
    iterations: int = 1000
    restarts: int = 20
    retraction: str = "polar"
    seed: int = 0
    step_override: Optional[float] = None
    workers: Optional[int] = 1

    def __post_init__(self):
        if self.iterations < 1:
            raise ValidationError(f"iterations must be at least 1, got {self.iterations}")
        if self.restarts < 1:
            raise ValidationError(f"restarts must be at least 1, got {self.restarts}")
        if self.step_override is not None and not self.step_override > 0:
            raise ValidationError(f"step override must be positive, got {self.step_override}")
        get_retraction(self.retraction)

    @property
    def step_size(self) -> float:
        if self.step_override is not None:
            return float(self.step_override)
        return 1.0 / np.sqrt(self.iterations + 1)

    @classmethod
    def from_config(cls, section: dict, **overrides) -> "SolverOptions":
        """从配置的 solver 分组构造，overrides 中为 None 的值不覆盖"""
        values = {
            "iterations": section.get("iterations", cls.iterations),
            "restarts": section.get("restarts", cls.restarts),
            "retraction": section.get("retraction", cls.retraction),
            "seed": section.get("seed", cls.seed),
            "step_override": section.get("step_override"),
            "workers": section.get("workers"),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass(frozen=True)
class RestartTrace:
    """
    单个起点的轨迹：values[t] = F(U_t), grad_norms[t] = ||Δ_t||_F，t = 0..tau
    """
    restart: int
    values: np.ndarray
    grad_norms: np.ndarray
    active: Tuple[Hashable, ...]
    best_value: float
    best_iteration: int
    best_U: StiefelPoint = field(repr=False)

    @property
    def initial_value(self) -> float:
        return float(self.values[0])


@dataclass(frozen=True)
class SolveReport:
    best_U: StiefelPoint
    best_value: float
    best_restart: int
    traces: Tuple[RestartTrace, ...]
    step_size: float
    seconds: float
    options: SolverOptions

    @property
    def active_history(self) -> Tuple[Hashable, ...]:
        return self.traces[self.best_restart].active

    def summary(self) -> dict:
        return {
            "best_value": self.best_value,
            "best_restart": self.best_restart,
            "best_iteration": self.traces[self.best_restart].best_iteration,
            "iterations": self.options.iterations,
            "restarts": self.options.restarts,
            "retraction": self.options.retraction,
            "step_size": self.step_size,
            "seconds": self.seconds,
        }


def _run_restart(problem: FairPCAProblem, opts: SolverOptions, restart: int) -> RestartTrace:
    retract = get_retraction(opts.retraction)
    step = opts.step_size
    # 每个起点的随机流只由 (seed, 起点编号) 决定，与调度顺序无关
    U = random_point(problem.d, problem.p, np.random.SeedSequence(opts.seed, spawn_key=(restart,)))
    tau = opts.iterations
    values = np.empty(tau + 1)
    norms = np.empty(tau + 1)
    active = []
    best_value, best_iteration, best_U = np.inf, 0, U
    for t in range(tau + 1):
        value, branch, delta = problem.step_info(U)
        values[t] = value
        norms[t] = delta.norm()
        active.append(branch)
        if value < best_value:
            best_value, best_iteration, best_U = value, t, U
        if logger.isEnabledFor(logging.DEBUG):
            logger.debug("iter restart=%d t=%d F=%.10g |grad|=%.3e branch=%s", restart, t, value, norms[t], branch)
        if t < tau:
            U = retract(U, -step * delta.delta)
    values.setflags(write=False)
    norms.setflags(write=False)
    return RestartTrace(restart=restart, values=values, grad_norms=norms, active=tuple(active),
                        best_value=float(best_value), best_iteration=best_iteration, best_U=best_U)


def solve(problem, opts: SolverOptions) -> SolveReport:
    """
    U_{t+1} = Rtr_{U_t}(-gamma Δ_t)，gamma = 1/sqrt(tau+1)
    返回所有起点、所有迭代中目标值最小的点；值相同取编号最小的起点
    :param problem: FairPCAProblem、ReformParams 或 PairParams
    """
    problem = as_problem(problem)
    if problem.p < 1:
        raise ValidationError(f"need d - k >= 1, got d={problem.d}, k={problem.k}")
    if problem.conditions is not None and not problem.conditions.valid:
        raise ConditionError(problem.conditions.describe(), problem.conditions)
    start = time.perf_counter()
    tasks = run_ordered(lambda r: _run_restart(problem, opts, r), [(r,) for r in range(opts.restarts)],
                        workers=opts.workers, name="restart")
    traces = []
    for task in tasks:
        if task.exception is not None:
            raise task.exception
        traces.append(task.result)
    best = min(traces, key=lambda tr: (tr.best_value, tr.restart))
    seconds = time.perf_counter() - start
    logger.info("Solved d=%d k=%d: F=%.8g (restart %d, iteration %d) in %.2fs",
                problem.d, problem.k, best.best_value, best.restart, best.best_iteration, seconds)
    return SolveReport(best_U=best.best_U, best_value=best.best_value, best_restart=best.restart,
                       traces=tuple(traces), step_size=opts.step_size, seconds=seconds, options=opts)


def convergence_proxy(report: SolveReport, L: Optional[float] = None) -> float:
    """
    平稳性代理：最优起点轨迹上 min_t ||Δ_t||_F
    L 只用于记录，理论速率中的常数不参与计算
    """
    norms = report.traces[report.best_restart].grad_norms
    if norms.size == 0:
        raise ValidationError("solve report has an empty gradient trace")
    proxy = float(np.min(norms))
    if L is not None:
        if not L > 0:
            raise ValidationError(f"Lipschitz constant must be positive, got {L}")
        logger.debug("Convergence proxy %.3e with L=%.6g over %d iterations", proxy, L, report.options.iterations)
    return proxy
