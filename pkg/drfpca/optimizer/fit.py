"""
从训练数据拟合鲁棒公平投影：矩估计 -> 目标构造 -> 多起点求解 -> 取正交补
"""

import logging
from typing import Tuple

from drfpca.data.dataset import Dataset, group_moments
from drfpca.exceptions import ValidationError
from drfpca.metrics.fairness import Projection, expected_group_errors, sign_fix
from drfpca.optimizer.problem import build_problem
from drfpca.optimizer.subgradient import SolveReport, SolverOptions, solve
from drfpca.robust.ambiguity import RobustConfig

logger = logging.getLogger(__name__)


def fit_projection(train: Dataset, cfg: RobustConfig, opts: SolverOptions) -> Tuple[Projection, SolveReport]:
    if not train.centered:
        raise ValidationError("fit_projection requires centered training data")
    gm = group_moments(train)
    report = solve(build_problem(gm, cfg), opts)
    V = sign_fix(report.best_U.complement())
    logger.debug("Projection recovered from the complement of a %s point", report.best_U.U.shape)
    logger.debug("Training group errors %s", expected_group_errors(V, gm).round(6).tolist())
    return Projection(V, provenance="robust-fair"), report
