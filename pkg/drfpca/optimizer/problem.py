"""
求解器使用的目标适配器：二值属性用两分支目标，多组属性用组对目标
"""

import logging
from abc import ABC, abstractmethod
from typing import Hashable, Optional, Tuple

from drfpca.data.dataset import GroupMoments
from drfpca.manifold.stiefel import StiefelPoint, TangentVector
from drfpca.robust.ambiguity import ConditionReport, ReformParams, RobustConfig, reform_params
from drfpca.robust.nonbinary import PairParams, eval_F_multi, pair_params, riemannian_subgradient_multi
from drfpca.robust.objective import eval_F, lipschitz_constant, riemannian_subgradient

logger = logging.getLogger(__name__)


class FairPCAProblem(ABC):
    """在 U ∈ R^{d×(d-k)} 上最小化的非光滑目标"""

    def __init__(self, d: int, k: int, conditions: Optional[ConditionReport]):
        self.d = d
        self.k = k
        self.conditions = conditions

    @property
    def p(self) -> int:
        return self.d - self.k

    @abstractmethod
    def evaluate(self, U: StiefelPoint) -> Tuple[float, Hashable]:
        """返回 (目标值, 活跃分支)"""

    @abstractmethod
    def subgradient(self, U: StiefelPoint) -> TangentVector:
        pass

    def step_info(self, U: StiefelPoint) -> Tuple[float, Hashable, TangentVector]:
        value, active = self.evaluate(U)
        return value, active, self.subgradient(U)

    def lipschitz(self) -> Optional[float]:
        return None


class BinaryProblem(FairPCAProblem):
    def __init__(self, rp: ReformParams):
        super().__init__(rp.dim, rp.k, rp.conditions)
        self.params = rp

    def evaluate(self, U):
        ev = eval_F(U, self.params)
        return ev.value, ev.active_branch

    def subgradient(self, U):
        return riemannian_subgradient(U, self.params)

    def lipschitz(self):
        return lipschitz_constant(self.params)


class PairProblem(FairPCAProblem):
    def __init__(self, pp: PairParams):
        super().__init__(pp.dim, pp.k, pp.conditions)
        self.params = pp

    def evaluate(self, U):
        ev = eval_F_multi(U, self.params)
        return ev.value, ev.active_pair

    def subgradient(self, U):
        return riemannian_subgradient_multi(U, self.params)


def build_problem(gm: GroupMoments, cfg: RobustConfig) -> FairPCAProblem:
    """m = 2 时用两分支重构，否则用组对目标"""
    if gm.n_groups == 2:
        return BinaryProblem(reform_params(gm, cfg))
    logger.info("Attribute has %d groups, using the pairwise objective", gm.n_groups)
    return PairProblem(pair_params(gm, cfg))


def as_problem(obj) -> FairPCAProblem:
    if isinstance(obj, FairPCAProblem):
        return obj
    if isinstance(obj, ReformParams):
        return BinaryProblem(obj)
    if isinstance(obj, PairParams):
        return PairProblem(obj)
    raise TypeError(f"cannot build a problem from {type(obj).__name__}")
