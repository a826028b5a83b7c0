from drfpca.robust.ambiguity import (
    ConditionReport,
    GroupCondition,
    ReformParams,
    RobustConfig,
    check_conditions,
    epsilon_from_alpha,
    psd_sqrt,
    reform_params,
    w_divergence,
    worst_case_expectation,
)
from drfpca.robust.nonbinary import (
    PairEval,
    PairParams,
    eval_F_multi,
    pair_params,
    riemannian_subgradient_multi,
)
from drfpca.robust.objective import ObjectiveEval, eval_F, lipschitz_constant, riemannian_subgradient
