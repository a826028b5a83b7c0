from drfpca.optimizer.fit import fit_projection
from drfpca.optimizer.problem import BinaryProblem, FairPCAProblem, PairProblem, as_problem, build_problem
from drfpca.optimizer.subgradient import RestartTrace, SolveReport, SolverOptions, convergence_proxy, solve
