import numpy as np
import pytest
from conftest import moments_from

from drfpca.data.dataset import center, group_moments, make_toy
from drfpca.exceptions import ConditionError, ValidationError
from drfpca.metrics.fairness import evaluate
from drfpca.optimizer import (
    BinaryProblem,
    PairProblem,
    RestartTrace,
    SolveReport,
    SolverOptions,
    build_problem,
    convergence_proxy,
    fit_projection,
    solve,
)
from drfpca.robust.ambiguity import RobustConfig, reform_params
from drfpca.manifold.stiefel import StiefelPoint

PCA_MOMENT = np.diag([5.0, 2.0, 1.0, 0.1])


@pytest.fixture
def pca_problem():
    gm = moments_from([PCA_MOMENT, PCA_MOMENT], [0.5, 0.5])
    return build_problem(gm, RobustConfig(lam=0.0, eps=(0.0, 0.0), k=2))


@pytest.fixture(scope="module")
def pca_report():
    gm = moments_from([PCA_MOMENT, PCA_MOMENT], [0.5, 0.5])
    problem = build_problem(gm, RobustConfig(lam=0.0, eps=(0.0, 0.0), k=2))
    return solve(problem, SolverOptions(iterations=200, restarts=3, seed=0))


class TestSolverOptions:
    def test_default_step(self):
        assert SolverOptions(iterations=99).step_size == pytest.approx(0.1)

    def test_step_override(self):
        assert SolverOptions(step_override=0.05).step_size == 0.05

    @pytest.mark.parametrize("kwargs", [{"iterations": 0}, {"restarts": 0}, {"step_override": -1.0},
                                        {"retraction": "exp"}])
    def test_invalid(self, kwargs):
        with pytest.raises(ValidationError):
            SolverOptions(**kwargs)

    def test_from_config_keeps_section_values(self):
        opts = SolverOptions.from_config({"iterations": 50, "restarts": 2, "retraction": "qf"}, seed=None, restarts=4)
        assert (opts.iterations, opts.restarts, opts.retraction, opts.seed) == (50, 4, "qf", 0)


class TestSolve:
    def test_recovers_principal_subspace(self, pca_report):
        assert pca_report.best_value == pytest.approx(1.1, abs=1e-4)
        V = pca_report.best_U.complement()
        top = np.diag([1.0, 1.0, 0.0, 0.0])
        assert np.linalg.norm(V @ V.T - top) <= 1e-3

    def test_single_iteration_traces(self, pca_problem):
        report = solve(pca_problem, SolverOptions(iterations=1, restarts=2))
        assert all(len(tr.values) == 2 and len(tr.grad_norms) == 2 for tr in report.traces)

    def test_best_never_worse_than_start(self, pca_problem):
        report = solve(pca_problem, SolverOptions(iterations=20, restarts=4, step_override=2.0))
        for tr in report.traces:
            assert tr.best_value <= tr.initial_value
            assert tr.best_value == pytest.approx(float(np.min(tr.values)))
        assert report.best_value == min(tr.best_value for tr in report.traces)

    def test_deterministic(self, pca_problem):
        opts = SolverOptions(iterations=30, restarts=3, seed=11)
        a, b = solve(pca_problem, opts), solve(pca_problem, opts)
        assert a.best_value == b.best_value
        np.testing.assert_array_equal(a.best_U.U, b.best_U.U)

    def test_parallel_restarts_match_sequential(self, pca_problem):
        seq = solve(pca_problem, SolverOptions(iterations=30, restarts=4, seed=5, workers=1))
        par = solve(pca_problem, SolverOptions(iterations=30, restarts=4, seed=5, workers=3))
        assert seq.best_restart == par.best_restart
        np.testing.assert_array_equal(seq.best_U.U, par.best_U.U)

    def test_qf_retraction(self, pca_problem):
        report = solve(pca_problem, SolverOptions(iterations=200, restarts=2, retraction="qf"))
        assert report.best_value == pytest.approx(1.1, abs=1e-4)

    def test_failed_conditions_rejected(self):
        gm = moments_from([np.diag([4.0, 0.2]), np.diag([4.0, 0.2])], [2 / 3, 1 / 3])
        problem = build_problem(gm, RobustConfig(lam=0.5, eps=(0.0, 0.3), k=1))
        with pytest.raises(ConditionError):
            solve(problem, SolverOptions(iterations=5, restarts=1))

    def test_accepts_parameter_objects(self, toy_moments):
        rp = reform_params(toy_moments, RobustConfig(lam=0.1, eps=(0.01, 0.01), k=1))
        report = solve(rp, SolverOptions(iterations=10, restarts=1))
        assert report.best_U.U.shape == (2, 1)

    def test_summary(self, pca_report):
        summary = pca_report.summary()
        assert summary["best_value"] == pca_report.best_value
        assert summary["iterations"] == 200
        assert len(pca_report.active_history) == 201


def test_build_problem_dispatch(rng, toy_moments):
    assert isinstance(build_problem(toy_moments, RobustConfig(0.1, (0.0, 0.0), 1)), BinaryProblem)
    gm = moments_from([np.eye(3)] * 3, [0.2, 0.3, 0.5])
    problem = build_problem(gm, RobustConfig(0.1, (0.0,) * 3, 1))
    assert isinstance(problem, PairProblem)
    assert problem.p == 2


def test_multi_group_solve():
    gm = moments_from([np.diag([3.0, 1.0, 0.5]), np.diag([1.0, 2.0, 0.5]), np.diag([2.0, 0.5, 1.0])],
                      [0.3, 0.3, 0.4])
    report = solve(build_problem(gm, RobustConfig(0.1, (0.01,) * 3, 1)), SolverOptions(iterations=50, restarts=2))
    assert isinstance(report.active_history[0], tuple)
    assert report.best_value <= min(tr.initial_value for tr in report.traces)


class TestConvergenceProxy:
    def test_zero_gradients(self):
        U = StiefelPoint(np.eye(3)[:, :2])
        trace = RestartTrace(restart=0, values=np.ones(3), grad_norms=np.zeros(3), active=(0, 0, 0),
                             best_value=1.0, best_iteration=0, best_U=U)
        report = SolveReport(best_U=U, best_value=1.0, best_restart=0, traces=(trace,), step_size=0.5,
                             seconds=0.0, options=SolverOptions(iterations=2, restarts=1))
        assert convergence_proxy(report) == 0.0

    def test_smooth_optimum(self, pca_report):
        assert convergence_proxy(pca_report, L=10.0) <= 1e-6

    def test_invalid_lipschitz(self, pca_report):
        with pytest.raises(ValidationError):
            convergence_proxy(pca_report, L=0.0)

    def test_decreases_with_iteration_budget(self):
        """小特征间隙的光滑问题：min ||Δ_t|| 随 tau 增大而下降"""
        M = np.diag([1.02, 1.0])
        problem = build_problem(moments_from([M, M], [0.5, 0.5]), RobustConfig(0.0, (0.0, 0.0), 1))
        taus = np.array([100, 400, 1600, 6400])
        logs = []
        for tau in taus:
            proxies = [convergence_proxy(solve(problem, SolverOptions(iterations=int(tau), restarts=1, seed=s)))
                       for s in range(5)]
            logs.append(np.mean(np.log(proxies)))
        slope = np.polyfit(np.log(taus), logs, 1)[0]
        assert slope <= -0.15


class TestFitProjection:
    def test_requires_centered_data(self):
        with pytest.raises(ValidationError):
            fit_projection(make_toy(10, 10, seed=0), RobustConfig(0.0, (0.0, 0.0), 1), SolverOptions(iterations=5))

    def test_zero_lambda_matches_nominal(self, toy_dataset):
        projection, report = fit_projection(toy_dataset, RobustConfig(0.0, (0.0, 0.0), 1),
                                            SolverOptions(iterations=200, restarts=3))
        assert projection.provenance == "robust-fair"
        w, vecs = np.linalg.eigh(group_moments(toy_dataset).pooled_second_moment())
        assert abs(float(projection.V[:, 0] @ vecs[:, -1])) == pytest.approx(1.0, abs=1e-6)

    def test_large_lambda_reduces_gap(self, toy_dataset):
        opts = SolverOptions(iterations=200, restarts=5)
        nominal, _ = fit_projection(toy_dataset, RobustConfig(0.0, (0.0, 0.0), 1), opts)
        fair, _ = fit_projection(toy_dataset, RobustConfig(2.5, (0.0, 0.0), 1), opts)
        assert evaluate(fair, toy_dataset).abdiff < evaluate(nominal, toy_dataset).abdiff


def _spectrum_holds(seed):
    ds = center(make_toy(200, 100, seed=seed))
    opts = SolverOptions(iterations=200, restarts=5, seed=seed)
    reports = {}
    for lam in (0.0, 0.5, 1.0, 1.5, 2.0, 2.5):
        projection, _ = fit_projection(ds, RobustConfig(lam, (0.0, 0.0), 1), opts)
        reports[lam] = evaluate(projection, ds)
    fairer = reports[2.5].abdiff < reports[0.0].abdiff
    nominal_best = all(reports[0.0].are <= r.are + 1e-9 for r in reports.values())
    return fairer, nominal_best


@pytest.mark.parametrize("replications", [pytest.param(10), pytest.param(100, marks=pytest.mark.slow)])
def test_fairness_spectrum_on_toy(replications):
    outcomes = [_spectrum_holds(seed) for seed in range(replications)]
    needed = int(np.ceil(0.95 * replications))
    assert sum(f for f, _ in outcomes) >= needed
    assert sum(n for _, n in outcomes) >= needed
