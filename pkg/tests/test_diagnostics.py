import numpy as np
import pytest

from helpers import lasso_ls_instance

from reesolve import (
    EstimatingProblem,
    GeometricEnvelope,
    GroupLasso,
    GroupPartition,
    InstanceTooLargeError,
    InverseKEnvelope,
    IterationRecord,
    KmRateEnvelope,
    Lasso,
    LeastSquaresEstimating,
    LinearEstimating,
    MissingTraceFieldsError,
    Ridge,
    SolverConfig,
    SolverReport,
    SolverStatus,
    SparseGroupLasso,
    UnsupportedPenaltyError,
    fixed_point_residual,
    kkt_residual,
    lambda_max,
    oracle_grid_prox,
    oracle_lasso_cd,
    rate_envelope_check,
    solve_km,
    solve_picard,
    vi_probe,
)


class TestFixedPointResidual:
    def test_zero_at_oracle_solution(self):
        X, y, u, lam, prob = lasso_ls_instance(seed=0)
        beta = oracle_lasso_cd(X, y, lam, tol=1e-15)
        assert fixed_point_residual(prob, beta, 1.0 / u.lipschitz) <= 1e-8

    def test_unpenalized_root(self):
        u = LinearEstimating(np.eye(2), np.array([1.0, -1.0]))
        prob = EstimatingProblem(u=u, penalty=Lasso(), lam=0.0)
        assert fixed_point_residual(prob, [1.0, -1.0], 0.7) == 0.0

    def test_positive_away_from_solution(self):
        X, y, u, lam, prob = lasso_ls_instance(seed=1)
        assert fixed_point_residual(prob, np.ones(10), 0.5) > 1e-3

    def test_ball_problem_uses_projected_map(self):
        # the constrained form ignores lambda: the residual must certify
        # P_C(beta - tau U(beta)) = beta even when problem.lam == 0
        from reesolve import BallConstraint, BallIndicator, SolverConfig, solve_constrained
        rng = np.random.default_rng(33)
        X = rng.standard_normal((30, 4))
        y = rng.standard_normal(30)
        u = LeastSquaresEstimating(X, y)
        root = np.linalg.lstsq(X, y, rcond=None)[0]
        pen = BallIndicator(BallConstraint("l2", 0.5 * np.linalg.norm(root)))
        prob = EstimatingProblem(u=u, penalty=pen, lam=0.0)
        rep = solve_constrained(prob, SolverConfig(tol=1e-11, max_iter=200000),
                                np.zeros(4), method="picard")
        assert rep.converged
        assert fixed_point_residual(prob, rep.solution, rep.stepsize) <= 1e-10


class TestKktResidual:
    def test_zero_vector_at_lambda_max(self):
        X, y, u, lam, prob = lasso_ls_instance(seed=2)
        strong = EstimatingProblem(u=u, penalty=Lasso(), lam=lambda_max(u))
        rep = kkt_residual(strong, np.zeros(10))
        assert rep.max_residual == 0.0

    def test_oracle_solution_certified(self):
        X, y, u, lam, prob = lasso_ls_instance(seed=3)
        beta = oracle_lasso_cd(X, y, lam, tol=1e-15)
        assert kkt_residual(prob, beta).max_residual <= 1e-8

    def test_perturbation_shows_up_at_that_coordinate(self):
        X, y, u, lam, prob = lasso_ls_instance(seed=4)
        beta = oracle_lasso_cd(X, y, lam, tol=1e-15)
        active = np.nonzero(beta)[0][0]
        beta_bad = beta.copy()
        beta_bad[active] += 0.1
        rep = kkt_residual(prob, beta_bad)
        assert rep.coordinate[active] > 1e-3

    def test_group_conditions(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((60, 6)) / np.sqrt(60)
        beta_star = np.array([2.0, 1.5, 1.0, 0.0, 0.0, 0.0])
        y = X @ beta_star + 0.02 * rng.standard_normal(60)
        u = LeastSquaresEstimating(X, y)
        part = GroupPartition([[0, 1, 2], [3, 4, 5]])
        lam = 0.3 * lambda_max(u)
        prob = EstimatingProblem(u=u, penalty=GroupLasso(part), lam=lam)
        rep = solve_picard(prob, SolverConfig(tol=1e-12, max_iter=200000),
                           np.zeros(6))
        assert rep.converged
        kkt = kkt_residual(prob, rep.solution)
        assert kkt.group.shape == (2,)
        assert kkt.max_residual <= 1e-9

    def test_sparse_group_conditions(self):
        rng = np.random.default_rng(6)
        X = rng.standard_normal((60, 6)) / np.sqrt(60)
        beta_star = np.array([2.0, 0.0, 1.0, 0.0, 0.0, 0.0])
        y = X @ beta_star + 0.02 * rng.standard_normal(60)
        u = LeastSquaresEstimating(X, y)
        part = GroupPartition([[0, 1, 2], [3, 4, 5]])
        pen = SparseGroupLasso(part, alpha=0.5)
        lam = 0.3 * lambda_max(u)
        prob = EstimatingProblem(u=u, penalty=pen, lam=lam)
        rep = solve_picard(prob, SolverConfig(tol=1e-12, max_iter=200000),
                           np.zeros(6))
        assert rep.converged
        assert kkt_residual(prob, rep.solution).max_residual <= 1e-9

    def test_ridge_unsupported(self):
        X, y, u, lam, _ = lasso_ls_instance(seed=7)
        prob = EstimatingProblem(u=u, penalty=Ridge(), lam=lam)
        with pytest.raises(UnsupportedPenaltyError):
            kkt_residual(prob, np.zeros(10))


class TestViProbe:
    def test_unpenalized_root_gives_exact_zeros(self):
        u = LinearEstimating(np.eye(3), np.array([1.0, 2.0, -1.0]))
        prob = EstimatingProblem(u=u, penalty=Lasso(), lam=0.0)
        probe = vi_probe(prob, [1.0, 2.0, -1.0], samples=500, radius=2.0, seed=0)
        assert probe.passed
        assert abs(probe.worst_value) <= 1e-12

    def test_oracle_solution_passes(self):
        X, y, u, lam, prob = lasso_ls_instance(seed=8)
        beta = oracle_lasso_cd(X, y, lam, tol=1e-15)
        probe = vi_probe(prob, beta, samples=10000, radius=1.0, seed=1)
        assert probe.passed
        assert probe.worst_value >= -1e-8

    def test_non_solution_reports_violation(self):
        X, y, u, lam, prob = lasso_ls_instance(seed=9)
        beta = oracle_lasso_cd(X, y, lam, tol=1e-15)
        probe = vi_probe(prob, beta + 0.5, samples=5000, radius=1.0, seed=2)
        assert not probe.passed
        assert probe.worst_value < 0
        assert probe.worst_point is not None

    def test_deterministic_given_seed(self):
        X, y, u, lam, prob = lasso_ls_instance(seed=10)
        a = vi_probe(prob, np.zeros(10), 100, 1.0, seed=7)
        b = vi_probe(prob, np.zeros(10), 100, 1.0, seed=7)
        assert a.worst_value == b.worst_value


class TestOracleLassoCd:
    def test_lambda_max_gives_zero(self):
        X, y, u, lam, _ = lasso_ls_instance(seed=11)
        beta = oracle_lasso_cd(X, y, lambda_max(u))
        np.testing.assert_array_equal(beta, np.zeros(10))

    def test_lambda_zero_solves_normal_equations(self):
        rng = np.random.default_rng(12)
        X = rng.standard_normal((30, 5))
        y = rng.standard_normal(30)
        beta = oracle_lasso_cd(X, y, 0.0, tol=1e-14)
        assert np.max(np.abs(X.T @ (y - X @ beta))) <= 1e-10

    def test_univariate_closed_form(self):
        rng = np.random.default_rng(13)
        X = rng.standard_normal((20, 1))
        y = rng.standard_normal(20)
        lam = 0.4
        beta = oracle_lasso_cd(X, y, lam, tol=1e-15)
        xty = float(X[:, 0] @ y)
        xtx = float(X[:, 0] @ X[:, 0])
        expected = np.sign(xty) * max(abs(xty) - lam, 0.0) / xtx
        assert beta[0] == pytest.approx(expected, abs=1e-12)

    def test_size_cap(self):
        with pytest.raises(InstanceTooLargeError):
            oracle_lasso_cd(np.ones((10, 51)), np.ones(10), 0.1)


def synthetic_report(residuals, iterates=None, rho=0.5, solution=None):
    trace = [IterationRecord(k + 1, r, 1.0) for k, r in enumerate(residuals[1:])]
    if solution is None:
        solution = (iterates[-1] if iterates is not None
                    else np.zeros(2))
    return SolverReport(
        method="km", status=SolverStatus.CONVERGED, solution=solution,
        iterations=len(trace), trace=trace, initial_residual=residuals[0],
        config=SolverConfig(rho=rho),
        iterates=None if iterates is None else np.asarray(iterates))


class TestRateEnvelopes:
    def test_geometric_pass_on_contraction_run(self):
        # U = I, lam = 0, tau = 0.5: iterate map is exactly 0.5 * beta
        u = LinearEstimating(np.eye(2), np.zeros(2))
        prob = EstimatingProblem(u=u, penalty=Lasso(), lam=0.0)
        rep = solve_picard(prob, SolverConfig(tau=0.5, tol=1e-13, max_iter=200),
                           np.array([1.0, -2.0]))
        result = rate_envelope_check(
            rep, GeometricEnvelope(L=0.5, beta_hat=np.zeros(2)))
        assert result.passed

    def test_geometric_fails_on_crafted_trace_at_k3(self):
        # distances 1, .5, .25, .2 with L = 0.5: k = 3 needs <= 0.125
        iterates = np.array([[1.0, 0], [0.5, 0], [0.25, 0], [0.2, 0]])
        rep = synthetic_report([1.0, 0.5, 0.25, 0.2], iterates=iterates,
                               solution=np.zeros(2))
        result = rate_envelope_check(rep, GeometricEnvelope(L=0.5))
        assert not result.passed
        assert result.first_violation == 3

    def test_geometric_needs_iterates(self):
        rep = synthetic_report([1.0, 0.5])
        with pytest.raises(MissingTraceFieldsError):
            rate_envelope_check(rep, GeometricEnvelope(L=0.5))

    def test_km_rate_on_lasso_run(self):
        X, y, u, lam, prob = lasso_ls_instance(seed=14)
        init = np.zeros(10)
        rep = solve_km(prob, SolverConfig(tol=1e-10, max_iter=200000), init)
        assert rep.converged
        dist0 = float(np.linalg.norm(init - rep.solution) ** 2)
        result = rate_envelope_check(rep, KmRateEnvelope(rho=0.5, dist0=dist0))
        assert result.passed

    def test_km_rate_detects_violation(self):
        rep = synthetic_report([10.0, 10.0, 10.0, 10.0],
                               iterates=np.zeros((4, 2)),
                               solution=np.array([0.1, 0.0]))
        result = rate_envelope_check(rep, KmRateEnvelope(rho=0.5, dist0=0.01))
        assert not result.passed
        assert result.first_violation == 0

    def test_inverse_k_envelope(self):
        X, y, u, lam, prob = lasso_ls_instance(seed=15)
        rep = solve_picard(prob, SolverConfig(tol=1e-12, max_iter=200000),
                           np.zeros(10))
        assert rate_envelope_check(rep, InverseKEnvelope()).passed

    def test_inverse_k_detects_flat_tail(self):
        residuals = [1.0] + [1.0 / k for k in range(1, 12)] + [0.5, 0.5, 0.5]
        rep = synthetic_report(residuals)
        result = rate_envelope_check(rep, InverseKEnvelope(fit_iters=10))
        assert not result.passed


class TestGridOracleMore:
    def test_group_example(self):
        spec = GroupLasso(GroupPartition([[0, 1]]))
        got = oracle_grid_prox(spec, [3.0, 4.0], 2.5)
        np.testing.assert_allclose(got, [1.5, 2.0], atol=2e-3)
