import numpy as np
import pytest

from reesolve import (
    CustomEstimating,
    DimensionMismatchError,
    JacobianUnavailableError,
    LeastSquaresEstimating,
    LinearEstimating,
    LogisticEstimating,
    NonFiniteOutputError,
    ValidationError,
    evaluate,
    jacobian,
    lipschitz_upper_bound,
    monotonicity_probe,
)


class TestEvaluate:
    def test_least_squares_zero_residual(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((10, 3))
        beta_star = np.array([1.0, -2.0, 0.5])
        u = LeastSquaresEstimating(X, X @ beta_star)
        np.testing.assert_allclose(evaluate(u, beta_star), np.zeros(3), atol=1e-12)

    def test_identity_linear_map(self):
        u = LinearEstimating(np.eye(2), np.zeros(2))
        np.testing.assert_array_equal(evaluate(u, [1.0, 2.0]), [1.0, 2.0])

    def test_least_squares_at_zero_is_minus_xty(self):
        u = LeastSquaresEstimating(np.eye(2), np.array([1.0, 1.0]))
        np.testing.assert_array_equal(evaluate(u, [0.0, 0.0]), [-1.0, -1.0])

    def test_purity_bitwise(self):
        rng = np.random.default_rng(1)
        u = LeastSquaresEstimating(rng.standard_normal((20, 4)),
                                   rng.standard_normal(20))
        beta = rng.standard_normal(4)
        a = evaluate(u, beta)
        b = evaluate(u, beta)
        assert np.array_equal(a, b)

    def test_dimension_and_finiteness_errors(self):
        u = LinearEstimating(np.eye(2), np.zeros(2))
        with pytest.raises(DimensionMismatchError):
            evaluate(u, [1.0, 2.0, 3.0])
        bad = CustomEstimating(2, lambda b: np.array([np.nan, 1.0]))
        with pytest.raises(NonFiniteOutputError):
            evaluate(bad, [0.0, 0.0])

    def test_logistic_requires_binary_response(self):
        with pytest.raises(ValidationError):
            LogisticEstimating(np.eye(2), np.array([0.0, 2.0]))


class TestJacobian:
    def test_least_squares_gram(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((15, 4))
        u = LeastSquaresEstimating(X, rng.standard_normal(15))
        np.testing.assert_allclose(jacobian(u, np.zeros(4)), X.T @ X)

    def test_linear_returns_matrix(self):
        A = np.array([[2.0, 1.0], [-1.0, 2.0]])
        u = LinearEstimating(A, np.zeros(2))
        np.testing.assert_array_equal(jacobian(u, [3.0, 4.0]), A)

    def test_logistic_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((25, 4))
        y = (rng.uniform(size=25) < 0.5).astype(float)
        u = LogisticEstimating(X, y)
        beta = 0.3 * rng.standard_normal(4)
        analytic = jacobian(u, beta)
        fd = jacobian(CustomEstimating(4, lambda b: u(b)), beta, allow_fd=True)
        assert np.max(np.abs(analytic - fd)) <= 1e-6

    @pytest.mark.parametrize("seed", range(4))
    def test_builtin_jacobians_match_fd(self, seed):
        rng = np.random.default_rng(seed)
        n, p = 30, 6
        X = rng.standard_normal((n, p))
        builtins = [
            LeastSquaresEstimating(X, rng.standard_normal(n)),
            LinearEstimating(rng.standard_normal((p, p)), rng.standard_normal(p)),
            LogisticEstimating(X, (rng.uniform(size=n) < 0.5).astype(float)),
        ]
        beta = 0.5 * rng.standard_normal(p)
        for u in builtins:
            fd = jacobian(CustomEstimating(p, lambda b, u=u: u(b)), beta,
                          allow_fd=True)
            assert np.max(np.abs(jacobian(u, beta) - fd)) <= 1e-5

    def test_fd_gate(self):
        u = CustomEstimating(2, lambda b: b * 2.0)
        with pytest.raises(JacobianUnavailableError):
            jacobian(u, [1.0, 1.0])
        np.testing.assert_allclose(jacobian(u, [1.0, 1.0], allow_fd=True),
                                   2 * np.eye(2), atol=1e-8)


class TestLipschitz:
    def test_diagonal_spectral_norm(self):
        u = LinearEstimating(np.diag([3.0, 1.0]), np.zeros(2))
        assert abs(lipschitz_upper_bound(u) - 3.0) <= 1e-5

    def test_identity(self):
        u = LinearEstimating(np.eye(4), np.zeros(4))
        assert lipschitz_upper_bound(u) == pytest.approx(1.0, abs=1e-9)

    def test_declared_constant_passthrough(self):
        u = CustomEstimating(2, lambda b: b, lipschitz=10.0)
        assert lipschitz_upper_bound(u) == 10.0

    def test_unavailable_is_none(self):
        assert lipschitz_upper_bound(CustomEstimating(2, lambda b: b)) is None
        X = np.eye(3)
        assert lipschitz_upper_bound(
            LogisticEstimating(X, np.zeros(3))) is None

    def test_least_squares_matches_eigvalsh(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((40, 6))
        u = LeastSquaresEstimating(X, rng.standard_normal(40))
        exact = float(np.linalg.eigvalsh(X.T @ X).max())
        assert abs(lipschitz_upper_bound(u) - exact) <= 1e-5 * exact

    def test_bounds_sampled_difference_quotients(self):
        rng = np.random.default_rng(5)
        A = rng.standard_normal((5, 5))
        u = LinearEstimating(A, np.zeros(5))
        L = lipschitz_upper_bound(u)
        for _ in range(100):
            b1, b2 = rng.standard_normal(5), rng.standard_normal(5)
            ratio = np.linalg.norm(u(b1) - u(b2)) / np.linalg.norm(b1 - b2)
            assert ratio <= L * (1 + 1e-5)


class TestMonotonicityProbe:
    def test_positive_definite_symmetric_part_passes(self):
        # <A d, d> = 2||d||^2 for this A, so monotone despite asymmetry
        u = LinearEstimating(np.array([[2.0, 1.0], [-1.0, 2.0]]), np.zeros(2))
        assert monotonicity_probe(u, trials=200, radius=5.0, seed=0).passed

    def test_negative_identity_fails(self):
        u = LinearEstimating(-np.eye(2), np.zeros(2))
        result = monotonicity_probe(u, trials=100, radius=1.0, seed=0)
        assert not result.passed
        b1, b2 = result.pair
        assert (u(b1) - u(b2)) @ (b1 - b2) < -1e-10

    def test_least_squares_is_monotone(self):
        rng = np.random.default_rng(6)
        u = LeastSquaresEstimating(rng.standard_normal((30, 5)),
                                   rng.standard_normal(30))
        assert monotonicity_probe(u, trials=100, radius=3.0, seed=1).passed

    def test_deterministic_given_seed(self):
        u = LinearEstimating(-np.eye(3), np.zeros(3))
        a = monotonicity_probe(u, trials=50, radius=1.0, seed=42)
        b = monotonicity_probe(u, trials=50, radius=1.0, seed=42)
        assert a.worst_inner == b.worst_inner
        np.testing.assert_array_equal(a.pair[0], b.pair[0])
