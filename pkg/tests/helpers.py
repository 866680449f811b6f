"""Shared instance generators for the test suite."""

from __future__ import annotations

import numpy as np

from reesolve import (
    EstimatingProblem,
    GroupLasso,
    GroupPartition,
    Lasso,
    LeastSquaresEstimating,
    lambda_max,
)


def lasso_ls_instance(seed: int, n: int = 60, p: int = 10, k: int = 3,
                      noise: float = 0.05, lam_frac: float = 0.2):
    """Column-scaled least-squares design with a planted sparse signal.

    Scaling by 1/sqrt(n) keeps the Lipschitz constant of U near 1 so the
    certificate tolerances are comparable across sizes.
    """
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p)) / np.sqrt(n)
    beta_star = np.zeros(p)
    beta_star[:k] = rng.uniform(1.5, 3.0, size=k) * rng.choice([-1.0, 1.0], size=k)
    y = X @ beta_star + noise * rng.standard_normal(n)
    u = LeastSquaresEstimating(X, y)
    lam = lam_frac * lambda_max(u)
    problem = EstimatingProblem(u=u, penalty=Lasso(), lam=lam)
    return X, y, u, lam, problem


def group_ls_instance(seed: int, n: int = 80, p: int = 12, group_size: int = 4,
                      noise: float = 0.05, lam_frac: float = 0.2):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p)) / np.sqrt(n)
    beta_star = np.zeros(p)
    beta_star[:group_size] = rng.uniform(1.0, 2.0, size=group_size)
    y = X @ beta_star + noise * rng.standard_normal(n)
    u = LeastSquaresEstimating(X, y)
    groups = [list(range(i, i + group_size)) for i in range(0, p, group_size)]
    part = GroupPartition(groups)
    lam = lam_frac * lambda_max(u)
    problem = EstimatingProblem(u=u, penalty=GroupLasso(part), lam=lam)
    return X, y, u, lam, problem


def rotation_instance(theta: float = np.pi / 2, tau: float = 1.0):
    """Linear U whose lam=0 iteration map I - tau*A is a plane rotation:
    nonexpansive, not a contraction, with a unique fixed point."""
    from reesolve import LinearEstimating

    M = np.array([[np.cos(theta), -np.sin(theta)],
                  [np.sin(theta), np.cos(theta)]])
    A = (np.eye(2) - M) / tau
    b = A @ np.array([1.0, -0.5])  # fixed point at (1, -0.5)
    return LinearEstimating(A, b), np.array([1.0, -0.5])
