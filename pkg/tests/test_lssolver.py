import numpy as np
import pytest

from arlasso.core import RngSpec, ValidationError, validate_dataset
from arlasso.lssolver import (
    LS_KKT_TOL,
    LsPenaltySpec,
    fit_l2_oracle,
    fit_lasso_ls,
    fit_scad_ls,
)
from arlasso.objective import ScadParams, scad_derivative
from arlasso.qrsolver import standardize_columns


def orthonormal_design(n, p, seed=3):
    g = RngSpec(seed).generator()
    Q, _ = np.linalg.qr(g.standard_normal((n, p)))
    return Q * np.sqrt(n)


class TestLassoLs:
    def test_zero_threshold(self, rng):
        g = rng.generator()
        X = g.standard_normal((25, 6))
        y = g.standard_normal(25)
        ds = standardize_columns(validate_dataset(y, X))
        lam = float(np.max(np.abs(ds.X.T @ ds.y))) / ds.n
        fit = fit_lasso_ls(ds, 1.0001 * lam)
        assert np.all(fit.beta == 0.0)

    def test_orthonormal_closed_form(self, rng):
        n, p = 32, 5
        X = orthonormal_design(n, p)
        g = rng.generator()
        y = X[:, 0] * 2.0 + g.standard_normal(n)
        ds = validate_dataset(y, X)
        lam = 0.07
        fit = fit_lasso_ls(ds, lam)
        corr = X.T @ y / n
        closed = np.sign(corr) * np.maximum(np.abs(corr) - lam, 0.0)
        assert np.allclose(fit.beta, closed, atol=1e-10)

    def test_lambda_zero_is_ols(self, rng):
        g = rng.generator()
        X = g.standard_normal((30, 4))
        y = g.standard_normal(30)
        ds = validate_dataset(y, X)
        fit = fit_lasso_ls(ds, 0.0)
        ols = np.linalg.solve(X.T @ X, X.T @ y)
        assert np.allclose(fit.beta, ols, atol=1e-9)

    def test_kkt_residual_bound(self, rng):
        for i in range(8):
            g = rng.child("ls", i).generator()
            n, p = 40, int(g.integers(2, 30))
            X = g.standard_normal((n, p))
            y = g.standard_normal(n) * 3
            ds = standardize_columns(validate_dataset(y, X))
            fit = fit_lasso_ls(ds, 0.05)
            assert fit.converged
            grad = ds.X.T @ (ds.y - ds.X @ fit.beta)
            thresh = ds.n * 0.05
            active = fit.beta != 0
            if active.any():
                assert np.max(np.abs(grad[active] - thresh * np.sign(fit.beta[active]))) <= LS_KKT_TOL
            if (~active).any():
                assert np.max(np.abs(grad[~active])) <= thresh + LS_KKT_TOL


class TestScadLs:
    def test_zero_stays_zero_under_large_lambda(self, rng):
        g = rng.generator()
        X = g.standard_normal((20, 5))
        y = g.standard_normal(20)
        ds = standardize_columns(validate_dataset(y, X))
        lam = 10.0 * float(np.max(np.abs(ds.X.T @ ds.y))) / ds.n
        fit = fit_scad_ls(ds, LsPenaltySpec(lam, "scad"))
        assert np.all(fit.beta == 0.0)

    def test_large_signal_unpenalized_in_round_two(self):
        n = 64
        X = orthonormal_design(n, 3, seed=9)
        beta_true = np.array([5.0, 0.0, 0.0])
        y = X @ beta_true
        ds = validate_dataset(y, X)
        lam = 0.1
        fit = fit_scad_ls(ds, LsPenaltySpec(lam, "scad", a=3.7, lla_iters=2))
        lasso_beta = fit_lasso_ls(ds, lam).beta
        assert abs(lasso_beta[0]) > 3.7 * lam
        assert scad_derivative(abs(lasso_beta[0]), ScadParams(lam=lam)) == 0.0
        # unpenalized coordinate recovers the exact value
        assert fit.beta[0] == pytest.approx(5.0, abs=1e-8)

    def test_lla_objective_nonincreasing(self, rng):
        g = rng.generator()
        X = g.standard_normal((30, 8))
        y = X[:, 0] * 2 + g.standard_normal(30)
        ds = standardize_columns(validate_dataset(y, X))
        fit = fit_scad_ls(ds, LsPenaltySpec(0.08, "scad", lla_iters=4))
        path = fit.meta["objective_path"]
        assert all(b <= a + 1e-9 for a, b in zip(path, path[1:]))

    def test_kind_guard(self):
        ds = validate_dataset(np.zeros(3), np.ones((3, 1)))
        with pytest.raises(ValidationError):
            fit_scad_ls(ds, LsPenaltySpec(0.1, "lasso"))

    def test_spec_validation(self):
        with pytest.raises(ValidationError):
            LsPenaltySpec(-0.1)
        with pytest.raises(ValidationError):
            LsPenaltySpec(0.1, "scad", a=2.0)
        with pytest.raises(ValidationError):
            LsPenaltySpec(0.1, kind="ridge")


class TestL2Oracle:
    def test_square_full_rank_interpolates(self, rng):
        g = rng.generator()
        X = g.standard_normal((6, 6)) + np.eye(6)
        y = g.standard_normal(6)
        # support smaller than n is required, so embed in a taller system
        Xt = np.vstack([X, X])
        yt = np.concatenate([y, y])
        ds = validate_dataset(yt, Xt)
        fit = fit_l2_oracle(ds, range(6))
        assert np.allclose(ds.X @ fit.beta, ds.y, atol=1e-8)

    def test_univariate_projection(self, rng):
        g = rng.generator()
        y = g.standard_normal(16)
        X = np.column_stack([np.ones(16), g.standard_normal(16)])
        ds = validate_dataset(y, X)
        fit = fit_l2_oracle(ds, [0])
        assert fit.beta[0] == pytest.approx(float(np.mean(y)))
        assert fit.beta[1] == 0.0

    def test_residual_orthogonality(self, rng):
        g = rng.generator()
        X = g.standard_normal((40, 10))
        y = g.standard_normal(40)
        ds = validate_dataset(y, X)
        support = [1, 4, 7]
        fit = fit_l2_oracle(ds, support)
        r = ds.y - ds.X @ fit.beta
        assert np.max(np.abs(ds.X[:, support].T @ r)) <= 1e-8 * np.linalg.norm(y)

    def test_rank_deficiency_error(self):
        X = np.column_stack([np.ones(8), np.ones(8)])
        ds = validate_dataset(np.arange(8.0), X)
        with pytest.raises(ValidationError, match="rank"):
            fit_l2_oracle(ds, [0, 1])

    def test_support_validation(self):
        ds = validate_dataset(np.arange(4.0), np.ones((4, 2)))
        with pytest.raises(ValidationError):
            fit_l2_oracle(ds, [])
        with pytest.raises(ValidationError):
            fit_l2_oracle(ds, [5])
