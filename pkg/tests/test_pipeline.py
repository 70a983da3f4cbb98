import numpy as np
import pytest

from arlasso.core import PenaltySpec, RngSpec, validate_dataset
from arlasso.objective import ScadParams, scad_derivative
from arlasso.pipeline import ar_lasso, r_lasso
from arlasso.qrsolver import SolverConfig, fit_wrlasso, lp_oracle, standardize_columns
from conftest import random_instance


def make_data(seed=1, n=40, p=8, signal=True):
    g = RngSpec(seed).generator()
    X = g.standard_normal((n, p))
    beta = np.zeros(p)
    if signal:
        beta[:3] = [2.0, -1.5, 1.0]
    y = X @ beta + g.standard_normal(n)
    return standardize_columns(validate_dataset(y, X, true_beta=beta))


class TestRLasso:
    def test_identical_to_unit_weight_fit(self):
        ds = make_data()
        a = r_lasso(ds, 0.5, 0.04)
        b = fit_wrlasso(ds, PenaltySpec(tau=0.5, lam=0.04, weights=np.ones(ds.p)))
        assert np.array_equal(a.beta, b.beta)
        assert a.objective == b.objective

    def test_lambda_zero_is_unpenalized_quantile_fit(self, rng):
        ds, tau, _, _ = random_instance(rng.child("rl0"), max_n=20, max_p=3)
        a = r_lasso(ds, tau, 0.0, SolverConfig(kkt_tol=1e-7))
        b = lp_oracle(ds, PenaltySpec(tau=tau, lam=0.0, weights=np.ones(ds.p)))
        assert a.objective == pytest.approx(b.objective, abs=1e-6)

    def test_matches_lp_oracle(self, rng):
        ds, tau, lam, _ = random_instance(rng.child("rlp"))
        a = r_lasso(ds, tau, lam, SolverConfig(kkt_tol=1e-6))
        b = lp_oracle(ds, PenaltySpec(tau=tau, lam=lam, weights=np.ones(ds.p)))
        assert abs(a.objective - b.objective) <= 1e-6 * (1 + abs(b.objective))


class TestArLasso:
    def test_weight_rule_exactness(self):
        ds = make_data(seed=5)
        lam = 0.08
        fit = ar_lasso(ds, 0.5, lam, lam)
        init = fit.meta["initial"]
        expected = scad_derivative(np.abs(init.beta), ScadParams(lam=lam))
        assert np.array_equal(fit.meta["weights"], expected)

    def test_monotone_weighting(self):
        ds = make_data(seed=6)
        fit = ar_lasso(ds, 0.5, 0.08, 0.08)
        init_abs = np.abs(fit.meta["initial"].beta)
        w = fit.meta["weights"]
        order = np.argsort(init_abs)
        assert np.all(np.diff(w[order]) <= 1e-12)

    def test_zero_pilot_reduces_to_r_lasso(self):
        ds = make_data(seed=7)
        lam_final = 0.05
        # a pilot with all-zero coefficients gives unit weights
        gvec = 0.5 - (ds.y <= 0)
        lam_big = 1.1 * float(np.max(np.abs(ds.X.T @ gvec))) / ds.n
        fit = ar_lasso(ds, 0.5, lam_big, lam_final)
        assert np.all(fit.meta["initial"].beta == 0.0)
        assert np.all(fit.meta["weights"] == 1.0)
        ref = r_lasso(ds, 0.5, lam_final)
        assert fit.objective == pytest.approx(ref.objective, rel=1e-9)

    def test_strong_pilot_coordinate_unpenalized(self):
        ds = make_data(seed=8, n=60)
        lam = 0.05
        fit = ar_lasso(ds, 0.5, lam, lam)
        init_abs = np.abs(fit.meta["initial"].beta)
        strong = init_abs >= 3.7 * lam
        assert strong.any()
        assert np.all(fit.meta["weights"][strong] == 0.0)

    def test_large_a_degenerates_to_r_lasso_weights(self):
        ds = make_data(seed=9)
        lam = 0.05
        a = 1e6
        fit = ar_lasso(ds, 0.5, lam, lam, scad=ScadParams(lam=lam, a=a))
        init_abs = np.abs(fit.meta["initial"].beta)
        w = fit.meta["weights"]
        capped = init_abs <= 1e3 * lam
        # deviation from 1 is (b - lam)/((a-1) lam), at most ~1e-3 here
        bound = (1e3 - 1.0) / (a - 1.0)
        assert np.all(w[capped] >= 1.0 - 1.001 * bound)
        assert np.all(w[capped] >= 1.0 - 1e-3 - 1e-12)

    def test_injected_pilot(self):
        ds = make_data(seed=10)
        pilot = r_lasso(ds, 0.5, 0.2)
        fit = ar_lasso(ds, 0.5, 0.2, 0.05, initial=pilot)
        assert fit.meta["initial"] is pilot

    def test_failed_pilot_skips_second_stage(self):
        ds = make_data(seed=11)
        cfg = SolverConfig(max_iters=2, check_every=2)
        fit = ar_lasso(ds, 0.5, 1e-4, 1e-4, cfg=cfg)
        assert not fit.converged
        assert fit.meta.get("stage") == "initial_failed"

    def test_lambda_final_zero_requires_explicit_scad(self):
        ds = make_data(seed=12)
        with pytest.raises(ValueError):
            ar_lasso(ds, 0.5, 0.1, 0.0)
        fit = ar_lasso(ds, 0.5, 0.1, 0.0, scad=ScadParams(lam=0.1))
        assert fit.converged
