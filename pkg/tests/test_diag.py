import json

import numpy as np
import pytest

from arlasso.core import PenaltySpec, RngSpec, ValidationError, validate_dataset
from arlasso.diag import (
    kkt_check,
    noise_density_at_zero,
    normality_diagnostic,
    sign_consistency,
)
from arlasso.qrsolver import SolverConfig, fit_wrlasso, lp_oracle, standardize_columns
from arlasso.simgen import NoiseModel
from conftest import random_instance


class TestKktCheck:
    def test_converged_fit_feasible(self, rng):
        ds, tau, lam, w = random_instance(rng.child("kkt1"))
        pen = PenaltySpec(tau=tau, lam=lam, weights=w)
        fit = fit_wrlasso(ds, pen)
        assert fit.converged
        assert kkt_check(fit.beta, ds, pen, tol=1e-4).feasible

    def test_zero_with_huge_lambda_feasible(self, rng):
        g = rng.generator()
        ds = standardize_columns(
            validate_dataset(g.standard_normal(15), g.standard_normal((15, 4)))
        )
        pen = PenaltySpec(tau=0.5, lam=1e3, weights=np.ones(4))
        rep = kkt_check(np.zeros(4), ds, pen, tol=1e-6)
        assert rep.feasible
        assert rep.max_zero_violation == 0.0

    def test_zero_without_penalty_infeasible(self, rng):
        g = rng.generator()
        ds = standardize_columns(
            validate_dataset(g.standard_normal(15) + 0.5, g.standard_normal((15, 4)))
        )
        pen = PenaltySpec(tau=0.5, lam=0.0, weights=np.ones(4))
        rep = kkt_check(np.zeros(4), ds, pen, tol=1e-4)
        gvec = 0.5 - (ds.y <= 0)
        expected = float(np.max(np.abs(ds.X.T @ gvec)))
        assert not rep.feasible
        assert rep.max_zero_violation == pytest.approx(expected)

    def test_monotone_in_tol(self, rng):
        ds, tau, lam, w = random_instance(rng.child("kkt2"))
        pen = PenaltySpec(tau=tau, lam=lam, weights=w)
        beta = np.full(ds.p, 0.3)
        tols = [1e-6, 1e-4, 1e-2, 1.0, 1e2]
        feas = [kkt_check(beta, ds, pen, tol=t).feasible for t in tols]
        # once feasible, stays feasible as tol grows
        assert feas == sorted(feas)

    def test_lp_solutions_feasible_at_1e6(self, rng):
        for i in range(12):
            ds, tau, lam, w = random_instance(rng.child("kkt3", i))
            pen = PenaltySpec(tau=tau, lam=lam, weights=w)
            fit = lp_oracle(ds, pen)
            rep = kkt_check(fit.beta, ds, pen, tol=1e-6)
            assert rep.feasible, f"instance {i}: {rep.max_violation}"

    def test_json_roundtrip(self, rng):
        ds, tau, lam, w = random_instance(rng.child("kkt4"))
        pen = PenaltySpec(tau=tau, lam=lam, weights=w)
        rep = kkt_check(np.zeros(ds.p), ds, pen, tol=1e-4)
        payload = json.loads(rep.to_json())
        assert payload["feasible"] == rep.feasible
        assert len(payload["per_coordinate"]) == ds.p


class TestSignConsistency:
    def test_exact_match(self):
        b = np.array([1.0, 0.0, -2.0])
        rep = sign_consistency(b, b)
        assert rep.exact_sign and rep.fp == 0 and rep.fn == 0

    def test_all_zero_estimate(self):
        bt = np.zeros(20)
        bt[[0, 2, 4, 7, 9, 12, 15]] = 1.0
        rep = sign_consistency(np.zeros(20), bt)
        assert rep.fn == 7 and rep.fp == 0 and not rep.exact_sign

    def test_sign_flip_without_support_error(self):
        bt = np.array([1.0, 0.0, 2.0])
        bh = np.array([-1.0, 0.0, 2.0])
        rep = sign_consistency(bh, bt)
        assert not rep.exact_sign and rep.fp == 0 and rep.fn == 0

    def test_rescaling_invariance_above_tol(self):
        bt = np.array([1.0, 0.0, -1.0, 0.0])
        bh = np.array([0.5, 0.0, -0.2, 0.0])
        for c in (0.5, 1.0, 10.0):
            rep = sign_consistency(c * bh, bt, support_tol=1e-6)
            assert rep.exact_sign and rep.fp == 0 and rep.fn == 0

    def test_support_tol_positive(self):
        with pytest.raises(ValidationError):
            sign_consistency(np.zeros(2), np.zeros(2), support_tol=0.0)


class TestNormalityDiagnostic:
    def test_refuses_heteroscedastic_models(self):
        for model in (NoiseModel.mn1(), NoiseModel.mn2()):
            with pytest.raises(ValidationError, match="heteroscedastic"):
                noise_density_at_zero(model)
            with pytest.raises(ValidationError):
                normality_diagnostic(model, reps=2, rng=RngSpec(0), n=50)

    def test_analytic_densities(self):
        assert noise_density_at_zero(NoiseModel.gauss()) == pytest.approx(
            1.0 / np.sqrt(4 * np.pi)
        )
        assert noise_density_at_zero(NoiseModel.laplace()) == pytest.approx(0.5)
        assert noise_density_at_zero(NoiseModel.cauchy()) == pytest.approx(1 / np.pi)
        # t_4 density at 0 is 3/8; scaling by sqrt(2) divides by sqrt(2)
        assert noise_density_at_zero(NoiseModel.t4_scaled()) == pytest.approx(
            (3.0 / 8.0) / np.sqrt(2.0)
        )

    def test_smoke_run_bands(self):
        # reduced-size sanity run; the acceptance suite runs the full protocol
        summary = normality_diagnostic(NoiseModel.gauss(), reps=60, rng=RngSpec(31), n=200)
        assert abs(summary.mean) < 0.5
        assert 0.4 < summary.variance < 2.0
        assert summary.reps == 60
