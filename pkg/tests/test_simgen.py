import numpy as np
import pytest

from arlasso.core import RngSpec, ValidationError
from arlasso.simgen import (
    CovModel,
    NoiseModel,
    beta_star,
    gen_design,
    gen_noise,
    make_dataset,
    read_dataset_csv,
    write_dataset_csv,
)

ALL_NOISES = [
    NoiseModel.gauss(),
    NoiseModel.mn1(),
    NoiseModel.mn2(),
    NoiseModel.laplace(),
    NoiseModel.t4_scaled(),
    NoiseModel.cauchy(),
]


class TestBetaStar:
    def test_p400(self):
        b = beta_star(400)
        assert b.size == 400
        assert int(np.count_nonzero(b)) == 7
        assert float(np.sum(np.abs(b))) == pytest.approx(8.1)
        assert list(np.flatnonzero(b)) == [0, 2, 4, 7, 9, 12, 15]

    def test_p16_last_entry(self):
        assert beta_star(16)[-1] == pytest.approx(0.3)

    def test_p15_rejected(self):
        with pytest.raises(ValidationError):
            beta_star(15)


class TestGenDesign:
    def test_identity_column_variance(self):
        n = 4000
        X = gen_design(n, 6, CovModel.identity(), RngSpec(3))
        v = X.var(axis=0, ddof=1)
        assert np.all(np.abs(v - 1.0) <= 5 * np.sqrt(2.0 / n))

    def test_ar1_lag_one_correlation(self):
        n = 4000
        X = gen_design(n, 8, CovModel.ar1(0.5), RngSpec(4))
        for j in range(7):
            r = np.corrcoef(X[:, j], X[:, j + 1])[0, 1]
            assert abs(r - 0.5) <= 5.0 / np.sqrt(n)

    def test_ar1_two_step_correlation(self):
        n = 6000
        X = gen_design(n, 5, CovModel.ar1(0.5), RngSpec(5))
        r = np.corrcoef(X[:, 0], X[:, 2])[0, 1]
        assert abs(r - 0.25) <= 5.0 / np.sqrt(n)

    def test_deterministic(self):
        a = gen_design(50, 10, CovModel.ar1(0.5), RngSpec(9, 2))
        b = gen_design(50, 10, CovModel.ar1(0.5), RngSpec(9, 2))
        assert np.array_equal(a, b)

    def test_cov_parse(self):
        assert CovModel.parse("identity") == CovModel.identity()
        assert CovModel.parse("ar1:0.5") == CovModel.ar1(0.5)
        assert CovModel.parse("ar1") == CovModel.ar1(0.5)
        with pytest.raises(ValidationError):
            CovModel.parse("toeplitz")


class TestGenNoise:
    def test_gauss_variance(self):
        n = 20000
        eps = gen_noise(NoiseModel.gauss(), n, RngSpec(11))
        assert abs(eps.var(ddof=1) - 2.0) <= 5 * 2.0 * np.sqrt(2.0 / n)

    def test_mn1_tail_fraction(self):
        # |eps| > 10 comes essentially only from the sigma=5 component:
        # P = 0.1 * 2*(1 - Phi(2)) = 0.1 * 0.04550
        n = 200_000
        eps = gen_noise(NoiseModel.mn1(), n, RngSpec(12))
        p_tail = 0.1 * 0.04550026389635842
        frac = float(np.mean(np.abs(eps) > 10.0))
        band = 5 * np.sqrt(p_tail * (1 - p_tail) / n)
        assert abs(frac - p_tail) <= band

    def test_mn2_sigma_range_variance(self):
        # Var = E[sigma^2] = (1/4) * integral_1^5 s^2 ds = 31/3
        n = 200_000
        eps = gen_noise(NoiseModel.mn2(), n, RngSpec(13))
        assert abs(eps.var(ddof=1) - 31.0 / 3.0) <= 0.5

    def test_cauchy_median_not_mean(self):
        n = 100_000
        eps = gen_noise(NoiseModel.cauchy(), n, RngSpec(14))
        assert abs(np.median(eps)) <= 5 * (np.pi / 2) / np.sqrt(n)

    def test_t4_scaled_quartiles(self):
        # sqrt(2) * t_4 quartile: t_4 upper quartile is 0.7407
        n = 200_000
        eps = gen_noise(NoiseModel.t4_scaled(), n, RngSpec(15))
        q75 = np.quantile(eps, 0.75)
        assert q75 == pytest.approx(np.sqrt(2) * 0.7406971, abs=0.02)

    @pytest.mark.parametrize("model", ALL_NOISES, ids=lambda m: m.kind)
    def test_symmetry_at_zero(self, model):
        n = 100_000
        eps = gen_noise(model, n, RngSpec(16))
        frac = float(np.mean(eps <= 0.0))
        assert abs(frac - 0.5) <= 3 * 0.5 / np.sqrt(n)

    @pytest.mark.parametrize("model", ALL_NOISES, ids=lambda m: m.kind)
    def test_deterministic(self, model):
        a = gen_noise(model, 100, RngSpec(17, 5))
        b = gen_noise(model, 100, RngSpec(17, 5))
        assert np.array_equal(a, b)

    @pytest.mark.parametrize("model", ALL_NOISES, ids=lambda m: m.kind)
    def test_distributional_sign_flip(self, model):
        # eps and -eps share the same law: central quantiles mirror within a
        # Monte Carlo band (central ones so heavy tails stay out of play)
        n = 100_000
        eps = gen_noise(model, n, RngSpec(18))
        for q in (0.2, 0.35, 0.45):
            lo, hi = np.quantile(eps, q), np.quantile(eps, 1.0 - q)
            spread = hi - lo
            assert abs(lo + hi) <= 0.05 * max(spread, 1e-12) + 5e-3

    def test_parse(self):
        assert NoiseModel.parse("gauss:1.5") == NoiseModel.gauss(1.5)
        assert NoiseModel.parse("laplace:2") == NoiseModel.laplace(2.0)
        assert NoiseModel.parse("cauchy") == NoiseModel.cauchy()
        with pytest.raises(ValidationError):
            NoiseModel.parse("cauchy:2")


class TestMakeDataset:
    def test_zero_noise_hook(self):
        ds = make_dataset(30, 16, CovModel.identity(), None, RngSpec(20))
        assert np.allclose(ds.y, ds.X @ beta_star(16))

    def test_default_benchmark_shape(self):
        ds = make_dataset(100, 400, CovModel.identity(), NoiseModel.gauss(), RngSpec(21))
        assert (ds.n, ds.p) == (100, 400)
        assert ds.true_beta is not None

    def test_bit_identical_under_seed(self):
        a = make_dataset(25, 16, CovModel.ar1(0.5), NoiseModel.cauchy(), RngSpec(22))
        b = make_dataset(25, 16, CovModel.ar1(0.5), NoiseModel.cauchy(), RngSpec(22))
        assert a == b

    def test_csv_roundtrip(self, tmp_path):
        ds = make_dataset(12, 16, CovModel.identity(), NoiseModel.laplace(), RngSpec(23))
        path = tmp_path / "data.csv"
        write_dataset_csv(ds, path)
        back = read_dataset_csv(path)
        assert np.array_equal(back.y, ds.y)
        assert np.array_equal(back.X, ds.X)
