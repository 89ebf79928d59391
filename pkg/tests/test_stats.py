import numpy as np
import pytest
import statsmodels.api as sm
from hypothesis import given, settings, strategies as st

from bugnav.stats import (
    DegenerateSampleError,
    bootstrap_test,
    linear_regression,
    logistic_regression,
    perfectly_separated,
)


class TestBootstrap:
    def test_identical_constant_samples(self):
        assert bootstrap_test([3.0] * 5, [3.0] * 7) == 1.0

    def test_clear_difference_hits_the_floor(self):
        rng = np.random.default_rng(0)
        a = rng.normal(0, 1, 50)
        b = rng.normal(5, 1, 50)
        assert bootstrap_test(a, b, 999, np.random.default_rng(1)) == pytest.approx(1 / 1000)

    def test_equal_means_large_p(self):
        a = [1.0, 2.0, 3.0, 4.0]
        b = [4.0, 3.0, 2.0, 1.0]
        assert bootstrap_test(a, b, 2000, np.random.default_rng(2)) > 0.9

    def test_deterministic_given_rng(self):
        a, b = [1, 2, 3, 5], [2, 4, 6, 9]
        assert bootstrap_test(a, b, 500, np.random.default_rng(3)) == bootstrap_test(
            a, b, 500, np.random.default_rng(3)
        )

    def test_calibrated_under_null(self):
        rng = np.random.default_rng(4)
        ps = np.array(
            [bootstrap_test(rng.normal(size=30), rng.normal(size=30), 400, rng) for _ in range(300)]
        )
        # p-values are close to uniform when both samples share a distribution
        assert 0.02 <= np.mean(ps < 0.05) <= 0.09
        assert 0.42 <= np.mean(ps < 0.5) <= 0.58

    @pytest.mark.parametrize("a,b", [([1.0], [1.0, 2.0]), ([[1.0, 2.0]], [1.0, 2.0])])
    def test_bad_shapes(self, a, b):
        with pytest.raises(ValueError):
            bootstrap_test(a, b)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(-100, 100), min_size=2, max_size=20), st.lists(st.floats(-100, 100), min_size=2, max_size=20))
    def test_p_in_unit_interval(self, a, b):
        p = bootstrap_test(a, b, 200, np.random.default_rng(0))
        assert 0.0 < p <= 1.0


class TestLinear:
    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(3, 60))
    def test_normal_equations(self, seed, n):
        rng = np.random.default_rng(seed)
        x = rng.uniform(-5, 5, n)
        y = 2.0 - 0.7 * x + rng.normal(0, 1, n)
        if np.ptp(x) < 1e-6:
            return
        fit = linear_regression(x, y)
        X = np.column_stack([np.ones(n), x])
        beta = np.linalg.solve(X.T @ X, X.T @ y)
        assert fit.intercept == pytest.approx(beta[0], abs=1e-10)
        assert fit.slope == pytest.approx(beta[1], abs=1e-10)
        assert fit.r_squared == pytest.approx(np.corrcoef(x, y)[0, 1] ** 2, abs=1e-10)

    def test_exact_line(self):
        fit = linear_regression([0, 1, 2, 3], [1, 3, 5, 7])
        assert (fit.slope, fit.intercept, fit.r_squared) == pytest.approx((2.0, 1.0, 1.0))

    def test_constant_response(self):
        assert linear_regression([0, 1, 2], [4, 4, 4]).r_squared == 0.0

    def test_constant_x(self):
        with pytest.raises(DegenerateSampleError):
            linear_regression([1, 1, 1], [1, 2, 3])


def _statsmodels_fit(x, y):
    return sm.Logit(y, sm.add_constant(x)).fit(disp=0)


class TestLogistic:
    @pytest.mark.parametrize("seed", range(5))
    def test_matches_statsmodels(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.uniform(0, 6, 200)
        y = rng.random(200) < 1 / (1 + np.exp(-(1.5 - 0.6 * x)))
        ours = logistic_regression(x, y)
        ref = _statsmodels_fit(x, y.astype(float))
        assert ours.converged and not ours.separated
        assert ours.intercept == pytest.approx(ref.params[0], rel=1e-6)
        assert ours.coefficient == pytest.approx(ref.params[1], rel=1e-6)
        assert ours.se_intercept == pytest.approx(ref.bse[0], rel=1e-5)
        assert ours.se_coefficient == pytest.approx(ref.bse[1], rel=1e-5)
        assert ours.pseudo_r_squared == pytest.approx(ref.prsquared, rel=1e-6)
        assert ours.log_likelihood == pytest.approx(ref.llf, rel=1e-9)

    def test_recovers_coefficient(self):
        rng = np.random.default_rng(7)
        x = rng.uniform(0, 3, 5000)
        y = rng.random(5000) < 1 / (1 + np.exp(-(2.0 - 2.0 * x)))
        fit = logistic_regression(x, y)
        assert abs(fit.coefficient + 2.0) < 3 * fit.se_coefficient
        assert abs(fit.intercept - 2.0) < 3 * fit.se_intercept

    def test_separation_flagged(self):
        x = np.arange(12.0)
        y = x >= 6
        assert perfectly_separated(x, y)
        fit = logistic_regression(x, y)
        assert fit.separated and not fit.converged
        assert fit.coefficient > 0

    def test_overlap_not_separated(self):
        x = np.arange(12.0)
        y = x >= 6
        y[2] = True
        assert not perfectly_separated(x, y)
        assert not logistic_regression(x, y).separated

    @pytest.mark.parametrize(
        "x,y,err",
        [
            (np.arange(5.0), [0, 1, 0, 1, 0], ValueError),
            (np.arange(12.0), [1] * 12, DegenerateSampleError),
            (np.ones(12), [0, 1] * 6, DegenerateSampleError),
            (np.arange(12.0), [0, 2] * 6, ValueError),
        ],
    )
    def test_rejects(self, x, y, err):
        with pytest.raises(err):
            logistic_regression(x, y)
