import numpy as np
import pytest

from streamfdr.schedules import make_log_power, make_power_law, make_shifted_log
from streamfdr.theory import (
    AlternativeModel,
    RateBoundParams,
    alt_cdf,
    alt_cdf_lower_bound,
    lond_rate_bound,
    lord_rate,
    marginal_cdf,
    normal_cdf,
    normal_quantile,
    t_cdf,
)


class ConstantHazardSchedule:
    """Stub schedule with beta_l = g for every l, so the inter-discovery
    time is geometric and the discovery rate has a closed form."""

    horizon = None

    def __init__(self, g):
        self.g = float(g)

    def eval(self, ell):
        return np.full(np.shape(ell), self.g)


class TestNormal:
    def test_center(self):
        assert normal_cdf(0.0) == 0.5

    def test_symmetry(self):
        xs = np.linspace(-6.0, 6.0, 101)
        assert np.allclose(normal_cdf(xs) + normal_cdf(-xs), 1.0, atol=1e-15)

    def test_two_sided_critical_value(self):
        # Reference value computed by adaptive quadrature of the density.
        assert normal_cdf(-1.959964) == pytest.approx(
            0.02499999909644235, abs=1e-12
        )

    def test_quantile_domain(self):
        for bad in (0.0, 1.0, -0.5, 2.0):
            with pytest.raises(ValueError):
                normal_quantile(bad)

    def test_quantile_inverts_cdf(self):
        xs = np.linspace(-6.0, 6.0, 201)
        back = normal_quantile(normal_cdf(xs))
        assert np.max(np.abs(back - xs)) < 1e-6

    def test_array_and_scalar_agree(self):
        xs = np.array([-2.0, 0.0, 1.5])
        batch = normal_cdf(xs)
        for i, x in enumerate(xs):
            assert normal_cdf(float(x)) == batch[i]


class TestStudentT:
    def test_center(self):
        assert t_cdf(0.0, 5) == 0.5

    def test_single_df_is_cauchy(self):
        ts = np.linspace(-30.0, 30.0, 401)
        expected = 0.5 + np.arctan(ts) / np.pi
        assert np.max(np.abs(t_cdf(ts, 1) - expected)) <= 1e-9

    def test_large_df_close_to_normal(self):
        # The gap to the normal shrinks like 1/df; at df=400 it is ~3.5e-4.
        xs = np.linspace(-4.0, 4.0, 81)
        assert np.max(np.abs(t_cdf(xs, 400) - normal_cdf(xs))) <= 5e-4

    def test_df_domain(self):
        with pytest.raises(ValueError):
            t_cdf(1.0, 0.5)
        assert 0.0 < t_cdf(1.0, 2.5) < 1.0


class TestAlternativeCdf:
    def test_zero_shift_is_uniform(self):
        model = AlternativeModel(mu=0.0, epsilon=1.0)
        nus = np.array([1e-6, 0.01, 0.05, 0.3, 0.9])
        assert np.allclose(alt_cdf(nus, model), nus, rtol=1e-12)

    def test_endpoints(self):
        model = AlternativeModel(mu=3.0, epsilon=1.0)
        assert alt_cdf(0.0, model) == 0.0
        assert alt_cdf(1.0, model) == pytest.approx(1.0, abs=1e-12)

    def test_reference_value(self):
        # F(0.05) for a unit-variance shift of 3, from direct evaluation of
        # the two-tail formula in extended precision.
        model = AlternativeModel(mu=3.0, epsilon=1.0)
        assert alt_cdf(0.05, model) == pytest.approx(
            0.8508387683270563, rel=1e-12
        )

    def test_sign_symmetric_in_shift(self):
        nus = np.linspace(0.001, 0.999, 50)
        up = alt_cdf(nus, AlternativeModel(mu=2.5, epsilon=1.0))
        down = alt_cdf(nus, AlternativeModel(mu=-2.5, epsilon=1.0))
        assert np.allclose(up, down, rtol=1e-14)

    def test_dominates_uniform(self):
        nus = np.linspace(0.0, 1.0, 101)
        for mu in (0.5, 2.0, 4.0):
            vals = alt_cdf(nus, AlternativeModel(mu=mu, epsilon=1.0))
            assert np.all(vals >= nus - 1e-15)
            assert np.all(np.diff(vals) >= 0)

    def test_domain(self):
        model = AlternativeModel(mu=1.0, epsilon=1.0)
        with pytest.raises(ValueError):
            alt_cdf(-0.01, model)
        with pytest.raises(ValueError):
            alt_cdf(1.01, model)

    def test_exceeds_closed_form_lower_bound(self):
        # The bound applies once the two-sided quantile of nu clears
        # sqrt(log(2/nu)); tiny nu satisfies that comfortably.
        nus = np.array([1e-6, 1e-5, 1e-4])
        for nu in nus:
            zeta = -normal_quantile(nu / 2.0)
            assert zeta > np.sqrt(np.log(2.0 / nu))
        for mu in (1.0, 3.0, 5.0):
            model = AlternativeModel(mu=mu, epsilon=1.0)
            assert np.all(alt_cdf(nus, model) >= alt_cdf_lower_bound(nus, model))

    def test_lower_bound_domain(self):
        model = AlternativeModel(mu=1.0, epsilon=1.0)
        with pytest.raises(ValueError):
            alt_cdf_lower_bound(0.0, model)


class TestMarginalCdf:
    def test_endpoints(self):
        model = AlternativeModel(mu=3.0, epsilon=0.1)
        assert marginal_cdf(0.0, model) == 0.0
        assert marginal_cdf(1.0, model) == pytest.approx(1.0, abs=1e-12)

    def test_pure_null_is_identity(self):
        model = AlternativeModel(mu=3.0, epsilon=0.0)
        xs = np.linspace(0.0, 1.0, 11)
        assert np.array_equal(marginal_cdf(xs, model), xs)

    def test_pure_signal_is_alternative(self):
        model = AlternativeModel(mu=3.0, epsilon=1.0)
        xs = np.linspace(0.0, 1.0, 11)
        assert np.allclose(marginal_cdf(xs, model), alt_cdf(xs, model), rtol=1e-14)

    def test_mixture_between_components(self):
        model = AlternativeModel(mu=3.0, epsilon=0.3)
        xs = np.linspace(0.01, 0.99, 21)
        vals = marginal_cdf(xs, model)
        assert np.all(vals >= xs)
        assert np.all(vals <= alt_cdf(xs, model) + 1e-15)
        assert np.all(np.diff(vals) > 0)

    def test_model_validation(self):
        with pytest.raises(ValueError):
            AlternativeModel(mu=np.inf, epsilon=0.5)
        with pytest.raises(ValueError):
            AlternativeModel(mu=1.0, epsilon=-0.1)
        with pytest.raises(ValueError):
            AlternativeModel(mu=1.0, epsilon=1.1)
        AlternativeModel(mu=1.0, epsilon=0.0)
        AlternativeModel(mu=1.0, epsilon=1.0)


class TestDiscoveryRate:
    def test_constant_hazard_closed_form(self):
        model = AlternativeModel(mu=0.0, epsilon=0.0)
        for g in (0.5, 0.1, 0.01, 0.001):
            rate = lord_rate(ConstantHazardSchedule(g), model)
            assert rate == pytest.approx(1.0 - np.exp(-g), rel=1e-9)

    def test_reference_value(self):
        # Frozen from an independent renewal-series evaluation of the same
        # sparse-signal setting used by the growth acceptance run.
        sched = make_shifted_log(0.05, 2.0)
        model = AlternativeModel(mu=4.0, epsilon=0.1)
        assert lord_rate(sched, model) == pytest.approx(
            0.060397362712057444, rel=1e-9
        )

    def test_rate_in_unit_interval(self):
        sched = make_log_power(0.05, 2.0)
        for mu, eps in ((3.0, 0.05), (4.0, 0.1), (5.0, 0.5)):
            rate = lord_rate(sched, AlternativeModel(mu=mu, epsilon=eps))
            assert 0.0 < rate <= 1.0

    def test_null_model_raises_instead_of_stalling(self, monkeypatch):
        # Under the null the spent thresholds sum to alpha, so a positive
        # fraction of renewal intervals never terminate and the mean gap is
        # infinite. The series must refuse rather than return a bogus rate.
        import streamfdr.theory as theory

        monkeypatch.setattr(theory, "_RATE_CAP", 1 << 20)
        sched = make_log_power(0.05, 2.0)
        with pytest.raises(RuntimeError, match="did not converge"):
            lord_rate(sched, AlternativeModel(mu=0.0, epsilon=0.0))

    def test_truncation_tolerance_invariance(self):
        sched = make_log_power(0.05, 2.0)
        model = AlternativeModel(mu=3.0, epsilon=0.05)
        a = lord_rate(sched, model, rel_stop=1e-12)
        b = lord_rate(sched, model, rel_stop=1e-10)
        assert a == pytest.approx(b, rel=1e-9)

    def test_finite_horizon_rejected(self):
        sched = make_power_law(0.05, 2.0, horizon=1000)
        with pytest.raises(ValueError):
            lord_rate(sched, AlternativeModel(mu=3.0, epsilon=0.1))

    def test_monotone_in_signal_strength(self):
        sched = make_log_power(0.05, 2.0)
        rates = [
            lord_rate(sched, AlternativeModel(mu=mu, epsilon=0.1))
            for mu in (3.0, 4.0, 5.0)
        ]
        assert np.all(np.diff(rates) > 0)

    def _survival(self, sched, model, k_max=1 << 17):
        # P(T > k) = exp(-sum_{l<=k} G(beta_l)), computed in one fixed-window
        # cumulative sum rather than the adaptive chunked loop under test.
        hazards = marginal_cdf(sched.eval(np.arange(1, k_max + 1)), model)
        surv = np.exp(-np.cumsum(hazards))
        assert surv[-1] < 1e-12
        return surv

    def test_renewal_consistency_exact_mean(self):
        # The reciprocal of the rate must equal the renewal mean
        # sum_{k>=0} P(T > k), evaluated directly from the hazards.
        sched = make_log_power(0.05, 2.0)
        model = AlternativeModel(mu=4.0, epsilon=0.1)
        surv = self._survival(sched, model)
        mean_gap = 1.0 + float(np.sum(surv))
        rate = lord_rate(sched, model)
        assert rate * mean_gap == pytest.approx(1.0, rel=1e-6)

    def test_renewal_consistency_simulated(self):
        # One million simulated inter-discovery gaps, drawn by inverting the
        # renewal CDF, land within 1% of the reciprocal rate.
        sched = make_log_power(0.05, 2.0)
        model = AlternativeModel(mu=4.0, epsilon=0.1)
        surv = self._survival(sched, model)
        cdf = 1.0 - surv
        rng = np.random.default_rng(314159)
        u = rng.random(1_000_000) * cdf[-1]
        gaps = np.searchsorted(cdf, u, side="right") + 1
        rate = lord_rate(sched, model)
        assert 1.0 / gaps.mean() == pytest.approx(rate, rel=0.01)


class TestGrowthBound:
    def test_exponent_formula(self):
        params = RateBoundParams(lam=1.0, kappa=0.5, nu=1.5, c_tilde=2.0,
                                 delta=0.05)
        assert params.exponent == pytest.approx(0.5, rel=1e-15)
        steep = RateBoundParams(lam=1.0, kappa=0.25, nu=1.1, c_tilde=2.0,
                                delta=0.05)
        assert steep.exponent == pytest.approx((1 - 0.275) / 0.75, rel=1e-15)

    def test_unit_ratio(self):
        params = RateBoundParams(lam=1.0, kappa=0.5, nu=1.5, c_tilde=2.0,
                                 delta=0.25)
        assert lond_rate_bound(params, 8) == 1.0

    def test_square_root_growth(self):
        params = RateBoundParams(lam=1.0, kappa=0.5, nu=1.5, c_tilde=1.0,
                                 delta=0.01)
        assert lond_rate_bound(params, 10**6) == pytest.approx(100.0, rel=1e-12)
        assert lond_rate_bound(params, 4 * 10**6) == pytest.approx(
            2.0 * lond_rate_bound(params, 10**6), rel=1e-12
        )

    def test_sublinear(self):
        params = RateBoundParams(lam=1.0, kappa=0.5, nu=1.2, c_tilde=1.0,
                                 delta=0.05)
        for n in (10**3, 10**5, 10**7):
            assert lond_rate_bound(params, n) < n

    def test_parameter_domains(self):
        good = dict(lam=1.0, kappa=0.5, nu=1.5, c_tilde=2.0, delta=0.05)
        for field, bad in (
            ("lam", 0.0),
            ("kappa", 0.0),
            ("kappa", 1.0),
            ("nu", 1.0),
            ("nu", 2.0),   # at 1/kappa
            ("nu", 2.5),
            ("c_tilde", 0.0),
            ("delta", 0.0),
            ("delta", 1.0),
        ):
            with pytest.raises(ValueError):
                RateBoundParams(**{**good, field: bad})
        with pytest.raises(ValueError):
            lond_rate_bound(RateBoundParams(**good), 0)
