import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from cursed_auctions.signals import (
    DiscreteGridIID,
    RandomStream,
    SignalSpace,
    UniformIID,
    UnsupportedMarginalError,
    sample_profiles,
)
from cursed_auctions.valuations import (
    ConcaveSum,
    MaxSignal,
    ScalarMap,
    WeightedSum,
    check_cursedness_monotonicity,
    check_single_crossing,
    cursed_value,
    cursed_virtual_value,
    identity_map,
    interim_value,
    log1p_scaled_map,
    make_interim_cache,
    model_from_config,
    power_map,
    value,
)


def wallet_cache():
    return make_interim_cache(SignalSpace(2, UniformIID(100.0)), WeightedSum(1.0))


class TestValue:
    def test_wallet_sum(self):
        assert value(WeightedSum(1.0), np.array([30.0, 15.0]), 0) == 45.0

    def test_max_signal(self):
        prof = np.array([0.2, 0.7, 0.4])
        for i in range(3):
            assert value(MaxSignal(), prof, i) == 0.7

    def test_weighted_sum_beta_half(self):
        np.testing.assert_allclose(value(WeightedSum(0.5), np.array([0.5, 0.2, 0.2]), 0), 0.7)

    def test_batch_rows(self):
        profs = np.array([[30.0, 15.0], [10.0, 20.0]])
        np.testing.assert_allclose(value(WeightedSum(1.0), profs, 0), [45.0, 30.0])

    def test_concave_sum(self):
        model = ConcaveSum(l=log1p_scaled_map(2.0), g=identity_map(), h=power_map(2.0))
        got = value(model, np.array([0.5, 0.3, 0.4]), 0)
        np.testing.assert_allclose(got, 2.0 * np.log1p(0.5 + 0.09 + 0.16))

    def test_zero_profile_normalized(self):
        for model in (WeightedSum(0.7), MaxSignal(), ConcaveSum(log1p_scaled_map(), identity_map(), identity_map())):
            assert value(model, np.zeros(3), 0) == 0.0


class TestInterim:
    def test_wallet_mu(self):
        assert interim_value(wallet_cache(), 30.0) == 80.0

    def test_weighted_sum_closed_form_tight(self):
        cache = make_interim_cache(SignalSpace(3, UniformIID(1.0)), WeightedSum(0.5))
        np.testing.assert_allclose(interim_value(cache, 0.5), 1.0, atol=1e-9)

    def test_max_signal_against_quadrature(self):
        cache = make_interim_cache(SignalSpace(2, UniformIID(1.0)), MaxSignal())
        oracle, _ = integrate.quad(lambda t: max(t, 0.5), 0.0, 1.0)
        np.testing.assert_allclose(interim_value(cache, 0.5), oracle, atol=1e-4)
        np.testing.assert_allclose(interim_value(cache, 0.5), 0.625, atol=1e-4)

    @pytest.mark.parametrize("n", [2, 3, 5])
    def test_max_signal_closed_form_family(self, n):
        cache = make_interim_cache(SignalSpace(n, UniformIID(1.0)), MaxSignal())
        s = np.linspace(0.0, 1.0, 9)
        np.testing.assert_allclose(
            cache.expected_value(s), (n - 1) / n + s**n / n, atol=1e-4
        )

    def test_mu_dominates_value_at_zero_others(self):
        for model in (WeightedSum(0.5), MaxSignal(), ConcaveSum(log1p_scaled_map(), identity_map(), identity_map())):
            space = SignalSpace(3, UniformIID(1.0))
            cache = make_interim_cache(space, model)
            s = np.linspace(0.0, 1.0, 33)
            zeros = np.zeros((33, 2))
            v_alone = np.array([value(model, np.concatenate(([x], z)), 0) for x, z in zip(s, zeros)])
            assert np.all(cache.expected_value(s) >= v_alone - 1e-9)

    def test_mu_monotone(self):
        for model in (MaxSignal(), ConcaveSum(log1p_scaled_map(), identity_map(), identity_map())):
            cache = make_interim_cache(SignalSpace(3, UniformIID(1.0)), model)
            mu = cache.expected_value(np.linspace(0, 1, 257))
            assert np.all(np.diff(mu) >= -1e-12)

    def test_concave_sum_grid_enumeration_matches_direct(self):
        space = SignalSpace(3, DiscreteGridIID(points=(0.0, 0.5, 1.0)))
        model = ConcaveSum(l=log1p_scaled_map(), g=identity_map(), h=identity_map())
        cache = make_interim_cache(space, model)
        pts = [0.0, 0.5, 1.0]
        direct = np.mean([np.log1p(0.5 + a + b) for a in pts for b in pts])
        np.testing.assert_allclose(cache.expected_value(0.5), direct, rtol=1e-12)


class TestCursedValue:
    def test_chi_zero_is_exact_identity(self):
        cache = wallet_cache()
        profiles = sample_profiles(cache.space, RandomStream(5), 200)
        v = value(cache.model, profiles, 0)
        assert np.array_equal(cursed_value(cache, 0.0, profiles, 0), v)

    def test_fully_cursed_ignores_others(self):
        cache = wallet_cache()
        assert cursed_value(cache, 1.0, np.array([30.0, 90.0]), 0) == 80.0
        assert cursed_value(cache, 1.0, np.array([30.0, 5.0]), 0) == 80.0

    def test_halfway(self):
        cache = wallet_cache()
        np.testing.assert_allclose(cursed_value(cache, 0.5, np.array([30.0, 90.0]), 0), 100.0)

    def test_chi_domain_error(self):
        cache = wallet_cache()
        with pytest.raises(ValueError):
            cursed_value(cache, 1.2, np.array([30.0, 90.0]), 0)

    def test_monotone_in_all_signals(self):
        cache = make_interim_cache(SignalSpace(3, UniformIID(1.0)), WeightedSum(0.5))
        profiles = sample_profiles(cache.space, RandomStream(9), 100)
        base = cursed_value(cache, 0.6, profiles, 0)
        for j in range(3):
            bumped = profiles.copy()
            bumped[:, j] = np.minimum(1.0, bumped[:, j] + 1e-4)
            moved = cursed_value(cache, 0.6, bumped, 0)
            assert np.all(moved >= base - 1e-12)
            if j == 0:
                changed = bumped[:, 0] > profiles[:, 0]
                assert np.all(moved[changed] > base[changed])

    @settings(max_examples=60, deadline=None)
    @given(
        st.floats(0.01, 1.0),
        st.floats(0.01, 1.0),
        st.lists(st.floats(0.0, 1.0), min_size=2, max_size=2),
        st.floats(0.0, 1.0),
    )
    def test_overestimation_sign_is_chi_free(self, chi1, chi2, others, s_own):
        cache = make_interim_cache(SignalSpace(3, UniformIID(1.0)), WeightedSum(0.5))
        prof = np.array([s_own] + others)
        v = value(cache.model, prof, 0)
        d1 = v - cursed_value(cache, chi1, prof, 0)
        d2 = v - cursed_value(cache, chi2, prof, 0)
        assert np.sign(d1) == np.sign(d2)


class TestCursedVirtualValue:
    def test_rational_uniform_closed_form(self):
        cache = make_interim_cache(SignalSpace(2, UniformIID(1.0)), WeightedSum(1.0))
        got = cursed_virtual_value(cache, 0.0, 0.5, np.array([0.5]))
        np.testing.assert_allclose(got, 0.5)  # 2 s + s_other - 1

    def test_fully_cursed_closed_form(self):
        cache = make_interim_cache(SignalSpace(2, UniformIID(1.0)), WeightedSum(1.0))
        got = cursed_virtual_value(cache, 1.0, 0.25, np.array([0.9]))
        np.testing.assert_allclose(got, 0.0, atol=1e-12)  # 2 s - 0.5

    def test_max_signal_highest(self):
        cache = make_interim_cache(SignalSpace(2, UniformIID(1.0)), MaxSignal())
        got = cursed_virtual_value(cache, 0.0, 0.5, np.array([0.2]))
        np.testing.assert_allclose(got, 0.0, atol=1e-4)

    def test_finite_difference_matches_analytic_slope(self):
        cache = make_interim_cache(SignalSpace(2, UniformIID(1.0)), WeightedSum(1.0))
        chi, s, other = 0.7, 0.4, 0.3
        h = 1e-5
        vchi = lambda t: cursed_value(cache, chi, np.array([t, other]), 0)
        fd = (vchi(s + h) - vchi(s - h)) / (2 * h)
        np.testing.assert_allclose(fd, 1.0, atol=1e-6)

    def test_density_free_marginal_rejected(self):
        cache = make_interim_cache(SignalSpace(2, DiscreteGridIID(points=(0.0, 1.0))), WeightedSum(1.0))
        with pytest.raises(UnsupportedMarginalError):
            cursed_virtual_value(cache, 0.5, 0.0, np.array([1.0]))


class TestStructuralChecks:
    def test_single_crossing_weighted_sum(self):
        rep = check_single_crossing(WeightedSum(0.5), SignalSpace(3, UniformIID(1.0)), 10_000, RandomStream(7))
        assert rep.passed

    def test_single_crossing_max_signal(self):
        rep = check_single_crossing(MaxSignal(), SignalSpace(3, UniformIID(1.0)), 10_000, RandomStream(7))
        assert rep.passed

    def test_single_crossing_negative_control(self):
        rep = check_single_crossing(WeightedSum(1.5), SignalSpace(3, UniformIID(1.0)), 10_000, RandomStream(7))
        assert not rep.passed
        assert rep.witnesses, "a failing check must carry a witness"

    def test_cursedness_monotonicity_analytic_families(self):
        for model in (WeightedSum(0.5), MaxSignal()):
            cache = make_interim_cache(SignalSpace(3, UniformIID(1.0)), model)
            rep = check_cursedness_monotonicity(cache, 0.5)
            assert rep.passed and rep.note == "analytic"

    def test_cursedness_monotonicity_concave_sum_empirical(self):
        cache = make_interim_cache(
            SignalSpace(3, UniformIID(1.0)),
            ConcaveSum(l=log1p_scaled_map(1.0), g=identity_map(), h=identity_map()),
        )
        rep = check_cursedness_monotonicity(cache, 1.0, sample_count=10_000, stream=RandomStream(11))
        assert rep.samples_checked == 10_000
        assert rep.passed  # frozen verdict for this instance and stream
        again = check_cursedness_monotonicity(cache, 1.0, sample_count=10_000, stream=RandomStream(11))
        assert again.max_violation == rep.max_violation

    def test_cursedness_monotonicity_needs_positive_chi(self):
        cache = wallet_cache()
        with pytest.raises(ValueError):
            check_cursedness_monotonicity(cache, 0.0)


class TestModelValidation:
    def test_beta_positive(self):
        with pytest.raises(ValueError):
            WeightedSum(0.0)

    def test_outer_map_must_be_concave(self):
        with pytest.raises(ValueError):
            ConcaveSum(l=power_map(2.0), g=identity_map(), h=identity_map())

    def test_scalar_map_catalogue_closed(self):
        with pytest.raises(ValueError):
            ScalarMap("exp", ())

    def test_config_round_trip(self):
        for model in (
            WeightedSum(0.5),
            MaxSignal(),
            ConcaveSum(log1p_scaled_map(2.0), identity_map(), power_map(0.5)),
        ):
            assert model_from_config(model.to_config()) == model
        with pytest.raises(ValueError):
            model_from_config({"family": "weighted_sum", "beta": 0.5, "oops": 1})
