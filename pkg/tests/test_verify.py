import numpy as np
import pytest

from cursed_auctions.mechanisms import (
    GVARule,
    Mechanism,
    critical_bid,
    make_context,
    masked_gva,
    revenue_optimal_rule,
    run,
)
from cursed_auctions.signals import RandomStream, SignalSpace, UniformIID, sample_profiles
from cursed_auctions.testing import (
    IntervalAllocationMechanism,
    LoserSurchargeMechanism,
    RealizedPriceMechanism,
)
from cursed_auctions.valuations import WeightedSum, cursed_value
from cursed_auctions.verify import (
    SamplingPlan,
    check_allocation_monotone,
    check_cepic,
    check_cepir,
    check_chi_robustness,
    check_epbb,
    check_epir,
    check_no_positive_transfers,
    check_payment_chi_monotone,
)

PLAN = SamplingPlan(profile_count=1500, deviation_grid_size=41, stream=RandomStream(2024))


@pytest.fixture(scope="module")
def ctx():
    return make_context(SignalSpace(3, UniformIID(1.0)), WeightedSum(0.5))


@pytest.fixture(scope="module")
def wallet_ctx():
    return make_context(SignalSpace(2, UniformIID(100.0)), WeightedSum(1.0))


class TestCepic:
    def test_masked_gva_passes(self, wallet_ctx):
        rep = check_cepic(masked_gva(wallet_ctx, 1.0), wallet_ctx, PLAN)
        assert rep.passed and rep.max_violation <= rep.tolerance

    def test_revenue_optimal_passes(self, ctx):
        mech = Mechanism(revenue_optimal_rule(ctx, 1.0), 1.0, "compensated")
        rep = check_cepic(mech, ctx, PLAN)
        assert rep.passed

    def test_realized_price_control_fails_with_witness(self, ctx):
        broken = RealizedPriceMechanism(GVARule(), 1.0, "compensated")
        rep = check_cepic(broken, ctx, PLAN)
        assert not rep.passed
        assert rep.witnesses and "deviation" in rep.witnesses[0]

    def test_truthful_utility_two_ways(self, ctx):
        mech = Mechanism(GVARule(), 0.63, "compensated")
        profiles = sample_profiles(ctx.space, RandomStream(3), 100)
        for row in profiles[:30]:
            out = run(mech, row, ctx)
            for i in range(3):
                won = out.winner == i
                direct = won * cursed_value(ctx.interim, 0.63, row, i) - out.payments[i]
                # identical algebra, evaluated without the executed outcome
                t_i = critical_bid(mech.rule, np.delete(row, i), ctx)
                if row[i] > t_i:
                    p_i = out.payments[i]
                    alg = cursed_value(ctx.interim, 0.63, row, i) - p_i
                else:
                    alg = -out.compensations[i]
                np.testing.assert_allclose(direct, alg, atol=1e-12)


class TestEpir:
    def test_compensated_gva_passes(self, ctx):
        rep = check_epir(Mechanism(GVARule(), 1.0, "compensated"), ctx, PLAN)
        assert rep.passed

    def test_zero_transfer_control_fails(self, ctx):
        rep = check_epir(Mechanism(GVARule(), 1.0, "zero-transfer"), ctx, PLAN)
        assert not rep.passed
        assert rep.witnesses

    def test_rational_zero_transfer_passes(self, ctx):
        rep = check_epir(Mechanism(GVARule(), 0.0, "zero-transfer"), ctx, PLAN)
        assert rep.passed


class TestCepir:
    def test_compensated_gva_any_chi(self, ctx):
        for chi in (0.0, 0.63, 1.0):
            rep = check_cepir(Mechanism(GVARule(), chi, "compensated"), ctx, PLAN)
            assert rep.passed

    def test_masked_gva(self, ctx):
        assert check_cepir(masked_gva(ctx, 1.0), ctx, PLAN).passed

    def test_loser_surcharge_control_fails(self, ctx):
        rep = check_cepir(LoserSurchargeMechanism(GVARule(), 0.5, "compensated"), ctx, PLAN)
        assert not rep.passed


class TestBudget:
    def test_masked_gva_budget_balanced(self, ctx):
        assert check_epbb(masked_gva(ctx, 1.0), ctx, PLAN).passed

    def test_unmasked_compensated_gva_fails(self, ctx):
        rep = check_epbb(Mechanism(GVARule(), 1.0, "compensated"), ctx, PLAN)
        assert not rep.passed
        assert rep.witnesses

    def test_rational_always_balanced(self, ctx):
        assert check_epbb(Mechanism(GVARule(), 0.0, "compensated"), ctx, PLAN).passed

    def test_no_positive_transfers(self, ctx):
        assert check_no_positive_transfers(masked_gva(ctx, 1.0), ctx, PLAN).passed
        rep = check_no_positive_transfers(Mechanism(GVARule(), 1.0, "compensated"), ctx, PLAN)
        assert not rep.passed

    def test_npt_implies_epbb_on_same_samples(self, ctx):
        # sum of non-negative payments: whenever npt passes, epbb must pass too
        for mech in (masked_gva(ctx, 1.0), Mechanism(GVARule(), 0.0, "compensated")):
            npt = check_no_positive_transfers(mech, ctx, PLAN)
            epbb = check_epbb(mech, ctx, PLAN)
            if npt.passed:
                assert epbb.passed


class TestAllocationMonotone:
    def test_threshold_mechanisms_pass(self, ctx):
        for mech in (
            masked_gva(ctx, 1.0),
            Mechanism(revenue_optimal_rule(ctx, 0.63), 0.63, "compensated"),
        ):
            assert check_allocation_monotone(mech, ctx, PLAN).passed

    def test_interval_control_fails(self, ctx):
        rep = check_allocation_monotone(
            IntervalAllocationMechanism(GVARule(), 0.5, "compensated"), ctx, PLAN
        )
        assert not rep.passed
        assert rep.witnesses

    def test_masked_max_signal_vacuous_pass(self):
        from cursed_auctions.valuations import MaxSignal

        mctx = make_context(SignalSpace(3, UniformIID(1.0)), MaxSignal())
        assert check_allocation_monotone(masked_gva(mctx, 0.5), mctx, PLAN).passed


class TestChiRobustness:
    def test_masked_gva_bound(self):
        ctx2 = make_context(SignalSpace(2, UniformIID(1.0)), WeightedSum(1.0))
        mech = masked_gva(ctx2, 0.5)
        rep = check_chi_robustness(mech, ctx2, [0.1], PLAN)
        assert rep.passed  # bound is eps * v(s_bar, s_bar) = 0.2

    def test_eps_zero_collapses_to_cepic(self):
        ctx2 = make_context(SignalSpace(2, UniformIID(1.0)), WeightedSum(1.0))
        mech = masked_gva(ctx2, 0.5)
        rep = check_chi_robustness(mech, ctx2, [0.0], PLAN)
        assert rep.passed and rep.max_violation <= rep.tolerance

    def test_large_eps_loose_bound(self):
        ctx2 = make_context(SignalSpace(2, UniformIID(1.0)), WeightedSum(1.0))
        mech = masked_gva(ctx2, 0.5)
        assert check_chi_robustness(mech, ctx2, [0.5], PLAN).passed

    def test_out_of_range_eps_rejected(self):
        ctx2 = make_context(SignalSpace(2, UniformIID(1.0)), WeightedSum(1.0))
        with pytest.raises(ValueError):
            check_chi_robustness(masked_gva(ctx2, 0.5), ctx2, [0.6], PLAN)


class TestPaymentChiMonotone:
    def test_fixed_rule_pointwise(self, ctx):
        rep = check_payment_chi_monotone(GVARule(), ctx, [0.0, 0.25, 0.5, 0.75, 1.0], PLAN)
        assert rep.passed

    def test_mean_revenue_monotone_exactly(self, ctx):
        from cursed_auctions.mechanisms import run_batch

        profiles = sample_profiles(ctx.space, PLAN.stream, PLAN.profile_count)
        means = [
            run_batch(Mechanism(GVARule(), c, "compensated"), profiles, ctx).revenue.sum()
            for c in (0.0, 0.25, 0.5, 0.75, 1.0)
        ]
        assert all(b <= a for a, b in zip(means, means[1:]))

    def test_equal_chis_equal_payments(self, ctx):
        rep = check_payment_chi_monotone(GVARule(), ctx, [0.5, 0.5], PLAN)
        assert rep.max_violation <= 1e-12

    def test_unsorted_grid_rejected(self, ctx):
        with pytest.raises(ValueError):
            check_payment_chi_monotone(GVARule(), ctx, [0.5, 0.25], PLAN)


def test_checker_determinism(ctx):
    mech = masked_gva(ctx, 1.0)
    a = check_cepic(mech, ctx, PLAN)
    b = check_cepic(mech, ctx, PLAN)
    assert a.max_violation == b.max_violation
    assert a.samples_checked == b.samples_checked


def test_report_json_round_trip(ctx):
    import json

    rep = check_epir(Mechanism(GVARule(), 1.0, "zero-transfer"), ctx, PLAN)
    payload = json.loads(json.dumps(rep.to_json()))
    assert payload["passed"] == rep.passed
    assert payload["witnesses"]
