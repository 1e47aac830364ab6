import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from seqquant.asymptotics import (
    Dominance,
    PriorRegime,
    PriorInterval,
    alternating_comparison,
    asymmetry_interval,
    blockwise_coefficient,
    classify_prior,
    cost_coefficient,
    crossover_ratio,
    dominance,
    multisensor_coefficients,
    optimal_errors,
    prior1_from_ratio,
    rationalize_mixture,
    wald_cost,
)
from seqquant.errors import AssumptionViolated, DegenerateChannel, DomainError, NotFound, NotRandomized, RegimeError
from seqquant.models import InducedChannel, binary_kl, mix_channels

# Divergences of the three-point example computed independently with math.log
D0A = 0.8 * math.log(0.8 * 3) + 0.2 * math.log(0.2 * 1.5)
D1A = (1 / 3) * math.log((1 / 3) / 0.8) + (2 / 3) * math.log((2 / 3) / 0.2)
D0B = 0.9999 * math.log(0.9999 * 1.5) + 0.0001 * math.log(0.0001 * 3)
D1B = (2 / 3) * math.log((2 / 3) / 0.9999) + (1 / 3) * math.log((1 / 3) / 0.0001)


def binary_channel(p0, p1, name=""):
    return InducedChannel([p0, 1 - p0], [p1, 1 - p1], name)


def ordered_pairs():
    """Channel pairs with the first having smaller D0 and larger D1."""

    def build(t):
        a = binary_channel(t[0], t[1])
        b = binary_channel(t[2], t[3])
        if a.d0 < b.d0 and a.d1 > b.d1:
            return a, b
        if b.d0 < a.d0 and b.d1 > a.d1:
            return b, a
        return None

    return (
        st.tuples(*[st.floats(0.02, 0.98)] * 4)
        .filter(lambda t: abs(t[0] - t[1]) > 0.05 and abs(t[2] - t[3]) > 0.05)
        .map(build)
        .filter(lambda x: x is not None)
    )


class TestWaldCost:
    def test_half_half(self):
        assert wald_cost(0.5, 0.5, 0.01, 0.3, 1.0, 2.0) == pytest.approx(0.5)

    def test_symmetric_collapse(self):
        c, D, a = 0.01, 0.7, 0.03
        assert wald_cost(a, a, c, 0.5, D, D) == pytest.approx(c * binary_kl(a, 1 - a) / D + a, rel=1e-13)

    def test_design_b_formula(self):
        c, p1, a, b = 0.01, 0.08, 0.01, 0.01
        p0 = 1 - p1
        da = a * math.log(a / (1 - b)) + (1 - a) * math.log((1 - a) / b)
        db = (1 - b) * math.log((1 - b) / a) + b * math.log(b / (1 - a))
        expected = c * p0 * da / D0B + c * p1 * db / D1B + p0 * a + p1 * b
        assert wald_cost(a, b, c, p1, D0B, D1B) == pytest.approx(expected, rel=1e-12)

    def test_zero_error_estimate_is_infinite(self):
        assert wald_cost(0.0, 0.1, 0.01, 0.5, 1.0, 1.0) == math.inf

    @pytest.mark.parametrize("args", [(0.6, 0.6, 0.01, 0.5, 1, 1), (0.1, 0.1, 0.0, 0.5, 1, 1), (0.1, 0.1, 0.01, 0.5, 0, 1), (0.1, 0.1, 0.01, 1.0, 1, 1)])
    def test_domain(self, args):
        with pytest.raises(DomainError):
            wald_cost(*args)


class TestOptimalErrors:
    def test_symmetric(self):
        assert optimal_errors(0.01, 0.5, 1.0, 1.0) == pytest.approx((0.01, 0.01))

    def test_design_b(self):
        alpha, beta = optimal_errors(0.01, 0.08, D0B, D1B)
        assert alpha == pytest.approx(0.01 * 0.08 / (D1B * 0.92), rel=1e-12)
        assert alpha == pytest.approx(3.573e-4, rel=1e-3)
        assert beta == pytest.approx(0.01 * 0.92 / (D0B * 0.08), rel=1e-12)

    def test_regime(self):
        with pytest.raises(RegimeError):
            optimal_errors(1.0, 0.5, 1.0, 1.0)


class TestCoefficients:
    def test_unit(self):
        assert cost_coefficient(0.5, binary_channel(0.5, 0.5 / math.e)).value > 0
        ch = binary_channel(0.2, 0.6)
        assert cost_coefficient(0.5, ch).value == pytest.approx(0.5 / ch.d0 + 0.5 / ch.d1)

    def test_designs(self, channels):
        assert cost_coefficient(0.08, channels["B"]).value == pytest.approx(0.92 / D0B + 0.08 / D1B, rel=1e-12)
        assert cost_coefficient(0.08, channels["B"]).value == pytest.approx(2.307, abs=1e-3)
        assert cost_coefficient(0.08, channels["C"]).value == pytest.approx(22.66, abs=0.01)

    def test_degenerate(self):
        with pytest.raises(DegenerateChannel):
            cost_coefficient(0.5, binary_channel(0.3, 0.3))

    def test_period_one_reduction(self, channels):
        for ch in channels.values():
            assert blockwise_coefficient(0.3, [ch]).value == cost_coefficient(0.3, ch).value

    def test_alternating_formula(self, channels):
        a, b = channels["A"], channels["B"]
        got = blockwise_coefficient(0.3, [a, b]).value
        assert got == pytest.approx(2 * 0.7 / (a.d0 + b.d0) + 2 * 0.3 / (a.d1 + b.d1), rel=1e-14)

    def test_repeated_channel(self, channels):
        b = channels["B"]
        assert blockwise_coefficient(0.3, [b, b]).value == pytest.approx(cost_coefficient(0.3, b).value, rel=1e-15)

    def test_rotation_invariance(self, channels):
        chs = [channels[k] for k in "ABCB"]
        ref = blockwise_coefficient(0.2, chs).value
        for r in range(1, 4):
            assert blockwise_coefficient(0.2, chs[r:] + chs[:r]).value == pytest.approx(ref, rel=1e-15)

    @given(st.floats(0.05, 3), st.floats(0.05, 3), st.floats(1.01, 2), st.floats(0.01, 0.99))
    def test_decreasing_in_divergences(self, d0, d1, f, p1):
        def G(x0, x1):
            return (1 - p1) / x0 + p1 / x1

        assert G(d0 * f, d1) < G(d0, d1)
        assert G(d0, d1 * f) < G(d0, d1)


class TestInterval:
    def test_pair_b_a(self, channels):
        iv = asymmetry_interval(channels["B"], channels["A"])
        a0, a1, b0, b1 = D0B, D1B, D0A, D1A
        common = (a1 - b1) * (a0 + b0) / ((a1 + b1) * (b0 - a0))
        assert iv.lower == pytest.approx(a0 / a1 * common, rel=1e-10)
        assert iv.upper == pytest.approx(b0 / b1 * common, rel=1e-10)
        assert 0 < iv.lower < iv.upper

    def test_reversed_ordering(self, channels):
        with pytest.raises(AssumptionViolated):
            asymmetry_interval(channels["A"], channels["B"])

    def test_crossover(self, channels):
        delta = crossover_ratio(channels["B"], channels["A"])
        assert delta == pytest.approx(crossover_ratio(channels["A"], channels["B"]), rel=1e-15)
        assert delta in asymmetry_interval(channels["B"], channels["A"])
        p1 = prior1_from_ratio(delta)
        ga = cost_coefficient(p1, channels["A"]).value
        gb = cost_coefficient(p1, channels["B"]).value
        assert ga == pytest.approx(gb, rel=1e-10)

    def test_identical(self, channels):
        with pytest.raises(AssumptionViolated):
            crossover_ratio(channels["A"], channels["A"])

    def test_interval_json(self):
        assert PriorInterval(1.0, 2.0).to_json() == {"U": 1.0, "V": 2.0}

    @settings(max_examples=200, suppress_health_check=[HealthCheck.filter_too_much])
    @given(ordered_pairs(), st.floats(0.0, 1.0))
    def test_three_cases(self, pair, t):
        ch1, ch2 = pair
        iv = asymmetry_interval(ch1, ch2)
        assert 0 < iv.lower < iv.upper
        assert crossover_ratio(ch1, ch2) in iv
        inside = iv.lower + t * (iv.upper - iv.lower)
        if iv.lower < inside < iv.upper and min(inside - iv.lower, iv.upper - inside) > 1e-6 * iv.upper:
            r = alternating_comparison(ch1, ch2, inside)
            assert r["G_alt"] < min(r["G1"], r["G2"])
            assert classify_prior(ch1, ch2, inside) is PriorRegime.ALTERNATING_BEST
        for ratio in (iv.lower / 2, iv.upper * 2):
            r = alternating_comparison(ch1, ch2, ratio)
            lo, hi = sorted((r["G1"], r["G2"]))
            assert lo * (1 - 1e-10) <= r["G_alt"] <= hi * (1 + 1e-10)

    def test_outer_case_order(self, channels):
        b, a = channels["B"], channels["A"]
        iv = asymmetry_interval(b, a)
        low = alternating_comparison(b, a, iv.lower / 2)
        high = alternating_comparison(b, a, iv.upper * 2)
        assert low["G1"] <= low["G_alt"] <= low["G2"]
        assert high["G1"] >= high["G_alt"] >= high["G2"]
        assert classify_prior(b, a, iv.lower / 2) is PriorRegime.FIRST_BEST
        assert classify_prior(b, a, iv.upper * 2) is PriorRegime.SECOND_BEST


class TestDominance:
    def test_designs(self, channels):
        assert dominance(channels["A"], channels["C"]) is Dominance.DOMINATES
        assert dominance(channels["C"], channels["B"]) is Dominance.DOMINATED_BY
        assert dominance(channels["A"], channels["A"]) is Dominance.EQUAL
        assert dominance(channels["A"], channels["B"]) is Dominance.INCOMPARABLE


class TestRationalize:
    def test_single_channel(self, channels):
        with pytest.raises(NotRandomized):
            rationalize_mixture([1.0], [channels["A"]])
        with pytest.raises(NotRandomized):
            rationalize_mixture([0.5, 0.5], [channels["A"], channels["A"]])

    def test_half_half(self, channels):
        a, b = channels["A"], channels["B"]
        plan = rationalize_mixture([0.5, 0.5], [a, b])
        assert (plan.period, plan.counts) == (2, (1, 1))
        mixed = mix_channels([0.5, 0.5], [a, b])
        assert mixed.d0 < (a.d0 + b.d0) / 2 and mixed.d1 < (a.d1 + b.d1) / 2

    def test_one_third(self, channels):
        a, b = channels["A"], channels["B"]
        plan = rationalize_mixture([1 / 3, 2 / 3], [a, b])
        # smallest admissible period; rounding 2/3 and 4/3 gives (1, 1) which already wins
        assert plan.period == 2 and plan.counts == (1, 1)
        assert sum(plan.counts) == plan.period

    def test_not_found(self):
        a = binary_channel(0.3, 0.7)
        b = binary_channel(0.3 + 1e-9, 0.7)
        with pytest.raises(NotFound) as info:
            rationalize_mixture([0.5, 0.5], [a, b], n_max=3)
        assert info.value.best_margin is not None

    @settings(max_examples=100)
    @given(st.floats(0.05, 0.95), st.floats(0.05, 0.95))
    def test_plan_beats_mixture(self, channels, w, p1):
        chs = [channels["A"], channels["B"]]
        plan = rationalize_mixture([w, 1 - w], chs)
        sched = plan.schedule(chs)
        assert len(sched) == plan.period
        mixed = mix_channels([w, 1 - w], chs)
        assert blockwise_coefficient(p1, sched).value < cost_coefficient(p1, mixed).value


class TestMultiSensor:
    def test_single_sensor_reduces(self, channels):
        a, b = channels["A"], channels["B"]
        rep = multisensor_coefficients(1, a, b, 0.3)
        assert rep.nonstationary == pytest.approx(blockwise_coefficient(0.3, [a, b]).value, rel=1e-14)
        assert rep.stationary[0] == pytest.approx(cost_coefficient(0.3, b).value, rel=1e-14)
        assert rep.stationary[1] == pytest.approx(cost_coefficient(0.3, a).value, rel=1e-14)
        iv = asymmetry_interval(b, a)
        assert rep.interval.lower == pytest.approx(iv.lower, rel=1e-12)
        assert rep.interval.upper == pytest.approx(iv.upper, rel=1e-12)

    @pytest.mark.parametrize("d", [1, 2, 3, 5])
    def test_interval_matches_scan(self, channels, d):
        rep = multisensor_coefficients(d, channels["A"], channels["B"], 0.5)
        ratios = np.geomspace(rep.interval.lower / 3, rep.interval.upper * 3, 4001)
        wins = []
        for r in ratios:
            m = multisensor_coefficients(d, channels["A"], channels["B"], prior1_from_ratio(r))
            wins.append(min(m.stationary) > m.nonstationary)
        wins = np.array(wins)
        assert wins.any()
        inside = (ratios > rep.interval.lower) & (ratios < rep.interval.upper)
        assert np.array_equal(wins, inside)

    def test_wrong_order(self, channels):
        with pytest.raises(AssumptionViolated):
            multisensor_coefficients(2, channels["B"], channels["A"], 0.5)

    def test_needs_a_sensor(self, channels):
        with pytest.raises(DomainError):
            multisensor_coefficients(0, channels["A"], channels["B"], 0.5)

    def test_json(self, channels):
        obj = multisensor_coefficients(2, channels["A"], channels["B"], 0.5).to_json()
        assert set(obj) == {"sensors", "G_k", "G_nonstationary", "U", "V"}
