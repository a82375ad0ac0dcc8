import warnings

import numpy as np
import pytest

from robust_coase.coase import GameConfig, solve_known_values
from robust_coase.dist import Beta, DiscreteDistribution, PowerFamily, Uniform, press
from robust_coase.errors import DomainError, PreconditionError
from robust_coase.robust import (
    buyer_surplus_of_thresholds,
    indifference_residuals,
    indifference_thresholds,
    no_information_surplus,
    profit_of_thresholds,
    solve_robust,
    tail_surplus,
)

U02 = Uniform(0, 2)

INSTANCES = [
    (Uniform(0, 2), 0.5, 2),
    (Uniform(0, 2), 0.7, 3),
    (Uniform(0.2, 1), 0.6, 3),
    (Beta(2, 3, 0.1, 1), 0.5, 2),
    (PowerFamily(2, 0.5, 1.5), 0.8, 2),
    (Uniform(0.2, 1), 0.5, None),
]


def example_one(delta):
    w1 = (2 - delta) / (4 - 3 * delta)
    p1 = (2 - delta) ** 2 / (8 - 6 * delta)
    p2 = (2 - delta) / (8 - 6 * delta)
    return [p1, p2], [2 * w1, w1]


class TestExampleOne:
    @pytest.mark.parametrize("delta", [0.1, 0.3, 0.5, 0.7, 0.9])
    def test_closed_forms(self, delta):
        eq = solve_robust(GameConfig(U02, delta, 2))
        prices, thresholds = example_one(delta)
        assert eq.prices == pytest.approx(prices, abs=1e-10)
        assert eq.thresholds.thresholds == pytest.approx(thresholds, abs=1e-10)
        assert eq.profit == pytest.approx((2 - delta) ** 2 / (4 * (4 - 3 * delta)), abs=1e-10)

    def test_surplus_by_hand(self):
        # period 1 sells (1.2, 2] at 0.45, period 2 sells (0.6, 1.2] at 0.30
        hand = (0.64 - 0.45 * 0.4) + 0.5 * (0.27 - 0.3 * 0.3)
        eq = solve_robust(GameConfig(U02, 0.5, 2))
        assert eq.surplus == pytest.approx(hand, abs=1e-12)
        assert eq.to_json()["pressed_surplus"] == pytest.approx(0.1625, abs=1e-10)

    def test_rows(self):
        rows = solve_robust(GameConfig(U02, 0.5, 2)).rows()
        assert [r["t"] for r in rows] == [1, 2]
        assert rows[1]["mass_after"] == pytest.approx(0.3)


class TestEquilibriumProperties:
    @pytest.mark.parametrize("F, delta, T", INSTANCES, ids=lambda x: repr(x))
    def test_obedience_binds(self, F, delta, T):
        eq = solve_robust(GameConfig(F, delta, T))
        assert max(abs(r) for r in eq.thresholds.obedience_residuals) <= 1e-8

    @pytest.mark.parametrize("F, delta, T", INSTANCES, ids=lambda x: repr(x))
    def test_payoff_equivalence(self, F, delta, T):
        eq = solve_robust(GameConfig(F, delta, T))
        pressed = solve_known_values(GameConfig(press(F), delta, T))
        assert eq.profit == pytest.approx(pressed.profit, abs=1e-8)

    @pytest.mark.parametrize("F, delta, T", INSTANCES, ids=lambda x: repr(x))
    def test_first_price_exceeds_discounted_second(self, F, delta, T):
        p = solve_robust(GameConfig(F, delta, T)).prices
        assert all(a > delta * b for a, b in zip(p, p[1:]))

    @pytest.mark.parametrize("F, delta, T", INSTANCES, ids=lambda x: repr(x))
    def test_surplus_is_mean_less_first_price(self, F, delta, T):
        # every pool is left indifferent, so the top pool's surplus chains back to period one
        eq = solve_robust(GameConfig(F, delta, T))
        assert eq.surplus == pytest.approx(F.mean - eq.prices[0], abs=1e-8)

    def test_thresholds_recovered_from_prices(self):
        eq = solve_robust(GameConfig(U02, 0.6, 3))
        ys = indifference_thresholds(U02, eq.prices, 0.6)
        assert ys == pytest.approx(eq.thresholds.thresholds, abs=1e-9)


class TestResiduals:
    def test_sign_convention(self):
        # raising the thresholds makes the pools told to wait richer, so buying now wins
        prices, thresholds = example_one(0.5)
        higher = [y + 0.1 for y in thresholds]
        lower = [y - 0.1 for y in thresholds]
        assert all(r > 0 for r in indifference_residuals(U02, prices, higher, 0.5))
        assert all(r < 0 for r in indifference_residuals(U02, prices, lower, 0.5))

    def test_all_at_bottom(self):
        r = indifference_residuals(U02, [0.45, 0.3], [0.0, 0.0], 0.5)
        assert r == pytest.approx([0.0, 0.0], abs=1e-15)

    def test_length_mismatch(self):
        with pytest.raises(DomainError):
            indifference_residuals(U02, [0.45, 0.3], [1.0], 0.5)

    def test_increasing_thresholds_rejected(self):
        with pytest.raises(DomainError):
            profit_of_thresholds(U02, [0.45, 0.3], [0.5, 1.0], 0.5)

    def test_surplus_helpers(self):
        prices, ys = example_one(0.5)
        assert no_information_surplus(U02, prices, ys, 1) == pytest.approx(U02.mean - prices[0])
        total = buyer_surplus_of_thresholds(U02, prices, ys, 0.5)
        assert tail_surplus(U02, prices, ys, 0.5, 1) == pytest.approx(total)


class TestPreconditions:
    def test_discrete_rejected(self):
        d = DiscreteDistribution(((0.0, 0.5), (1.0, 0.5)))
        with pytest.raises(PreconditionError):
            solve_robust(GameConfig(d, 0.5, 2))

    def test_lipschitz_failure_warns(self):
        # density vanishing at the bottom: (F^-1(q) - lo) / q is unbounded
        F = Beta(2, 1, 0.2, 1)
        with pytest.warns(RuntimeWarning, match="Lipschitz"):
            solve_robust(GameConfig(F, 0.5, None))

    def test_no_gap_infinite_opt_in(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            eq = solve_robust(GameConfig(U02, 0.75, None, allow_no_gap=True))
        assert eq.profit == pytest.approx(1 / 6, abs=1e-10)
        assert np.isclose(eq.thresholds.thresholds[0] / 2, eq.cutoffs[0] * 1.0)
