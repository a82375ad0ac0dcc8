import numpy as np
import pytest

from robust_coase.coase import GameConfig
from robust_coase.dist import PowerFamily, Truncated, Uniform
from robust_coase.errors import DomainError, PreconditionError
from robust_coase.nature import (
    check_prm,
    nature_commitment_profit,
    perturbation_sign,
    pressed_ratio,
    prm_neighborhood,
    worse_past_threshold,
    worst_case_partitional,
)
from robust_coase.robust import indifference_residuals, indifference_thresholds, profit_of_thresholds, solve_robust

U02 = Uniform(0, 2)
VIOLATOR = PowerFamily(8)


def commitment_closed_form(delta):
    return (4 - 3 * delta) ** 2 / (64 * (1 - delta)) if delta < 0.8 else delta / 4


class TestCommitment:
    @pytest.mark.parametrize("delta", [0.05, 0.3, 0.5, 0.75, 0.79, 0.8, 0.85, 0.95])
    def test_closed_form(self, delta):
        assert nature_commitment_profit(U02, delta).profit == pytest.approx(commitment_closed_form(delta), abs=1e-8)

    def test_regimes(self):
        assert nature_commitment_profit(U02, 0.79).regime == "interior"
        assert nature_commitment_profit(U02, 0.8).regime == "no-first-period-sale"

    def test_interior_threshold(self):
        # interior optimum y = (4 - 3 delta) / (4 (1 - delta)) for U[0, 2]
        res = nature_commitment_profit(U02, 0.5)
        assert res.threshold == pytest.approx(1.25, abs=1e-6)
        assert res.p2 == pytest.approx(1.25 / 8, abs=1e-8)

    @pytest.mark.parametrize("delta", np.round(np.arange(0.05, 0.96, 0.05), 2))
    def test_below_baseline(self, delta):
        base = solve_robust(GameConfig(U02, float(delta), 2)).profit
        assert nature_commitment_profit(U02, float(delta)).profit <= base + 1e-12

    def test_bad_delta(self):
        with pytest.raises(DomainError):
            nature_commitment_profit(U02, 1.0)


class TestWorstCase:
    @pytest.mark.parametrize("T", [2, 3])
    @pytest.mark.parametrize("delta", [0.3, 0.7])
    def test_reinforcing_for_uniform(self, T, delta):
        eq = solve_robust(GameConfig(U02, delta, T))
        res = worst_case_partitional(U02, eq.prices, delta)
        assert res.min_profit == pytest.approx(eq.profit, abs=2e-4)
        assert res.min_profit <= eq.profit + 1e-10

    def test_violator_has_a_worse_process(self):
        prices, delta = (0.3, 0.2), 0.5
        ys = indifference_thresholds(VIOLATOR, prices, delta)
        indifferent = profit_of_thresholds(VIOLATOR, prices, ys, delta)
        res = worst_case_partitional(VIOLATOR, prices, delta)
        assert indifferent - res.min_profit > 1e-3
        # the reported process is itself obedient and priced as claimed
        assert max(indifference_residuals(VIOLATOR, prices, res.thresholds, delta)) <= 1e-9
        assert profit_of_thresholds(VIOLATOR, prices, res.thresholds, delta) == pytest.approx(res.min_profit)

    def test_long_price_path_uses_sweeps(self):
        prices = [0.6, 0.45, 0.3, 0.2]
        res = worst_case_partitional(U02, prices, 0.5)
        assert res.method == "coordinate-sweeps"
        assert any("local" in n for n in res.notes)
        ys = indifference_thresholds(U02, prices, 0.5)
        assert res.min_profit <= profit_of_thresholds(U02, prices, ys, 0.5) + 1e-10

    def test_result_serializes(self):
        res = worst_case_partitional(U02, [0.45, 0.3], 0.5)
        out = res.to_json()
        assert set(out) >= {"thresholds", "min_profit", "residuals", "notes"}
        assert "partitional" in out["notes"][0]


class TestPRM:
    @pytest.mark.parametrize("F", [Uniform(0, 2), Uniform(0.2, 1), Uniform(1, 2)], ids=repr)
    def test_uniform_holds(self, F):
        assert check_prm(F).holds

    def test_power_family_fails(self):
        rep = check_prm(VIOLATOR)
        assert not rep.holds
        assert rep.max_increase > 0

    def test_pressed_ratio_of_uniform_is_constant(self):
        r = pressed_ratio(U02, np.linspace(0.1, 0.9, 9))
        assert np.allclose(r, 0.5)

    def test_neighborhood_whole_support(self):
        nb = prm_neighborhood(Uniform(1, 2))
        assert nb.whole_support and nb.y_star == 2.0

    def test_neighborhood_is_a_boundary(self):
        F = PowerFamily(8, 0.6, 1.5)
        nb = prm_neighborhood(F)
        assert nb.ok and not nb.whole_support
        assert check_prm(Truncated(F, F.lo, nb.y_star - 1e-3)).holds
        assert not check_prm(Truncated(F, F.lo, nb.y_star + 2e-2)).holds

    def test_neighborhood_needs_gap(self):
        with pytest.raises(PreconditionError):
            prm_neighborhood(U02)


class TestPerturbation:
    def test_uniform_is_neutral(self):
        assert perturbation_sign(U02, [0.45, 0.3], [1.2, 0.6], 0, 0.5) == pytest.approx(0.0, abs=1e-12)

    def test_violator_is_negative(self):
        prices = (0.3, 0.2)
        ys = indifference_thresholds(VIOLATOR, prices, 0.5)
        assert perturbation_sign(VIOLATOR, prices, ys, 0, 0.5) < 0

    def test_needs_following_period(self):
        with pytest.raises(DomainError):
            perturbation_sign(U02, [0.45, 0.3], [1.2, 0.6], 1, 0.5)

    def test_worse_past_threshold(self):
        # E[v | v > y] = (y + 2) / 2 for U[0, 2], so cutoff 1.5 gives y = 1
        assert worse_past_threshold(U02, 1.0, 0.5, 0.5) == pytest.approx(1.0, abs=1e-10)
        with pytest.raises(PreconditionError):
            worse_past_threshold(U02, 0.4, 0.3, 0.5)
