import json
import math

import numpy as np
import pytest
from scipy import integrate

from robust_coase.dist import (
    Beta,
    BinaryPressed,
    DiscreteDistribution,
    PowerFamily,
    Tabulated,
    Truncated,
    Uniform,
    check_ad_regularity,
    check_lipschitz,
    cond_mean_below,
    from_json,
    mixture_press,
    press,
    press_discrete_binary,
    press_threshold,
)
from robust_coase.errors import DomainError

CONTINUOUS = [
    Uniform(0, 2),
    Uniform(0.2, 1),
    Beta(2, 3, 0.1, 1),
    Beta(2, 2, 0.5, 1.5),
    PowerFamily(8),
    PowerFamily(2, 0.5, 1.5),
    Tabulated([0, 1, 2], [0, 0.3, 1]),
]


class TestMoments:
    @pytest.mark.parametrize("d", CONTINUOUS, ids=repr)
    def test_mean_matches_quadrature(self, d):
        oracle = integrate.quad(lambda x: x * d.pdf(x), d.lo, d.hi, limit=200)[0]
        assert d.mean == pytest.approx(oracle, abs=1e-9)

    @pytest.mark.parametrize("d", CONTINUOUS, ids=repr)
    @pytest.mark.parametrize("frac", [0.1, 0.45, 0.9])
    def test_partial_moment_matches_quadrature(self, d, frac):
        y = d.lo + frac * (d.hi - d.lo)
        oracle = integrate.quad(lambda x: x * d.pdf(x), d.lo, y, limit=200)[0]
        assert float(d.partial_moment(y)) == pytest.approx(oracle, abs=1e-9)

    @pytest.mark.parametrize("d", CONTINUOUS, ids=repr)
    def test_quantile_inverts_cdf(self, d):
        q = np.linspace(0.01, 0.99, 41)
        assert np.allclose(d.cdf(d.quantile(q)), q, atol=1e-10)

    def test_interval_mean_of_uniform(self):
        assert Uniform(0, 2).interval_mean(0.5, 1.5) == pytest.approx(1.0)

    def test_conditional_means(self):
        d = Uniform(0, 2)
        assert cond_mean_below(d, 1.0) == pytest.approx(0.5)
        assert float(d.cond_mean_above(1.0)) == pytest.approx(1.5)


class TestValidation:
    def test_empty_support_rejected(self):
        with pytest.raises(DomainError):
            Uniform(1, 1)

    def test_unknown_kind(self):
        with pytest.raises(DomainError):
            from_json({"kind": "cauchy"})

    def test_missing_field(self):
        with pytest.raises(DomainError):
            from_json({"kind": "uniform", "lo": 0})

    def test_non_monotone_table(self):
        with pytest.raises(ValueError):
            Tabulated([0, 1, 2], [0, 0.6, 0.4])


class TestJson:
    @pytest.mark.parametrize("d", CONTINUOUS, ids=repr)
    def test_round_trip(self, d):
        back = from_json(json.dumps(d.to_json()))
        q = np.linspace(0.05, 0.95, 7)
        assert np.allclose(back.quantile(q), d.quantile(q))

    def test_truncated_and_pressed_kinds(self):
        t = from_json({"kind": "truncated", "base": {"kind": "uniform", "lo": 0, "hi": 2}, "hi": 1})
        assert t.hi == pytest.approx(1.0)
        assert t.mean == pytest.approx(0.5)
        g = from_json({"kind": "pressed", "base": {"kind": "uniform", "lo": 0, "hi": 2}})
        assert g.hi == pytest.approx(1.0)

    def test_discrete(self):
        d = from_json({"kind": "discrete", "atoms": [[0, 0.5], [1, 0.5]]})
        assert isinstance(d, DiscreteDistribution)
        assert d.mean == pytest.approx(0.5)


class TestPress:
    def test_uniform_presses_to_half_uniform(self):
        G = press(Uniform(0, 2))
        x = np.linspace(0, 1, 1024)
        assert np.max(np.abs(G.cdf(x) - x)) <= 1e-10
        assert G.lo == 0 and G.hi == pytest.approx(1.0)

    @pytest.mark.parametrize("d", CONTINUOUS, ids=repr)
    def test_quantile_is_L_of_quantile(self, d):
        G = press(d)
        q = np.linspace(0.02, 0.98, 25)
        assert np.allclose(G.quantile(q), G.L(d.quantile(q)), atol=1e-12)

    @pytest.mark.parametrize("d", CONTINUOUS, ids=repr)
    def test_pressed_is_second_order_dominated(self, d):
        # same lower end, top at the prior mean, never above the prior's cdf from below
        G = press(d)
        assert G.hi == pytest.approx(d.mean)
        x = np.linspace(d.lo, G.hi, 50)
        assert np.all(G.cdf(x) >= d.cdf(x) - 1e-12)

    def test_threshold_inverts_conditional_mean(self):
        assert press_threshold(Uniform(0, 2), 0.5) == pytest.approx(1.0)

    def test_mixture_press_on_two_cells(self):
        # each cell of U[0,2] is pressed separately: U[0,0.5] and U[1,1.5], half the mass each
        M = mixture_press(Uniform(0, 2), [(0, 1), (1, 2)])
        assert np.allclose(M.cdf(np.array([0.25, 0.5, 0.75, 1.25])), [0.25, 0.5, 0.5, 0.75])

    def test_binary_press_formula(self):
        q, p = 0.5, 0.2
        assert press_discrete_binary(q, p) == pytest.approx((q - p) / (q * (1 - p)))
        assert float(BinaryPressed(q).cdf(p)) == pytest.approx(1 - press_discrete_binary(q, p))


class TestRegularity:
    def test_lipschitz_gap_case(self):
        rep = check_lipschitz(Uniform(0.5, 1))
        assert rep.holds
        assert rep.constant == pytest.approx(0.5, rel=1e-6)

    def test_lipschitz_not_used_without_gap(self):
        assert not check_lipschitz(Uniform(0, 2)).holds
        assert check_lipschitz(Uniform(0, 2), override=True).holds

    def test_ad_regularity(self):
        assert check_ad_regularity(Uniform(0, 2), 1.0).holds
        assert not check_ad_regularity(Beta(2, 2), 1.0).holds


def test_beta_mean_closed_form():
    d = Beta(2, 3, 0.1, 1)
    assert d.mean == pytest.approx(0.1 + 0.9 * 2 / 5)
    assert math.isclose(Truncated(d, hi=d.hi).mean, d.mean, rel_tol=1e-9)
