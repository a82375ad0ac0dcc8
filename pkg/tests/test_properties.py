import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robust_coase.coase import GameConfig, solve_known_values
from robust_coase.dist import Beta, Uniform, press
from robust_coase.robust import indifference_residuals, solve_robust
from robust_coase.sim import _pooled

deltas = st.floats(0.05, 0.95)
los = st.floats(0.0, 1.0)
widths = st.floats(0.2, 3.0)

FAST = settings(max_examples=15, deadline=None)


@FAST
@given(lo=los, width=widths)
def test_uniform_presses_to_uniform_on_lower_half(lo, width):
    F = Uniform(lo, lo + width)
    G = press(F)
    assert G.hi == pytest.approx(lo + width / 2)
    x = np.linspace(G.lo, G.hi, 33)
    assert np.allclose(G.cdf(x), (x - lo) / (width / 2), atol=1e-9)


@FAST
@given(a=st.floats(1.0, 4.0), b=st.floats(1.0, 4.0), lo=los)
def test_pressed_quantile_below_prior_quantile(a, b, lo):
    F = Beta(a, b, lo, lo + 1)
    G = press(F)
    q = np.linspace(0.01, 0.99, 25)
    gq = np.asarray(G.quantile(q))
    assert np.all(np.diff(gq) > 0)
    assert np.all(gq <= np.asarray(F.quantile(q)) + 1e-12)
    assert G.hi == pytest.approx(F.mean, abs=1e-9)


@FAST
@given(width=widths, delta=deltas)
def test_two_period_uniform_scales_with_support(width, delta):
    eq = solve_robust(GameConfig(Uniform(0, width), delta, 2))
    base = (2 - delta) ** 2 / (4 * (4 - 3 * delta))
    assert eq.profit == pytest.approx(width / 2 * base, rel=1e-8)


@FAST
@given(lo=st.floats(0.05, 1.0), width=widths, delta=deltas, T=st.integers(2, 3))
def test_robust_equilibrium_invariants(lo, width, delta, T):
    F = Uniform(lo, lo + width)
    eq = solve_robust(GameConfig(F, delta, T))
    p = eq.prices
    assert max(abs(r) for r in indifference_residuals(F, p, eq.thresholds.thresholds, delta)) <= 1e-8
    assert all(a >= b - 1e-12 for a, b in zip(p, p[1:]))
    assert all(a > delta * b for a, b in zip(p, p[1:]))
    assert eq.profit <= solve_known_values(GameConfig(F, delta, T)).profit + 1e-10


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.floats(-10, 10), min_size=1, max_size=30), min_size=1, max_size=8))
def test_pooled_variance_matches_direct(blocks):
    parts = []
    for blk in blocks:
        x = np.asarray(blk)
        parts.append((x.size, x.mean(), float(((x - x.mean()) ** 2).sum())))
    mean, m2 = _pooled(parts, 1)
    flat = np.concatenate([np.asarray(b) for b in blocks])
    assert mean == pytest.approx(flat.mean(), abs=1e-9)
    assert m2 == pytest.approx(float(((flat - flat.mean()) ** 2).sum()), abs=1e-7)
