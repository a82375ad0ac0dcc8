"""Alternative benchmarks: naive maxmin, a sophisticated discrete example,
constant-price equilibria without clearing, and the no-gap folk bounds."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from .coase import GameConfig, static_monopoly, uniform_profit_coefficient
from .dist import ValueDistribution, check_ad_regularity, mixture_press, press, press_discrete_binary
from .errors import DomainError

NAIVE_BIND_TOL = 1e-6


def _check_delta(delta: float) -> None:
    if not (0 < delta < 1):
        raise DomainError(f"discount factor must lie in (0, 1), got {delta}")


def _argmax_1d(f, a: float, b: float, n: int = 2001, xatol: float = 1e-13) -> float:
    xs = np.linspace(a, b, n)
    vals = np.array([f(x) for x in xs])
    j = int(np.argmax(vals))
    lo, hi = xs[max(j - 1, 0)], xs[min(j + 1, n - 1)]
    res = optimize.minimize_scalar(lambda x: -f(x), bounds=(lo, hi), method="bounded", options={"xatol": xatol})
    x = float(res.x)
    return x if f(x) >= vals[j] else float(xs[j])


# ---------------------------------------------------------------------------
# naive maxmin


@dataclass(frozen=True)
class NaiveResult:
    v_star: float
    p1: float
    profit: float
    objective: float
    binds: bool
    sells: bool
    note: str = ""


def naive_objective(v: float, delta: float) -> float:
    """Seller's payoff from cutoff ``v`` when it plans as if no future information arrives."""
    s = math.sqrt(1 - delta)
    c = uniform_profit_coefficient(delta)
    return (v / 8) * (4 * (1 - delta) - v * (1 - delta - s)) * (1 - v / 2) + delta * c * (v / 2) ** 2


def naive_maxmin_uniform(delta: float) -> NaiveResult:
    """Naive maxmin seller facing ``U[0, 2]`` over an infinite horizon.

    ``v`` is the value of the buyer left indifferent in period one; values
    above ``v`` buy.  When the best ``v`` is the top of the support nobody
    buys in period one, and by stationarity nobody ever buys.
    """
    _check_delta(delta)
    v = _argmax_1d(lambda x: naive_objective(x, delta), 0.0, 2.0)
    if naive_objective(2.0, delta) >= naive_objective(v, delta):
        v = 2.0
    c = uniform_profit_coefficient(delta)
    p1 = (v / 8) * (4 * (1 - delta) - v * (1 - delta - math.sqrt(1 - delta)))
    obj = naive_objective(v, delta)
    binds = v >= 2.0 - NAIVE_BIND_TOL
    if binds:
        return NaiveResult(v, p1, 0.0, obj, True, False,
                           "never-sell regime: realized profit reported as 0, planned objective kept separately")
    return NaiveResult(v, p1, obj, obj, False, True)


def naive_boundary(lo: float = 0.5, hi: float = 0.999, tol: float = 1e-7) -> float:
    """Smallest discount factor at which the naive seller stops selling (bisection)."""
    while hi - lo > tol:
        m = 0.5 * (lo + hi)
        if naive_maxmin_uniform(m).binds:
            hi = m
        else:
            lo = m
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# sophisticated maxmin with binary values


@dataclass(frozen=True)
class DiscreteResult:
    p1: float
    w: float
    p2: float
    profit: float
    corner: bool
    reinforcing_fails: bool


def _discrete_profit(q: float, delta: float, w: float):
    p2 = 1 - math.sqrt(1 - w)
    p1 = (1 - delta) * w + delta * p2
    r1 = press_discrete_binary(q, w)
    r2 = press_discrete_binary(w, p2) if w > 0 else 0.0
    # only buyers who did not buy in period one are still around in period two
    return p1 * r1 + delta * p2 * r2 * (1 - r1), p1, p2


def static_discrete_profit(q: float) -> tuple[float, float]:
    """Optimal static price and profit against the pressed binary prior ``q``."""
    p = 1 - math.sqrt(1 - q)
    return p, p * (q - p) / (q * (1 - p))


def sophisticated_discrete_two_period(q: float, delta: float) -> DiscreteResult:
    """Two-period game with values in {0, 1}, ``P(v = 1) = q``.

    The period-one pool is pressed to the indifferent belief ``w`` and the
    period-two price is the static optimum against prior ``w``.
    """
    if not (0 < q < 1):
        raise DomainError(f"prior must lie in (0, 1), got {q}")
    if not (0 <= delta < 1):
        raise DomainError(f"discount factor must lie in [0, 1), got {delta}")
    f = lambda w: _discrete_profit(q, delta, w)[0]
    w = _argmax_1d(f, 0.0, q)
    profit, p1, p2 = _discrete_profit(q, delta, w)
    corner = w <= 1e-9 or w >= q - 1e-9
    fails = (q - p1) < delta * q * (1 - p2)
    return DiscreteResult(p1=p1, w=w, p2=p2, profit=profit, corner=corner, reinforcing_fails=fails)


# ---------------------------------------------------------------------------
# constant-price equilibria


@dataclass(frozen=True)
class ConstantPriceResult:
    rho: float
    valid: bool
    price: float
    violated: str | None = None
    last_period_rho: float | None = None

    def survival(self, periods: int) -> float:
        """Probability that the buyer has not bought after ``periods`` periods."""
        if periods < 0:
            raise DomainError("periods must be nonnegative")
        return math.exp(periods * math.log1p(-self.rho)) if self.rho < 1 else float(periods == 0)


def constant_price_equilibrium(
    F: ValueDistribution,
    delta: float,
    v_star: float,
    minimax_profit: float | Sequence[float],
    horizon: int | None = None,
) -> ConstantPriceResult:
    """Purchase probability that gives the seller value ``v_star`` at price ``E[v]`` each period.

    ``minimax_profit`` is the seller's payoff after a deviation.  A sequence
    gives a per-period punishment, as needed with a finite horizon, and the
    seller's value must exceed every entry.  With a finite horizon the buyer
    buys with probability ``v_star / E[v]`` in the last period.
    """
    _check_delta(delta)
    mean = F.mean
    rho = v_star * (1 - delta) / (mean - delta * v_star)
    punish = np.atleast_1d(np.asarray(minimax_profit, dtype=float))
    worst = float(np.max(punish))
    violated = None
    if not (0 < rho < 1):
        violated = "rho outside (0, 1): seller value must lie below the mean"
    elif v_star >= mean:
        violated = "seller value must lie below the mean"
    elif v_star <= worst:
        violated = "seller value must exceed the deviation payoff"
    last = v_star / mean if horizon is not None else None
    return ConstantPriceResult(rho=rho, valid=violated is None, price=mean, violated=violated, last_period_rho=last)


def finite_horizon_punishments(F: ValueDistribution, delta: float, horizon: int, grid_n: int = 513) -> list[float]:
    """Robust profit from period ``t`` on, i.e. with ``horizon - t + 1`` periods left, for each ``t``."""
    from .robust import solve_robust

    return [solve_robust(GameConfig(F, delta, horizon - t + 1, grid_n=grid_n)).profit for t in range(1, horizon + 1)]


# ---------------------------------------------------------------------------
# no-gap folk bounds


@dataclass
class FolkSupport:
    pi_low: float
    pi_high: float
    v_star: float
    feasible: bool
    reasons: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "pi_low": self.pi_low,
            "pi_high": self.pi_high,
            "v_star": self.v_star,
            "feasible": self.feasible,
            "reasons": self.reasons,
        }


def no_gap_folk_support(
    F: ValueDistribution,
    delta: float,
    partition: Sequence[Sequence[float]] | None = None,
    v_star: float | None = None,
    alpha: float = 1.0,
    grid_n: int = 257,
) -> FolkSupport:
    """Bounds showing a no-clearing outcome is sustainable without a gap.

    ``pi_low`` is the robust infinite-horizon profit (the punishment after a
    seller deviation) and ``pi_high`` the static monopoly profit under the
    partition-refined pressed distribution (the reward used to deter
    nature).  An on-path value ``v_star`` works when it beats the
    punishment, stays below the mean, and is below ``delta * pi_high``.
    """
    from .robust import solve_robust

    _check_delta(delta)
    reasons: list[str] = []
    if F.lo != 0:
        reasons.append("distribution has a gap (lo > 0)")
    cells = partition if partition is not None else [(F.lo, F.hi)]
    G = press(F)
    if F.lo == 0:
        for name, d in (("value distribution", F), ("pressed distribution", G)):
            rep = check_ad_regularity(d, alpha)
            if not rep.holds:
                reasons.append(f"quantile envelope fails for the {name} at alpha={alpha} ({rep.note})")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        pi_low = solve_robust(GameConfig(F, delta, None, allow_no_gap=True, grid_n=grid_n)).profit
    _, pi_high = static_monopoly(mixture_press(F, cells))
    upper = min(delta * pi_high, F.mean)
    if v_star is None:
        v_star = 0.5 * (pi_low + upper)
    if not pi_low < v_star:
        reasons.append("on-path value does not exceed the punishment")
    if not v_star < F.mean:
        reasons.append("on-path value is not below the mean")
    if not v_star < delta * pi_high:
        reasons.append("discounted reward is too small to deter nature")
    return FolkSupport(pi_low=pi_low, pi_high=pi_high, v_star=v_star, feasible=not reasons, reasons=reasons)
