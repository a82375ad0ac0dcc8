"""Robust equilibrium: the pressed known-values solution mapped back to thresholds.

Nature reveals only whether the value lies below a threshold ``y_t``.  A
buyer told ``v <= y_t`` has posterior mean ``L(y_t)``, so each known-values
cutoff ``w_t`` on the pressed distribution corresponds to the threshold
``y_t = L^{-1}(w_t)``, which is simply ``F^{-1}`` of the mass left after
period ``t``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .coase import GameConfig, KnownValuesEquilibrium, solve_known_values, solve_known_values_infinite
from .dist import ValueDistribution, check_lipschitz, press
from .errors import ConsistencyError, DomainError, PreconditionError

log = logging.getLogger(__name__)

EQUIVALENCE_TOL = 1e-6


@dataclass
class PartitionalInfoProcess:
    thresholds: list[float]
    obedience_residuals: list[float]

    def __len__(self) -> int:
        return len(self.thresholds)


@dataclass
class RobustEquilibrium:
    pressed_eq: KnownValuesEquilibrium
    thresholds: PartitionalInfoProcess
    profit: float
    surplus: float
    clearing_time: int | None
    dist: ValueDistribution = field(repr=False)

    @property
    def prices(self) -> list[float]:
        return self.pressed_eq.prices

    @property
    def cutoffs(self) -> list[float]:
        return self.pressed_eq.cutoffs

    def rows(self) -> list[dict]:
        """One record per period, for tabular output."""
        return [
            {
                "t": t + 1,
                "price": p,
                "cutoff": w,
                "threshold": y,
                "residual": r,
                "mass_after": float(self.dist.cdf(y)),
            }
            for t, (p, w, y, r) in enumerate(
                zip(self.prices, self.cutoffs, self.thresholds.thresholds, self.thresholds.obedience_residuals)
            )
        ]

    def to_json(self) -> dict:
        return {
            "prices": self.prices,
            "cutoffs": self.cutoffs,
            "thresholds": self.thresholds.thresholds,
            "residuals": self.thresholds.obedience_residuals,
            "profit": self.profit,
            "surplus": self.surplus,
            "pressed_profit": self.pressed_eq.profit,
            "pressed_surplus": self.pressed_eq.surplus,
            "clearing_time": self.clearing_time,
            "delta": self.pressed_eq.delta,
            "horizon": "inf" if self.pressed_eq.horizon is None else self.pressed_eq.horizon,
        }


def _validate(F: ValueDistribution, prices: Sequence[float], thresholds: Sequence[float]):
    p = np.asarray(prices, dtype=float)
    y = np.asarray(thresholds, dtype=float)
    if p.ndim != 1 or y.shape != p.shape:
        raise DomainError(f"prices and thresholds must have equal length ({p.size} vs {y.size})")
    if p.size == 0:
        raise DomainError("empty price path")
    tol = 1e-12 * max(1.0, abs(F.hi))
    if np.any(np.diff(y) > tol):
        raise DomainError("thresholds must be weakly decreasing")
    if np.any(y < F.lo - tol) or np.any(y > F.hi + tol):
        raise DomainError("thresholds must lie in the support")
    return p, np.clip(y, F.lo, F.hi)


def _segments(F, p, y):
    """Mass and first moment of each period's buyers, with ``y_0 = hi``."""
    Fy = np.asarray(F.cdf(y), dtype=float)
    My = np.asarray(F.partial_moment(y), dtype=float)
    F_prev = np.concatenate([[1.0], Fy[:-1]])
    M_prev = np.concatenate([[F.mean], My[:-1]])
    return Fy, My, F_prev - Fy, M_prev - My


def indifference_residuals(F: ValueDistribution, prices, thresholds, delta: float) -> list[float]:
    """LHS minus RHS of the buyer's indifference condition, per period.

    LHS is the payoff of buying now when told only ``v <= y_t``; RHS is the
    discounted payoff of waiting and buying when the later partition reveals
    the value's cell.  Obedience needs every entry to be ``<= 0``; a positive
    entry means buying now beats waiting.
    """
    p, y = _validate(F, prices, thresholds)
    Fy, My, dF, dM = _segments(F, p, y)
    seg = dM - p * dF
    n = p.size
    out = []
    for t in range(n):
        lhs = My[t] - p[t] * Fy[t]
        rhs = sum(delta ** (s - t) * seg[s] for s in range(t + 1, n))
        out.append(float(lhs - rhs))
    return out


def profit_of_thresholds(F: ValueDistribution, prices, thresholds, delta: float) -> float:
    p, y = _validate(F, prices, thresholds)
    _, _, dF, _ = _segments(F, p, y)
    disc = delta ** np.arange(p.size)
    return float(np.sum(disc * p * dF))


def buyer_surplus_of_thresholds(F: ValueDistribution, prices, thresholds, delta: float) -> float:
    p, y = _validate(F, prices, thresholds)
    _, _, dF, dM = _segments(F, p, y)
    disc = delta ** np.arange(p.size)
    return float(np.sum(disc * (dM - p * dF)))


def tail_surplus(F: ValueDistribution, prices, thresholds, delta: float, t: int) -> float:
    """Surplus from period ``t`` (1-based) on, in units of the time-``t`` remaining population.

    Discounting is measured from period ``t`` itself.
    """
    p, y = _validate(F, prices, thresholds)
    _, _, dF, dM = _segments(F, p, y)
    k = t - 1
    disc = delta ** np.arange(p.size - k)
    return float(np.sum(disc * (dM[k:] - p[k:] * dF[k:])))


def no_information_surplus(F: ValueDistribution, prices, thresholds, t: int) -> float:
    """Surplus of buying at ``p_t`` with no further information, given ``v <= y_{t-1}``."""
    p, y = _validate(F, prices, thresholds)
    y_prev = F.hi if t == 1 else y[t - 2]
    return float(F.partial_moment(y_prev) - p[t - 1] * F.cdf(y_prev))


def indifference_thresholds(F: ValueDistribution, prices, delta: float) -> list[float]:
    """Thresholds that make the marginal pool indifferent along an arbitrary declining path.

    The period-``t`` pool must have posterior mean
    ``(p_t - delta p_{t+1}) / (1 - delta)``, and ``p_T`` in the last period.
    """
    p = np.asarray(prices, dtype=float)
    G = press(F)
    vbar = np.empty_like(p)
    vbar[:-1] = (p[:-1] - delta * p[1:]) / (1 - delta)
    vbar[-1] = p[-1]
    return [float(v) for v in G.L_inv(vbar)] if p.size > 1 else [float(G.L_inv(vbar[0]))]


def solve_robust(cfg: GameConfig) -> RobustEquilibrium:
    F = cfg.dist
    if getattr(F, "kind", None) != "continuous":
        raise PreconditionError("the robust solver needs a continuous distribution")
    G = press(F)
    pcfg = GameConfig(
        G, cfg.delta, cfg.horizon, cfg.root_tol, cfg.integral_tol, cfg.grid_n,
        cfg.allow_no_gap, cfg.cap, cfg.stationarity_tol,
    )
    if cfg.infinite:
        report = check_lipschitz(F, override=cfg.allow_no_gap)
        if not report.holds:
            msg = f"Lipschitz condition fails ({report.note or report.constant}); payoff equivalence is unproven"
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
        eq = solve_known_values_infinite(pcfg)
    else:
        eq = solve_known_values(pcfg)
    # G(w_t) is the mass left after t, so F^{-1} of it is the threshold
    y = [float(F.quantile(q)) if q > 0 else F.lo for q in eq.masses[1:]]
    residuals = indifference_residuals(F, eq.prices, y, cfg.delta)
    profit = profit_of_thresholds(F, eq.prices, y, cfg.delta)
    if abs(profit - eq.profit) > EQUIVALENCE_TOL:
        raise ConsistencyError(
            f"threshold profit {profit:.12g} differs from pressed profit {eq.profit:.12g}"
        )
    surplus = buyer_surplus_of_thresholds(F, eq.prices, y, cfg.delta)
    return RobustEquilibrium(
        pressed_eq=eq,
        thresholds=PartitionalInfoProcess(y, residuals),
        profit=profit,
        surplus=surplus,
        clearing_time=eq.clearing_time,
        dist=F,
    )
