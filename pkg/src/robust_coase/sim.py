"""Episode simulation and deviation audits for seller/nature/buyer strategy profiles.

Play is partitional: each period the seller posts a price, nature picks a
threshold ``z`` and the buyer learns whether ``v > z``.  Because the buyer's
decision depends only on its cell, every path that has not bought yet shares
the same public history, so the remaining population is always ``F``
restricted to ``[lo, y]`` times a weight.  The simulator and the auditors
both walk that single public path.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .benchmarks import constant_price_equilibrium, sophisticated_discrete_two_period
from .coase import GameConfig
from .dist import ValueDistribution, press
from .errors import DomainError, PreconditionError, ProfileError
from .nature import _truncated_static_profit, nature_commitment_profit
from .robust import RobustEquilibrium, solve_robust

BLOCK = 8192
TAIL_EPS = 1e-13
NATURE_SPACE = "partitional thresholds only"


def _keep_mode(t, y, price, mode):
    return mode


@dataclass
class StrategyProfile:
    """Stationary rules for the three players.

    ``seller_rule(t, y, mode)`` gives the price when the remaining buyers are
    those with ``v <= y``.  ``nature_rule(t, y, price, mode)`` gives the
    threshold (``z >= y`` means no information).  ``buyer_rule(t, m, price,
    mode)`` gives the purchase probability of a buyer with posterior mean
    ``m``.  ``mode_rule(t, y, price, mode)`` updates the punishment mode once
    the price is seen; nature and the buyer act under the updated mode.
    ``value_hint(t, y, mode)``, when given, returns the seller's continuation
    value under the profile's own play (per unit weight) or ``None``.
    """

    seller_rule: Callable[[int, float, str], float]
    nature_rule: Callable[[int, float, float, str], float]
    buyer_rule: Callable[[int, float, float, str], float]
    mode_rule: Callable[[int, float, float, str], str] = _keep_mode
    value_hint: Callable[[int, float, str], float | None] | None = None
    initial_mode: str = "normal"
    name: str = "custom"
    spec: dict | None = None


@dataclass(frozen=True)
class _Period:
    t: int
    y: float
    mode: str
    price: float
    z: float
    hi_mass: float  # F-mass of (z, y]
    lo_mass: float  # F-mass of [lo, z]
    b_hi: float
    b_lo: float
    sold: float  # F-mass sold per unit weight
    next_y: float
    keep: float  # weight multiplier for the next period
    next_mode: str


def _check_prob(b, t, m, mode) -> float:
    b = float(b)
    if not (0.0 <= b <= 1.0) or math.isnan(b):
        raise ProfileError(f"buyer rule returned {b} at period {t}, posterior mean {m:.12g}, mode {mode!r}")
    return b


def _play_period(profile: StrategyProfile, F: ValueDistribution, t: int, y: float, mode: str,
                 price: float | None = None, threshold: float | None = None) -> _Period:
    p = float(profile.seller_rule(t, y, mode)) if price is None else float(price)
    if not math.isfinite(p):
        raise ProfileError(f"seller rule returned {p} at period {t}, state {y:.12g}, mode {mode!r}")
    mode2 = profile.mode_rule(t, y, p, mode)
    z = float(profile.nature_rule(t, y, p, mode2)) if threshold is None else float(threshold)
    if not math.isfinite(z):
        raise ProfileError(f"nature rule returned {z} at period {t}, state {y:.12g}, price {p:.12g}")
    z = min(max(z, F.lo), y)
    Fy, Fz = float(F.cdf(y)), float(F.cdf(z))
    hi_mass, lo_mass = max(Fy - Fz, 0.0), Fz
    eps = 1e-15
    b_hi = _check_prob(profile.buyer_rule(t, float(F.interval_mean(z, y)), p, mode2), t, 0.0, mode2) \
        if hi_mass > eps else 0.0
    b_lo = _check_prob(profile.buyer_rule(t, float(F.cond_mean_below(z)), p, mode2), t, 0.0, mode2) \
        if lo_mass > eps else 0.0
    sold = hi_mass * b_hi + lo_mass * b_lo
    if hi_mass <= eps:
        next_y, keep = y, 1.0 - b_lo
    elif lo_mass <= eps:
        next_y, keep = (F.lo, 0.0) if b_hi >= 1.0 else (y, 1.0 - b_hi)
    elif b_hi >= 1.0:
        next_y, keep = z, 1.0 - b_lo
    elif abs(b_hi - b_lo) <= 1e-15:
        next_y, keep = y, 1.0 - b_hi
    else:
        raise ProfileError(
            f"period {t}, state {y:.12g}: cells buy with probabilities {b_hi:.6g} and {b_lo:.6g}, "
            "which leaves a non-partitional remaining population"
        )
    if keep <= 0.0 or (Fy > 0 and sold >= Fy * (1 - 1e-15)):
        next_y, keep = F.lo, 0.0
    return _Period(t, y, mode, p, z, hi_mass, lo_mass, b_hi, b_lo, sold, next_y, keep, mode2)


def _max_periods(cfg: GameConfig, t0: int = 1) -> int:
    if cfg.horizon is not None:
        return max(cfg.horizon - t0 + 1, 0)
    return int(math.ceil(math.log(TAIL_EPS) / math.log(cfg.delta))) + 1


def seller_value(profile: StrategyProfile, cfg: GameConfig, t: int, y: float, mode: str) -> float:
    """Seller's discounted profit from period ``t`` on, per unit weight, under the profile."""
    F, delta = cfg.dist, cfg.delta
    total, disc = 0.0, 1.0
    for _ in range(_max_periods(cfg, t)):
        if profile.value_hint is not None:
            hint = profile.value_hint(t, y, mode)
            if hint is not None:
                return total + disc * hint
        per = _play_period(profile, F, t, y, mode)
        total += disc * per.price * per.sold
        disc *= delta * per.keep
        if disc <= 0.0:
            break
        t, y, mode = t + 1, per.next_y, per.next_mode
    return total


def _step_value(profile, cfg, t, y, mode, price=None, threshold=None) -> float:
    per = _play_period(profile, cfg.dist, t, y, mode, price, threshold)
    cont = 0.0
    if per.keep > 0 and (cfg.horizon is None or t < cfg.horizon):
        cont = seller_value(profile, cfg, t + 1, per.next_y, per.next_mode)
    return per.price * per.sold + cfg.delta * per.keep * cont


def public_path(profile: StrategyProfile, cfg: GameConfig, max_periods: int | None = None,
                through_clearing: bool = False) -> list[_Period]:
    """The shared history of all paths that have not bought yet.

    With ``through_clearing`` the path continues after everyone has bought,
    which is what a buyer contemplating a deviation would still face.
    """
    F = cfg.dist
    n = _max_periods(cfg) if max_periods is None else max_periods
    out: list[_Period] = []
    t, y, mode, weight = 1, F.hi, profile.initial_mode, 1.0
    seen: dict = {}
    for _ in range(n):
        key = (y, mode)
        if cfg.horizon is None and key in seen:
            # stationary rules: a repeated state repeats the period
            per = replace(seen[key], t=t)
        else:
            per = _play_period(profile, F, t, y, mode)
            seen[key] = per
        out.append(per)
        weight *= per.keep
        if weight <= 0.0 and not through_clearing:
            break
        t, y, mode = t + 1, per.next_y, per.next_mode
    return out


# ---------------------------------------------------------------------------
# profiles


def _close(a: float, b: float, scale: float) -> bool:
    return abs(a - b) <= 1e-10 * scale


def robust_profile(cfg: GameConfig, eq: RobustEquilibrium | None = None) -> StrategyProfile:
    """The robust equilibrium as a profile, with off-path play from the solver tables.

    Off path the seller prices by the tables, nature sets the threshold so
    the pool below it has the mean of the cutoff type, and the buyer buys
    when its posterior mean exceeds that cutoff.
    """
    F, delta, T = cfg.dist, cfg.delta, cfg.horizon
    if eq is None:
        eq = solve_robust(cfg)
    solver = eq.pressed_eq.solver
    scale = max(1.0, abs(F.hi))
    prices = list(eq.prices)
    cuts = list(eq.cutoffs)
    masses = list(eq.pressed_eq.masses)
    states = [F.hi] + list(eq.thresholds.thresholds)
    tails = [0.0] * (len(prices) + 1)
    for k in range(len(prices) - 1, -1, -1):
        tails[k] = prices[k] * (masses[k] - masses[k + 1]) + delta * tails[k + 1]
    tol = 1e-9 * scale

    def on_path(t, y):
        k = t - 1
        return 0 <= k < len(prices) and _close(y, states[k], scale)

    @lru_cache(maxsize=65536)
    def next_mass(t, p):
        return solver.next_mass(t, p)

    @lru_cache(maxsize=65536)
    def cutoff(t, p):
        return solver.cutoff(t, p)

    def seller(t, y, mode):
        if on_path(t, y):
            return prices[t - 1]
        return solver.price_at(t, float(F.cdf(y)))

    def nature(t, y, p, mode):
        if on_path(t, y) and _close(p, prices[t - 1], scale):
            return states[t]
        q = next_mass(t, p)
        if q >= float(F.cdf(y)):
            return y
        return float(F.quantile(q)) if q > 0 else F.lo

    def buyer(t, m, p, mode):
        k = t - 1
        c = cuts[k] if 0 <= k < len(prices) and _close(p, prices[k], scale) else cutoff(t, p)
        return 1.0 if m > c + tol else 0.0

    def hint(t, y, mode):
        if T is not None and t > T:
            return 0.0
        if on_path(t, y):
            return tails[t - 1]
        q = float(F.cdf(y))
        # the period-t value table is the continuation stored for period t - 1
        if T is None:
            return float(solver.stage(t).value(q))
        if t >= 2:
            return float(solver.stage(t - 1).value(q))
        return solver.value_at(t, q)

    return StrategyProfile(seller, nature, buyer, value_hint=hint, name="robust",
                           spec={"kind": "robust"})


def constant_price_profile(cfg: GameConfig, v_star: float, punishment: StrategyProfile | None = None) -> StrategyProfile:
    """Constant price ``E[v]`` with no information, reverting to the robust profile after a price deviation."""
    F, delta, T = cfg.dist, cfg.delta, cfg.horizon
    if punishment is None:
        punishment = robust_profile(cfg)
    if T is None:
        pun_values = punishment.value_hint(1, F.hi, "punish")
    else:
        pun_values = [punishment.value_hint(t, F.hi, "punish") for t in range(1, T + 1)]
    res = constant_price_equilibrium(F, delta, v_star, pun_values, horizon=T)
    if not res.valid:
        raise PreconditionError(f"constant-price construction invalid: {res.violated}")
    mean, scale = F.mean, max(1.0, abs(F.hi))
    tol = 1e-9 * scale

    def mode_rule(t, y, p, mode):
        if mode == "normal" and not _close(p, mean, scale):
            return "punish"
        return mode

    def seller(t, y, mode):
        return mean if mode == "normal" else punishment.seller_rule(t, y, mode)

    def nature(t, y, p, mode):
        return y if mode == "normal" else punishment.nature_rule(t, y, p, mode)

    def buyer(t, m, p, mode):
        if mode != "normal":
            return punishment.buyer_rule(t, m, p, mode)
        if abs(m - p) <= tol:
            return res.last_period_rho if T is not None and t == T else res.rho
        return 1.0 if m > p else 0.0

    def hint(t, y, mode):
        if mode != "normal":
            return punishment.value_hint(t, y, mode)
        return v_star if _close(y, F.hi, scale) else None

    return StrategyProfile(seller, nature, buyer, mode_rule, hint, name="constant-price",
                           spec={"kind": "constant-price", "v_star": v_star})


def commitment_profile(cfg: GameConfig) -> StrategyProfile:
    """Two-period play against nature's committed process.

    Nature fixes the period-one threshold in advance and reveals nothing in
    period two as long as the seller posts the worst-case continuation
    price; a higher price is met with the static worst-case threshold.
    """
    if cfg.horizon != 2:
        raise PreconditionError("the commitment profile is defined for two periods")
    F, delta = cfg.dist, cfg.delta
    res = nature_commitment_profit(F, delta)
    G = press(F)
    scale = max(1.0, abs(F.hi))
    tol = 1e-9 * scale

    @lru_cache(maxsize=4096)
    def pi2(y):
        return _truncated_static_profit(F, y)

    def seller(t, y, mode):
        return res.p1 if t == 1 else pi2(y)

    def nature(t, y, p, mode):
        if t == 1:
            return min(res.threshold, y)
        if p <= pi2(y) + tol:
            return y
        return min(float(G.L_inv(min(p, F.hi))), y) if p > F.lo else F.lo

    def buyer(t, m, p, mode):
        if t == 1:
            c = (p - delta * pi2(res.threshold)) / (1 - delta)
            return 1.0 if m > c + tol else 0.0
        return 1.0 if m > p + tol else 0.0

    return StrategyProfile(seller, nature, buyer, name="commitment", spec={"kind": "commitment"})


def profile_table(profile: StrategyProfile, cfg: GameConfig) -> dict:
    """On-path rules as a JSON table that ``profile_from_json`` reads back."""
    rows = []
    for per in public_path(profile, cfg):
        # the cutoff is the lowest posterior mean that buys; the pool below z has mean L(z)
        rows.append({
            "t": per.t, "state": per.y, "price": per.price, "threshold": per.z,
            "cutoff": float(cfg.dist.cond_mean_below(per.z)) if per.lo_mass > 0 else cfg.dist.lo,
            "mode": per.mode,
        })
    return {"kind": "table", "source": profile.name, "rows": rows}


def table_profile(rows: Sequence[dict], F: ValueDistribution) -> StrategyProfile:
    """Profile defined only on tabulated states; anything else is an error."""
    scale = max(1.0, abs(F.hi))
    tol = 1e-9 * scale
    by_t: dict[int, dict] = {}
    for r in rows:
        try:
            by_t[int(r["t"])] = {k: float(r[k]) for k in ("state", "price", "threshold", "cutoff")}
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"malformed profile row {r!r}") from exc

    def row(t, y):
        r = by_t.get(t)
        if r is None or abs(r["state"] - y) > tol:
            raise ProfileError(f"profile has no entry for period {t}, state {y:.12g}")
        return r

    def seller(t, y, mode):
        return row(t, y)["price"]

    def nature(t, y, p, mode):
        r = row(t, y)
        if abs(r["price"] - p) > tol:
            raise ProfileError(f"profile has no nature response at period {t}, state {y:.12g}, price {p:.12g}")
        return r["threshold"]

    def buyer(t, m, p, mode):
        r = by_t.get(t)
        if r is None or abs(r["price"] - p) > tol:
            raise ProfileError(f"profile has no buyer response at period {t}, price {p:.12g}")
        return 1.0 if m > r["cutoff"] + tol else 0.0

    return StrategyProfile(seller, nature, buyer, name="table", spec={"kind": "table", "rows": list(rows)})


def profile_from_json(obj: dict | str, cfg: GameConfig) -> StrategyProfile:
    if isinstance(obj, str):
        try:
            obj = json.loads(obj)
        except json.JSONDecodeError as exc:
            raise DomainError(f"malformed profile JSON: {exc}") from exc
    if not isinstance(obj, dict) or "kind" not in obj:
        raise DomainError("profile JSON needs a 'kind' field")
    kind = obj["kind"]
    if kind == "robust":
        return robust_profile(cfg)
    if kind == "constant-price":
        if "v_star" not in obj:
            raise DomainError("constant-price profile needs 'v_star'")
        return constant_price_profile(cfg, float(obj["v_star"]))
    if kind == "commitment":
        return commitment_profile(cfg)
    if kind == "table":
        return table_profile(obj.get("rows", []), cfg.dist)
    raise DomainError(f"unknown profile kind {kind!r}")


# ---------------------------------------------------------------------------
# Monte Carlo


@dataclass
class SimReport:
    n_paths: int
    profit_mean: float
    profit_ci: tuple[float, float]
    profit_se: float
    surplus_mean: float
    surplus_ci: tuple[float, float]
    surplus_se: float
    sale_time_histogram: dict[int, int]
    unsold: int
    mean_sale_time: float | None
    max_seller_deviation_gain: float | None = None
    max_nature_deviation_drop: float | None = None
    max_buyer_violation: float | None = None
    metadata: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "n_paths": self.n_paths,
            "profit_mean": self.profit_mean,
            "profit_ci": list(self.profit_ci),
            "profit_se": self.profit_se,
            "surplus_mean": self.surplus_mean,
            "surplus_ci": list(self.surplus_ci),
            "surplus_se": self.surplus_se,
            "sale_time_histogram": {str(k): v for k, v in self.sale_time_histogram.items()},
            "unsold": self.unsold,
            "mean_sale_time": self.mean_sale_time,
            "max_seller_deviation_gain": self.max_seller_deviation_gain,
            "max_nature_deviation_drop": self.max_nature_deviation_drop,
            "max_buyer_violation": self.max_buyer_violation,
            "metadata": self.metadata,
        }


def _run_block(F, delta, path, n, seed_seq):
    rng = np.random.default_rng(seed_seq)
    v = np.asarray(F.quantile(rng.random(n)), dtype=float)
    alive = np.ones(n, dtype=bool)
    profit = np.zeros(n)
    surplus = np.zeros(n)
    when = np.zeros(n, dtype=np.int64)
    disc = 1.0
    for per in path:
        u = rng.random(n)
        b = np.where(v > per.z, per.b_hi, per.b_lo)
        buy = alive & (u < b)
        profit[buy] = disc * per.price
        surplus[buy] = disc * (v[buy] - per.price)
        when[buy] = per.t
        alive &= ~buy
        disc *= delta
    counts = np.bincount(when, minlength=len(path) + 1)
    pm, sm = profit.mean(), surplus.mean()
    return (n, pm, float(((profit - pm) ** 2).sum()), sm, float(((surplus - sm) ** 2).sum()),
            float(when[when > 0].sum()), counts)


def _pooled(parts, i):
    """Combine block means and centred sums of squares (parallel variance formula)."""
    n, mean, m2 = 0, 0.0, 0.0
    for part in parts:
        nb, mb, m2b = part[0], part[i], part[i + 1]
        tot = n + nb
        d = mb - mean
        mean += d * nb / tot
        m2 += m2b + d * d * n * nb / tot
        n = tot
    return mean, m2


def simulate(profile: StrategyProfile, cfg: GameConfig, n_paths: int, seed: int = 0, jobs: int = 1,
             audit: bool = False) -> SimReport:
    """Monte Carlo play of the profile.

    Paths are split into fixed blocks with their own child seeds, so the
    result is identical for any number of workers.
    """
    if n_paths < 1:
        raise DomainError("n_paths must be at least 1")
    F, delta = cfg.dist, cfg.delta
    path = public_path(profile, cfg)
    sizes = [BLOCK] * (n_paths // BLOCK) + ([n_paths % BLOCK] if n_paths % BLOCK else [])
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    work = lambda i: _run_block(F, delta, path, sizes[i], seeds[i])
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(work, range(len(sizes))))
    else:
        parts = [work(i) for i in range(len(sizes))]
    tsum = sum(p[5] for p in parts)
    counts = sum(p[6] for p in parts)
    n = n_paths

    def stats(i):
        mean, m2 = _pooled(parts, i)
        se = math.sqrt(m2 / max(n - 1, 1) / n)
        return mean, (mean - 1.96 * se, mean + 1.96 * se), se

    pm, pci, pse = stats(1)
    sm, sci, sse = stats(3)
    sold = int(counts[1:].sum())
    hist = {t: int(c) for t, c in enumerate(counts) if t > 0 and c > 0}
    report = SimReport(
        n_paths=n, profit_mean=pm, profit_ci=pci, profit_se=pse, surplus_mean=sm, surplus_ci=sci,
        surplus_se=sse, sale_time_histogram=hist, unsold=n - sold,
        mean_sale_time=tsum / sold if sold else None,
        metadata={"seed": seed, "profile": profile.name, "periods_simulated": len(path),
                  "nature_deviations": NATURE_SPACE},
    )
    if audit:
        report.max_seller_deviation_gain = audit_seller(profile, cfg, jobs=jobs).value
        report.max_nature_deviation_drop = audit_nature(profile, cfg, jobs=jobs).value
        report.max_buyer_violation = audit_buyer(profile, cfg).value
    return report


# ---------------------------------------------------------------------------
# audits


@dataclass
class AuditResult:
    value: float
    period: int | None
    state: float | None
    deviation: float | None
    states_checked: int
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "value": self.value, "period": self.period, "state": self.state,
            "deviation": self.deviation, "states_checked": self.states_checked, "notes": self.notes,
        }


def _audit_states(profile, cfg, max_states):
    path = public_path(profile, cfg)
    seen, states = set(), []
    for per in path:
        key = (per.t if cfg.horizon is not None else 0, round(per.y, 12), per.mode)
        if key in seen:
            continue
        seen.add(key)
        states.append(per)
        if len(states) >= max_states:
            break
    return path, states


def _run_audit(states, one, jobs):
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            found = list(pool.map(one, states))
    else:
        found = [one(s) for s in states]
    best = (-math.inf, None, None, None)
    for f in found:
        if f[0] > best[0]:
            best = f
    return best


def audit_seller(profile: StrategyProfile, cfg: GameConfig, price_grid: Sequence[float] | None = None,
                 max_states: int = 64, jobs: int = 1) -> AuditResult:
    """Largest gain from a one-shot price deviation at any on-path state.

    After the deviation nature, the buyer and the seller's later self all
    follow the profile, including its off-path and punishment rules.
    """
    F = cfg.dist
    grid = np.linspace(F.lo, F.hi, 256) if price_grid is None else np.asarray(price_grid, dtype=float)
    _, states = _audit_states(profile, cfg, max_states)

    def one(per):
        on = _step_value(profile, cfg, per.t, per.y, per.mode)
        gains = [(_step_value(profile, cfg, per.t, per.y, per.mode, price=float(p)) - on, float(p)) for p in grid]
        g, p = max(gains)
        return g, per.t, per.y, p

    g, t, y, p = _run_audit(states, one, jobs)
    return AuditResult(g, t, y, p, len(states))


def audit_nature(profile: StrategyProfile, cfg: GameConfig, threshold_grid: Sequence[float] | None = None,
                 max_states: int = 64, jobs: int = 1) -> AuditResult:
    """Largest profit reduction nature forgoes by following the profile."""
    F = cfg.dist
    grid = np.linspace(F.lo, F.hi, 256) if threshold_grid is None else np.asarray(threshold_grid, dtype=float)
    _, states = _audit_states(profile, cfg, max_states)

    def one(per):
        on = _step_value(profile, cfg, per.t, per.y, per.mode)
        zs = np.unique(np.append(np.clip(grid, F.lo, per.y), per.y))
        drops = [(on - _step_value(profile, cfg, per.t, per.y, per.mode, threshold=float(z)), float(z)) for z in zs]
        d, z = max(drops)
        return max(d, 0.0), per.t, per.y, z

    d, t, y, z = _run_audit(states, one, jobs)
    return AuditResult(d, t, y, z, len(states), [f"nature deviations: {NATURE_SPACE}"])


def audit_buyer(profile: StrategyProfile, cfg: GameConfig, max_states: int = 64) -> AuditResult:
    """Largest violation of the buyer's stopping inequality at reachable information cells.

    The buyer's information is an interval of values; each period's
    threshold may split it.  The continuation value is the best stopping
    time against the public price path, with later splits taken into
    account.  A rule that buys with positive probability violates the
    inequality by how much waiting beats buying, and a rule that waits with
    positive probability by how much buying beats waiting.
    """
    F, delta = cfg.dist, cfg.delta
    path = public_path(profile, cfg, through_clearing=True)
    S = len(path)
    p = np.array([per.price for per in path])
    z = np.array([per.z for per in path])
    eps = 1e-12 * max(1.0, abs(F.hi))

    def splits_after(s, a, b):
        zs = z[s:]
        return bool(np.any((zs > a + eps) & (zs < b - eps)))

    def closed(s, m):
        # no further information: pick the best single purchase date
        if s >= S:
            return 0.0
        k = np.arange(S - s)
        return max(0.0, float(np.max(delta**k * (m - p[s:]))))

    def pieces(s, a, b):
        out = []
        if z[s] > a + eps and z[s] < b - eps:
            cand = [(a, z[s]), (z[s], b)]
        else:
            cand = [(a, b)]
        total = float(F.cdf(b) - F.cdf(a))
        for lo_, hi_ in cand:
            mass = float(F.cdf(hi_) - F.cdf(lo_))
            if mass > 0:
                out.append((lo_, hi_, mass / total, float(F.interval_mean(lo_, hi_))))
        return out

    # forward: intervals carried per period (on-path ones, and ones that split again)
    levels: list[dict] = [dict() for _ in range(S + 1)]
    start = (F.lo - 1.0, F.hi)
    levels[0][start] = True
    for s in range(S):
        for (a, b), on in levels[s].items():
            for lo_, hi_, _, m in pieces(s, a, b):
                b_rule = profile.buyer_rule(path[s].t, m, p[s], path[s].next_mode)
                still = on and b_rule < 1.0
                if s + 1 < S and (splits_after(s + 1, lo_, hi_) or (still and s + 1 < max_states)):
                    key = (lo_, hi_)
                    levels[s + 1][key] = levels[s + 1].get(key, False) or still
    # backward: W[s][I] = value before period s's signal
    W: list[dict] = [dict() for _ in range(S + 1)]

    def wait_value(s, lo_, hi_, m):
        if s >= S:
            return 0.0
        if (lo_, hi_) in W[s]:
            return W[s][(lo_, hi_)]
        return closed(s, m)

    worst = (0.0, None, None, None)
    for s in range(S - 1, -1, -1):
        for (a, b), on in levels[s].items():
            total = 0.0
            for lo_, hi_, prob, m in pieces(s, a, b):
                now = m - p[s]
                wait = delta * wait_value(s + 1, lo_, hi_, m)
                total += prob * max(now, wait)
                if on and s < max_states:
                    b_rule = profile.buyer_rule(path[s].t, m, p[s], path[s].next_mode)
                    v = 0.0
                    if b_rule > 0:
                        v = max(v, wait - now)
                    if b_rule < 1:
                        v = max(v, now - wait)
                    if v > worst[0]:
                        worst = (v, path[s].t, m, p[s])
            W[s][(a, b)] = total
    v, t, m, price = worst
    return AuditResult(v, t, m, price, min(S, max_states),
                       ["state is the violating posterior mean; deviation is the posted price"])


def discrete_full_information_drop(q: float, delta: float) -> float:
    """Profit nature removes by revealing binary values fully in period one.

    Along the sophisticated two-period path the informed high type waits
    whenever ``1 - p1 < delta (1 - p2)``, so the seller only sells in period
    two.  A positive return means the deviation is profitable for nature.
    """
    res = sophisticated_discrete_two_period(q, delta)
    if 1 - res.p1 >= delta * (1 - res.p2):
        informed = res.p1 * q
    else:
        informed = delta * res.p2 * q
    return res.profit - informed
