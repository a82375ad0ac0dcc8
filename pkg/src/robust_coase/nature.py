"""Nature's side of the game: commitment, worst-case threshold search and PRM checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from .dist import Truncated, ValueDistribution, bisect_increasing, press
from .errors import DomainError, PreconditionError
from .robust import indifference_residuals, indifference_thresholds, profit_of_thresholds

RESIDUAL_SLACK = 1e-12


# ---------------------------------------------------------------------------
# commitment benchmark


@dataclass(frozen=True)
class CommitmentResult:
    p1: float
    threshold: float
    profit: float
    regime: str  # "interior" or "no-first-period-sale"
    p2: float


def _truncated_static_profit(F: ValueDistribution, y: float) -> float:
    """Worst-case static profit per unit of mass among buyers with ``v <= y``.

    Buyers below ``y`` are pressed: the share ``u`` with the lowest values
    is pooled at ``L(F^{-1}(u F(y)))``, so the seller solves
    ``max_u L(F^{-1}(u F(y))) (1 - u)``.
    """
    if y <= F.lo:
        return F.lo
    m = float(F.cdf(y))
    price = lambda u: np.asarray(F.cond_mean_below(F.quantile(np.asarray(u) * m)), dtype=float)
    u = np.linspace(0.0, 1.0, 257)
    vals = price(u) * (1 - u)
    j = int(np.argmax(vals))
    a, b = u[max(j - 1, 0)], u[min(j + 1, u.size - 1)]
    res = optimize.minimize_scalar(lambda s: -float(price(s)) * (1 - s), bounds=(a, b), method="bounded",
                                   options={"xatol": 1e-13})
    return max(float(vals[j]), -float(res.fun))


def _commitment_objective(F: ValueDistribution, delta: float, y: float):
    pi2 = _truncated_static_profit(F, y)
    Ly = float(F.cond_mean_below(y)) if y > F.lo else F.lo
    p1 = (1 - delta) * Ly + delta * pi2
    Fy = float(F.cdf(y))
    return p1 * (1 - Fy) + delta * pi2 * Fy, p1, pi2


def nature_commitment_profit(F: ValueDistribution, delta: float, grid_n: int = 401) -> CommitmentResult:
    """Two-period profit when nature commits to its period-2 information in advance.

    After period 1 nature reveals nothing further provided the seller posts
    the worst-case continuation price ``Pi_2(y)``, so a buyer told ``v <= y``
    expects ``L(y) - Pi_2(y)`` from waiting.  The period-1 price that leaves
    this pool indifferent is ``(1 - delta) L(y) + delta Pi_2(y)``; choosing
    ``p_1`` is thus the same as choosing ``y``, and the seller picks the best.
    """
    if not (0 < delta < 1):
        raise DomainError("discount factor must lie in (0, 1)")
    ys = np.linspace(F.lo, F.hi, grid_n)
    vals = np.array([_commitment_objective(F, delta, y)[0] for y in ys])
    j = int(np.argmax(vals))
    a, b = ys[max(j - 1, 0)], ys[min(j + 1, grid_n - 1)]
    res = optimize.minimize_scalar(lambda y: -_commitment_objective(F, delta, y)[0], bounds=(a, b),
                                   method="bounded", options={"xatol": 1e-12})
    y = float(res.x)
    if -res.fun < vals[j]:
        y = float(ys[j])
    if _commitment_objective(F, delta, F.hi)[0] >= _commitment_objective(F, delta, y)[0] - 1e-15:
        y = F.hi
    profit, p1, pi2 = _commitment_objective(F, delta, y)
    regime = "no-first-period-sale" if y >= F.hi - 1e-9 * (F.hi - F.lo) else "interior"
    return CommitmentResult(p1=p1, threshold=y, profit=profit, regime=regime, p2=pi2)


# ---------------------------------------------------------------------------
# worst-case partitional process against a fixed price path


@dataclass
class WorstCaseResult:
    thresholds: list[float]
    min_profit: float
    residuals: list[float]
    method: str
    feasible_points: int
    notes: list[str] = field(default_factory=lambda: ["search restricted to partitional (threshold) processes"])

    def to_json(self) -> dict:
        return {
            "thresholds": self.thresholds,
            "min_profit": self.min_profit,
            "residuals": self.residuals,
            "method": self.method,
            "feasible_points": self.feasible_points,
            "notes": self.notes,
        }


class _ThresholdProblem:
    def __init__(self, F, prices, delta):
        self.F = F
        self.p = np.asarray(prices, dtype=float)
        self.delta = float(delta)
        self.n = self.p.size
        self.fixed_last = self.p[-1] <= F.lo + 1e-12 * max(1.0, F.hi)
        self.dims = self.n - 1 if self.fixed_last else self.n

    def full(self, free: Sequence[float]) -> list[float]:
        ys = [float(v) for v in free]
        return ys + [self.F.lo] if self.fixed_last else ys

    def evaluate_grid(self, axes: list[np.ndarray]):
        """Profit over the product grid, ``inf`` where infeasible."""
        F, p, delta, n = self.F, self.p, self.delta, self.n
        d = len(axes)
        shape = [1] * d
        Fy, My = [], []
        for k, ax in enumerate(axes):
            s = list(shape)
            s[k] = ax.size
            Fy.append(np.asarray(F.cdf(ax), dtype=float).reshape(s))
            My.append(np.asarray(F.partial_moment(ax), dtype=float).reshape(s))
        if self.fixed_last:
            Fy.append(np.zeros(shape))
            My.append(np.zeros(shape))
        Yk = [ax.reshape([ax.size if i == k else 1 for i in range(d)]) for k, ax in enumerate(axes)]
        ok = np.ones([ax.size for ax in axes], dtype=bool)
        for k in range(d - 1):
            ok &= Yk[k + 1] <= Yk[k]
        F_prev = [np.ones(shape)] + Fy[:-1]
        M_prev = [np.full(shape, F.mean)] + My[:-1]
        seg = [(M_prev[s] - My[s]) - p[s] * (F_prev[s] - Fy[s]) for s in range(n)]
        profit = sum(delta**s * p[s] * (F_prev[s] - Fy[s]) for s in range(n))
        for t in range(n):
            rhs = sum(delta ** (s - t) * seg[s] for s in range(t + 1, n))
            res = My[t] - p[t] * Fy[t] - rhs
            ok &= res <= RESIDUAL_SLACK
        profit = np.broadcast_to(profit, ok.shape)
        return np.where(ok, profit, np.inf), int(ok.sum())

    def feasible(self, ys: list[float]) -> bool:
        full = self.full(ys)
        if any(b > a for a, b in zip(full, full[1:])):
            return False
        return max(indifference_residuals(self.F, self.p, full, self.delta)) <= RESIDUAL_SLACK

    def profit(self, ys) -> float:
        return profit_of_thresholds(self.F, self.p, self.full(ys), self.delta)

    def raise_coordinate(self, ys: list[float], k: int, n_grid: int = 257) -> list[float]:
        """Push ``y_k`` to the largest feasible value with the others held fixed."""
        upper = self.F.hi if k == 0 else ys[k - 1]
        lower = ys[k + 1] if k + 1 < len(ys) else self.F.lo
        if upper <= lower:
            return ys
        cand = np.linspace(lower, upper, n_grid)
        trial = list(ys)
        feas = []
        for c in cand:
            trial[k] = float(c)
            feas.append(self.feasible(trial))
        idx = [i for i, f in enumerate(feas) if f]
        if not idx:
            return ys
        i = idx[-1]
        if i == n_grid - 1:
            best = float(cand[-1])
        else:
            a, b = float(cand[i]), float(cand[i + 1])
            for _ in range(60):
                m = 0.5 * (a + b)
                trial[k] = m
                if self.feasible(trial):
                    a = m
                else:
                    b = m
            best = a
        out = list(ys)
        if best > ys[k] or not self.feasible(ys):
            out[k] = best
        return out

    def polish(self, ys: list[float]) -> list[float]:
        """Constrained local minimization from a feasible start (SLSQP)."""
        F, p, delta = self.F, self.p, self.delta
        span = F.hi - F.lo
        # work in units of the support width so the finite-difference steps are sensible
        to_y = lambda z: [F.lo + span * float(v) for v in z]
        z0 = np.array([(v - F.lo) / span for v in ys])

        def cons(z):
            full = self.full(to_y(z))
            res = -np.asarray(indifference_residuals(F, p, full, delta)) / max(span, 1e-300)
            mono = np.diff(-np.asarray(full)) / span
            return np.concatenate([res, mono])

        out = optimize.minimize(
            lambda z: self.profit(to_y(z)), z0, method="SLSQP",
            bounds=[(0.0, 1.0)] * z0.size,
            constraints=[{"type": "ineq", "fun": cons}],
            options={"ftol": 1e-14, "maxiter": 500},
        )
        cand = to_y(np.clip(out.x, 0.0, 1.0))
        return cand

    def ascend(self, ys: list[float], sweeps: int = 50) -> list[float]:
        for _ in range(sweeps):
            before = list(ys)
            for k in range(self.dims):
                ys = self.raise_coordinate(ys, k)
            if max(abs(a - b) for a, b in zip(ys, before)) < 1e-13:
                break
        return ys


def worst_case_partitional(
    F: ValueDistribution,
    prices: Sequence[float],
    delta: float,
    grid_n: int = 64,
    refinements: int = 2,
    max_full_grid: int = 300_000,
) -> WorstCaseResult:
    """Lowest obedient profit over threshold processes against fixed prices.

    Profit falls as any threshold rises (each price exceeds the discounted
    next one), so the search is for the highest thresholds that keep every
    pool willing to wait.  Small problems use a full product grid with
    refinement passes; larger ones use coordinate sweeps seeded at the
    all-clear process and at the indifference thresholds.
    """
    p = np.asarray(prices, dtype=float)
    if p.size == 0:
        raise DomainError("empty price path")
    if np.any(np.diff(p) > 0):
        raise PreconditionError("worst-case search needs a weakly declining price path")
    if not (0 < delta < 1):
        raise DomainError("discount factor must lie in (0, 1)")
    prob = _ThresholdProblem(F, p, delta)
    if prob.dims == 0:
        full = prob.full([])
        return WorstCaseResult(full, prob.profit([]), indifference_residuals(F, p, full, delta), "trivial", 1)

    feasible_points = 0
    if grid_n ** prob.dims <= max_full_grid:
        axes = [np.linspace(F.lo, F.hi, grid_n) for _ in range(prob.dims)]
        best = None
        for _ in range(refinements + 1):
            vals, nfeas = prob.evaluate_grid(axes)
            feasible_points += nfeas
            if nfeas == 0:
                break
            idx = np.unravel_index(int(np.argmin(vals)), vals.shape)
            best = [float(ax[i]) for ax, i in zip(axes, idx)]
            new_axes = []
            for ax, i in zip(axes, idx):
                a = ax[max(i - 2, 0)]
                b = ax[min(i + 2, ax.size - 1)]
                new_axes.append(np.unique(np.concatenate([np.linspace(a, b, grid_n), [ax[i]]])))
            axes = new_axes
        starts = [best] if best is not None else []
        method = "grid+ascent"
    else:
        seed = indifference_thresholds(F, p, delta)[: prob.dims]
        seed = list(np.minimum.accumulate(np.clip(seed, F.lo, F.hi)))
        starts = [[F.lo] * prob.dims]
        if prob.feasible(seed):
            starts.append(seed)
        method = "coordinate-sweeps"

    if not starts:
        full = [F.lo] * prob.n
        res = WorstCaseResult(full, profit_of_thresholds(F, p, full, delta),
                              indifference_residuals(F, p, full, delta), method, 0)
        res.notes.append("no obedient grid point found; returning the all-clear process")
        return res

    candidates = list(starts)
    for s in starts:
        climbed = prob.ascend(list(s))
        candidates += [climbed, prob.ascend(prob.polish(climbed))]
    candidates = [c for c in candidates if prob.feasible(c)]
    best = min(candidates, key=lambda c: (prob.profit(c), c))
    full = prob.full(best)
    res = WorstCaseResult(
        thresholds=full,
        min_profit=prob.profit(best),
        residuals=indifference_residuals(F, p, full, delta),
        method=method,
        feasible_points=feasible_points,
    )
    if method == "coordinate-sweeps":
        res.notes.append("too many periods for a full grid: coordinate sweeps give a local minimum")
    return res


# ---------------------------------------------------------------------------
# pressed-ratio monotonicity


@dataclass(frozen=True)
class PRMReport:
    holds: bool
    violations: list[float]
    max_increase: float = 0.0


def pressed_ratio(F: ValueDistribution, v):
    """``v / L^{-1}(v)``: a pooled value over the threshold that produces it."""
    G = press(F)
    v = np.asarray(v, dtype=float)
    return v / np.asarray(G.L_inv(v), dtype=float)


def check_prm(F: ValueDistribution, n: int = 1024, slack: float = 1e-9) -> PRMReport:
    mean = F.mean
    v = np.linspace(F.lo, mean, n + 2)[1:-1]
    r = pressed_ratio(F, v)
    inc = np.diff(r)
    bad = np.nonzero(inc > slack)[0]
    return PRMReport(
        holds=bad.size == 0,
        violations=[float(v[i + 1]) for i in bad],
        max_increase=float(inc.max()) if inc.size else 0.0,
    )


@dataclass(frozen=True)
class NeighborhoodResult:
    y_star: float
    whole_support: bool
    ok: bool
    note: str = ""


def prm_neighborhood(F: ValueDistribution, iters: int = 40) -> NeighborhoodResult:
    """Largest truncation point ``y*`` such that ``F`` restricted to ``[lo, y*]`` satisfies PRM."""
    if not F.has_gap:
        raise PreconditionError("the PRM neighbourhood result needs a gap (lo > 0)")
    if check_prm(F).holds:
        return NeighborhoodResult(F.hi, True, True)
    width = F.hi - F.lo
    a = F.lo + 1e-3 * width
    if not check_prm(Truncated(F, F.lo, a)).holds:
        return NeighborhoodResult(F.lo, False, False, "no passing truncation found near the bottom of the support")
    b = F.hi
    for _ in range(iters):
        m = 0.5 * (a + b)
        if check_prm(Truncated(F, F.lo, m)).holds:
            a = m
        else:
            b = m
    return NeighborhoodResult(a, False, True)


def perturbation_sign(F: ValueDistribution, prices, thresholds, t: int, delta: float) -> float:
    """``vbar_{t+1} y_t - vbar_t y_{t+1}`` for a 0-based period index ``t``.

    ``vbar_s = (p_s - delta p_{s+1}) / (1 - delta)`` is the posterior mean
    that makes the period-``s`` pool indifferent; in the last period it is
    ``p_s``.  A nonnegative value means that moving mass to later periods
    does not lower profit, so the indifferent process is locally worst.
    """
    p = np.asarray(prices, dtype=float)
    y = np.asarray(thresholds, dtype=float)
    if not (0 <= t < p.size - 1):
        raise DomainError(f"period index {t} needs a following period")

    def vbar(s):
        if s == p.size - 1:
            return p[s]
        return (p[s] - delta * p[s + 1]) / (1 - delta)

    return float(vbar(t + 1) * y[t] - vbar(t) * y[t + 1])


def worse_past_threshold(F: ValueDistribution, p1: float, p2_hat: float, delta: float) -> float:
    """Threshold ``y*`` with ``E[v | v > y*] = (p1 - delta p2_hat) / (1 - delta)``."""
    v_star = (p1 - delta * p2_hat) / (1 - delta)
    if v_star <= F.mean:
        raise PreconditionError(
            f"cutoff {v_star:.6g} does not exceed the mean {F.mean:.6g}; the threshold is not characterized"
        )
    if v_star >= F.hi:
        raise PreconditionError(f"unreachable cutoff {v_star:.6g}: conditional means never exceed {F.hi}")
    return float(bisect_increasing(F.cond_mean_above, np.asarray(v_star), F.lo, F.hi))
