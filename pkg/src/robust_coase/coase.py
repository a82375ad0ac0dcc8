"""Known-values durable-goods monopoly solved by backward induction.

The state is the mass ``q`` of buyers still in the market (those with values
at or below ``x(q) = D^{-1}(q)``).  Choosing the next state ``q'`` is the same
as choosing a price: the marginal buyer ``x(q')`` must be indifferent between
buying now and buying next period, so

    price(q') = (1 - delta) x(q') + delta P_{t+1}(q'),

and the stage problem is ``max_{q' <= q} price(q') (q - q') + delta V_{t+1}(q')``.
Continuation price and value functions are tabulated on a uniform ``q`` grid
and interpolated with cubic splines.  The period after the last one is
represented by ``P = x`` and ``V = 0``, which turns the final stage into the
static monopoly problem.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import CubicSpline, make_interp_spline

from .dist import ValueDistribution
from .errors import DomainError, NonConvergenceError, PreconditionError

log = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class GameConfig:
    dist: ValueDistribution
    delta: float
    horizon: int | None = 2  # None means an infinite horizon
    root_tol: float = 1e-10
    integral_tol: float = 1e-10
    grid_n: int = 513
    allow_no_gap: bool = False
    cap: int = 10_000
    stationarity_tol: float = 1e-9

    def __post_init__(self):
        if not (0.0 < self.delta < 1.0):
            raise DomainError(f"discount factor must lie in (0, 1), got {self.delta}")
        if self.horizon is not None and (int(self.horizon) != self.horizon or self.horizon < 1):
            raise DomainError(f"horizon must be a positive integer or infinite, got {self.horizon}")
        if self.grid_n < 16:
            raise DomainError("grid_n must be at least 16")
        if self.root_tol <= 0 or self.integral_tol <= 0:
            raise DomainError("tolerances must be positive")

    @property
    def infinite(self) -> bool:
        return self.horizon is None


@dataclass
class KnownValuesEquilibrium:
    prices: list[float]
    cutoffs: list[float]
    masses: list[float]  # remaining mass at the start of each period, plus the final remainder
    profit: float
    surplus: float
    clearing_time: int | None
    delta: float
    horizon: int | None
    multiple_optima: bool = False
    iterations: int | None = None
    stationarity_gap: float | None = None
    solver: "KnownValuesSolver | None" = field(default=None, repr=False, compare=False)

    @property
    def periods(self) -> int:
        return len(self.prices)

    def to_json(self) -> dict:
        return {
            "prices": self.prices,
            "cutoffs": self.cutoffs,
            "masses": self.masses,
            "profit": self.profit,
            "surplus": self.surplus,
            "clearing_time": self.clearing_time,
            "delta": self.delta,
            "horizon": "inf" if self.horizon is None else self.horizon,
            "multiple_optima": self.multiple_optima,
            "stationarity_gap": self.stationarity_gap,
        }


class _Terminal:
    """Continuation after the last period: the marginal buyer pays her value."""

    def __init__(self, d: ValueDistribution):
        self.d = d

    def price(self, q):
        return np.asarray(self.d.quantile(q), dtype=float)

    def dprice(self, q):
        return np.asarray(self.d.quantile_derivative(q), dtype=float)

    def value(self, q):
        return np.zeros_like(np.asarray(q, dtype=float))

    dvalue = value


def _interpolant(x, y):
    if x.size >= 4:
        return CubicSpline(x, y)
    return make_interp_spline(x, y, k=x.size - 1)


class _Tabled:
    """Continuation tables, stored as smooth pieces between break points.

    The seller's policy can jump where two local optima tie, which makes the
    price table discontinuous; a single spline across such a jump rings and
    the error compounds over iterations.  Each piece is splined separately.
    """

    def __init__(self, grid, prices, values, policy, pieces=None):
        self.grid = grid
        self.prices = prices
        self.values = values
        self.policy = policy
        if pieces is None:
            pieces = [(grid, prices, values)]
        self.ends = np.array([pc[0][-1] for pc in pieces])
        self._P = [_interpolant(*pc[:2]) for pc in pieces]
        self._V = [_interpolant(pc[0], pc[2]) for pc in pieces]

    def _eval(self, funcs, q, nu=0):
        q = np.clip(np.asarray(q, dtype=float), 0.0, 1.0)
        if len(funcs) == 1:
            return funcs[0](q, nu)
        idx = np.minimum(np.searchsorted(self.ends, q, side="left"), len(funcs) - 1)
        out = np.empty_like(q)
        for k, f in enumerate(funcs):
            m = idx == k
            if np.any(m):
                out[m] = f(q[m], nu)
        return out

    def price(self, q):
        return self._eval(self._P, q)

    def dprice(self, q):
        return self._eval(self._P, q, 1)

    def value(self, q):
        return self._eval(self._V, q)

    def dvalue(self, q):
        return self._eval(self._V, q, 1)


SEED_MASS = 1e-4


def power_tail(d: ValueDistribution) -> tuple[float, float]:
    """Fit ``F^{-1}(q) ~ K q^alpha`` over the lowest quantiles."""
    q = np.geomspace(1e-9, SEED_MASS, 64)
    xq = np.asarray(d.quantile(q), dtype=float) - d.lo
    if np.any(xq <= 0):
        raise PreconditionError("quantile function vanishes near zero; no power-law tail")
    alpha, logK = np.polyfit(np.log(q), np.log(xq), 1)
    return float(alpha), float(np.exp(logK))


def homogeneous_stationary(alpha: float, delta: float, warmup: int = 2000):
    """Stationary solution for ``x(q) = q^alpha``: ``V = C q^(1+alpha)``, ``P = A q^alpha``, ``q' = lam q``.

    Stationarity pins ``A`` and ``C`` down as functions of ``lam``; the
    seller's first-order condition then gives a scalar equation in ``lam``.
    When it has several roots, the one nearest the finite-horizon limit
    (a short run of the coefficient recursion) is kept.
    """
    def coeffs(lam):
        la = lam**alpha
        A = (1 - delta) * la / (1 - delta * la)
        B = (1 - delta) + delta * A
        C = B * la * (1 - lam) / (1 - delta * lam ** (1 + alpha))
        return A, B, C

    def foc(lam):
        A, B, C = coeffs(lam)
        return B * (alpha * lam ** (alpha - 1) * (1 - lam) - lam**alpha) + delta * C * (1 + alpha) * lam**alpha

    A, C = 1.0, 0.0
    lam0 = 0.5
    for _ in range(warmup):
        B = (1 - delta) + delta * A
        # interior optimum of B s^a (1 - s) + delta C s^(1+a), by bisection on its derivative
        d = lambda s: B * (alpha * s ** (alpha - 1) * (1 - s) - s**alpha) + delta * C * (1 + alpha) * s**alpha
        lo_, hi_ = 1e-12, 1 - 1e-12
        if d(hi_) >= 0:
            lam0 = hi_
        else:
            lam0 = optimize.brentq(d, lo_, hi_, xtol=1e-15)
        A, C = B * lam0**alpha, B * lam0**alpha * (1 - lam0) + delta * C * lam0 ** (1 + alpha)
    grid = np.linspace(1e-6, 1 - 1e-6, 4001)
    vals = np.array([foc(x) for x in grid])
    roots = [optimize.brentq(foc, grid[i], grid[i + 1], xtol=1e-16)
             for i in range(grid.size - 1) if vals[i] == 0 or vals[i] * vals[i + 1] < 0]
    if not roots:
        raise NonConvergenceError("no stationary solution for the power-law tail")
    lam = min(roots, key=lambda r: abs(r - lam0))
    A, _, C = coeffs(lam)
    return A, C, lam


class _PowerLaw:
    """Exact stationary tables when ``F^{-1}(q) = K q^alpha`` on the whole support."""

    def __init__(self, K, alpha, A, C, lam):
        self.K, self.alpha, self.A, self.C, self.lam = K, alpha, A, C, lam

    def price(self, q):
        return self.A * self.K * np.asarray(q, dtype=float) ** self.alpha

    def dprice(self, q):
        q = np.maximum(np.asarray(q, dtype=float), 1e-300)
        return self.alpha * self.A * self.K * q ** (self.alpha - 1)

    def value(self, q):
        return self.C * self.K * np.asarray(q, dtype=float) ** (1 + self.alpha)

    def dvalue(self, q):
        return (1 + self.alpha) * self.C * self.K * np.asarray(q, dtype=float) ** self.alpha


class _Linear:
    """Piecewise-linear tables; robust to the jumps a stationary price table can have."""

    def __init__(self, grid, prices, values, policy):
        self.grid = grid
        self.prices = prices
        self.values = values
        self.policy = policy
        h = np.diff(grid)
        self._dP = np.diff(prices) / h
        self._dV = np.diff(values) / h

    def _cell(self, q):
        return np.clip(np.searchsorted(self.grid, q, side="right") - 1, 0, self.grid.size - 2)

    def price(self, q):
        return np.interp(q, self.grid, self.prices)

    def dprice(self, q):
        return self._dP[self._cell(q)]

    def value(self, q):
        return np.interp(q, self.grid, self.values)

    def dvalue(self, q):
        return self._dV[self._cell(q)]


class KnownValuesSolver:
    """Backward-induction tables for one distribution and discount factor.

    ``stage(t)`` is the continuation used by the seller in period ``t``, i.e.
    the tables of period ``t + 1``.
    """

    def __init__(self, d: ValueDistribution, delta: float, horizon: int | None, grid_n: int = 513,
                 stationarity_tol: float = 1e-9, cap: int = 10_000):
        self.d = d
        self.delta = float(delta)
        self.horizon = horizon
        if horizon is not None or not d.has_gap:
            self.grid = np.linspace(0.0, 1.0, grid_n)
        else:
            # linear tables need a finer grid; a geometric stretch resolves the bottom
            fine = np.linspace(0.0, 1.0, max(grid_n, 4 * (grid_n - 1) + 1))
            self.grid = np.unique(np.concatenate([fine, np.geomspace(1e-8, fine[1], 200)]))
        self._x_grid = np.asarray(d.quantile(self.grid), dtype=float)
        self.terminal = _Terminal(d)
        self.iterations = None
        if horizon is None:
            self._stationary = self._march() if d.has_gap else self._no_gap_tables(stationarity_tol, cap)
            self._tables = None
        else:
            # _tables[k] is the continuation for period k + 1, k = 1..T
            tables = {horizon: self.terminal}
            cont = self.terminal
            for t in range(horizon, 1, -1):
                cont = self._bellman(cont)
                tables[t - 1] = cont
            self._tables = tables

    # -- stage machinery -------------------------------------------------

    def _phi(self, cont, q):
        return (1 - self.delta) * np.asarray(self.d.quantile(q)) + self.delta * cont.price(q)

    def _obj(self, cont, q, qp):
        return self._phi(cont, qp) * (q - qp) + self.delta * cont.value(qp)

    def _dobj(self, cont, q, qp):
        dphi = (1 - self.delta) * np.asarray(self.d.quantile_derivative(qp)) + self.delta * cont.dprice(qp)
        return dphi * (q - qp) - self._phi(cont, qp) + self.delta * cont.dvalue(qp)

    def optimize(self, cont, states, candidates: np.ndarray | None = None):
        """Best next state for each entry of ``states``; ties go to the lower price."""
        states = np.atleast_1d(np.asarray(states, dtype=float))
        cand = self.grid if candidates is None else candidates
        if cont is self.terminal:
            phi_c = np.asarray(self.d.quantile(cand), dtype=float)
            v_c = np.zeros_like(cand)
        else:
            phi_c = (1 - self.delta) * np.asarray(self.d.quantile(cand)) + self.delta * cont.price(cand)
            v_c = cont.value(cand)
        Q = states[:, None]
        C = cand[None, :]
        mat = np.where(C <= Q, phi_c[None, :] * (Q - C) + self.delta * v_c[None, :], -np.inf)
        j = np.argmax(mat, axis=1)
        n = cand.size
        a = cand[np.maximum(j - 1, 0)]
        b = np.minimum(cand[np.minimum(j + 1, n - 1)], states)
        a = np.minimum(a, b)
        best = self._golden(cont, states, a, b)
        best = self._polish(cont, states, best, a, b)
        f_best = self._obj(cont, states, best)
        scale = 1e-13 * np.abs(f_best)
        f0 = self._obj(cont, states, np.zeros_like(states))
        best = np.where(f0 >= f_best - scale, 0.0, best)
        f_best = np.maximum(f_best, np.where(best == 0.0, f0, f_best))
        f_top = self._obj(cont, states, states)
        best = np.where(f_top > f_best + scale, states, best)
        val = self._obj(cont, states, best)
        price = self._phi(cont, best)
        return best, price, val

    def _golden(self, cont, q, a, b, iters: int = 90):
        a = a.copy()
        b = b.copy()
        c = b - GOLDEN * (b - a)
        d = a + GOLDEN * (b - a)
        fc = self._obj(cont, q, c)
        fd = self._obj(cont, q, d)
        for _ in range(iters):
            left = fc >= fd
            b = np.where(left, d, b)
            a = np.where(left, a, c)
            new_c = b - GOLDEN * (b - a)
            new_d = a + GOLDEN * (b - a)
            c_next = np.where(left, new_c, d)
            d_next = np.where(left, c, new_d)
            fc_next = np.where(left, self._obj(cont, q, new_c), fd)
            fd_next = np.where(left, fc, self._obj(cont, q, new_d))
            c, d, fc, fd = c_next, d_next, fc_next, fd_next
            if np.all(b - a < 1e-15):
                break
        return 0.5 * (a + b)

    def _polish(self, cont, q, x, a, b, iters: int = 34):
        # golden section only pins the argmax to ~sqrt(eps); refine on the derivative
        w = np.full_like(x, 1e-6)
        lo = np.maximum(x - w, a)
        hi = np.minimum(x + w, b)
        with np.errstate(invalid="ignore"):
            glo = self._dobj(cont, q, lo)
            ghi = self._dobj(cont, q, hi)
        ok = (glo > 0) & (ghi < 0) & np.isfinite(glo) & np.isfinite(ghi)
        if not np.any(ok):
            return x
        lo = np.where(ok, lo, x)
        hi = np.where(ok, hi, x)
        for _ in range(iters):
            m = 0.5 * (lo + hi)
            with np.errstate(invalid="ignore"):
                gm = self._dobj(cont, q, m)
            up = gm > 0
            lo = np.where(ok & up, m, lo)
            hi = np.where(ok & ~up, m, hi)
        return np.where(ok, 0.5 * (lo + hi), x)

    def _bellman(self, cont) -> _Tabled:
        grid = self.grid
        policy, prices, values = self.optimize(cont, grid)
        prices[0] = self.d.lo
        values[0] = 0.0
        policy[0] = 0.0
        breaks = self._find_breaks(cont, policy)
        if not breaks:
            return _Tabled(grid, prices, values, policy)
        pieces = []
        start_q, start_p, start_v = None, None, None
        lo_idx = 0
        for q_star, left, right in breaks:
            inside = (grid > (start_q if start_q is not None else -1.0)) & (grid < q_star)
            xs = grid[inside]
            ps, vs = prices[inside], values[inside]
            if start_q is not None:
                xs, ps, vs = np.r_[start_q, xs], np.r_[start_p, ps], np.r_[start_v, vs]
            xs, ps, vs = np.r_[xs, q_star], np.r_[ps, left[0]], np.r_[vs, left[1]]
            pieces.append(self._dedupe(xs, ps, vs))
            start_q, start_p, start_v = q_star, right[0], right[1]
        inside = grid > start_q
        xs = np.r_[start_q, grid[inside]]
        pieces.append(self._dedupe(xs, np.r_[start_p, prices[inside]], np.r_[start_v, values[inside]]))
        return _Tabled(grid, prices, values, policy, pieces)

    @staticmethod
    def _dedupe(xs, ps, vs):
        keep = np.r_[True, np.diff(xs) > 1e-12]
        return xs[keep], ps[keep], vs[keep]

    def _branch(self, cont, q, center, h):
        """Local optimum near ``center`` for a single state ``q``; returns (q', price, value)."""
        qa = np.array([q])
        a = np.array([min(max(center - 2 * h, 0.0), q)])
        b = np.array([min(center + 2 * h, q)])
        x = self._golden(cont, qa, a, b)
        x = self._polish(cont, qa, x, a, b)
        if center <= 0.0 and self._obj(cont, qa, np.zeros(1))[0] >= self._obj(cont, qa, x)[0]:
            x = np.zeros(1)
        return float(x[0]), float(self._phi(cont, x)[0]), float(self._obj(cont, qa, x)[0])

    def _find_breaks(self, cont, policy):
        """Points where the policy jumps or starts leaving the clearing corner."""
        grid = self.grid
        h = grid[1] - grid[0]
        out = []
        for i in range(1, grid.size - 1):
            lo_q, hi_q = grid[i], grid[i + 1]
            jump = policy[i + 1] - policy[i] > 3 * h
            corner = policy[i] == 0.0 and policy[i + 1] > 0.0 and not jump
            if not (jump or corner):
                continue
            if corner:
                # clearing stops being optimal where the marginal gain at q' = 0 turns positive
                g = lambda q: float(self._dobj(cont, np.array([q]), np.zeros(1))[0])
                a, b = lo_q, hi_q
                if not (g(a) <= 0 < g(b)):
                    continue
                q_star = a if g(a) == 0 else optimize.brentq(g, a, b, xtol=1e-15, rtol=1e-15)
                val = self.d.lo * q_star + self.delta * float(cont.value(0.0))
                out.append((q_star, (self.d.lo, val), (self.d.lo, val)))
                continue
            cl, cr = policy[i], policy[i + 1]
            diff = lambda q: self._branch(cont, q, cl, h)[2] - self._branch(cont, q, cr, h)[2]
            a, b = lo_q, hi_q
            da, db = diff(a), diff(b)
            if not (da >= 0 >= db):
                continue
            if da == 0:
                q_star = a
            elif db == 0:
                q_star = b
            else:
                q_star = optimize.brentq(diff, a, b, xtol=1e-15, rtol=1e-15)
            _, pl, vl = self._branch(cont, q_star, cl, h)
            _, pr, vr = self._branch(cont, q_star, cr, h)
            out.append((q_star, (pl, vl), (pr, vr)))
        return out

    def _march(self) -> "_Linear":
        """Stationary tables built upward from an empty market in one pass.

        In the stationary equilibrium the seller always sells something
        (idling is worth only ``delta V(q)``), so the optimal next state lies
        strictly below the current one and every state only needs tables that
        have already been filled in.  The no-gap case is not handled here (see ``_no_gap_tables``).
        """
        g = self.grid
        n = g.size
        lo, delta = self.d.lo, self.delta
        x = np.asarray(self.d.quantile(g), dtype=float)
        V = np.zeros(n)
        P = np.zeros(n)
        pol = np.zeros(n)
        phi = np.zeros(n)
        P[0] = phi[0] = lo
        start = 1
        for i in range(start, n):
            q = g[i]
            objs = phi[:i] * (q - g[:i]) + delta * V[:i]
            j = int(np.argmax(objs))
            best_q, best_v, best_phi = g[j], objs[j], phi[j]
            a, b = g[max(j - 1, 0)], g[min(j + 1, i - 1)]
            if b > a:
                gi, phii, Vi = g[:i], phi[:i], V[:i]
                f = lambda s: -(np.interp(s, gi, phii) * (q - s) + delta * np.interp(s, gi, Vi))
                res = optimize.minimize_scalar(f, bounds=(a, b), method="bounded", options={"xatol": 1e-14})
                if -res.fun > best_v + 1e-15:
                    best_q, best_v = float(res.x), -float(res.fun)
                    best_phi = float(np.interp(best_q, gi, phii))
            V[i], P[i], pol[i] = best_v, best_phi, best_q
            phi[i] = (1 - delta) * x[i] + delta * P[i]
        self.iterations = 1
        return _Linear(g, P, V, pol)

    def _no_gap_tables(self, tol, cap):
        alpha, K = power_tail(self.d)
        q = np.linspace(0.0, 1.0, 257)[1:]
        fit = K * q**alpha
        if np.max(np.abs(np.asarray(self.d.quantile(q)) - fit)) <= 1e-10 * max(1.0, self.d.hi):
            A, C, lam = homogeneous_stationary(alpha, self.delta)
            self.iterations = 1
            return _PowerLaw(K, alpha, A, C, lam)
        return self._value_iterate(tol, cap)

    def _value_iterate(self, tol, cap) -> _Tabled:
        cont = self.terminal
        prev = None
        dv = dp = math.inf
        for k in range(1, cap + 1):
            nxt = self._bellman(cont)
            if prev is not None:
                dv = np.max(np.abs(nxt.values - prev.values))
                dp = np.max(np.abs(nxt.prices - prev.prices))
                if dv <= tol and dp <= tol:
                    self.iterations = k
                    return nxt
            prev = nxt
            cont = nxt
        raise NonConvergenceError(
            f"value iteration did not become stationary within {cap} periods "
            f"(last sup-norm change {dv:.3g} in values, {dp:.3g} in prices)"
        )

    def stationarity_gap(self, n: int = 512) -> float:
        """Sup-norm change in the value table after one more Bellman step."""
        if self.horizon is not None:
            raise PreconditionError("stationarity is only defined for the infinite horizon")
        q = np.linspace(0.0, 1.0, n + 1)[1:]
        tab = self._stationary
        _, _, val = self.optimize(tab, q)
        return float(np.max(np.abs(val - tab.value(q))))

    def stage(self, t: int):
        """Continuation faced by the seller in period ``t``."""
        if self.horizon is None:
            return self._stationary
        if t >= self.horizon:
            return self.terminal
        return self._tables[t]

    # -- public helpers used by the simulator ----------------------------

    def price_at(self, t: int, q: float) -> float:
        if q <= 0:
            return self.d.lo
        _, price, _ = self.optimize(self.stage(t), [q])
        return float(price[0])

    def value_at(self, t: int, q: float) -> float:
        if q <= 0:
            return 0.0
        _, _, val = self.optimize(self.stage(t), [q])
        return float(val[0])

    def next_mass(self, t: int, price: float) -> float:
        """Mass left after period ``t`` when buyers expect equilibrium play from ``t + 1``.

        Solves ``price(q') = p`` on ``[0, 1]``; the returned value may be
        clipped at either end.
        """
        cont = self.stage(t)
        f = lambda qp: float(self._phi(cont, np.asarray(qp)))
        if price <= f(0.0):
            return 0.0
        if price >= f(1.0):
            return 1.0
        a, b = 0.0, 1.0
        for _ in range(200):
            m = 0.5 * (a + b)
            if m <= a or m >= b:
                break
            if f(m) < price:
                a = m
            else:
                b = m
        return 0.5 * (a + b)

    def cutoff(self, t: int, price: float) -> float:
        """Posterior-mean cutoff above which a buyer purchases at ``price`` in period ``t``.

        Outside the pressed support the cutoff solves
        ``c - p = delta (c - P_{t+1})`` with the next price frozen at its
        boundary value.
        """
        cont = self.stage(t)
        f = lambda qp: float(self._phi(cont, np.asarray(qp)))
        if price >= f(1.0):
            return (price - self.delta * float(cont.price(1.0))) / (1 - self.delta)
        if price <= f(0.0):
            return (price - self.delta * float(cont.price(0.0))) / (1 - self.delta)
        return float(self.d.quantile(self.next_mass(t, price)))

    def path_from(self, t0: int, q0: float, max_periods: int | None = None) -> tuple[list, list]:
        """On-path next-state sequence starting in period ``t0`` with mass ``q0``.

        Returns (masses, last_continuation_price) where masses[0] = q0.
        """
        if max_periods is None:
            max_periods = (self.horizon - t0 + 1) if self.horizon is not None else 5000
        masses = [float(q0)]
        t = t0
        cont = None
        multiple = False
        for k in range(max_periods):
            q = masses[-1]
            cont = self.stage(t)
            qn, _, _ = self.optimize(cont, [q])
            if k == 0:
                multiple = self._multiplicity(cont, q)
            masses.append(float(qn[0]))
            t += 1
            if masses[-1] <= 0.0:
                break
            if self.horizon is None and masses[-1] < 1e-15:
                break
        last_price = float(self._phi(cont, np.asarray(masses[-1])))
        return masses, last_price, multiple

    def _multiplicity(self, cont, q: float) -> bool:
        cand = self.grid[self.grid <= q]
        if cand.size < 3:
            return False
        vals = np.asarray(self._obj(cont, q, cand))
        peaks = [i for i in range(cand.size)
                 if (i == 0 or vals[i] >= vals[i - 1]) and (i == cand.size - 1 or vals[i] >= vals[i + 1])]
        if len(peaks) < 2:
            return False
        peaks = sorted(peaks, key=lambda i: -vals[i])[:2]
        refined = []
        for i in peaks:
            a = np.array([cand[max(i - 1, 0)]])
            b = np.array([cand[min(i + 1, cand.size - 1)]])
            x = self._golden(cont, np.array([q]), a, b)
            refined.append((float(self._obj(cont, q, x)[0]), float(self._phi(cont, x)[0])))
        (v1, p1), (v2, p2) = refined
        return abs(v1 - v2) <= 1e-9 * (1 + abs(v1)) and abs(p1 - p2) > 1e-6


def _assemble(solver: KnownValuesSolver, t0: int, masses: list, last_price: float, multiple: bool,
              integral_tol: float = 1e-10) -> KnownValuesEquilibrium:
    d, delta = solver.d, solver.delta
    x = lambda q: float(d.quantile(q))
    n = len(masses) - 1
    cutoffs = [x(masses[k + 1]) for k in range(n)]
    prices = [0.0] * n
    cleared = masses[-1] <= 0.0
    prices[-1] = d.lo if cleared else last_price
    for k in range(n - 2, -1, -1):
        prices[k] = (1 - delta) * cutoffs[k] + delta * prices[k + 1]
    profit = sum(delta**k * prices[k] * (masses[k] - masses[k + 1]) for k in range(n))
    surplus = 0.0
    for k in range(n):
        lo_q, hi_q = masses[k + 1], masses[k]
        if hi_q > lo_q:
            moment = integrate.quad(lambda u: float(d.quantile(u)), lo_q, hi_q, epsabs=integral_tol, limit=200)[0]
            surplus += delta**k * (moment - prices[k] * (hi_q - lo_q))
    clearing = next((t0 + k for k in range(n) if cutoffs[k] <= d.lo), None)
    return KnownValuesEquilibrium(
        prices=prices, cutoffs=cutoffs, masses=masses, profit=profit, surplus=surplus,
        clearing_time=clearing, delta=delta, horizon=solver.horizon, multiple_optima=multiple,
        iterations=solver.iterations, solver=solver,
    )


def solve_known_values(cfg: GameConfig) -> KnownValuesEquilibrium:
    if cfg.infinite:
        return solve_known_values_infinite(cfg)
    if getattr(cfg.dist, "kind", None) != "continuous":
        raise PreconditionError("the known-values solver needs a continuous distribution")
    solver = KnownValuesSolver(cfg.dist, cfg.delta, cfg.horizon, cfg.grid_n)
    masses, last_price, multiple = solver.path_from(1, 1.0)
    if multiple:
        log.warning("first-period problem has two optima with distinct prices")
    return _assemble(solver, 1, masses, last_price, multiple, cfg.integral_tol)


def resolve_from(eq: KnownValuesEquilibrium, t: int, mass: float) -> KnownValuesEquilibrium:
    """Re-solve the subgame that starts in period ``t`` with ``mass`` buyers left."""
    solver = eq.solver
    masses, last_price, multiple = solver.path_from(t, mass)
    return _assemble(solver, t, masses, last_price, multiple)


def solve_known_values_infinite(cfg: GameConfig) -> KnownValuesEquilibrium:
    d = cfg.dist
    if getattr(d, "kind", None) != "continuous":
        raise PreconditionError("the known-values solver needs a continuous distribution")
    if not d.has_gap and not cfg.allow_no_gap:
        raise PreconditionError("an infinite horizon needs a gap (lo > 0) unless no-gap mode is enabled")
    solver = KnownValuesSolver(d, cfg.delta, None, cfg.grid_n, cfg.stationarity_tol, cfg.cap)
    masses, last_price, multiple = solver.path_from(1, 1.0, max_periods=cfg.cap)
    if d.has_gap and masses[-1] > 0:
        raise NonConvergenceError(f"market did not clear within {cfg.cap} periods")
    eq = _assemble(solver, 1, masses, last_price, multiple, cfg.integral_tol)
    if not d.has_gap:
        eq.clearing_time = None
    eq.stationarity_gap = solver.stationarity_gap()
    if eq.stationarity_gap > 1e-6:
        log.warning("stationary tables reproduce themselves only to %.3g", eq.stationarity_gap)
    return eq


def static_monopoly(d: ValueDistribution) -> tuple[float, float]:
    """Optimal posted price and profit for a single period."""
    solver = KnownValuesSolver(d, 0.5, 1, grid_n=2049)
    qn, price, val = solver.optimize(solver.terminal, [1.0])
    return float(price[0]), float(val[0])


def uniform_profit_coefficient(delta: float) -> float:
    """``c`` with stationary profit ``c * v_top^2`` for the known-values U[0, v_top] game."""
    if not (0 < delta < 1):
        raise DomainError("discount factor must lie in (0, 1)")
    # 1/2 (1 - 1/delta + sqrt(1-delta)/delta), rearranged to avoid cancellation near 0
    return 0.5 * (1.0 - 1.0 / (1.0 + math.sqrt(1.0 - delta)))
