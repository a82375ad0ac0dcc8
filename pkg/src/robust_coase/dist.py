"""Value distributions and the pressed transform.

A continuous distribution exposes ``cdf``, ``pdf``, ``quantile`` and the
partial first moment ``partial_moment(y) = int_lo^y v dF(v)``.  Every method
accepts scalars or numpy arrays.  The pressed version of ``F`` replaces each
value ``y`` by ``L(y) = E[v | v <= y]``; its quantile function is simply
``L(F^{-1}(q))``, which is what the solvers use.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
from scipy import integrate, special
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, NoThresholdError, PartitionError, PreconditionError, PressError

QUAD_TOL = 1e-10
ROOT_TOL = 1e-10


def _ret(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def bisect_increasing(func, target, lo, hi, iters: int = 200):
    """Vectorized bisection for ``func(x) = target`` with ``func`` nondecreasing.

    ``lo`` and ``hi`` broadcast against ``target``.  Stops once the bracket
    stops shrinking in floating point.
    """
    target = np.asarray(target, dtype=float)
    a = np.broadcast_to(np.asarray(lo, dtype=float), target.shape).copy()
    b = np.broadcast_to(np.asarray(hi, dtype=float), target.shape).copy()
    for _ in range(iters):
        m = 0.5 * (a + b)
        done = (m <= a) | (m >= b)
        if np.all(done):
            break
        below = func(m) < target
        a = np.where(below & ~done, m, a)
        b = np.where(~below & ~done, m, b)
    return 0.5 * (a + b)


class ValueDistribution:
    """Continuous prior over buyer values on ``[lo, hi]``.

    Subclasses implement ``cdf``, ``pdf`` and ``quantile``.  ``partial_moment``
    falls back to adaptive quadrature when no closed form is given.
    """

    kind = "continuous"
    lo: float
    hi: float

    def cdf(self, x):
        raise NotImplementedError

    def pdf(self, x):
        raise NotImplementedError

    def quantile(self, q):
        q = np.asarray(q, dtype=float)
        return _ret(bisect_increasing(self.cdf, q, self.lo, self.hi))

    def quantile_derivative(self, q):
        with np.errstate(divide="ignore"):
            return _ret(1.0 / np.asarray(self.pdf(self.quantile(q)), dtype=float))

    def partial_moment(self, y):
        y = np.clip(np.asarray(y, dtype=float), self.lo, self.hi)
        vals = [
            integrate.quad(lambda v: v * self.pdf(v), self.lo, yi, epsabs=QUAD_TOL, limit=200)[0]
            for yi in np.atleast_1d(y)
        ]
        return _ret(np.reshape(vals, y.shape))

    @property
    def mean(self) -> float:
        return float(self.partial_moment(self.hi))

    @property
    def has_gap(self) -> bool:
        return self.lo > 0

    def cond_mean_below(self, y):
        """``E[v | v <= y]``; equals ``lo`` at ``y = lo`` by continuity."""
        y = np.clip(np.asarray(y, dtype=float), self.lo, self.hi)
        mass = np.asarray(self.cdf(y), dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(mass > 0, np.asarray(self.partial_moment(y)) / np.where(mass > 0, mass, 1.0), self.lo)
        return _ret(out)

    def cond_mean_above(self, y):
        y = np.clip(np.asarray(y, dtype=float), self.lo, self.hi)
        mass = 1.0 - np.asarray(self.cdf(y), dtype=float)
        num = self.mean - np.asarray(self.partial_moment(y))
        with np.errstate(invalid="ignore", divide="ignore"):
            return _ret(np.where(mass > 0, num / np.where(mass > 0, mass, 1.0), self.hi))

    def interval_mean(self, a, b):
        """Mean of the distribution conditional on ``a < v <= b``."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        mass = np.asarray(self.cdf(b)) - np.asarray(self.cdf(a))
        num = np.asarray(self.partial_moment(b)) - np.asarray(self.partial_moment(a))
        with np.errstate(invalid="ignore", divide="ignore"):
            return _ret(np.where(mass > 1e-300, num / np.where(mass > 1e-300, mass, 1.0), 0.5 * (a + b)))

    def to_json(self) -> dict:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.to_json()})"


class Uniform(ValueDistribution):
    def __init__(self, lo: float, hi: float):
        if not (0 <= lo < hi):
            raise DomainError(f"uniform needs 0 <= lo < hi, got [{lo}, {hi}]")
        self.lo, self.hi = float(lo), float(hi)
        self._w = self.hi - self.lo

    def cdf(self, x):
        return _ret(np.clip((np.asarray(x, dtype=float) - self.lo) / self._w, 0.0, 1.0))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return _ret(np.where((x >= self.lo) & (x <= self.hi), 1.0 / self._w, 0.0))

    def quantile(self, q):
        return _ret(self.lo + self._w * np.clip(np.asarray(q, dtype=float), 0.0, 1.0))

    def quantile_derivative(self, q):
        return _ret(np.full_like(np.asarray(q, dtype=float), self._w))

    def partial_moment(self, y):
        y = np.clip(np.asarray(y, dtype=float), self.lo, self.hi)
        return _ret((y - self.lo) * (y + self.lo) / (2.0 * self._w))

    def cond_mean_below(self, y):
        y = np.clip(np.asarray(y, dtype=float), self.lo, self.hi)
        return _ret(0.5 * (self.lo + y))

    @property
    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def to_json(self):
        return {"kind": "uniform", "lo": self.lo, "hi": self.hi}


class PowerFamily(ValueDistribution):
    """Density ``(u - 1/2)^n (n + 1) 2^n`` on ``[0, 1]``, mapped affinely to ``[lo, hi]``.

    For large even ``n`` the mass piles up at both ends, approximating a
    two-point distribution.
    """

    def __init__(self, n: int, lo: float = 0.0, hi: float = 1.0):
        if n < 0 or int(n) != n or n % 2:
            raise DomainError(f"power family needs an even integer n >= 0, got {n}")
        if not (0 <= lo < hi):
            raise DomainError(f"power family needs 0 <= lo < hi, got [{lo}, {hi}]")
        self.n = int(n)
        self.lo, self.hi = float(lo), float(hi)
        self._w = self.hi - self.lo
        self._c = 2.0 ** self.n

    def _u(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.lo) / self._w, 0.0, 1.0)

    def cdf(self, x):
        u = self._u(x)
        return _ret(np.clip(self._c * (u - 0.5) ** (self.n + 1) + 0.5, 0.0, 1.0))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        u = (x - self.lo) / self._w
        dens = (u - 0.5) ** self.n * (self.n + 1) * self._c / self._w
        return _ret(np.where((u >= 0) & (u <= 1), dens, 0.0))

    def quantile(self, q):
        s = np.clip(np.asarray(q, dtype=float), 0.0, 1.0) - 0.5
        u = 0.5 + np.sign(s) * (np.abs(s) / self._c) ** (1.0 / (self.n + 1))
        return _ret(self.lo + self._w * u)

    def partial_moment(self, y):
        u = self._u(y)
        n = self.n
        # int_0^u t f(t) dt = int_0^u (t - 1/2) f + F(u) / 2
        centred = (n + 1) * self._c / (n + 2) * ((u - 0.5) ** (n + 2) - 0.5 ** (n + 2))
        mass = self._c * (u - 0.5) ** (n + 1) + 0.5
        return _ret(self.lo * mass + self._w * (centred + 0.5 * mass))

    @property
    def mean(self) -> float:
        return self.lo + 0.5 * self._w

    def to_json(self):
        return {"kind": "power", "n": self.n, "lo": self.lo, "hi": self.hi}


class Beta(ValueDistribution):
    """Beta(a, b) rescaled to ``[lo, hi]``."""

    def __init__(self, a: float, b: float, lo: float = 0.0, hi: float = 1.0):
        if a <= 0 or b <= 0:
            raise DomainError("beta shape parameters must be positive")
        if not (0 <= lo < hi):
            raise DomainError(f"beta needs 0 <= lo < hi, got [{lo}, {hi}]")
        self.a, self.b = float(a), float(b)
        self.lo, self.hi = float(lo), float(hi)
        self._w = self.hi - self.lo

    def _u(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.lo) / self._w, 0.0, 1.0)

    def cdf(self, x):
        return _ret(special.betainc(self.a, self.b, self._u(x)))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        u = (x - self.lo) / self._w
        inside = (u >= 0) & (u <= 1)
        uc = np.clip(u, 0.0, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            logd = (self.a - 1) * np.log(uc) + (self.b - 1) * np.log1p(-uc) - special.betaln(self.a, self.b)
            dens = np.exp(logd) / self._w
        return _ret(np.where(inside, np.nan_to_num(dens, posinf=np.inf), 0.0))

    def quantile(self, q):
        return _ret(self.lo + self._w * special.betaincinv(self.a, self.b, np.clip(np.asarray(q, dtype=float), 0, 1)))

    def partial_moment(self, y):
        u = self._u(y)
        m1 = self.a / (self.a + self.b) * special.betainc(self.a + 1, self.b, u)
        return _ret(self.lo * special.betainc(self.a, self.b, u) + self._w * m1)

    @property
    def mean(self) -> float:
        return self.lo + self._w * self.a / (self.a + self.b)

    def to_json(self):
        return {"kind": "beta", "a": self.a, "b": self.b, "lo": self.lo, "hi": self.hi}


class Tabulated(ValueDistribution):
    """CDF given on a grid, interpolated with a monotone cubic (PCHIP).

    The partial moment integrates ``v dF`` by parts against the exact
    antiderivative of the interpolant.
    """

    def __init__(self, grid: Sequence[float], cdf: Sequence[float]):
        g = np.asarray(grid, dtype=float)
        c = np.asarray(cdf, dtype=float)
        if g.ndim != 1 or g.shape != c.shape or g.size < 3:
            raise DomainError("table needs matching 1-D grid and cdf arrays of length >= 3")
        if np.any(np.diff(g) <= 0):
            raise DomainError("table grid must be strictly increasing")
        if np.any(np.diff(c) <= 0):
            raise DomainError("table cdf must be strictly increasing (positive density)")
        if abs(c[0]) > 1e-12 or abs(c[-1] - 1) > 1e-12 or g[0] < 0:
            raise DomainError("table cdf must run from 0 at lo >= 0 to 1 at hi")
        self.grid, self.table = g, c
        self.lo, self.hi = float(g[0]), float(g[-1])
        self._F = PchipInterpolator(g, c, extrapolate=False)
        self._f = self._F.derivative()
        self._A = self._F.antiderivative()
        self._Q = PchipInterpolator(c, g, extrapolate=False)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), self.lo, self.hi)
        return _ret(np.clip(self._F(x), 0.0, 1.0))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lo) & (x <= self.hi)
        return _ret(np.where(inside, self._f(np.clip(x, self.lo, self.hi)), 0.0))

    def quantile(self, q):
        # PCHIP inverse as the starting bracket, then bisection on the forward cdf
        q = np.clip(np.asarray(q, dtype=float), 0.0, 1.0)
        guess = self._Q(q)
        h = 1e-3 * (self.hi - self.lo)
        lo = np.clip(guess - h, self.lo, self.hi)
        hi = np.clip(guess + h, self.lo, self.hi)
        bad = (np.asarray(self.cdf(lo)) > q) | (np.asarray(self.cdf(hi)) < q)
        lo = np.where(bad, self.lo, lo)
        hi = np.where(bad, self.hi, hi)
        return _ret(bisect_increasing(self.cdf, q, lo, hi))

    def partial_moment(self, y):
        y = np.clip(np.asarray(y, dtype=float), self.lo, self.hi)
        return _ret(y * np.asarray(self.cdf(y)) - (self._A(y) - self._A(self.lo)))

    def to_json(self):
        return {"kind": "table", "grid": self.grid.tolist(), "cdf": self.table.tolist()}


class Truncated(ValueDistribution):
    """``base`` conditioned on ``a <= v <= b``."""

    def __init__(self, base: ValueDistribution, lo: float | None = None, hi: float | None = None):
        a = base.lo if lo is None else float(lo)
        b = base.hi if hi is None else float(hi)
        if not (base.lo <= a < b <= base.hi):
            raise DomainError(f"truncation [{a}, {b}] outside support [{base.lo}, {base.hi}]")
        self.base = base
        self.lo, self.hi = a, b
        self._Fa = float(base.cdf(a))
        self._mass = float(base.cdf(b)) - self._Fa
        if self._mass <= 0:
            raise DomainError("truncation interval carries no mass")
        self._Ma = float(base.partial_moment(a))

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), self.lo, self.hi)
        return _ret(np.clip((np.asarray(self.base.cdf(x)) - self._Fa) / self._mass, 0.0, 1.0))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lo) & (x <= self.hi)
        return _ret(np.where(inside, np.asarray(self.base.pdf(x)) / self._mass, 0.0))

    def quantile(self, q):
        q = np.clip(np.asarray(q, dtype=float), 0.0, 1.0)
        return _ret(np.clip(self.base.quantile(self._Fa + q * self._mass), self.lo, self.hi))

    def partial_moment(self, y):
        y = np.clip(np.asarray(y, dtype=float), self.lo, self.hi)
        return _ret((np.asarray(self.base.partial_moment(y)) - self._Ma) / self._mass)

    def to_json(self):
        return {"kind": "truncated", "base": self.base.to_json(), "lo": self.lo, "hi": self.hi}


class BinaryPressed(ValueDistribution):
    """Pressed version of the two-point prior ``P(v=1) = q`` on ``{0, 1}``.

    At price ``p`` the worst-case signal sells with probability
    ``r(p) = (q - p) / (q (1 - p))``, so ``G(p) = 1 - r(p)`` on ``[0, q]``.
    """

    def __init__(self, q: float):
        if not (0 < q < 1):
            raise DomainError("binary prior needs 0 < q < 1")
        self.q = float(q)
        self.lo, self.hi = 0.0, self.q

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, self.q)
        return _ret(x * (1 - self.q) / (self.q * (1 - x)))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= 0) & (x <= self.q)
        return _ret(np.where(inside, (1 - self.q) / (self.q * (1 - np.clip(x, 0, self.q)) ** 2), 0.0))

    def quantile(self, u):
        u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        return _ret(self.q * u / ((1 - self.q) + self.q * u))

    def partial_moment(self, y):
        # int_0^y x (1-q) / (q (1-x)^2) dx = (1-q)/q * (y/(1-y) + log(1-y))
        y = np.clip(np.asarray(y, dtype=float), 0.0, self.q)
        return _ret((1 - self.q) / self.q * (y / (1 - y) + np.log1p(-y)))

    def to_json(self):
        return {"kind": "binary-pressed", "q": self.q}


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finitely many atoms ``(value, probability)``."""

    atoms: tuple

    kind = "discrete"

    def __post_init__(self):
        if not self.atoms:
            raise DomainError("discrete distribution needs at least one atom")
        vals = [float(v) for v, _ in self.atoms]
        probs = [float(p) for _, p in self.atoms]
        if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-12:
            raise DomainError("atom probabilities must be nonnegative and sum to 1")
        if min(vals) < 0:
            raise DomainError("values must be nonnegative")
        object.__setattr__(self, "atoms", tuple(sorted(zip(vals, probs))))

    @property
    def lo(self) -> float:
        return self.atoms[0][0]

    @property
    def hi(self) -> float:
        return self.atoms[-1][0]

    @property
    def mean(self) -> float:
        return sum(v * p for v, p in self.atoms)

    def cond_mean_below(self, y: float) -> float:
        if y < self.lo:
            raise DomainError(f"no mass at or below {y}")
        mass = sum(p for v, p in self.atoms if v <= y)
        return sum(v * p for v, p in self.atoms if v <= y) / mass

    def binary_prior(self) -> float:
        """Probability of the high value when the atoms are exactly {0, 1}."""
        vals = [v for v, _ in self.atoms]
        if vals != [0.0, 1.0]:
            raise PreconditionError("only the {0, 1} binary prior can be pressed")
        return self.atoms[1][1]

    def to_json(self):
        return {"kind": "discrete", "atoms": [list(a) for a in self.atoms]}


class PressedDistribution(ValueDistribution):
    """``G = F o L^{-1}`` with ``L(y) = E_F[v | v <= y]``; support ``[lo, E_F[v]]``."""

    def __init__(self, base: ValueDistribution, check_grid: int = 2049):
        self.base = base
        self.lo = base.lo
        self.hi = base.mean
        ys = np.linspace(base.lo, base.hi, check_grid)[1:]
        Ls = np.asarray(base.cond_mean_below(ys))
        dec = np.nonzero(np.diff(Ls) < -1e-12 * max(1.0, base.hi))[0]
        if dec.size:
            i = int(dec[0])
            raise PressError(f"conditional mean decreases on [{ys[i]:.6g}, {ys[i + 1]:.6g}]")

    def L(self, y):
        return self.base.cond_mean_below(y)

    def L_inv(self, w):
        """Threshold ``y`` with ``E[v | v <= y] = w``; clamps to the support ends."""
        w = np.asarray(w, dtype=float)
        y = bisect_increasing(self.base.cond_mean_below, np.clip(w, self.lo, self.hi), self.base.lo, self.base.hi)
        y = np.where(w <= self.lo, self.base.lo, np.where(w >= self.hi, self.base.hi, y))
        return _ret(y)

    def cdf(self, w):
        return _ret(np.clip(self.base.cdf(self.L_inv(w)), 0.0, 1.0))

    G_cdf = cdf

    def quantile(self, q):
        return self.base.cond_mean_below(self.base.quantile(q))

    def quantile_derivative(self, q):
        # d/dq L(F^{-1}(q)) = (y - L(y)) / F(y); the limit at q = 0 is 1 / (2 f(lo))
        q = np.asarray(q, dtype=float)
        y = np.asarray(self.base.quantile(q))
        L = np.asarray(self.base.cond_mean_below(y))
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.where(q > 1e-12, (y - L) / np.where(q > 1e-12, q, 1.0), 0.5 / np.asarray(self.base.pdf(self.base.lo)))
        return _ret(d)

    def pdf(self, w):
        w = np.asarray(w, dtype=float)
        q = np.asarray(self.cdf(w))
        with np.errstate(divide="ignore"):
            d = 1.0 / np.asarray(self.quantile_derivative(q))
        return _ret(np.where((w >= self.lo) & (w <= self.hi), d, 0.0))

    def partial_moment(self, w):
        # int x dG(x) up to w equals int_0^{G(w)} G^{-1}(u) du
        w = np.asarray(w, dtype=float)
        qs = np.atleast_1d(np.asarray(self.cdf(w)))
        vals = [integrate.quad(self.quantile, 0.0, qi, epsabs=QUAD_TOL, limit=200)[0] for qi in qs]
        return _ret(np.reshape(vals, w.shape))

    @property
    def mean(self) -> float:
        return float(integrate.quad(self.quantile, 0.0, 1.0, epsabs=QUAD_TOL, limit=200)[0])

    def to_json(self):
        return {"kind": "pressed", "base": self.base.to_json()}


class MixturePressed(ValueDistribution):
    """Cell-probability mixture of the pressed versions of ``F`` restricted to each cell."""

    def __init__(self, base: ValueDistribution, cells: Sequence[tuple[float, float]]):
        self.base = base
        self.cells = [(float(a), float(b)) for a, b in cells]
        self.parts = [PressedDistribution(Truncated(base, a, b)) for a, b in self.cells]
        self.weights = np.array([float(base.cdf(b)) - float(base.cdf(a)) for a, b in self.cells])
        self.lo = min(p.lo for p in self.parts)
        self.hi = max(p.hi for p in self.parts)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return _ret(sum(w * np.asarray(p.cdf(x)) for w, p in zip(self.weights, self.parts)))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return _ret(sum(w * np.asarray(p.pdf(x)) for w, p in zip(self.weights, self.parts)))

    def to_json(self):
        return {"kind": "mixture-pressed", "base": self.base.to_json(), "cells": self.cells}


# ---------------------------------------------------------------------------
# operations


def cond_mean_below(d: ValueDistribution, y: float) -> float:
    if y <= d.lo:
        raise DomainError(f"conditioning on v <= {y} has no mass (support starts at {d.lo})")
    if y > d.hi:
        y = d.hi
    return float(d.cond_mean_below(y))


def press(d: ValueDistribution) -> PressedDistribution:
    if getattr(d, "kind", None) != "continuous":
        raise PreconditionError("pressing is defined for continuous distributions")
    return PressedDistribution(d)


def press_threshold(d: ValueDistribution, w: float) -> float:
    mean = d.mean
    if w > mean + 1e-12 * max(1.0, abs(mean)):
        raise NoThresholdError(f"cutoff {w} exceeds the mean {mean}; no information is needed")
    if w >= mean:
        return d.hi
    if w < d.lo:
        raise DomainError(f"cutoff {w} below the support")
    if w == d.lo:
        return d.lo
    return float(bisect_increasing(d.cond_mean_below, np.asarray(w), d.lo, d.hi))


def press_discrete_binary(q: float, p: float) -> float:
    """Worst-case purchase probability at price ``p`` for the binary prior ``q``."""
    if p >= q:
        return 0.0
    if p <= 0:
        return 1.0
    return (q - p) / (q * (1 - p))


def mixture_press(d: ValueDistribution, partition: Sequence[Sequence[float]]) -> ValueDistribution:
    cells = sorted((float(a), float(b)) for a, b in partition)
    if not cells:
        raise PartitionError("empty partition")
    tol = 1e-12 * max(1.0, d.hi)
    if abs(cells[0][0] - d.lo) > tol or abs(cells[-1][1] - d.hi) > tol:
        raise PartitionError("partition does not cover the support")
    for (a0, b0), (a1, b1) in zip(cells, cells[1:]):
        if a1 < b0 - tol:
            raise PartitionError(f"cells [{a0}, {b0}] and [{a1}, {b1}] overlap")
        if a1 > b0 + tol:
            raise PartitionError(f"gap between {b0} and {a1}")
    for a, b in cells:
        if b <= a or float(d.cdf(b)) - float(d.cdf(a)) <= 0:
            raise PartitionError(f"cell [{a}, {b}] has no mass")
    if len(cells) == 1:
        return press(d)
    return MixturePressed(d, cells)


@dataclass(frozen=True)
class RegularityReport:
    holds: bool
    constant: float
    lower: float = math.nan
    note: str = ""


def _q_grid(n: int = 4096) -> np.ndarray:
    return np.unique(np.concatenate([np.logspace(-9, 0, n // 2), np.linspace(1e-9, 1.0, n // 2)]))


def check_lipschitz(d: ValueDistribution, cap: float | None = None, override: bool = False) -> RegularityReport:
    """Sup of ``(F^{-1}(q) - lo) / q`` over a dense quantile grid."""
    q = _q_grid()
    sup = float(np.max((np.asarray(d.quantile(q)) - d.lo) / q))
    if not d.has_gap and not override:
        return RegularityReport(False, sup, note="no gap: the Lipschitz condition is only used in the gap case")
    # a finite grid always gives a finite sup; a ratio still climbing at the bottom means it is unbounded
    tail = np.geomspace(1e-9, 1e-6, 16)
    ratio = (np.asarray(d.quantile(tail)) - d.lo) / tail
    with np.errstate(divide="ignore"):
        slope = float(np.polyfit(np.log(tail), np.log(np.maximum(ratio, 1e-300)), 1)[0])
    if slope < -0.05:
        return RegularityReport(False, math.inf, note=f"ratio diverges near q = 0 (log-slope {slope:.3g})")
    holds = math.isfinite(sup) and (cap is None or sup <= cap)
    return RegularityReport(holds, sup)


def check_ad_regularity(d: ValueDistribution, alpha: float, n: int = 4096) -> RegularityReport:
    """Bounds ``M q^alpha <= F^{-1}(q) <= L q^alpha`` near zero.

    The ratio is inspected on a log grid reaching ``q = 1e-9``; it must stay
    positive, finite and flat (log-slope below 0.05) over the lowest decades,
    otherwise it is diverging or vanishing.
    """
    if d.lo != 0:
        raise PreconditionError("regularity bounds apply to the no-gap case (lo = 0)")
    q = _q_grid(n)
    ratio = np.asarray(d.quantile(q)) / q**alpha
    M, L = float(np.min(ratio)), float(np.max(ratio))
    tail = q <= 1e-6
    with np.errstate(divide="ignore"):
        slope = np.polyfit(np.log(q[tail]), np.log(np.maximum(ratio[tail], 1e-300)), 1)[0]
    holds = bool(M > 0 and math.isfinite(L) and abs(slope) < 0.05)
    return RegularityReport(holds, L, lower=M, note=f"tail log-slope {slope:.3g}")


# ---------------------------------------------------------------------------
# JSON


def from_json(spec: Any) -> ValueDistribution | DiscreteDistribution:
    if isinstance(spec, str):
        spec = json.loads(spec)
    if not isinstance(spec, dict) or "kind" not in spec:
        raise DomainError("distribution spec must be an object with a 'kind' field")
    kind = spec["kind"]
    try:
        if kind == "uniform":
            return Uniform(spec["lo"], spec["hi"])
        if kind == "power":
            return PowerFamily(spec["n"], spec.get("lo", 0.0), spec.get("hi", 1.0))
        if kind == "beta":
            return Beta(spec["a"], spec["b"], spec.get("lo", 0.0), spec.get("hi", 1.0))
        if kind == "table":
            return Tabulated(spec["grid"], spec["cdf"])
        if kind == "discrete":
            return DiscreteDistribution(tuple(tuple(a) for a in spec["atoms"]))
        if kind == "truncated":
            return Truncated(from_json(spec["base"]), spec.get("lo"), spec.get("hi"))
        if kind == "pressed":
            return press(from_json(spec["base"]))
        if kind == "binary-pressed":
            return BinaryPressed(spec["q"])
    except KeyError as exc:
        raise DomainError(f"distribution spec of kind {kind!r} is missing field {exc}") from None
    raise DomainError(f"unknown distribution kind {kind!r}")
