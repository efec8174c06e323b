"""Comparison-inequality bound integrators.

Given a quantity L obeying L(t) <= a + integral of gamma(s) * mu(L(s)),
with mu continuous, nondecreasing, mu(0) = 0 but not necessarily
Lipschitz, the bound L(t) <= L* follows from inverting

    integral from a to L* of ds/mu(s)  =  integral from t0 to t of gamma.

The same inversion with mu = beta and the time horizon T as the target
defines the convergence-rate function f: the unique value f(x) > x with
integral from x to f(x) of ds/beta(s) = T.  The zero-viscosity L^2 error
at time t is then bounded by f(R * nu * t).

mu may be a BetaContext (integrated in log space, exact down to cutoffs
far below double-precision floats) or any positive vectorized callable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._quad import geometric_breakpoints, integrate_adaptive, signed_log_breakpoints
from .admissibility import (
    BetaContext,
    Verdict,
    check_admissible,
    integrate_inv_beta_logspace,
)
from .errors import BracketingError, DomainError

# Below this scale an integration lower limit is treated as zero; the
# divergence heuristic, not quadrature, decides what happens at 0 itself.
_S_FLOOR = 1e-300
_OVERFLOW = 1e300


@dataclass(frozen=True)
class PiecewiseConstant:
    """Piecewise-constant rate gamma: values[i] on [times[i], times[i+1])."""

    times: tuple
    values: tuple

    def __post_init__(self):
        if len(self.times) != len(self.values) + 1:
            raise DomainError("need one more breakpoint than values")
        if np.any(np.diff(np.asarray(self.times)) <= 0.0):
            raise DomainError("breakpoints must be strictly increasing")
        if np.any(np.asarray(self.values) <= 0.0):
            raise DomainError("gamma must be positive")

    def integral(self, a: float, b: float) -> float:
        ts = np.asarray(self.times, dtype=float)
        vs = np.asarray(self.values, dtype=float)
        lo = np.clip(ts[:-1], a, b)
        hi = np.clip(ts[1:], a, b)
        return float(np.sum(vs * (hi - lo)))


GammaLike = float | PiecewiseConstant | Callable[[np.ndarray], np.ndarray]
MuLike = BetaContext | Callable[[np.ndarray], np.ndarray]


@dataclass
class OsgoodProblem:
    """Inputs of the bound inversion on [t0, t1].

    mu_divergent short-circuits the a = 0 branch; when None the divergence
    of the integral of 1/mu at 0 is graded numerically (a heuristic, like
    the admissibility classifier).
    """

    a: float
    mu: MuLike
    t1: float
    gamma: GammaLike = 1.0
    t0: float = 0.0
    mu_divergent: bool | None = None

    def __post_init__(self):
        if self.a < 0.0:
            raise DomainError("initial bound a must be nonnegative")
        if self.t1 < self.t0:
            raise DomainError("need t0 <= t1")


def _gamma_integral(gamma: GammaLike, a: float, b: float) -> float:
    if b <= a:
        return 0.0
    if isinstance(gamma, PiecewiseConstant):
        return gamma.integral(a, b)
    if callable(gamma):
        if np.any(np.asarray(gamma(np.linspace(a, b, 33)), dtype=float) <= 0.0):
            raise DomainError("gamma must be positive on [t0, t]")
        return integrate_adaptive(
            lambda t: np.asarray(gamma(t), dtype=float), np.linspace(a, b, 9)
        )
    g = float(gamma)
    if g <= 0.0:
        raise DomainError("gamma must be positive")
    return g * (b - a)


def _recip_integral(mu: MuLike, lo: float, hi: float, rel_tol: float = 1e-9) -> float:
    """Integral of ds/mu(s) over [lo, hi]; +inf when mu is nonpositive inside."""
    if hi <= lo:
        return 0.0
    if isinstance(mu, BetaContext):
        return integrate_inv_beta_logspace(mu, -math.log(hi), -math.log(lo), rel_tol)

    # A nonpositive mu inside the interval means the inverted map has
    # escaped its domain; the integral counts as infinite for bracketing.
    # Overflow inside mu is equally benign: inf contributes 0 to 1/mu and
    # the overflow bound of the enclosing solver decides the outcome.
    with np.errstate(over="ignore", invalid="ignore"):
        probe = np.asarray(mu(np.geomspace(lo, hi, 65)), dtype=float)
    if np.any(probe <= 0.0):
        return math.inf

    bad = False

    def integrand(s: np.ndarray) -> np.ndarray:
        nonlocal bad
        v = np.asarray(mu(s), dtype=float)
        out = np.empty_like(v)
        pos = v > 0.0
        if not np.all(pos):
            bad = True
        out[pos] = 1.0 / v[pos]
        out[~pos] = 0.0
        return out

    val = integrate_adaptive(integrand, geometric_breakpoints(lo, hi), rel_tol)
    return math.inf if bad else val


def _mu_check_monotone(mu: Callable, lo: float, hi: float) -> None:
    s = np.geomspace(max(lo, _S_FLOOR), hi, 64)
    v = np.asarray(mu(s), dtype=float)
    if np.any(np.diff(v) < -1e-12 * np.maximum(np.abs(v[:-1]), 1e-30)):
        raise DomainError("mu must be nondecreasing on the sampled bracket")


def _mu_integral_diverges(mu: MuLike) -> bool:
    """Heuristic grade of whether the integral of 1/mu diverges at 0."""
    if isinstance(mu, BetaContext):
        return check_admissible(mu).verdict is Verdict.DIVERGENT
    # Double-exponential cutoff ladder in s; same increment-ratio grading
    # as the admissibility classifier, limited by double precision.
    exps = 4.0 * 2.0 ** np.arange(7)  # delta = 10^-4 ... 10^-256
    deltas = 10.0 ** (-exps)
    increments = [_recip_integral(mu, deltas[0], 1.0)]
    for k in range(len(deltas) - 1):
        increments.append(_recip_integral(mu, deltas[k + 1], deltas[k]))
    rung = np.asarray(increments[1:])
    if not np.all(np.isfinite(rung)):
        return True  # an infinite rung can only mean mass piling up at 0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = rung[1:] / rung[:-1]
    ratios = np.where(np.isfinite(ratios), ratios, 0.0)
    return bool(np.all(ratios[-3:] >= 0.40))


def _solve_reciprocal_target(mu: MuLike, lower: float, target: float) -> float:
    """The u > lower with integral of ds/mu over [lower, u] equal to target.

    Doubles the bracket top an octave at a time, accumulating the octave
    integrals, then bisects inside the crossing octave.  Returns +inf when
    the accumulated integral cannot reach the target below the overflow
    bound (the target lies outside the range of the inverted map).
    """
    if target <= 0.0:
        return lower
    lo = max(lower, _S_FLOOR)
    cum = 0.0
    hi = lo
    with np.errstate(over="ignore", invalid="ignore"):
        while True:
            nxt = hi * 2.0
            if nxt > _OVERFLOW:
                return math.inf
            seg = _recip_integral(mu, hi, nxt)
            if cum + seg >= target:
                break
            cum += seg
            hi = nxt

        remaining = target - cum
        a, b = hi, nxt
        for _ in range(200):
            m = 0.5 * (a + b)
            if _recip_integral(mu, hi, m) >= remaining:
                b = m
            else:
                a = m
            if (b - a) <= 1e-13 * b:
                break
    return 0.5 * (a + b)


def osgood_upper_bound(prob: OsgoodProblem, t: float) -> float:
    """The bound L* at time t; 0 in the divergent a = 0 branch, +inf sentinel
    when the target exceeds the range of the inverted integral map."""
    if not prob.t0 <= t <= prob.t1:
        raise DomainError(f"t={t} outside [{prob.t0}, {prob.t1}]")
    target = _gamma_integral(prob.gamma, prob.t0, t)
    if target == 0.0:
        return prob.a
    if prob.a == 0.0:
        diverges = (
            prob.mu_divergent
            if prob.mu_divergent is not None
            else _mu_integral_diverges(prob.mu)
        )
        if diverges:
            return 0.0
    result = _solve_reciprocal_target(prob.mu, prob.a, target)
    if callable(prob.mu) and math.isfinite(result):
        _mu_check_monotone(prob.mu, max(prob.a, _S_FLOOR), max(result, 2.0 * _S_FLOOR))
    return result


@dataclass
class RateBound:
    """Theoretical zero-viscosity error bound: L(t) <= f(R * nu * t).

    beta_ctx is normally a BetaContext; a positive vectorized callable is
    accepted for analytic stand-ins (for example beta(s) = s, whose rate
    function is x * e**T).
    """

    beta_ctx: MuLike
    T: float
    R: float = 1.0

    def __post_init__(self):
        if not self.T > 0.0:
            raise DomainError("time horizon T must be positive")
        if self.R < 0.0:
            raise DomainError("forcing constant R must be nonnegative")


def rate_function(rb: RateBound, x: float) -> float:
    """f(x): the unique value above x with integral of ds/beta over [x, f(x)] = T."""
    if not x > 0.0:
        raise DomainError("x must be positive")
    result = _solve_reciprocal_target(rb.beta_ctx, x, rb.T)
    if not math.isfinite(result):
        raise BracketingError(
            f"rate bracket for x={x:.6g} exceeded {_OVERFLOW:.1e} before reaching T={rb.T}"
        )
    return result


class RateInverter:
    """Inverts the rate function at many targets sharing one (beta, T).

    For slowly diverging beta the preimage of a value y can sit at
    x = exp(-u) with u astronomically large, so the search descends the
    u = ln(1/s) axis on a squaring ladder.  Every ladder rung caches its
    panel-by-panel cumulative integrals: locating the crossing for a new
    target is then a binary search plus a bisection inside one panel,
    which keeps repeated inversions (one per sweep record) affordable.

    The descent stops at u = 1e250, beyond which the eps search cannot
    represent the interior minimizer (~1/u) in double precision; such
    solutions report as 0.0, i.e. any positive argument already works.
    """

    U_CAP = 1e250

    def __init__(self, ctx: BetaContext, T: float):
        self.ctx = ctx
        self.T = T
        self.ladder = [4.0]
        self.rungs: list[tuple[np.ndarray, np.ndarray]] = []

    def _panelize(self, u_lo: float, u_hi: float) -> tuple[np.ndarray, np.ndarray]:
        edges = signed_log_breakpoints(u_lo, u_hi)
        parts = np.cumsum(
            [
                integrate_inv_beta_logspace(self.ctx, float(a), float(b))
                for a, b in zip(edges[:-1], edges[1:])
            ]
        )
        return edges, parts

    def _extend(self) -> bool:
        u = self.ladder[-1]
        nxt = max(u * u, u + 8.0)
        if nxt > self.U_CAP:
            return False
        self.rungs.append(self._panelize(u, nxt))
        self.ladder.append(nxt)
        return True

    def _crossing(self, edges: np.ndarray, parts: np.ndarray, target: float) -> float:
        p = int(np.searchsorted(parts, target))
        remaining = target - (parts[p - 1] if p > 0 else 0.0)
        a, b = float(edges[p]), float(edges[p + 1])
        lo, hi = a, b
        for _ in range(200):
            m = 0.5 * (lo + hi)
            if integrate_inv_beta_logspace(self.ctx, a, m) >= remaining:
                hi = m
            else:
                lo = m
            if (hi - lo) <= 1e-10 * max(1.0, abs(hi)):
                break
        u_star = 0.5 * (lo + hi)
        return math.exp(-u_star) if u_star < 700.0 else 0.0

    def __call__(self, y: float) -> float:
        if not y > 0.0:
            raise DomainError("target must be positive")
        u_y = -math.log(y)
        j = 0
        while self.ladder[j] < u_y:
            if j + 1 == len(self.ladder) and not self._extend():
                return 0.0
            j += 1
        cum = 0.0
        if self.ladder[j] > u_y:
            edges, parts = self._panelize(u_y, self.ladder[j])
            if parts[-1] >= self.T:
                return self._crossing(edges, parts, self.T)
            cum = float(parts[-1])
        while True:
            if j == len(self.rungs) and not self._extend():
                return 0.0
            edges, parts = self.rungs[j]
            if cum + parts[-1] >= self.T:
                return self._crossing(edges, parts, self.T - cum)
            cum += float(parts[-1])
            j += 1


def rate_function_inverse(rb: RateBound, y: float) -> float:
    """The x with f(x) = y, i.e. integral of ds/beta over [x, y] = T; 0.0 if
    no representable x absorbs the full target (see RateInverter)."""
    if not y > 0.0:
        raise DomainError("y must be positive")
    if isinstance(rb.beta_ctx, BetaContext):
        return RateInverter(rb.beta_ctx, rb.T)(y)
    cum = 0.0
    hi = y
    while True:
        lo = hi * 0.5
        if lo < _S_FLOOR:
            return 0.0
        seg = _recip_integral(rb.beta_ctx, lo, hi)
        if cum + seg >= rb.T:
            break
        cum += seg
        hi = lo
    remaining = rb.T - cum
    a, b = lo, hi
    for _ in range(200):
        m = 0.5 * (a + b)
        if _recip_integral(rb.beta_ctx, m, hi) >= remaining:
            a = m
        else:
            b = m
        if (b - a) <= 1e-13 * b:
            break
    return 0.5 * (a + b)


def theoretical_l2_bound(rb: RateBound, nu: float, t: float) -> float:
    """f(R * nu * t); 0 when R = 0 (difference of two like solutions) or t = 0."""
    if not nu > 0.0:
        raise DomainError("nu must be positive")
    if not 0.0 <= t <= rb.T:
        raise DomainError(f"t={t} outside [0, T={rb.T}]")
    if rb.R == 0.0 or t == 0.0:
        return 0.0
    return rate_function(rb, rb.R * nu * t)
