"""Growth-profile calculus for vorticity bounds.

A profile ``theta`` bounds the L^p norms of a vorticity field as a function
of p.  From it we build the interpolation functions

    beta_eps(x) = M**eps * x**(1 - eps) * phi(1/eps),   phi(p) = p * theta(p),
    beta(x)     = inf over eps in (0, 1/p0] of beta_eps(x),
    psi(x)      = inf over eps in (0, 1/p0] of (x**eps / eps) * theta(1/eps),

and classify ``theta`` by whether the improper integral of 1/beta over
(0, 1] diverges.  Divergence of an improper integral is numerically
undecidable, so the classifier is an explicit heuristic: it reports how the
partial integrals grow along a ladder of shrinking cutoffs and never claims
a proof.

All infima are computed in log space.  Writing q = ln M + ln(1/x), both
beta and psi reduce to one objective,

    ln psi(e^q) = min over eps of [eps * q + ln phi(1/eps)],

minimized by a log-spaced grid scan plus golden-section refinement.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from ._quad import integrate_adaptive, signed_log_breakpoints
from .errors import DomainError

_LN2 = math.log(2.0)
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

# Hard floor for the eps search; below this double-precision powers of eps
# are meaningless for any profile.
_EPS_ABS_FLOOR = 1e-290


def _tower_threshold(m: int) -> float:
    """Smallest p above which every factor of an m-fold iterated log is positive."""
    t = 1.0
    for _ in range(max(m - 1, 0)):
        t = math.exp(t)
    return t


@dataclass
class ThetaBound:
    """A growth profile p -> C * theta(p) on [p0, oo).

    kind is one of "constant", "iterlog", "powerlaw", "tabulated".  The
    iterlog family of order m is the product ln p * lnln p * ... * ln^m p
    (m = 0 gives the constant profile).  Tabulated profiles interpolate
    user samples with a monotone piecewise cubic and refuse to extrapolate.
    """

    kind: str
    p0: float
    scale: float = 1.0
    m: int = 0
    exponent: float = 0.0
    samples: tuple = ()
    _interp: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("constant", "iterlog", "powerlaw", "tabulated"):
            raise DomainError(f"unknown profile kind {self.kind!r}")
        if not self.p0 > 1.0:
            raise DomainError(f"p0 must exceed 1, got {self.p0}")
        if not self.scale > 0.0:
            raise DomainError("scale must be positive")
        if self.kind == "iterlog":
            if self.m < 0:
                raise DomainError("iterated-log order must be nonnegative")
            if self.m > 0 and self.p0 <= _tower_threshold(self.m):
                raise DomainError(
                    f"iterlog order {self.m} needs p0 > {_tower_threshold(self.m):.6g} "
                    "so every log factor is positive"
                )
        if self.kind == "powerlaw" and not self.exponent > 0.0:
            raise DomainError("power-law exponent must be positive")
        if self.kind == "tabulated":
            pts = tuple((float(p), float(v)) for p, v in self.samples)
            if len(pts) < 2:
                raise DomainError("tabulated profile needs at least two samples")
            ps = np.array([p for p, _ in pts])
            vs = np.array([v for _, v in pts])
            if np.any(np.diff(ps) <= 0.0):
                raise DomainError("tabulated samples must be strictly increasing in p")
            if np.any(vs <= 0.0):
                raise DomainError("tabulated theta values must be positive")
            if ps[0] > self.p0:
                raise DomainError("first tabulated sample must not exceed p0")
            self.samples = pts
            self._interp = PchipInterpolator(ps, vs, extrapolate=False)

    # -- constructors ------------------------------------------------------

    @classmethod
    def constant(cls, scale: float = 1.0, p0: float = 2.0) -> "ThetaBound":
        return cls(kind="constant", p0=p0, scale=scale)

    @classmethod
    def iterated_log(cls, m: int, scale: float = 1.0, p0: float | None = None) -> "ThetaBound":
        if p0 is None:
            p0 = max(2.0, 1.125 * _tower_threshold(m) + 1.0)
        return cls(kind="iterlog", p0=p0, scale=scale, m=m)

    @classmethod
    def power_law(cls, exponent: float, scale: float = 1.0, p0: float = 2.0) -> "ThetaBound":
        return cls(kind="powerlaw", p0=p0, scale=scale, exponent=exponent)

    @classmethod
    def tabulated(
        cls, samples: Sequence[tuple], scale: float = 1.0, p0: float | None = None
    ) -> "ThetaBound":
        if p0 is None:
            p0 = max(float(samples[0][0]), 1.0 + 1e-9)
            if p0 <= 1.0:
                raise DomainError("tabulated p0 must exceed 1")
        return cls(kind="tabulated", p0=p0, scale=scale, samples=tuple(samples))

    # -- evaluation --------------------------------------------------------

    @property
    def p_max(self) -> float:
        """Upper end of the evaluable domain (inf unless tabulated)."""
        if self.kind == "tabulated":
            return self.samples[-1][0]
        return math.inf

    def log_value(self, p: np.ndarray) -> np.ndarray:
        """ln(C * theta(p)), vectorized; callers guarantee p in [p0, p_max]."""
        p = np.asarray(p, dtype=float)
        out = np.full(p.shape, math.log(self.scale))
        if self.kind == "iterlog":
            cur = p
            for _ in range(self.m):
                cur = np.log(cur)
                out = out + np.log(cur)
        elif self.kind == "powerlaw":
            out = out + self.exponent * np.log(p)
        elif self.kind == "tabulated":
            out = out + np.log(self._interp(p))
        return out

    def log_phi(self, p: np.ndarray) -> np.ndarray:
        """ln(p * C * theta(p)), the log of the interpolation weight."""
        return np.log(p) + self.log_value(p)


def eval_theta(theta: ThetaBound, p: float) -> float:
    """C * theta(p); domain error below p0 or past the last tabulated sample."""
    if p < theta.p0:
        raise DomainError(f"p={p} below profile domain start p0={theta.p0}")
    if p > theta.p_max:
        raise DomainError(
            f"p={p} beyond last tabulated sample p={theta.p_max}; refusing to extrapolate"
        )
    return float(np.exp(theta.log_value(np.array([p]))[0]))


@dataclass(frozen=True)
class EpsSearch:
    """Settings of the eps-infimum search."""

    grid_points_per_decade: int = 40
    eps_min: float = 1e-8
    refinement_tolerance: float = 1e-8

    def __post_init__(self):
        if self.grid_points_per_decade < 1:
            raise DomainError("need at least one grid point per decade")
        if not 0.0 < self.eps_min < 1.0:
            raise DomainError("eps_min must lie in (0, 1)")
        if not 0.0 < self.refinement_tolerance < 1.0:
            raise DomainError("refinement tolerance must lie in (0, 1)")


@dataclass
class BetaContext:
    """Everything needed to evaluate beta: sup bound M, profile, and search settings."""

    M: float
    theta: ThetaBound
    p0: float | None = None
    eps_search: EpsSearch = field(default_factory=EpsSearch)

    def __post_init__(self):
        if not self.M > 0.0:
            raise DomainError("M must be positive")
        if self.p0 is None:
            self.p0 = self.theta.p0
        if self.p0 < self.theta.p0:
            raise DomainError(
                f"context p0={self.p0} below the profile domain start {self.theta.p0}"
            )
        if not self.eps_search.eps_min < 1.0 / self.p0:
            raise DomainError("eps_min must be smaller than 1/p0")


class _EpsMinimizer:
    """Minimizes eps*q + ln phi(1/eps) over eps in [floor, 1/p0] for batches of q.

    The grid floor adapts downward when q is large: the interior minimizer
    sits near eps = 1/q, which a fixed floor would miss once q exceeds
    1/eps_min.  Extending the grid only adds candidates inside the true
    search interval (0, 1/p0], so the computed minimum can only improve.
    """

    def __init__(self, theta: ThetaBound, p0: float, search: EpsSearch, q_max: float):
        hi = 1.0 / p0
        lo = search.eps_min
        if q_max > 0.0:
            lo = min(lo, 0.05 / q_max)
        lo = max(lo, _EPS_ABS_FLOOR)
        if math.isfinite(theta.p_max):
            lo = max(lo, 1.0 / theta.p_max)
        if lo >= hi:
            lo = hi * 0.5
        n_decades = math.log10(hi / lo)
        n = max(int(math.ceil(n_decades * search.grid_points_per_decade)) + 1, 8)
        self.eps = np.geomspace(lo, hi, n)
        self.log_eps = np.log(self.eps)
        self.log_phi = theta.log_phi(1.0 / self.eps)
        self.theta = theta
        self.tol = search.refinement_tolerance

    def _objective(self, log_eps: np.ndarray, q: np.ndarray) -> np.ndarray:
        eps = np.exp(log_eps)
        return eps * q + self.theta.log_phi(1.0 / eps)

    def minimize(self, q: np.ndarray) -> np.ndarray:
        """Min over eps of the log objective, one value per entry of q.

        Refines around every local minimum of the grid scan, not just the
        global one: when two basins nearly tie, refining only the grid
        argmin leaves a value jump of the grid quantization size wherever
        the winning basin flips, which poisons quadrature downstream.
        """
        q = np.atleast_1d(np.asarray(q, dtype=float))
        n_q = q.size
        grid = self.eps[:, None] * q[None, :] + self.log_phi[:, None]
        n = grid.shape[0]
        best = np.min(grid, axis=0)

        ge_prev = np.vstack([np.ones((1, n_q), dtype=bool), grid[1:] <= grid[:-1]])
        ge_next = np.vstack([grid[:-1] <= grid[1:], np.ones((1, n_q), dtype=bool)])
        vals = np.where(ge_prev & ge_next, grid, np.inf)
        k = min(3, n)
        idxs = np.argpartition(vals, k - 1, axis=0)[:k]

        lo = self.log_eps[np.maximum(idxs - 1, 0)].reshape(-1)
        hi = self.log_eps[np.minimum(idxs + 1, n - 1)].reshape(-1)
        qq = np.broadcast_to(q, (k, n_q)).reshape(-1)
        refined = self._golden(lo, hi, qq).reshape(k, n_q).min(axis=0)
        return np.minimum(best, refined)

    def _golden(self, a: np.ndarray, b: np.ndarray, q: np.ndarray) -> np.ndarray:
        c = b - _GOLDEN * (b - a)
        d = a + _GOLDEN * (b - a)
        fc = self._objective(c, q)
        fd = self._objective(d, q)
        best = np.minimum(fc, fd)
        for _ in range(90):
            if np.all(b - a <= self.tol):
                break
            left = fc < fd
            b = np.where(left, d, b)
            a = np.where(left, a, c)
            c = b - _GOLDEN * (b - a)
            d = a + _GOLDEN * (b - a)
            fc = self._objective(c, q)
            fd = self._objective(d, q)
            best = np.minimum(best, np.minimum(fc, fd))
        return best


def _log_beta_batch(ctx: BetaContext, log_x: np.ndarray) -> np.ndarray:
    """ln beta(x) for a batch of ln x values."""
    log_x = np.atleast_1d(np.asarray(log_x, dtype=float))
    q = math.log(ctx.M) - log_x
    mini = _EpsMinimizer(ctx.theta, ctx.p0, ctx.eps_search, float(np.max(q)))
    return log_x + mini.minimize(q)


def eval_beta_eps(ctx: BetaContext, eps: float, x: float) -> float:
    """M**eps * x**(1-eps) * phi(1/eps) for one admissible eps."""
    if not 0.0 < eps <= 1.0 / ctx.p0:
        raise DomainError(f"eps={eps} outside (0, 1/p0] with p0={ctx.p0}")
    if not x > 0.0:
        raise DomainError("x must be positive")
    log_val = (
        eps * math.log(ctx.M)
        + (1.0 - eps) * math.log(x)
        + float(ctx.theta.log_phi(np.array([1.0 / eps]))[0])
    )
    return math.exp(log_val)


def eval_beta(ctx: BetaContext, x: float) -> float:
    """inf over eps in (0, 1/p0] of beta_eps(x), by grid scan plus refinement."""
    if not x > 0.0:
        raise DomainError("x must be positive")
    return float(np.exp(_log_beta_batch(ctx, np.log(x))[0]))


def eval_psi(theta: ThetaBound, x: float, eps_search: EpsSearch | None = None) -> float:
    """inf over eps in (0, 1/p0] of (x**eps / eps) * theta(1/eps), for x >= 1."""
    if x < 1.0:
        raise DomainError("psi is defined for x >= 1")
    search = eps_search or EpsSearch()
    q = math.log(x)
    mini = _EpsMinimizer(theta, theta.p0, search, q)
    return float(np.exp(mini.minimize(np.array([q]))[0]))


def integrate_inv_beta_logspace(
    ctx: BetaContext, u_lo: float, u_hi: float, rel_tol: float = 1e-9
) -> float:
    """Integral of ds/beta(s) for s between exp(-u_hi) and exp(-u_lo).

    Work entirely on the axis u = ln(1/s), where the integrand is
    exp(-min over eps of [eps*(u + ln M) + ln phi(1/eps)]); cutoffs far
    below the double-precision floor of s remain representable.
    """
    if u_lo >= u_hi:
        return 0.0
    mini = _EpsMinimizer(
        ctx.theta, ctx.p0, ctx.eps_search, max(u_hi + math.log(ctx.M), 0.0)
    )

    def integrand(u: np.ndarray) -> np.ndarray:
        return np.exp(-mini.minimize(u + math.log(ctx.M)))

    return integrate_adaptive(integrand, signed_log_breakpoints(u_lo, u_hi), rel_tol)


def integrate_inv_beta(ctx: BetaContext, s_lo: float, s_hi: float, rel_tol: float = 1e-9) -> float:
    """Integral of ds/beta(s) over [s_lo, s_hi] with 0 < s_lo < s_hi."""
    if not 0.0 < s_lo < s_hi:
        raise DomainError("need 0 < s_lo < s_hi")
    return integrate_inv_beta_logspace(ctx, -math.log(s_hi), -math.log(s_lo), rel_tol)


# -- admissibility classifier ----------------------------------------------


class Verdict(str, Enum):
    """Outcome of the divergence heuristic.

    The names say "numerically" on purpose: divergence of an improper
    integral cannot be decided by finite sampling, so these are evidence
    grades, not proofs.
    """

    DIVERGENT = "numerically_divergent"
    CONVERGENT = "numerically_convergent"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class GeometricCutoffs:
    """User-specified cutoff ladder delta_k = delta0 * ratio**k, k = 0..count-1."""

    delta0: float = 0.1
    ratio: float = 0.1
    count: int = 13

    def __post_init__(self):
        if not 0.0 < self.ratio < 1.0:
            raise DomainError("cutoff ratio must lie in (0, 1)")
        if not 0.0 < self.delta0 < 1.0:
            raise DomainError("delta0 must lie in (0, 1)")
        if self.count < 5:
            raise DomainError("need at least 5 cutoffs to classify")
        span = (self.count - 1) * math.log10(1.0 / self.ratio)
        if span < 6.0:
            raise DomainError(
                f"cutoff ladder spans {span:.2f} decades; at least 6 are required"
            )

    def u_values(self) -> np.ndarray:
        k = np.arange(self.count)
        return -(np.log(self.delta0) + k * np.log(self.ratio))


@dataclass(frozen=True)
class DeepCutoffs:
    """Scale-free default ladder: u_{k+1} = u_k**2 with u = ln(1/delta).

    Squaring ln(1/delta) is the only sampling under which iterated-log
    profiles and power-law profiles separate cleanly: every profile in the
    former family keeps contributing per rung while the latter's rung
    contributions collapse geometrically.  A ladder geometric in delta
    itself cannot span enough decades in double precision to tell them
    apart.
    """

    u0: float = 8.0
    count: int = 7

    def __post_init__(self):
        if not self.u0 > 1.0:
            raise DomainError("u0 must exceed 1")
        if self.count < 5:
            raise DomainError("need at least 5 cutoffs to classify")

    def u_values(self) -> np.ndarray:
        us = [self.u0]
        for _ in range(self.count - 1):
            us.append(us[-1] ** 2)
        return np.asarray(us)


@dataclass(frozen=True)
class AdmissibilityVerdict:
    verdict: Verdict
    partial_integrals: tuple  # ((delta_k, I_k), ...); delta_k may underflow to 0.0
    cutoff_log10: tuple  # exact log10(delta_k), always finite
    growth_per_decade: float
    increment_ratios: tuple

    def __bool__(self) -> bool:
        return self.verdict is Verdict.DIVERGENT


def check_admissible(
    ctx: BetaContext,
    cutoffs: GeometricCutoffs | DeepCutoffs | None = None,
    growth_threshold: float = 0.05,
    divergent_ratio: float = 0.40,
    convergent_ratio: float = 0.25,
) -> AdmissibilityVerdict:
    """Grade the divergence of the integral of 1/beta over (0, 1].

    Partial integrals I_k over [delta_k, 1] are accumulated along the
    cutoff ladder.  The grade looks at the last three rung increments:

    - increments per decade all >= growth_threshold         -> divergent
    - successive increment ratios all >= divergent_ratio    -> divergent
      (the tail keeps contributing; no geometric taper)
    - successive increment ratios all <= convergent_ratio   -> convergent
      (geometric decay of the rung contributions)
    - otherwise                                             -> inconclusive

    This is a heuristic grading of numerical evidence, never a proof.
    """
    if not growth_threshold > 0.0:
        raise DomainError("growth_threshold must be positive")
    if cutoffs is None:
        cutoffs = DeepCutoffs()
    us = cutoffs.u_values()
    if np.any(np.diff(us) <= 0.0):
        raise DomainError("cutoffs must be strictly decreasing")

    increments = [integrate_inv_beta_logspace(ctx, 0.0, float(us[0]))]
    for a, b in zip(us[:-1], us[1:]):
        increments.append(integrate_inv_beta_logspace(ctx, float(a), float(b)))
    partials = np.cumsum(increments)

    rung = np.asarray(increments[1:])  # contributions of rungs past the first
    decades = np.diff(us) / math.log(10.0)
    per_decade = rung / decades
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = rung[1:] / rung[:-1]
    ratios = np.where(np.isfinite(ratios), ratios, 0.0)

    last_pd = per_decade[-3:]
    last_ratios = ratios[-3:]
    if last_pd.size >= 3 and np.all(last_pd >= growth_threshold):
        verdict = Verdict.DIVERGENT
    elif last_ratios.size >= 3 and np.all(last_ratios >= divergent_ratio):
        verdict = Verdict.DIVERGENT
    elif last_ratios.size >= 3 and np.all(last_ratios <= convergent_ratio):
        verdict = Verdict.CONVERGENT
    else:
        verdict = Verdict.INCONCLUSIVE

    deltas = np.exp(-us)  # underflows to 0.0 for deep rungs; log10 kept exact
    return AdmissibilityVerdict(
        verdict=verdict,
        partial_integrals=tuple((float(d), float(v)) for d, v in zip(deltas, partials)),
        cutoff_log10=tuple(float(-u / math.log(10.0)) for u in us),
        growth_per_decade=float(per_decade[-1]),
        increment_ratios=tuple(float(r) for r in ratios),
    )


# -- discrete interpolation-inequality chain --------------------------------


@dataclass(frozen=True)
class HolderChainResult:
    holds: bool
    slack: float
    product_integral: float
    interpolated: float
    factored: float


def check_holder_chain(
    f: np.ndarray,
    g: np.ndarray,
    eps: float,
    cell_measure: float,
    M: float | None = None,
    tol: float = 1e-12,
) -> HolderChainResult:
    """Verify the discrete chain int(fg) <= M^eps int(f^(1-eps) g) <= M^eps |f|_1^(1-eps) |g|_(1/eps).

    f and g are nonnegative samples on a common grid with the given cell
    measure.  Both inequalities are theorems for the discrete sums, so any
    negative slack beyond floating-point noise is a bug.  Returns the
    minimum slack across the chain.
    """
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape:
        raise DomainError("f and g must share a grid")
    if np.any(f < 0.0) or np.any(g < 0.0):
        raise DomainError("holder chain requires nonnegative samples")
    if not 0.0 < eps < 1.0:
        raise DomainError("eps must lie in (0, 1)")
    if not cell_measure > 0.0:
        raise DomainError("cell measure must be positive")
    fmax = float(np.max(f)) if f.size else 0.0
    if M is None:
        M = fmax
    elif M < fmax:
        raise DomainError(f"M={M} below max f = {fmax}")

    lhs = float(np.sum(f * g) * cell_measure)
    mid = float(M**eps * np.sum(f ** (1.0 - eps) * g) * cell_measure)
    f_l1 = float(np.sum(f) * cell_measure)
    g_lp = float((np.sum(g ** (1.0 / eps)) * cell_measure) ** eps)
    rhs = float(M**eps * f_l1 ** (1.0 - eps) * g_lp)

    scale = max(lhs, mid, rhs, 1.0)
    slack = min(mid - lhs, rhs - mid)
    return HolderChainResult(
        holds=slack >= -tol * scale,
        slack=slack,
        product_integral=lhs,
        interpolated=mid,
        factored=rhs,
    )
