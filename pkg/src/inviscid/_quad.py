"""Adaptive composite Gauss-Legendre quadrature.

All improper integrals in this package reduce to integrals of smooth,
positive integrands that vary on a logarithmic scale near an endpoint.
They are integrated with 15-point Gauss-Legendre rules on panels laid out
geometrically toward the difficult endpoint, each panel bisected until a
relative tolerance is met.

Integrands must accept numpy arrays; the adaptive driver batches every
pending panel's nodes into one call per refinement round, which is what
makes the eps-infimum integrands affordable.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import QuadratureError

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(15)

# Smallest magnitude treated as a meaningful panel value; guards the
# relative-error test against exact zeros.
_TINY = 1e-300


def gauss15(f: Callable[[np.ndarray], np.ndarray], a: float, b: float) -> float:
    """Single 15-point Gauss-Legendre panel over [a, b]; f is vectorized."""
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return half * float(np.dot(_WEIGHTS, f(mid + half * _NODES)))


def _gauss15_many(f, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """GL15 on many panels with one integrand call."""
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    pts = mid[:, None] + half[:, None] * _NODES[None, :]
    vals = f(pts.reshape(-1)).reshape(pts.shape)
    return half * (vals @ _WEIGHTS)


def integrate_adaptive(
    f: Callable[[np.ndarray], np.ndarray],
    breakpoints: np.ndarray,
    rel_tol: float = 1e-9,
    max_depth: int = 40,
) -> float:
    """Adaptive composite GL15 over the given panel decomposition.

    Each panel is bisected until its two-level estimates agree to rel_tol;
    all pending panels of a round are evaluated in one integrand call.
    The final sum runs over panels ordered by position, so the result does
    not depend on the refinement schedule.
    """
    breakpoints = np.asarray(breakpoints, dtype=float)
    if breakpoints.size < 2:
        return 0.0
    a = breakpoints[:-1].copy()
    b = breakpoints[1:].copy()
    whole = _gauss15_many(f, a, b)
    depth = np.full(a.shape, max_depth, dtype=int)
    done: list[tuple[float, float]] = []

    while a.size:
        mid = 0.5 * (a + b)
        left = _gauss15_many(f, a, mid)
        right = _gauss15_many(f, mid, b)
        better = left + right
        ok = np.abs(better - whole) <= rel_tol * np.maximum(np.abs(better), _TINY)
        exhausted = ~ok & (depth <= 0)
        if np.any(exhausted):
            i = int(np.argmax(exhausted))
            raise QuadratureError(
                f"quadrature failed to converge on panel [{a[i]:.6g}, {b[i]:.6g}]"
            )
        done.extend(zip(a[ok], better[ok]))
        keep = ~ok
        a, b, mid = a[keep], b[keep], mid[keep]
        left, right = left[keep], right[keep]
        d = depth[keep] - 1
        a = np.concatenate([a, mid])
        b = np.concatenate([mid, b])
        whole = np.concatenate([left, right])
        depth = np.concatenate([d, d])

    done.sort(key=lambda pair: pair[0])
    return math.fsum(v for _, v in done)


def geometric_breakpoints(lo: float, hi: float, factor: float = 2.0) -> np.ndarray:
    """Breakpoints from lo to hi, geometric with the given factor (lo, hi > 0)."""
    if not (0.0 < lo < hi):
        raise ValueError(f"need 0 < lo < hi, got [{lo}, {hi}]")
    pts = [lo]
    x = lo
    while x * factor < hi:
        x *= factor
        pts.append(x)
    pts.append(hi)
    return np.asarray(pts)


def signed_log_breakpoints(u_lo: float, u_hi: float) -> np.ndarray:
    """Panel breakpoints for integrands that vary on the scale of ln s.

    Used for integrals over u = ln(1/s).  Near u = 0 panels have width
    ln 2 (one panel per octave of s, the geometric subdivision toward
    s = 0); far from 0 they stretch proportionally to |u|, where the
    integrand varies on a multiplicative u scale and octave panels would
    need astronomically many pieces.  Adaptive bisection inside each
    panel supplies the accuracy either way.
    """
    if not u_lo < u_hi:
        raise ValueError(f"need u_lo < u_hi, got [{u_lo}, {u_hi}]")
    ln2 = math.log(2.0)
    pts = [u_lo]
    u = u_lo
    while True:
        width = max(ln2, 0.35 * abs(u))
        u = u + width
        if u >= u_hi:
            break
        pts.append(u)
    pts.append(u_hi)
    return np.asarray(pts)
