"""Doubly periodic pseudo-spectral solver for the 2D vorticity equation.

State is the scalar vorticity w on an N x N grid over [0, L)^2; velocity is
recovered spectrally from w (curl inversion with the k = 0 mode removed).
Time stepping is classical RK4 on the advection term with an exact
integrating factor for diffusion, so the nu > 0 linear part carries no time
discretization error.  The 2/3 rule removes aliasing from the quadratic
term.

The box is a truncation of the plane: initial data generators confine
support well inside the box so periodic images stay negligible, and that
truncation is the principal modeling error of everything downstream.
"""
from __future__ import annotations

import json
import math
import os
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable

import numpy as np

from ._quad import integrate_adaptive
from .errors import DomainError, InstabilityError

LP_DIAGNOSTIC_ORDERS = (2, 4, 8, 16, 32)

_SNAPSHOT_MAGIC = b"VORTSNP1"
_SNAPSHOT_VERSION = 1


def _validate_grid(values: np.ndarray) -> int:
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise DomainError(f"grid must be square, got shape {values.shape}")
    n = values.shape[0]
    if n < 16 or (n & (n - 1)) != 0:
        raise DomainError(f"grid size must be a power of two >= 16, got {n}")
    if not np.all(np.isfinite(values)):
        raise DomainError("grid values must be finite")
    return n


@dataclass(frozen=True)
class ScalarField:
    """N x N samples of a scalar on the periodic box [0, L)^2."""

    values: np.ndarray
    box_length: float

    def __post_init__(self):
        _validate_grid(self.values)
        if not self.box_length > 0.0:
            raise DomainError("box length must be positive")

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def cell_area(self) -> float:
        return (self.box_length / self.N) ** 2


@dataclass(frozen=True)
class VectorField:
    """Two component grids (u, v) on the same box."""

    u: np.ndarray
    v: np.ndarray
    box_length: float

    def __post_init__(self):
        _validate_grid(self.u)
        if self.u.shape != self.v.shape:
            raise DomainError("vector components must share a grid")
        if not np.all(np.isfinite(self.v)):
            raise DomainError("grid values must be finite")
        if not self.box_length > 0.0:
            raise DomainError("box length must be positive")

    @property
    def N(self) -> int:
        return self.u.shape[0]

    @property
    def cell_area(self) -> float:
        return (self.box_length / self.N) ** 2

    def magnitude(self) -> np.ndarray:
        return np.sqrt(self.u**2 + self.v**2)


class _Workspace:
    """Wavenumber arrays for one (N, L); axis 0 is x, axis 1 is y (rfft axis)."""

    def __init__(self, N: int, L: float):
        self.N = N
        self.L = L
        m1 = np.fft.fftfreq(N, d=1.0 / N)  # integer modes along x
        m2 = np.arange(N // 2 + 1)  # nonnegative modes along y (rfft)
        scale = 2.0 * math.pi / L
        self.k1 = (scale * m1)[:, None]
        self.k2 = (scale * m2)[None, :]
        # Nyquist modes carry no sign information for odd derivatives.
        kd1 = scale * m1.copy()
        kd1[N // 2] = 0.0
        kd2 = scale * m2.astype(float)
        kd2[-1] = 0.0
        self.kd1 = kd1[:, None]
        self.kd2 = kd2[None, :]
        self.ksq = self.k1**2 + self.k2**2
        inv = np.zeros_like(self.ksq)
        nz = self.ksq > 0.0
        inv[nz] = 1.0 / self.ksq[nz]
        self.inv_ksq = inv
        third = N / 3.0
        self.dealias = (np.abs(m1)[:, None] < third) & (m2[None, :] < third)


@lru_cache(maxsize=16)
def _workspace(N: int, L: float) -> _Workspace:
    return _Workspace(N, L)


def _mean_ok(values: np.ndarray, rel: float = 1e-12) -> bool:
    mean = abs(float(np.mean(values)))
    scale = float(np.max(np.abs(values)))
    return mean <= rel * max(scale, 1e-30)


def biot_savart(omega: ScalarField) -> VectorField:
    """The zero-mean divergence-free velocity whose curl is omega.

    Spectrally: u_hat = +i k2 w_hat / |k|^2, v_hat = -i k1 w_hat / |k|^2,
    with the k = 0 mode removed (checked: curl of the result returns omega).
    """
    if not _mean_ok(omega.values):
        raise DomainError("vorticity must have zero mean for periodic inversion")
    ws = _workspace(omega.N, omega.box_length)
    what = np.fft.rfft2(omega.values)
    u = np.fft.irfft2(1j * ws.kd2 * what * ws.inv_ksq, s=omega.values.shape)
    v = np.fft.irfft2(-1j * ws.kd1 * what * ws.inv_ksq, s=omega.values.shape)
    return VectorField(u=u, v=v, box_length=omega.box_length)


def curl(vf: VectorField) -> ScalarField:
    ws = _workspace(vf.N, vf.box_length)
    uh = np.fft.rfft2(vf.u)
    vh = np.fft.rfft2(vf.v)
    w = np.fft.irfft2(1j * ws.kd1 * vh - 1j * ws.kd2 * uh, s=vf.u.shape)
    return ScalarField(values=w, box_length=vf.box_length)


def divergence(vf: VectorField) -> ScalarField:
    ws = _workspace(vf.N, vf.box_length)
    uh = np.fft.rfft2(vf.u)
    vh = np.fft.rfft2(vf.v)
    d = np.fft.irfft2(1j * ws.kd1 * uh + 1j * ws.kd2 * vh, s=vf.u.shape)
    return ScalarField(values=d, box_length=vf.box_length)


def lp_norm(fld: ScalarField | VectorField, p: float) -> float:
    """Discrete L^p norm with cell-measure weighting; p = inf gives the max."""
    if p < 1.0:
        raise DomainError(f"L^p norms need p >= 1, got {p}")
    mag = np.abs(fld.values) if isinstance(fld, ScalarField) else fld.magnitude()
    if math.isinf(p):
        return float(np.max(mag))
    return float((np.sum(mag**p) * fld.cell_area) ** (1.0 / p))


def l2_velocity_diff(a: ScalarField, b: ScalarField) -> float:
    """L^2 norm of the velocity difference of two vorticity snapshots.

    The difference of two zero-mean fields carries rounding noise in its
    mean at the scale of the operands, not of the difference; it is
    removed before inversion."""
    if a.N != b.N or a.box_length != b.box_length:
        raise DomainError("snapshots must share a grid to be differenced")
    vals = a.values - b.values
    if float(np.max(np.abs(vals))) == 0.0:
        return 0.0
    diff = ScalarField(values=vals - float(np.mean(vals)), box_length=a.box_length)
    return lp_norm(biot_savart(diff), 2.0)


# -- initial data -----------------------------------------------------------


def taylor_green(N: int, box_length: float, amplitude: float = 1.0) -> ScalarField:
    """Single-cell vortex lattice; exact solution decaying by exp(-2 nu kappa^2 t)."""
    kappa = 2.0 * math.pi / box_length
    x = np.arange(N) * (box_length / N)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    w = -2.0 * amplitude * kappa * np.cos(kappa * xx) * np.cos(kappa * yy)
    return ScalarField(values=w, box_length=box_length)


@dataclass(frozen=True)
class RadialProfile:
    """Smooth compactly supported radial vorticity profile on [r_min, r_max].

    neutralized subtracts a matched outer annulus so the integral of
    rho * g(rho) vanishes: the induced swirl is then exactly zero outside
    r_max and the field is indistinguishable from its planar version.
    """

    r_min: float
    r_max: float
    amplitude: float = 1.0
    neutralized: bool = True

    def __post_init__(self):
        if not 0.0 < self.r_min < self.r_max:
            raise DomainError("need 0 < r_min < r_max")


def _bump(z: np.ndarray) -> np.ndarray:
    """C-infinity bump on (-1, 1), peak 1 at 0; vanishes to all orders at the ends."""
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    inside = np.abs(z) < 1.0
    zi = z[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - zi**2))
    return out


def _bump_on(r: np.ndarray, lo: float, hi: float) -> np.ndarray:
    return _bump((2.0 * r - (lo + hi)) / (hi - lo))


def _profile_g(profile: RadialProfile):
    """The radial profile as a vectorized callable.

    Gaussian rings centered in the annulus, sized so the values at r_min
    and r_max sit below ~1e-11 of the peak: numerically that is compact
    support, and the analytic decay keeps the Fourier tail far below the
    dealiasing cutoff, which a bare compact bump cannot do at these
    resolutions (its k-tail would dominate the steady-state drift).
    """
    lo, hi = profile.r_min, profile.r_max
    span = hi - lo
    mid = lo + 0.5 * span

    def ring(center: float, width: float):
        return lambda r: np.exp(-(((np.asarray(r, dtype=float) - center) / width) ** 2))

    if not profile.neutralized:
        w = span / 10.0
        g0 = ring(mid, w)
        return lambda r: profile.amplitude * g0(r)

    w = span / 11.0
    inner = ring(mid - 0.55 * w, w)
    outer = ring(mid + 0.55 * w, w)
    moment_in = integrate_adaptive(lambda r: r * inner(r), np.linspace(lo, hi, 17))
    moment_out = integrate_adaptive(lambda r: r * outer(r), np.linspace(lo, hi, 17))
    lam = moment_in / moment_out
    return lambda r: profile.amplitude * (inner(r) - lam * outer(r))


def _cumulative_radial(g, r_min: float, r_max: float, n: int = 8192):
    """Cumulative integral of rho * g(rho) from 0, tabulated on [r_min, r_max]."""
    edges = np.linspace(r_min, r_max, n + 1)
    nodes, weights = np.polynomial.legendre.leggauss(5)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1] - edges[0])
    pts = mid[:, None] + half * nodes[None, :]
    vals = pts * g(pts.reshape(-1)).reshape(pts.shape)
    segments = half * (vals @ weights)
    cum = np.concatenate([[0.0], np.cumsum(segments)])
    return edges, cum


def stationary_field(
    profile: RadialProfile,
    N: int,
    box_length: float,
    center: tuple[float, float] | None = None,
) -> tuple[VectorField, ScalarField]:
    """Radial swirl with vorticity g(r): an exact steady solution of the
    zero-viscosity equations, used as a solver oracle.

    Velocity is (-y, x)/r^2 times the cumulative moment integral of g; its
    curl is g(r) itself.  Support must stay inside box_length/4 so the
    periodic tiling does not distort the planar construction.
    """
    if not profile.r_max < box_length / 4.0:
        raise DomainError("profile support must stay below box_length/4")
    if center is None:
        center = (box_length / 2.0, box_length / 2.0)
    g = _profile_g(profile)
    rs, cum = _cumulative_radial(g, profile.r_min, profile.r_max)

    x = np.arange(N) * (box_length / N)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    dx = xx - center[0]
    dy = yy - center[1]
    r = np.sqrt(dx**2 + dy**2)

    G = np.interp(r, rs, cum, left=0.0, right=float(cum[-1]))
    with np.errstate(divide="ignore", invalid="ignore"):
        swirl = np.where(r > 0.0, G / np.maximum(r**2, 1e-300), 0.0)
    sigma = VectorField(u=-dy * swirl, v=dx * swirl, box_length=box_length)

    w = g(r.reshape(-1)).reshape(r.shape)
    w = w - float(np.mean(w))
    return sigma, ScalarField(values=w, box_length=box_length)


def _smooth_ramp(z: np.ndarray) -> np.ndarray:
    """C-infinity ramp: 0 for z <= 0, 1 for z >= 1."""
    z = np.clip(np.asarray(z, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(z > 0.0, np.exp(-1.0 / np.maximum(z, 1e-300)), 0.0)
        b = np.where(z < 1.0, np.exp(-1.0 / np.maximum(1.0 - z, 1e-300)), 0.0)
    return a / (a + b)


def singular_vorticity(
    profile: str,
    amplitude: float,
    core_radius: float,
    N: int,
    box_length: float,
    cap: str | float = "grid",
    center: tuple[float, float] | None = None,
) -> ScalarField:
    """Vorticity with a point feature at the center: "loglog" grows like
    ln ln(1/r) toward the core, "log" like ln(1/r), "smooth_bump" stays
    bounded.  The profile is capped below one grid cell (the unbounded
    continuum values cannot be sampled), cut smoothly to zero at
    core_radius, and mean-corrected.
    """
    if profile not in ("loglog", "log", "smooth_bump"):
        raise DomainError(f"unknown singular profile {profile!r}")
    if not core_radius < box_length / 8.0:
        raise DomainError("core radius must stay below box_length/8")
    if center is None:
        center = (box_length / 2.0, box_length / 2.0)
    h = box_length / N if cap == "grid" else float(cap)
    if not 0.0 < h < core_radius:
        raise DomainError("cap must lie in (0, core_radius)")

    x = np.arange(N) * (box_length / N)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    r = np.sqrt((xx - center[0]) ** 2 + (yy - center[1]) ** 2)
    re = np.clip(r, h, core_radius)

    if profile == "loglog":
        base = np.log(np.log(math.e * core_radius / re))
    elif profile == "log":
        base = np.log(core_radius / re)
    else:
        base = _bump(re / core_radius)
    if profile != "smooth_bump":
        base = base * _smooth_ramp((core_radius - r) / (0.3 * core_radius))
    else:
        base = np.where(r <= core_radius, base, 0.0)

    w = amplitude * base
    w = w - float(np.mean(w))
    return ScalarField(values=w, box_length=box_length)


def spectrum_field(
    N: int,
    box_length: float,
    slope: float = -1.0,
    k_min: int = 4,
    k_max: int | None = None,
    seed: int = 0,
    amplitude: float = 1.0,
) -> ScalarField:
    """Random-phase vorticity with per-mode modulus |k|^slope on a band.

    slope = -1 puts the kinetic energy spectrum at the k^-3 borderline
    where the velocity gradient is marginally bounded; the field is then
    rough at every resolved scale.  Normalized so max |velocity| equals
    amplitude.  Deterministic for a fixed seed.
    """
    if k_max is None:
        k_max = N // 3 - 1
    if not 1 <= k_min < k_max:
        raise DomainError("need 1 <= k_min < k_max")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((N, N))
    nh = np.fft.rfft2(noise)
    m1 = np.fft.fftfreq(N, d=1.0 / N)[:, None]
    m2 = np.arange(N // 2 + 1)[None, :]
    kk = np.sqrt(m1**2 + m2**2)
    with np.errstate(divide="ignore"):
        filt = np.where((kk >= k_min) & (kk <= k_max), kk**slope, 0.0)
    filt[0, 0] = 0.0
    w = np.fft.irfft2(nh * filt, s=(N, N))
    fld = ScalarField(values=w, box_length=box_length)
    vmax = float(np.max(biot_savart(fld).magnitude()))
    if vmax == 0.0:
        raise DomainError("spectrum band produced an empty field")
    return ScalarField(values=w * (amplitude / vmax), box_length=box_length)


def build_initial_field(descriptor: dict, N: int, box_length: float) -> ScalarField:
    """Construct initial vorticity from a flat descriptor (used by configs)."""
    d = dict(descriptor)
    kind = d.pop("kind", None)
    if kind == "taylor_green":
        return taylor_green(N, box_length, amplitude=float(d.pop("amplitude", 1.0)))
    if kind == "spectrum":
        k_max = d.pop("k_max", None)
        return spectrum_field(
            N,
            box_length,
            slope=float(d.pop("slope", -1.0)),
            k_min=int(d.pop("k_min", 4)),
            k_max=None if k_max in (None, "", "auto") else int(k_max),
            seed=int(d.pop("seed", 0)),
            amplitude=float(d.pop("amplitude", 1.0)),
        )
    if kind == "stationary":
        profile = RadialProfile(
            r_min=float(d.pop("r_min", box_length * 0.03)),
            r_max=float(d.pop("r_max", box_length * 0.24)),
            amplitude=float(d.pop("amplitude", 1.0)),
            neutralized=bool(_parse_bool(d.pop("neutralized", True))),
        )
        return stationary_field(profile, N, box_length)[1]
    if kind in ("loglog", "log", "smooth_bump"):
        cap = d.pop("cap", "grid")
        return singular_vorticity(
            kind,
            amplitude=float(d.pop("amplitude", 1.0)),
            core_radius=float(d.pop("core_radius", box_length / 10.0)),
            N=N,
            box_length=box_length,
            cap=cap if cap == "grid" else float(cap),
        )
    raise DomainError(f"unknown initial data kind {kind!r}")


def _parse_bool(v) -> bool:
    if isinstance(v, bool):
        return v
    return str(v).strip().lower() in ("1", "true", "yes", "on")


# -- time stepping ----------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    """One simulation: nu = 0 selects the zero-viscosity equations."""

    nu: float
    T: float
    N: int
    initial_data: dict
    box_length: float = 2.0 * math.pi
    dt: float | str = "auto"
    dealias: str = "two_thirds"
    record_every: float = 0.1
    cfl_target: float = 0.4

    def __post_init__(self):
        if self.nu < 0.0:
            raise DomainError("nu must be nonnegative")
        if self.T < 0.0:
            raise DomainError("T must be nonnegative")
        if self.N < 16 or (self.N & (self.N - 1)) != 0:
            raise DomainError("N must be a power of two >= 16")
        if self.dealias not in ("two_thirds", "none"):
            raise DomainError("dealias must be 'two_thirds' or 'none'")
        if not self.record_every > 0.0:
            raise DomainError("record_every must be positive")
        if not 0.0 < self.cfl_target <= 0.5:
            raise DomainError("cfl_target must lie in (0, 0.5]")
        if self.dt != "auto" and not float(self.dt) > 0.0:
            raise DomainError("dt must be positive or 'auto'")
        n_rec = round(self.T / self.record_every)
        if abs(self.T - n_rec * self.record_every) > 1e-9 * max(self.T, 1.0):
            raise DomainError("T must be an integer multiple of record_every")


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    energy: float
    lp_norms: dict
    grad_lp: dict
    max_vel: float


@dataclass(frozen=True)
class RunResult:
    final: ScalarField
    diagnostics: list
    snapshots: list  # [(t, ScalarField), ...]


class _Stepper:
    """RK4 with exact diffusion integrating factor, in rfft space."""

    def __init__(self, N: int, L: float, nu: float, dt: float, dealias: bool):
        self.ws = _workspace(N, L)
        self.N = N
        self.dt = dt
        self.mask = self.ws.dealias if dealias else np.ones_like(self.ws.dealias)
        self.E = np.exp(-nu * self.ws.ksq * (dt / 2.0))
        self.E2 = self.E**2

    def nonlinear(self, what: np.ndarray) -> np.ndarray:
        ws = self.ws
        wd = what * self.mask
        shape = (self.N, self.N)
        u = np.fft.irfft2(1j * ws.kd2 * wd * ws.inv_ksq, s=shape)
        v = np.fft.irfft2(-1j * ws.kd1 * wd * ws.inv_ksq, s=shape)
        wx = np.fft.irfft2(1j * ws.kd1 * wd, s=shape)
        wy = np.fft.irfft2(1j * ws.kd2 * wd, s=shape)
        out = -np.fft.rfft2(u * wx + v * wy) * self.mask
        out[0, 0] = 0.0
        return out

    def step(self, what: np.ndarray) -> np.ndarray:
        dt, E, E2 = self.dt, self.E, self.E2
        n1 = self.nonlinear(what)
        n2 = self.nonlinear(E * (what + (dt / 2.0) * n1))
        n3 = self.nonlinear(E * what + (dt / 2.0) * n2)
        n4 = self.nonlinear(E2 * what + dt * E * n3)
        new = E2 * what + (dt / 6.0) * (E2 * n1 + 2.0 * E * (n2 + n3) + n4)
        new[0, 0] = 0.0
        return new


def _auto_dt(cfg: SimConfig, omega0: ScalarField) -> float:
    if cfg.dt != "auto":
        dt0 = float(cfg.dt)
    else:
        vmax = float(np.max(biot_savart(omega0).magnitude()))
        if vmax == 0.0:
            return cfg.record_every
        dt0 = cfg.cfl_target * cfg.box_length / (cfg.N * vmax)
    n_sub = max(1, int(math.ceil(cfg.record_every / dt0 - 1e-12)))
    return cfg.record_every / n_sub


def _diagnostics(what: np.ndarray, N: int, L: float) -> DiagnosticsRecord:
    ws = _workspace(N, L)
    shape = (N, N)
    w = np.fft.irfft2(what, s=shape)
    uh = 1j * ws.kd2 * what * ws.inv_ksq
    vh = -1j * ws.kd1 * what * ws.inv_ksq
    u = np.fft.irfft2(uh, s=shape)
    v = np.fft.irfft2(vh, s=shape)
    gxx = np.fft.irfft2(1j * ws.kd1 * uh, s=shape)
    gxy = np.fft.irfft2(1j * ws.kd2 * uh, s=shape)
    gyx = np.fft.irfft2(1j * ws.kd1 * vh, s=shape)
    gyy = np.fft.irfft2(1j * ws.kd2 * vh, s=shape)
    gradmag = np.sqrt(gxx**2 + gxy**2 + gyx**2 + gyy**2)
    cell = (L / N) ** 2
    speed = np.sqrt(u**2 + v**2)
    energy = 0.5 * float(np.sum(speed**2) * cell)
    lp = {p: float((np.sum(np.abs(w) ** p) * cell) ** (1.0 / p)) for p in LP_DIAGNOSTIC_ORDERS}
    glp = {p: float((np.sum(gradmag**p) * cell) ** (1.0 / p)) for p in LP_DIAGNOSTIC_ORDERS}
    return DiagnosticsRecord(
        t=0.0, energy=energy, lp_norms=lp, grad_lp=glp, max_vel=float(np.max(speed))
    )


def step(omega: ScalarField, cfg: SimConfig, dt: float) -> ScalarField:
    """One time step; input must be zero-mean vorticity."""
    if not _mean_ok(omega.values):
        raise DomainError("vorticity must have zero mean")
    stepper = _Stepper(
        omega.N, omega.box_length, cfg.nu, dt, cfg.dealias == "two_thirds"
    )
    what = np.fft.rfft2(omega.values)
    what[0, 0] = 0.0
    new = stepper.step(what)
    out = np.fft.irfft2(new, s=omega.values.shape)
    if not np.all(np.isfinite(out)):
        raise InstabilityError(t=dt, cfl=float("nan"))
    return ScalarField(values=out, box_length=omega.box_length)


def run(cfg: SimConfig, omega0: ScalarField | None = None) -> RunResult:
    """Integrate from 0 to T, recording diagnostics and snapshots every
    record_every.  Identical configs reproduce bit-identical output.

    omega0 overrides the configured initial data (the sweep harness passes
    a spectrally refined copy of the base field to its control run)."""
    if omega0 is None:
        omega0 = build_initial_field(cfg.initial_data, cfg.N, cfg.box_length)
    elif omega0.N != cfg.N or omega0.box_length != cfg.box_length:
        raise DomainError("override field does not match the configured grid")
    dt = _auto_dt(cfg, omega0)
    stepper = _Stepper(cfg.N, cfg.box_length, cfg.nu, dt, cfg.dealias == "two_thirds")
    what = np.fft.rfft2(omega0.values)
    what[0, 0] = 0.0

    def rec(t: float) -> DiagnosticsRecord:
        with np.errstate(over="ignore"):
            d = _diagnostics(what, cfg.N, cfg.box_length)
        vals = [d.energy, d.max_vel, *d.lp_norms.values(), *d.grad_lp.values()]
        if not all(math.isfinite(v) for v in vals):
            cfl = diagnostics[-1].max_vel * dt * cfg.N / cfg.box_length if diagnostics else math.nan
            raise InstabilityError(t=t, cfl=cfl)
        return DiagnosticsRecord(
            t=t, energy=d.energy, lp_norms=d.lp_norms, grad_lp=d.grad_lp, max_vel=d.max_vel
        )

    def snap(t: float):
        w = np.fft.irfft2(what, s=(cfg.N, cfg.N))
        return (t, ScalarField(values=w.copy(), box_length=cfg.box_length))

    diagnostics = [rec(0.0)]
    snapshots = [snap(0.0)]
    n_records = round(cfg.T / cfg.record_every)
    n_sub = max(1, round(cfg.record_every / dt))
    t = 0.0
    for r in range(1, n_records + 1):
        for _ in range(n_sub):
            what = stepper.step(what)
            t += dt
            if not np.all(np.isfinite(what)):
                cfl = diagnostics[-1].max_vel * dt * cfg.N / cfg.box_length
                raise InstabilityError(t=t, cfl=cfl)
        t = r * cfg.record_every  # avoid drift in reported times
        diagnostics.append(rec(t))
        snapshots.append(snap(t))

    final = ScalarField(
        values=np.fft.irfft2(what, s=(cfg.N, cfg.N)), box_length=cfg.box_length
    )
    return RunResult(final=final, diagnostics=diagnostics, snapshots=snapshots)


def upsample(fld: ScalarField, n_target: int) -> ScalarField:
    """Spectral zero-padding onto a finer power-of-two grid (Nyquist zeroed).

    The refined field interpolates the same trigonometric polynomial, so a
    double-resolution run started from it isolates evolution error."""
    n = fld.N
    if n_target < n or (n_target & (n_target - 1)) != 0:
        raise DomainError("target size must be a power of two >= N")
    if n_target == n:
        return fld
    F = np.fft.fft2(fld.values) / (n * n)
    h = n // 2
    G = np.zeros((n_target, n_target), dtype=complex)
    G[:h, :h] = F[:h, :h]
    G[:h, -(h - 1):] = F[:h, -(h - 1):]
    G[-(h - 1):, :h] = F[-(h - 1):, :h]
    G[-(h - 1):, -(h - 1):] = F[-(h - 1):, -(h - 1):]
    vals = np.real(np.fft.ifft2(G * (n_target * n_target)))
    return ScalarField(values=vals, box_length=fld.box_length)


def downsample(fld: ScalarField, n_target: int) -> ScalarField:
    """Spectral truncation onto a coarser power-of-two grid (Nyquist zeroed)."""
    n = fld.N
    if n_target > n or n_target < 16 or (n_target & (n_target - 1)) != 0:
        raise DomainError("target size must be a power of two >= 16 and <= N")
    if n_target == n:
        return fld
    F = np.fft.fft2(fld.values) / (n * n)
    h = n_target // 2
    G = np.zeros((n_target, n_target), dtype=complex)
    G[:h, :h] = F[:h, :h]
    G[:h, -(h - 1):] = F[:h, -(h - 1):]
    G[-(h - 1):, :h] = F[-(h - 1):, :h]
    G[-(h - 1):, -(h - 1):] = F[-(h - 1):, -(h - 1):]
    vals = np.real(np.fft.ifft2(G * (n_target * n_target)))
    return ScalarField(values=vals, box_length=fld.box_length)


# -- snapshot persistence ----------------------------------------------------


def write_snapshot(path: str, fld: ScalarField, meta: dict | None = None) -> None:
    """Binary snapshot: 16-byte magic+version header then little-endian
    float64 row-major values; grid metadata goes to a JSON sidecar."""
    header = _SNAPSHOT_MAGIC + struct.pack("<II", _SNAPSHOT_VERSION, 0)
    payload = np.ascontiguousarray(fld.values, dtype="<f8").tobytes()
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(payload)
    os.replace(tmp, path)

    sidecar = {"n": fld.N, "box_length": fld.box_length, "format_version": _SNAPSHOT_VERSION}
    if meta:
        sidecar.update(meta)
    tmp = f"{path}.json.tmp"
    with open(tmp, "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, f"{path}.json")


def read_snapshot(path: str) -> tuple[ScalarField, dict]:
    with open(f"{path}.json") as fh:
        meta = json.load(fh)
    n = int(meta["n"])
    with open(path, "rb") as fh:
        header = fh.read(16)
        if header[:8] != _SNAPSHOT_MAGIC:
            raise DomainError(f"{path}: not a snapshot file")
        version, _ = struct.unpack("<II", header[8:])
        if version != _SNAPSHOT_VERSION:
            raise DomainError(f"{path}: unsupported snapshot version {version}")
        payload = fh.read()
    expected = n * n * 8
    if len(payload) != expected:
        raise DomainError(f"{path}: payload has {len(payload)} bytes, expected {expected}")
    values = np.frombuffer(payload, dtype="<f8").reshape(n, n).copy()
    return ScalarField(values=values, box_length=float(meta["box_length"])), meta


def diagnostics_csv_lines(records: Iterable[DiagnosticsRecord]) -> list[str]:
    """CSV rows for a diagnostics stream, floats at 17 significant digits."""
    ps = LP_DIAGNOSTIC_ORDERS
    header = "t,energy," + ",".join(f"lp{p}" for p in ps) + "," + ",".join(
        f"glp{p}" for p in ps
    ) + ",max_vel"
    lines = [header]
    for r in records:
        cells = [r.t, r.energy] + [r.lp_norms[p] for p in ps] + [r.grad_lp[p] for p in ps] + [r.max_vel]
        lines.append(",".join(f"{c:.17g}" for c in cells))
    return lines
