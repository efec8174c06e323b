"""Viscosity-sweep experiments against the zero-viscosity reference.

A sweep runs the zero-viscosity equations once (plus a double-resolution
control run to estimate discretization error), runs the viscous equations
for each nu in a decreasing list from the same initial vorticity, measures
the L^2 velocity differences at the recorded times, and compares their
squares against the theoretical bound f(R * nu * t).

R is C * |w0|_{L^2}^2 with C a calibration constant the theory does not
pin down; sweeps evaluate the bound for C in {0.1, 1, 10} and report the
smallest sufficient C rather than asserting one in advance.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from ._version import __version__ as _version
from .admissibility import BetaContext, ThetaBound
from .errors import DomainError, InstabilityError
from .osgood import RateBound, RateInverter, theoretical_l2_bound
from .spectral import (
    ScalarField,
    SimConfig,
    _workspace,
    biot_savart,
    build_initial_field,
    diagnostics_csv_lines,
    downsample,
    l2_velocity_diff,
    lp_norm,
    run,
    upsample,
)

C_SWEEP = (0.1, 1.0, 10.0)
WORKERS_ENV = "INVISCID_WORKERS"


@dataclass(frozen=True)
class SweepConfig:
    """Shared grid and initial data, the nu ladder, and bound inputs."""

    base: SimConfig
    nu_list: tuple
    theta: ThetaBound
    output_dir: str
    M: float | str = "auto"
    p0: float | None = None
    R_constant: float = 1.0
    control_run: bool = True
    save_snapshots: bool = False

    def __post_init__(self):
        if self.base.nu != 0.0:
            raise DomainError("base config must have nu = 0 (the reference run)")
        nus = tuple(float(v) for v in self.nu_list)
        if len(nus) < 1 or any(v <= 0.0 for v in nus):
            raise DomainError("nu_list must contain positive values")
        if any(b >= a for a, b in zip(nus, nus[1:])):
            raise DomainError("nu_list must be strictly decreasing")
        object.__setattr__(self, "nu_list", nus)
        if self.R_constant < 0.0:
            raise DomainError("R_constant must be nonnegative")


@dataclass(frozen=True)
class ConvergenceRecord:
    """One (nu, t) sample.  measured is the L^2 velocity difference (the
    square-root convention); bound applies to its square."""

    nu: float
    t: float
    measured: float
    measured_sq: float
    bound: float
    ratio: float


@dataclass(frozen=True)
class EnergyInequalityReport:
    nu: float
    times: tuple
    lhs: tuple
    rhs: tuple
    min_slack: float
    quad_error_estimate: float


@dataclass(frozen=True)
class SweepResult:
    records: list
    summary: dict
    energy_reports: list


def _grad_magnitude(fld: ScalarField) -> np.ndarray:
    ws = _workspace(fld.N, fld.box_length)
    what = np.fft.rfft2(fld.values)
    uh = 1j * ws.kd2 * what * ws.inv_ksq
    vh = -1j * ws.kd1 * what * ws.inv_ksq
    shape = fld.values.shape
    gxx = np.fft.irfft2(1j * ws.kd1 * uh, s=shape)
    gxy = np.fft.irfft2(1j * ws.kd2 * uh, s=shape)
    gyx = np.fft.irfft2(1j * ws.kd1 * vh, s=shape)
    gyy = np.fft.irfft2(1j * ws.kd2 * vh, s=shape)
    return np.sqrt(gxx**2 + gxy**2 + gyx**2 + gyy**2)


def check_energy_inequality(
    snaps_a: list, snaps_b: list, nu: float, R: float
) -> EnergyInequalityReport:
    """Discrete check of |w(t)|_2^2 <= R nu t + 2 int_0^t int |grad v'| |w|^2.

    snaps_a and snaps_b are [(t, ScalarField), ...] from two runs on one
    grid and time ladder; the primed (reference) fields are snaps_b.  Time
    integration is trapezoidal; the quadrature error estimate is the gap
    to Simpson's rule on the same samples.
    """
    if len(snaps_a) != len(snaps_b):
        raise DomainError("snapshot streams have different lengths")
    times = []
    lhs = []
    g_vals = []
    for (ta, fa), (tb, fb) in zip(snaps_a, snaps_b):
        if abs(ta - tb) > 1e-9 * max(1.0, abs(ta)):
            raise DomainError(f"snapshot times misaligned: {ta} vs {tb}")
        if fa.N != fb.N or fa.box_length != fb.box_length:
            raise DomainError("snapshot grids misaligned")
        va = biot_savart(fa)
        vb = biot_savart(fb)
        w2 = (va.u - vb.u) ** 2 + (va.v - vb.v) ** 2
        cell = fa.cell_area
        times.append(ta)
        lhs.append(float(np.sum(w2) * cell))
        g_vals.append(float(np.sum(_grad_magnitude(fb) * w2) * cell))
    times = np.asarray(times)
    lhs = np.asarray(lhs)
    g_vals = np.asarray(g_vals)

    rhs = np.empty_like(lhs)
    for i in range(len(times)):
        rhs[i] = R * nu * times[i] + 2.0 * float(np.trapezoid(g_vals[: i + 1], times[: i + 1]))
    slacks = rhs - lhs

    if len(times) >= 3:
        quad_err = abs(
            float(np.trapezoid(g_vals, times)) - float(simpson(g_vals, x=times))
        ) * 2.0
    else:
        quad_err = 0.0
    return EnergyInequalityReport(
        nu=nu,
        times=tuple(float(t) for t in times),
        lhs=tuple(float(v) for v in lhs),
        rhs=tuple(float(v) for v in rhs),
        min_slack=float(np.min(slacks)),
        quad_error_estimate=float(quad_err),
    )


def _ns_config(base: SimConfig, nu: float) -> SimConfig:
    return SimConfig(
        nu=nu,
        T=base.T,
        N=base.N,
        initial_data=base.initial_data,
        box_length=base.box_length,
        dt=base.dt,
        dealias=base.dealias,
        record_every=base.record_every,
        cfl_target=base.cfl_target,
    )


def _run_job(cfg: SimConfig):
    res = run(cfg)
    return res.snapshots, res.diagnostics


def _alpha_fit(nus: np.ndarray, sups: np.ndarray, n_points: int = 4) -> float:
    idx = np.argsort(nus)[:n_points]
    x = np.log(nus[idx])
    y = np.log(sups[idx])
    return float(np.polyfit(x, y, 1)[0])


def _bootstrap_alpha_ci(
    per_nu_series: dict, n_points: int = 4, n_boot: int = 200, seed: int = 12345
) -> tuple:
    """Percentile CI of the fitted exponent under resampling of record times."""
    nus = np.asarray(sorted(per_nu_series.keys(), reverse=True))
    series = np.asarray([per_nu_series[nu] for nu in nus])  # (n_nu, n_t)
    n_t = series.shape[1]
    rng = np.random.default_rng(seed)
    alphas = []
    for _ in range(n_boot):
        pick = rng.integers(0, n_t, size=n_t)
        sups = series[:, pick].max(axis=1)
        if np.any(sups <= 0.0):
            continue
        alphas.append(_alpha_fit(nus, sups, n_points))
    if not alphas:
        return (math.nan, math.nan)
    lo, hi = np.percentile(alphas, [2.5, 97.5])
    return (float(lo), float(hi))


def run_sweep(cfg: SweepConfig) -> SweepResult:
    """Run the sweep and persist CSV/JSON/plot outputs into output_dir.

    Any run instability aborts the sweep; records completed up to that
    point are persisted before the error propagates.
    """
    os.makedirs(cfg.output_dir, exist_ok=True)
    base = cfg.base
    omega0 = build_initial_field(base.initial_data, base.N, base.box_length)
    omega0_l2 = lp_norm(omega0, 2.0)
    v0max = float(np.max(biot_savart(omega0).magnitude()))
    M = (2.0 * v0max) ** 2 if cfg.M == "auto" else float(cfg.M)

    euler = run(base)

    disc_error = None
    if cfg.control_run:
        control_cfg = SimConfig(
            nu=0.0,
            T=base.T,
            N=base.N * 2,
            initial_data=base.initial_data,
            box_length=base.box_length,
            dt=base.dt,
            dealias=base.dealias,
            record_every=base.record_every,
            cfl_target=base.cfl_target,
        )
        control = run(control_cfg, omega0=upsample(omega0, control_cfg.N))
        disc_error = max(
            l2_velocity_diff(a[1], downsample(b[1], base.N))
            for a, b in zip(euler.snapshots, control.snapshots)
        )

    beta_ctx = BetaContext(M=M, theta=cfg.theta, p0=cfg.p0)
    rb = RateBound(beta_ctx=beta_ctx, T=base.T, R=cfg.R_constant * omega0_l2**2)

    workers = max(1, int(os.environ.get(WORKERS_ENV, "1")))
    ns_configs = [_ns_config(base, nu) for nu in cfg.nu_list]

    records: list[ConvergenceRecord] = []
    energy_reports: list[EnergyInequalityReport] = []
    per_nu_series: dict[float, list] = {}
    aborted = None

    def consume(nu, snapshots):
        series = []
        for (t, snap), (_, ref) in zip(snapshots, euler.snapshots):
            measured = l2_velocity_diff(snap, ref)
            bound = theoretical_l2_bound(rb, nu, t) if rb.R > 0.0 else 0.0
            msq = measured**2
            if bound > 0.0:
                ratio = msq / bound
            else:
                ratio = 0.0 if msq == 0.0 else math.inf
            records.append(
                ConvergenceRecord(
                    nu=nu, t=t, measured=measured, measured_sq=msq, bound=bound, ratio=ratio
                )
            )
            if t > 0.0:
                series.append(measured)
        per_nu_series[nu] = series
        energy_reports.append(
            check_energy_inequality(snapshots, euler.snapshots, nu, rb.R)
        )
        if cfg.save_snapshots:
            from .spectral import write_snapshot

            for t, snap in snapshots:
                name = os.path.join(cfg.output_dir, f"snap_nu{nu:.6e}_t{t:.6f}.bin")
                write_snapshot(name, snap, {"t": t, "nu": nu})

    try:
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_run_job, c) for c in ns_configs]
                for nu, fut in zip(cfg.nu_list, futures):
                    snapshots, _ = fut.result()
                    consume(nu, snapshots)
        else:
            for nu, c in zip(cfg.nu_list, ns_configs):
                snapshots, _ = _run_job(c)
                consume(nu, snapshots)
    except InstabilityError as err:
        aborted = str(err)
        abort_exc = err

    summary = _summarize(
        cfg, records, per_nu_series, energy_reports, omega0_l2, M, disc_error, aborted
    )
    emit_report(records, summary, "csv", cfg.output_dir)
    emit_report(records, summary, "json", cfg.output_dir)
    emit_report(records, summary, "plot", cfg.output_dir)
    _write_atomic(
        os.path.join(cfg.output_dir, "euler_diagnostics.csv"),
        "\n".join(diagnostics_csv_lines(euler.diagnostics)) + "\n",
    )
    if aborted is not None:
        raise abort_exc
    return SweepResult(records=records, summary=summary, energy_reports=energy_reports)


def _summarize(
    cfg, records, per_nu_series, energy_reports, omega0_l2, M, disc_error, aborted
):
    nus_done = sorted(per_nu_series.keys(), reverse=True)
    sups = {nu: (max(v) if v else 0.0) for nu, v in per_nu_series.items()}
    sup_arr = np.asarray([sups[nu] for nu in nus_done])
    monotone = bool(np.all(sup_arr[1:] <= sup_arr[:-1] * 1.05)) if len(sup_arr) > 1 else True

    alpha = math.nan
    ci = (math.nan, math.nan)
    if len(nus_done) >= 2 and np.all(sup_arr > 0.0):
        alpha = _alpha_fit(np.asarray(nus_done), sup_arr, n_points=min(4, len(nus_done)))
        ci = _bootstrap_alpha_ci(per_nu_series, n_points=min(4, len(nus_done)))

    base = cfg.base
    bound_flags = {}
    smallest_c = None
    if cfg.R_constant >= 0.0 and records:
        beta_ctx = BetaContext(M=M, theta=cfg.theta, p0=cfg.p0)
        inverse = RateInverter(beta_ctx, base.T)
        # x_needed = 0.0 means any positive argument already dominates the
        # measurement, so that record does not constrain the calibration
        needed = 0.0
        for r in records:
            if r.t <= 0.0 or r.measured_sq <= 0.0:
                continue
            x_needed = inverse(r.measured_sq)
            needed = max(needed, x_needed / (omega0_l2**2 * r.nu * r.t))
        smallest_c = needed
        for c in C_SWEEP:
            ok = True
            for r in records:
                if r.t <= 0.0:
                    continue
                scaled_bound = r.bound if cfg.R_constant == c else None
                if scaled_bound is None:
                    rb_c = RateBound(
                        beta_ctx=beta_ctx, T=base.T, R=c * omega0_l2**2
                    )
                    scaled_bound = theoretical_l2_bound(rb_c, r.nu, r.t)
                if r.measured_sq > scaled_bound:
                    ok = False
                    break
            bound_flags[f"{c:g}"] = ok

    return {
        "version": _version,
        "aborted": aborted,
        "alpha_hat": alpha,
        "alpha_hat_ci": list(ci),
        "sup_measured": {f"{nu:.17g}": sups[nu] for nu in nus_done},
        "monotone_sup": monotone,
        "bound_satisfied_by_C": bound_flags,
        "smallest_sufficient_C": smallest_c,
        "discretization_error_bar": disc_error,
        "energy_inequality": {
            f"{r.nu:.17g}": {
                "min_slack": r.min_slack,
                "quad_error_estimate": r.quad_error_estimate,
            }
            for r in energy_reports
        },
        "omega0_l2": omega0_l2,
        "M_used": M,
        "config": {
            "nu_list": list(cfg.nu_list),
            "R_constant": cfg.R_constant,
            "theta": {
                "kind": cfg.theta.kind,
                "p0": cfg.theta.p0,
                "scale": cfg.theta.scale,
                "m": cfg.theta.m,
                "exponent": cfg.theta.exponent,
            },
            "base": {
                "nu": base.nu,
                "T": base.T,
                "N": base.N,
                "box_length": base.box_length,
                "dt": base.dt if isinstance(base.dt, str) else float(base.dt),
                "dealias": base.dealias,
                "record_every": base.record_every,
                "cfl_target": base.cfl_target,
                "initial_data": dict(base.initial_data),
            },
        },
    }


RECORDS_HEADER = "nu,t,measured,measured_sq,bound,ratio"


def records_csv_lines(records) -> list[str]:
    lines = [RECORDS_HEADER]
    for r in records:
        lines.append(
            ",".join(
                f"{v:.17g}"
                for v in (r.nu, r.t, r.measured, r.measured_sq, r.bound, r.ratio)
            )
        )
    return lines


def read_records_csv(path: str) -> list:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != RECORDS_HEADER:
        raise DomainError(f"{path}: unrecognized records header")
    out = []
    for ln in lines[1:]:
        nu, t, measured, msq, bound, ratio = (float(v) for v in ln.split(","))
        out.append(
            ConvergenceRecord(
                nu=nu, t=t, measured=measured, measured_sq=msq, bound=bound, ratio=ratio
            )
        )
    return out


def _write_atomic(path: str, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def emit_report(records, summary, fmt: str, output_dir: str) -> list[str]:
    """Persist records in one of three formats; returns the files written."""
    os.makedirs(output_dir, exist_ok=True)
    written = []
    if fmt == "csv":
        path = os.path.join(output_dir, "records.csv")
        _write_atomic(path, "\n".join(records_csv_lines(records)) + "\n")
        written.append(path)
    elif fmt == "json":
        path = os.path.join(output_dir, "summary.json")
        _write_atomic(path, json.dumps(summary, indent=2, sort_keys=True) + "\n")
        written.append(path)
    elif fmt == "plot":
        by_nu: dict[float, list] = {}
        for r in records:
            by_nu.setdefault(r.nu, []).append(r)
        nus = sorted(by_nu, reverse=True)
        sup_lines = [
            f"{nu:.17g} {max((r.measured for r in by_nu[nu] if r.t > 0), default=0.0):.17g}"
            for nu in nus
        ]
        path = os.path.join(output_dir, "measured_vs_nu.dat")
        _write_atomic(path, "\n".join(sup_lines) + "\n")
        written.append(path)
        bound_lines = [
            f"{nu:.17g} {max((r.bound for r in by_nu[nu]), default=0.0):.17g}" for nu in nus
        ]
        path = os.path.join(output_dir, "bound_vs_nu.dat")
        _write_atomic(path, "\n".join(bound_lines) + "\n")
        written.append(path)
        for i, nu in enumerate(nus):
            rows = [f"{r.t:.17g} {r.measured:.17g}" for r in sorted(by_nu[nu], key=lambda r: r.t)]
            path = os.path.join(output_dir, f"measured_vs_t_nu{i}.dat")
            _write_atomic(path, "\n".join(rows) + "\n")
            written.append(path)
    else:
        raise DomainError(f"unknown report format {fmt!r}")
    return written
