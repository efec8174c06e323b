import json
import math
import os

import numpy as np
import pytest

from inviscid.admissibility import ThetaBound
from inviscid.errors import DomainError
from inviscid.harness import (
    ConvergenceRecord,
    SweepConfig,
    check_energy_inequality,
    emit_report,
    read_records_csv,
    records_csv_lines,
    run_sweep,
)
from inviscid.spectral import SimConfig, run

L = 2.0 * math.pi
SMOOTH = {"kind": "spectrum", "slope": -1.0, "k_min": 2, "k_max": 10, "seed": 3}


def small_base(**over):
    kw = dict(nu=0.0, T=0.4, N=32, initial_data=SMOOTH, record_every=0.2)
    kw.update(over)
    return SimConfig(**kw)


def small_sweep(tmp_path, **over):
    kw = dict(
        base=small_base(),
        nu_list=(1e-2, 5e-3),
        theta=ThetaBound.iterated_log(1),
        output_dir=str(tmp_path / "out"),
        control_run=False,
    )
    kw.update(over)
    return SweepConfig(**kw)


# -- energy inequality --------------------------------------------------------


def test_energy_inequality_identical_runs():
    res = run(small_base(nu=1e-2))
    rep = check_energy_inequality(res.snapshots, res.snapshots, nu=1e-2, R=3.0)
    # lhs is identically zero, so the slack is exactly R nu t
    assert max(rep.lhs) == 0.0
    for t, rhs in zip(rep.times, rep.rhs):
        assert abs(rhs - 3.0 * 1e-2 * t) < 1e-15
    assert rep.min_slack >= 0.0


def test_energy_inequality_two_identical_ns_runs():
    cfg = small_base(nu=5e-3)
    a, b = run(cfg), run(cfg)
    rep = check_energy_inequality(a.snapshots, b.snapshots, nu=5e-3, R=0.0)
    assert max(rep.lhs) <= 1e-24  # round-off only


def test_energy_inequality_ns_vs_euler_nonnegative_slack():
    ns = run(small_base(nu=1e-2))
    euler = run(small_base(nu=0.0))
    from inviscid.spectral import build_initial_field, lp_norm

    w0 = build_initial_field(SMOOTH, 32, L)
    R = 10.0 * lp_norm(w0, 2.0) ** 2
    rep = check_energy_inequality(ns.snapshots, euler.snapshots, nu=1e-2, R=R)
    assert rep.min_slack >= -rep.quad_error_estimate


def test_energy_inequality_misaligned_inputs():
    res = run(small_base(nu=1e-2))
    shifted = [(t + 0.05, f) for t, f in res.snapshots]
    with pytest.raises(DomainError):
        check_energy_inequality(res.snapshots, shifted, nu=1e-2, R=1.0)
    with pytest.raises(DomainError):
        check_energy_inequality(res.snapshots, res.snapshots[:-1], nu=1e-2, R=1.0)


# -- sweep --------------------------------------------------------------------


def test_sweep_config_validation(tmp_path):
    with pytest.raises(DomainError):
        small_sweep(tmp_path, nu_list=(1e-2, 1e-2))  # not strictly decreasing
    with pytest.raises(DomainError):
        small_sweep(tmp_path, nu_list=(1e-2, -1e-3))
    with pytest.raises(DomainError):
        small_sweep(tmp_path, base=small_base(nu=1e-3))  # reference must be nu = 0


def test_run_sweep_outputs_and_summary(tmp_path):
    cfg = small_sweep(tmp_path, control_run=True)
    result = run_sweep(cfg)
    n_times = len(run(cfg.base).snapshots)
    assert len(result.records) == 2 * n_times
    by_nu = {}
    for r in result.records:
        by_nu.setdefault(r.nu, []).append(r)
        assert r.measured >= 0.0 and r.bound >= 0.0
        assert abs(r.measured_sq - r.measured**2) < 1e-18
    assert set(by_nu) == {1e-2, 5e-3}
    s = result.summary
    assert s["monotone_sup"] in (True, False)
    assert s["discretization_error_bar"] is not None
    assert set(s["bound_satisfied_by_C"]) == {"0.1", "1", "10"}
    for path in ("records.csv", "summary.json", "measured_vs_nu.dat", "euler_diagnostics.csv"):
        assert os.path.exists(os.path.join(cfg.output_dir, path))
    # summary JSON round-trips
    loaded = json.load(open(os.path.join(cfg.output_dir, "summary.json")))
    assert loaded["sup_measured"] == s["sup_measured"]


def test_sweep_determinism_bit_identical(tmp_path):
    cfg_a = small_sweep(tmp_path / "a")
    cfg_b = small_sweep(tmp_path / "b")
    run_sweep(cfg_a)
    run_sweep(cfg_b)
    a = open(os.path.join(cfg_a.output_dir, "records.csv"), "rb").read()
    b = open(os.path.join(cfg_b.output_dir, "records.csv"), "rb").read()
    assert a == b


def test_sweep_worker_count_invariance(tmp_path):
    cfg_a = small_sweep(tmp_path / "serial")
    cfg_b = small_sweep(tmp_path / "parallel")
    os.environ.pop("INVISCID_WORKERS", None)
    run_sweep(cfg_a)
    os.environ["INVISCID_WORKERS"] = "2"
    try:
        run_sweep(cfg_b)
    finally:
        del os.environ["INVISCID_WORKERS"]
    a = open(os.path.join(cfg_a.output_dir, "records.csv"), "rb").read()
    b = open(os.path.join(cfg_b.output_dir, "records.csv"), "rb").read()
    assert a == b


def test_sweep_save_snapshots(tmp_path):
    cfg = small_sweep(tmp_path, save_snapshots=True)
    run_sweep(cfg)
    from inviscid.spectral import read_snapshot

    snaps = sorted(f for f in os.listdir(cfg.output_dir) if f.endswith(".bin"))
    assert snaps
    fld, meta = read_snapshot(os.path.join(cfg.output_dir, snaps[0]))
    assert fld.N == 32 and "nu" in meta


# -- report emission -----------------------------------------------------------


def synthetic_records():
    out = []
    for nu in (1e-2, 1e-3, 1e-4):
        for k in range(10):
            t = 0.1 * (k + 1)
            m = math.sqrt(nu * t)
            out.append(
                ConvergenceRecord(
                    nu=nu, t=t, measured=m, measured_sq=m * m, bound=2 * m * m, ratio=0.5
                )
            )
    return out


def test_emit_report_empty_records(tmp_path):
    files = emit_report([], {}, "csv", str(tmp_path))
    lines = open(files[0]).read().splitlines()
    assert lines == ["nu,t,measured,measured_sq,bound,ratio"]


def test_emit_report_row_count(tmp_path):
    recs = synthetic_records()
    files = emit_report(recs, {}, "csv", str(tmp_path))
    lines = open(files[0]).read().splitlines()
    assert len(lines) == 31  # header + 3 nu x 10 times


def test_records_csv_roundtrip(tmp_path):
    recs = synthetic_records()
    path = str(tmp_path / "records.csv")
    with open(path, "w") as fh:
        fh.write("\n".join(records_csv_lines(recs)) + "\n")
    back = read_records_csv(path)
    assert back == recs


def test_summary_json_roundtrip(tmp_path):
    summary = {"alpha_hat": 0.5, "sup_measured": {"0.01": 0.125}, "flags": [True, False]}
    emit_report([], summary, "json", str(tmp_path))
    loaded = json.load(open(tmp_path / "summary.json"))
    assert loaded == summary


def test_emit_report_plot_files(tmp_path):
    recs = synthetic_records()
    files = emit_report(recs, {}, "plot", str(tmp_path))
    names = {os.path.basename(f) for f in files}
    assert {"measured_vs_nu.dat", "bound_vs_nu.dat"} <= names
    assert sum(1 for n in names if n.startswith("measured_vs_t_nu")) == 3
    rows = open(tmp_path / "measured_vs_nu.dat").read().splitlines()
    assert len(rows) == 3
    nu0, sup0 = (float(v) for v in rows[0].split())
    assert nu0 == 1e-2 and abs(sup0 - math.sqrt(1e-2 * 1.0)) < 1e-15


def test_emit_report_rejects_unknown_format(tmp_path):
    with pytest.raises(DomainError):
        emit_report([], {}, "xml", str(tmp_path))


# -- fitted exponent ------------------------------------------------------------


def test_alpha_fit_recovers_known_exponent():
    from inviscid.harness import _alpha_fit, _bootstrap_alpha_ci

    nus = np.geomspace(1e-2, 1e-4, 8)
    sups = 3.0 * nus**0.5
    assert abs(_alpha_fit(nus, sups) - 0.5) < 1e-12
    series = {nu: [3.0 * nu**0.5 * f for f in (0.5, 0.8, 1.0)] for nu in nus}
    lo, hi = _bootstrap_alpha_ci(series)
    assert lo <= 0.5 + 1e-9 and hi >= 0.5 - 1e-9
    assert hi - lo < 0.05
