"""Flat key-value config files and profile spec strings.

Config files hold one `key = value` pair per line; `#` starts a comment.
Initial-data parameters use a dotted prefix, e.g. `initial.kind = spectrum`.
Profile specs are compact strings: `const:C`, `iterlog:m`, `pow:a`, or
`table:PATH` where PATH is a two-column CSV (header row `p,theta`).
"""
from __future__ import annotations

import csv
import math

from .admissibility import ThetaBound
from .errors import DomainError
from .spectral import SimConfig


def parse_theta_spec(spec: str, p0: float | None = None) -> ThetaBound:
    kind, _, arg = spec.partition(":")
    if kind == "const":
        return ThetaBound.constant(scale=float(arg or 1.0), p0=p0 or 2.0)
    if kind == "iterlog":
        return ThetaBound.iterated_log(int(arg or 0), p0=p0)
    if kind == "pow":
        if not arg:
            raise DomainError("pow profile needs an exponent, e.g. pow:0.5")
        return ThetaBound.power_law(float(arg), p0=p0 or 2.0)
    if kind == "table":
        if not arg:
            raise DomainError("table profile needs a path, e.g. table:profile.csv")
        samples = _read_theta_table(arg)
        return ThetaBound.tabulated(samples, p0=p0)
    raise DomainError(
        f"unknown profile spec {spec!r}; use const:C, iterlog:m, pow:a, or table:PATH"
    )


def _read_theta_table(path: str) -> list:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row and any(c.strip() for c in row)]
    if not rows:
        raise DomainError(f"{path}: empty profile table")
    header = [c.strip().lower() for c in rows[0]]
    if header[:2] != ["p", "theta"]:
        raise DomainError(f"{path}: header row must be 'p,theta', got {rows[0]!r}")
    try:
        return [(float(r[0]), float(r[1])) for r in rows[1:]]
    except (ValueError, IndexError) as err:
        raise DomainError(f"{path}: malformed table row: {err}") from err


def parse_flat_config(path: str) -> dict:
    out: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            if key in out:
                raise DomainError(f"{path}:{lineno}: duplicate key {key!r}")
            out[key] = value.strip()
    return out


def _parse_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise DomainError(f"expected a boolean, got {value!r}")


_SIM_KEYS = {
    "nu",
    "T",
    "N",
    "box_length",
    "dt",
    "dealias",
    "record_every",
    "cfl_target",
    "output_dir",
}
_SWEEP_ONLY_KEYS = {
    "nu_list",
    "theta",
    "M",
    "p0",
    "R_constant",
    "control_run",
    "save_snapshots",
}


def _split_initial(entries: dict) -> tuple[dict, dict]:
    plain = {}
    initial = {}
    for key, value in entries.items():
        if key.startswith("initial."):
            initial[key[len("initial."):]] = value
        else:
            plain[key] = value
    if "kind" not in initial:
        raise DomainError("config must set initial.kind")
    return plain, initial


def build_sim_config(entries: dict, require_nu: bool = True) -> tuple[SimConfig, str | None]:
    """SimConfig plus the optional output_dir from a flat config dict."""
    plain, initial = _split_initial(entries)
    unknown = set(plain) - _SIM_KEYS
    if unknown:
        raise DomainError(f"unknown config keys: {sorted(unknown)}")
    for key in ("T", "N", "record_every"):
        if key not in plain:
            raise DomainError(f"config must set {key}")
    if require_nu and "nu" not in plain:
        raise DomainError("config must set nu (0 selects the zero-viscosity run)")
    dt = plain.get("dt", "auto")
    cfg = SimConfig(
        nu=float(plain.get("nu", 0.0)),
        T=float(plain["T"]),
        N=int(plain["N"]),
        initial_data=initial,
        box_length=float(plain.get("box_length", 2.0 * math.pi)),
        dt="auto" if dt == "auto" else float(dt),
        dealias=plain.get("dealias", "two_thirds"),
        record_every=float(plain["record_every"]),
        cfl_target=float(plain.get("cfl_target", 0.4)),
    )
    return cfg, plain.get("output_dir")


def build_sweep_config(entries: dict):
    from .harness import SweepConfig

    plain, initial = _split_initial(entries)
    unknown = set(plain) - _SIM_KEYS - _SWEEP_ONLY_KEYS
    if unknown:
        raise DomainError(f"unknown config keys: {sorted(unknown)}")
    for key in ("nu_list", "theta", "output_dir"):
        if key not in plain:
            raise DomainError(f"sweep config must set {key}")
    sim_entries = {k: v for k, v in plain.items() if k in _SIM_KEYS and k != "nu"}
    sim_entries.update({f"initial.{k}": v for k, v in initial.items()})
    base, output_dir = build_sim_config(sim_entries, require_nu=False)
    p0 = float(plain["p0"]) if "p0" in plain else None
    theta = parse_theta_spec(plain["theta"], p0=p0)
    m_raw = plain.get("M", "auto")
    return SweepConfig(
        base=base,
        nu_list=tuple(float(v) for v in plain["nu_list"].split(",")),
        theta=theta,
        output_dir=output_dir,
        M="auto" if m_raw == "auto" else float(m_raw),
        p0=p0,
        R_constant=float(plain.get("R_constant", 1.0)),
        control_run=_parse_bool(plain.get("control_run", "true")),
        save_snapshots=_parse_bool(plain.get("save_snapshots", "false")),
    )
