"""Run configuration: flat JSON key-value files with units in the key names.

Unknown keys, duplicate keys and invalid values are all rejected before any
compute starts, and every error is reported with the offending key so a bad
config can be fixed in one pass.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import List, Optional

import numpy as np

from .field import Grid
from .units import DEFAULT_LATTICE_SPACING, PhysicalParams, RB87_MASS


class ConfigError(ValueError):
    """Invalid run configuration; collects one message per offending key."""

    def __init__(self, messages: List[str]):
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


def _positive(x) -> bool:
    return isinstance(x, (int, float)) and x > 0


def _non_negative(x) -> bool:
    return isinstance(x, (int, float)) and x >= 0


def _number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


# key -> (default, predicate, description)
SCHEMA = {
    "atom_mass_kg": (RB87_MASS, _positive, "atomic mass in kg"),
    "lattice_spacing_m": (DEFAULT_LATTICE_SPACING, _positive, "lattice period in m"),
    "depth_s": (3.21, _non_negative, "lattice depth in units of E_L"),
    "trap_freq_hz": (25.0, _non_negative, "external trap frequency in Hz"),
    "beta": (1.0, _non_negative, "dimensionless interaction strength"),
    "tof_ms": (25.0, _non_negative, "time of flight in ms"),
    "theta0_deg": (45.0, lambda x: _number(x) and 0 <= x <= 180, "quench angle in degrees"),
    "ramp_ms": (11.0, _non_negative, "lattice loading ramp in ms"),
    "n_points": (4096, lambda x: isinstance(x, int) and x > 0, "grid points"),
    "box_length": (256.0, _positive, "dimensionless box length"),
    "dt": (5e-3, _positive, "dimensionless time step cap"),
    "gs_tol": (1e-9, _positive, "ground-state energy tolerance per step"),
    "snapshots": ("", lambda x: isinstance(x, str), "snapshot schedule start:stop:step[us|ms]"),
    "scan_values": ((), lambda x: isinstance(x, (list, tuple)) and all(_number(v) for v in x),
                    "axis values for scans"),
    "output_dir": ("runs", lambda x: isinstance(x, str) and len(x) > 0, "output directory"),
}


@dataclass(frozen=True)
class RunConfig:
    atom_mass_kg: float
    lattice_spacing_m: float
    depth_s: float
    trap_freq_hz: float
    beta: float
    tof_ms: float
    theta0_deg: float
    ramp_ms: float
    n_points: int
    box_length: float
    dt: float
    gs_tol: float
    snapshots: str
    scan_values: tuple
    output_dir: str

    def physical_params(self) -> PhysicalParams:
        return PhysicalParams(
            atom_mass=self.atom_mass_kg,
            lattice_spacing=self.lattice_spacing_m,
            depth=self.depth_s,
            omega_ext=2.0 * math.pi * self.trap_freq_hz,
            beta=self.beta,
            tof_time=self.tof_ms * 1e-3,
        )

    def grid(self) -> Grid:
        return Grid(self.n_points, self.box_length)

    def echo(self) -> dict:
        d = asdict(self)
        d["scan_values"] = list(self.scan_values)
        return d


def config_from_dict(raw: dict) -> RunConfig:
    """Validate a flat mapping against the schema, materializing defaults."""
    errors = []
    for key in raw:
        if key not in SCHEMA:
            errors.append(f"unknown key {key!r}")
    values = {}
    for key, (default, predicate, description) in SCHEMA.items():
        if key in raw:
            value = raw[key]
            if not predicate(value):
                errors.append(f"invalid value for {key!r} ({description}): {value!r}")
                continue
            values[key] = value
        else:
            values[key] = default
    if errors:
        raise ConfigError(errors)
    values["scan_values"] = tuple(float(v) for v in values["scan_values"])
    values["n_points"] = int(values["n_points"])
    for key in values:
        if key not in ("snapshots", "scan_values", "output_dir", "n_points"):
            values[key] = float(values[key])
    try:
        cfg = RunConfig(**values)
        cfg.physical_params()
        cfg.grid()
    except ValueError as exc:
        raise ConfigError([str(exc)]) from exc
    return cfg


def _reject_duplicates(pairs):
    seen = set()
    out = {}
    for key, value in pairs:
        if key in seen:
            raise ConfigError([f"duplicate key {key!r}"])
        seen.add(key)
        out[key] = value
    return out


def load_config(path) -> RunConfig:
    """Parse and validate a JSON config file."""
    try:
        with open(path) as fh:
            raw = json.load(fh, object_pairs_hook=_reject_duplicates)
    except FileNotFoundError:
        raise ConfigError([f"config file not found: {path}"])
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config is not valid JSON: {exc}"])
    if not isinstance(raw, dict):
        raise ConfigError(["config must be a JSON object of key-value pairs"])
    return config_from_dict(raw)


_TIME_SUFFIXES = {"us": 1e-6, "ms": 1e-3}


def parse_time(token: str, time_unit: float) -> float:
    """One time value, dimensionless unless suffixed with us/ms."""
    token = token.strip()
    for suffix, factor in _TIME_SUFFIXES.items():
        if token.endswith(suffix):
            return float(token[: -len(suffix)]) * factor / time_unit
    return float(token)


def parse_schedule(spec: str, time_unit: float) -> np.ndarray:
    """Snapshot schedule 'start:stop:step', unit suffix applying to all parts.

    '0:130:5us' is 27 snapshots 5 us apart; without a suffix the numbers are
    dimensionless times.
    """
    spec = spec.strip()
    factor = 1.0
    for suffix, scale in _TIME_SUFFIXES.items():
        if spec.endswith(suffix):
            factor = scale / time_unit
            spec = spec[: -len(suffix)]
            break
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError([f"snapshot schedule must be start:stop:step, got {spec!r}"])
    try:
        start, stop, step_len = (float(p) for p in parts)
    except ValueError:
        raise ConfigError([f"non-numeric snapshot schedule component in {spec!r}"])
    if step_len <= 0 or stop < start:
        raise ConfigError([f"empty snapshot schedule {spec!r}"])
    times = np.arange(start, stop + step_len / 2, step_len) * factor
    return times
