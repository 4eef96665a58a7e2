"""Flat TOML experiment files.

One key/value list per file, no tables. Ranges are two-element arrays and
sweeps are arrays. Each subcommand has its own schema; unknown keys and
wrongly typed values are rejected.
"""

from __future__ import annotations

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError

FLOAT = "float"
INT = "int"
STR = "str"
RANGE = "range"      # [lo, hi]
INTS = "ints"
FLOATS = "floats"

COMMON = {"trials": INT, "seed": INT, "workers": INT, "out": STR}

SCHEMAS = {
    "greedy": {
        **COMMON,
        "target": STR,
        "grid_size": INT,
        "n_steps": INT,
        "m_prime": FLOAT,
        "m_dprime": FLOAT,
        "sel_eps": FLOAT,
        "w_range": RANGE,
        "b_range": RANGE,
        "max_draws": INT,
        "batch_size": INT,
        "selection_rule": STR,
    },
    "random": {
        **COMMON,
        "target": STR,
        "family": STR,
        "grid_size": INT,
        "n_steps": INT,
        "w_range": RANGE,
        "b_range": RANGE,
        "a_range": RANGE,
        "sigma_range": RANGE,
        "cond_limit": FLOAT,
        "rel_tol": FLOAT,
    },
    "const-blowup": {
        **COMMON,
        "grid_size": INT,
        "n_steps": INT,
        "a_range": RANGE,
        "sigma_range": RANGE,
        "cond_limit": FLOAT,
        "rel_tol": FLOAT,
        "snapshot_steps": INTS,
    },
    "bounds": {
        **COMMON,
        "n": INTS,
        "eps": FLOATS,
        "theta": FLOATS,
    },
    "chains": {
        **COMMON,
        "n": INTS,
        "tol": FLOAT,
        "theta": FLOAT,
        "max_length": INT,
    },
    "angles": {
        **COMMON,
        "n": INT,
        "count": INT,
        "bins": INT,
    },
}


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_number(v):
    return _is_int(v) or isinstance(v, float)


def coerce(key: str, kind: str, value):
    """Check ``value`` against ``kind`` and return it normalized."""
    bad = ConfigError(f"{key}: expected {kind}, got {value!r}")
    if kind == INT:
        if not _is_int(value):
            raise bad
        return value
    if kind == FLOAT:
        if not _is_number(value):
            raise bad
        return float(value)
    if kind == STR:
        if not isinstance(value, str):
            raise bad
        return value
    if kind == RANGE:
        if not (isinstance(value, (list, tuple)) and len(value) == 2 and all(_is_number(v) for v in value)):
            raise bad
        return [float(v) for v in value]
    if kind == INTS:
        if not (isinstance(value, (list, tuple)) and all(_is_int(v) for v in value)):
            raise bad
        return list(value)
    if kind == FLOATS:
        if not (isinstance(value, (list, tuple)) and all(_is_number(v) for v in value)):
            raise bad
        return [float(v) for v in value]
    raise ConfigError(f"{key}: unknown schema type {kind!r}")


def check_values(values: dict, command: str) -> dict:
    if command not in SCHEMAS:
        raise ConfigError(f"unknown subcommand {command!r}")
    schema = SCHEMAS[command]
    unknown = sorted(set(values) - set(schema))
    if unknown:
        raise ConfigError(f"unknown keys for {command}: {', '.join(unknown)}")
    return {key: coerce(key, schema[key], value) for key, value in values.items()}


def load_config(path, command: str) -> dict:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    nested = [k for k, v in raw.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f"{path}: tables are not allowed ({', '.join(nested)})")
    return check_values(raw, command)
