"""Run configuration: YAML file, dotted overrides, validation.

Every key has a default except ``protocol.kind``. With
``scatter.units: gamma0`` (the default) ``delta``, ``kerr`` and ``omega`` are
in units of Gamma_0 and ``grid.tau_d_max`` in units of 1 / Gamma_0; with
``absolute`` they are used as given. ``scatter.omega`` wins over
``scatter.beta`` when both are set.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import yaml

__all__ = ["ConfigError", "RunConfig", "DEFAULTS", "COMMANDS", "load_config", "parse_override"]

COMMANDS = ("envelope", "g2-map", "sidebands", "oracle-compare", "circuit-map")
KINDS = ("on_off", "sign_change", "constant", "custom")

DEFAULTS: dict[str, Any] = {
    "command": None,
    "protocol": {"kind": None, "g0": 1.0, "harmonics": []},
    "scatter": {"beta": 1.0, "omega": None, "delta": 0.0, "kerr": 0.0, "units": "gamma0"},
    "grid": {"n_samples": 512, "n_tau_c": 128, "n_tau_d": 128, "tau_d_max": None},
    "numeric": {
        "tol": 1e-10,
        "cutoff": 64,
        "solver": "dense",
        "node_floor": 1e-6,
        "lattice": {"n_sites": None, "refine": 1, "steps_per_site": 32, "n_bins": 64},
        "compare": {"analytic_tol": 1e-6, "oracle_tol": 2e-2, "n_samples": 512, "oracle": True},
    },
    "scan": {"key": None, "values": [], "workers": 1},
    "circuit": {
        "EJp": 1.0, "La": 1.0, "Lb": 1.0, "EJ": 50.0, "EC": 1.0, "f_k0": 0.1,
        "pump": {"kind": "on_off", "amplitude": 1.0, "omega": 0.1},
        "omega0": None, "Phi": None, "hbar": 1.0, "phi0": 1.0, "v": 1.0,
    },
    "output": {"directory": "qchopper-out", "formats": ["csv", "json"], "force": False},
}

# leaves whose default is None, with the type they take when set
_OPTIONAL = {
    "command": str, "protocol.kind": str, "scatter.omega": float, "grid.tau_d_max": float,
    "numeric.lattice.n_sites": int, "scan.key": str, "circuit.omega0": float,
    "circuit.Phi": float,
}
_CHOICES = {
    "command": COMMANDS,
    "protocol.kind": KINDS,
    "scatter.units": ("gamma0", "absolute"),
    "numeric.solver": ("dense", "banded"),
    "circuit.pump.kind": ("on_off", "sign_change"),
}
_FORMATS = ("csv", "json", "bin")


class ConfigError(ValueError):
    """Bad configuration; the message names the field and, if known, the line."""


def _line_map(text: str) -> dict[str, int]:
    """Dotted key -> 1-based line number, from the YAML node tree."""
    lines: dict[str, int] = {}
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return lines

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                key = f"{prefix}{k.value}"
                lines[key] = k.start_mark.line + 1
                walk(v, key + ".")

    if root is not None:
        walk(root, "")
    return lines


def _coerce(path: str, value, default, where: str):
    target = _OPTIONAL.get(path, type(default))
    if value is None:
        if path in _OPTIONAL:
            return None
        raise ConfigError(f"{where}: '{path}' may not be null")
    try:
        if target is bool:
            if isinstance(value, str):
                if value.lower() in ("true", "yes", "1"):
                    return True
                if value.lower() in ("false", "no", "0"):
                    return False
                raise ValueError(value)
            return bool(value)
        if target is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        if target is float:
            return float(value)
        if target is str:
            return str(value)
        if target is list:
            if not isinstance(value, list):
                raise ValueError(value)
            return value
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: '{path}' expects {target.__name__}, got {value!r}") from None
    return value


def _merge(base: dict, user: dict, lines: dict, prefix: str = "") -> None:
    for key, value in user.items():
        path = f"{prefix}{key}"
        where = f"line {lines[path]}" if path in lines else "override"
        if key not in base:
            raise ConfigError(f"{where}: unknown field '{path}'")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where}: '{path}' must be a mapping")
            _merge(base[key], value, lines, path + ".")
        else:
            base[key] = _coerce(path, value, base[key], where)
            if path in _CHOICES and base[key] is not None and base[key] not in _CHOICES[path]:
                raise ConfigError(f"{where}: '{path}' must be one of {_CHOICES[path]}, got {base[key]!r}")


def parse_override(text: str) -> tuple[str, Any]:
    """``a.b.c=value`` with the value parsed as YAML."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"override {key}: cannot parse {raw!r}: {exc}") from None
    return key.strip(), value


def _nest(key: str, value) -> dict:
    out: dict = {}
    cur = out
    parts = key.split(".")
    for p in parts[:-1]:
        cur = cur.setdefault(p, {})
    cur[parts[-1]] = value
    return out


@dataclass(frozen=True)
class RunConfig:
    data: dict
    source: Optional[str] = None

    def __getitem__(self, key: str):
        cur = self.data
        for p in key.split("."):
            cur = cur[p]
        return cur

    @property
    def command(self) -> str:
        return self.data["command"]

    def with_value(self, key: str, value) -> "RunConfig":
        data = copy.deepcopy(self.data)
        _merge(data, _nest(key, value), {})
        return RunConfig(data, self.source)

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)


def _validate(data: dict) -> None:
    if data["command"] is None:
        raise ConfigError("no command given (positional argument or 'command' field)")
    if data["command"] != "circuit-map" and data["protocol"]["kind"] is None:
        raise ConfigError("'protocol.kind' is required")
    if data["protocol"]["kind"] == "custom" and not data["protocol"]["harmonics"]:
        raise ConfigError("custom protocol needs 'protocol.harmonics' as [m, re, im] triples")
    for fmt in data["output"]["formats"]:
        if fmt not in _FORMATS:
            raise ConfigError(f"'output.formats' entries must be in {_FORMATS}, got {fmt!r}")
    scan = data["scan"]
    if scan["key"] is not None:
        if not scan["values"]:
            raise ConfigError("'scan.values' is empty")
        probe = copy.deepcopy(DEFAULTS)
        try:
            for v in scan["values"]:
                _merge(probe, _nest(scan["key"], v), {})
        except ConfigError as exc:
            raise ConfigError(f"scan: {exc}") from None
    if scan["workers"] < 1:
        raise ConfigError("'scan.workers' must be at least 1")


def load_config(path: Optional[str] = None, overrides: tuple[str, ...] = (),
                command: Optional[str] = None) -> RunConfig:
    data = copy.deepcopy(DEFAULTS)
    if path is not None:
        text = Path(path).read_text()
        try:
            user = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            loc = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
            raise ConfigError(f"{path}: YAML syntax error at {loc}: {getattr(exc, 'problem', exc)}") from None
        if not isinstance(user, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        lines = {k: v for k, v in _line_map(text).items()}
        try:
            _merge(data, user, lines)
        except ConfigError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    for item in overrides:
        key, value = parse_override(item)
        _merge(data, _nest(key, value), {})
    if command is not None:
        if command not in COMMANDS:
            raise ConfigError(f"unknown command {command!r}")
        data["command"] = command
    _validate(data)
    return RunConfig(data, path)
