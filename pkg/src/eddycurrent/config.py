"""Scenario files: flat ``key = value`` text with dotted sections.

Grammar
-------
    line    := blank | comment | entry
    comment := '#' anything
    entry   := key '=' value
    key     := name ('.' name)*        name may carry an index, e.g. layers[0]
    value   := scalar | scalar (',' scalar)*

Keys are validated against :data:`SCHEMA`; list-valued keys take
comma-separated values. Relative paths are resolved against the directory of
the scenario file.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EddyCurrentError


class ConfigError(EddyCurrentError, ValueError):
    pass


# key -> (kind, default); kinds: int, float, str, ints, floats
SCHEMA = {
    "grid.n": ("int", 8),
    "grid.cells": ("ints", None),
    "grid.extents": ("floats", (1.0, 1.0, 1.0)),
    "mu.constant": ("float", 1.0),
    "mu.file": ("str", None),
    "sigma.constant": ("floats", (1.0,)),
    "material.lambda": ("float", None),
    "eigen.modes": ("int", 4),
    "eigen.tol": ("float", 1e-9),
    "time.T": ("float", 0.1),
    "time.dt": ("float", 0.005),
    "time.scheme": ("str", "implicit-midpoint"),
    "sources.kind": ("str", "zero"),
    "sources.profile": ("str", "cavity"),
    "sources.je": ("floats", (0.0, 0.0, 0.0)),
    "sources.jm": ("floats", (0.0, 0.0, 0.0)),
    "sources.time": ("str", "constant"),
    "sources.omega": ("float", 2.0 * math.pi),
    "sources.table": ("str", None),
    "sources.file": ("str", None),
    "initial.kind": ("str", "zero"),
    "initial.mode": ("int", 1),
    "initial.amplitude": ("float", 1.0),
    "initial.file": ("str", None),
    "boundary.file": ("str", None),
    "boundary.tol": ("float", 1e-8),
    "output.dir": ("str", "out"),
    "output.snapshot-stride": ("int", 0),
    "run.seed": ("int", 42),
    "verify.alpha": ("float", 0.5),
    "verify.energy-tol": ("float", 1e-10),
    "manufactured.case": ("str", "single-cavity-mode"),
    "manufactured.grids": ("ints", (4, 8, 16)),
    "manufactured.min-rate": ("float", 0.9),
}

LAYER_SCHEMA = {
    "sigma": {"z": ("floats", None), "tensor": ("floats", None)},
    "mu": {"z": ("floats", None), "value": ("float", None)},
}

CHOICES = {
    "time.scheme": ("implicit-midpoint", "implicit-euler"),
    "sources.kind": ("zero", "constant", "table", "file"),
    "sources.profile": ("uniform", "cavity"),
    "sources.time": ("constant", "sin", "cos", "ramp"),
    "initial.kind": ("zero", "mode", "cavity", "random", "file"),
}

_LAYER_KEY = re.compile(r"^(sigma|mu)\.layers\[(\d+)\]\.(\w+)$")


def _convert(kind: str, raw: str, key: str):
    parts = [p.strip() for p in raw.split(",")] if kind in ("ints", "floats") else [raw.strip()]
    try:
        if kind == "int":
            return int(parts[0])
        if kind == "float":
            return float(parts[0])
        if kind == "ints":
            return tuple(int(p) for p in parts)
        if kind == "floats":
            return tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"{key}: cannot read {raw!r} as {kind}") from None
    return parts[0]


def _format(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _kind(key: str):
    if key in SCHEMA:
        return SCHEMA[key][0]
    m = _LAYER_KEY.match(key)
    if m and m.group(3) in LAYER_SCHEMA[m.group(1)]:
        return LAYER_SCHEMA[m.group(1)][m.group(3)][0]
    raise ConfigError(f"unknown key {key!r}")


@dataclass(frozen=True)
class Scenario:
    """Explicitly set values; everything else falls back to :data:`SCHEMA` defaults."""

    values: dict = field(default_factory=dict)
    base: Path = field(default=Path("."), compare=False)

    def __getitem__(self, key):
        if key in self.values:
            return self.values[key]
        _kind(key)
        return SCHEMA[key][1] if key in SCHEMA else None

    def get(self, key, default=None):
        v = self[key]
        return default if v is None else v

    def with_values(self, **updates) -> "Scenario":
        vals = dict(self.values)
        for k, v in updates.items():
            if v is not None:
                _kind(k)
                vals[k] = v
        return Scenario(vals, self.base)

    def path(self, key) -> Path | None:
        v = self[key]
        if v is None:
            return None
        p = Path(v)
        return p if p.is_absolute() else self.base / p

    @property
    def cells(self) -> tuple[int, int, int]:
        c = self["grid.cells"]
        if c is not None:
            if len(c) != 3:
                raise ConfigError("grid.cells needs three integers")
            return tuple(c)
        n = self["grid.n"]
        return (n, n, n)

    def layers(self, section: str) -> list[dict]:
        out = {}
        for k, v in self.values.items():
            m = _LAYER_KEY.match(k)
            if m and m.group(1) == section:
                out.setdefault(int(m.group(2)), {})[m.group(3)] = v
        return [out[i] for i in sorted(out)]

    def validate(self) -> "Scenario":
        for key, choices in CHOICES.items():
            if self[key] not in choices:
                raise ConfigError(f"{key} must be one of {', '.join(choices)}; got {self[key]!r}")
        if any(c < 1 for c in self.cells):
            raise ConfigError("grid cells must be positive")
        if self["eigen.modes"] < 1:
            raise ConfigError("eigen.modes must be at least 1")
        T, dt = self["time.T"], self["time.dt"]
        if not (dt > 0 and T > 0 and dt <= T):
            raise ConfigError(f"need 0 < time.dt <= time.T (got dt={dt}, T={T})")
        steps = T / dt
        if abs(steps - round(steps)) > 1e-9 * steps:
            raise ConfigError("time.T must be an integer multiple of time.dt")
        for section in ("sigma", "mu"):
            for i, layer in enumerate(self.layers(section)):
                need = ("z", "tensor") if section == "sigma" else ("z", "value")
                for k in need:
                    if k not in layer:
                        raise ConfigError(f"{section}.layers[{i}] lacks {k}")
                if len(layer["z"]) != 2:
                    raise ConfigError(f"{section}.layers[{i}].z needs two values")
        for key in ("mu.file", "sources.table", "sources.file", "initial.file", "boundary.file"):
            p = self.path(key)
            if p is not None and not p.exists():
                raise ConfigError(f"{key}: file {p} does not exist")
        kind = self["sources.kind"]
        if kind == "table" and self["sources.table"] is None:
            raise ConfigError("sources.kind = table needs sources.table")
        if kind == "file" and self["sources.file"] is None:
            raise ConfigError("sources.kind = file needs sources.file")
        if self["initial.kind"] == "file" and self["initial.file"] is None:
            raise ConfigError("initial.kind = file needs initial.file")
        return self

    @property
    def n_steps(self) -> int:
        return int(round(self["time.T"] / self["time.dt"]))


def parse(text: str, base: Path | str = ".") -> Scenario:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (p.strip() for p in s.split("=", 1))
        if not raw:
            raise ConfigError(f"line {lineno}: empty value for {key}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key}")
        values[key] = _convert(_kind(key), raw, key)
    return Scenario(values, Path(base))


def load(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    return parse(text, path.parent)


def serialize(scenario: Scenario) -> str:
    """Canonical text: one entry per explicitly set key, sorted."""
    return "".join(f"{k} = {_format(scenario.values[k])}\n" for k in sorted(scenario.values))
