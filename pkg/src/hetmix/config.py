"""Flat ``key = value`` run configuration.

Blank lines and ``#`` comments are ignored.  Numbers may be written as
fractions (``gamma = 1/7``).  Grids are comma lists (``0.1, 0.2``) or
``linspace(start, stop, num)``.  Unknown keys are rejected.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .integrator import IntegrationConfig
from .model import ModelError, ModelParams, validate_params

PARAM_KEYS = ("gamma", "pi", "r0", "r01", "r02", "alpha1", "alpha2", "h", "n1", "n2",
              "seed_fraction")
INTEGRATION_KEYS = ("dt", "horizon", "record_every", "extinction_threshold")
GRID_KEYS = ("axis1_values", "axis2_values", "r0_values", "r02_values", "h_values",
             "n2_values")
INT_KEYS = ("n2_points", "window_points")
FLOAT_KEYS = ("window_lo", "window_hi")
TEXT_KEYS = ("out", "axis1", "axis2", "means", "shares", "start", "end")
KNOWN_KEYS = frozenset(PARAM_KEYS + INTEGRATION_KEYS + GRID_KEYS + INT_KEYS + FLOAT_KEYS
                       + TEXT_KEYS)
SWEEPABLE = frozenset(PARAM_KEYS)

_LINE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*?)\s*$")
_LINSPACE = re.compile(r"^linspace\(\s*([^,]+),\s*([^,]+),\s*([^)]+)\)$")


class ConfigParseError(ModelError):
    def __init__(self, message, line=None, key=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
        self.key = key


def parse_number(text: str) -> float:
    text = text.strip()
    if "/" in text:
        num, _, den = text.partition("/")
        value = float(num) / float(den)
    else:
        value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"not a finite number: {text!r}")
    return value


def parse_grid(text: str) -> tuple[float, ...]:
    m = _LINSPACE.match(text.strip())
    if m:
        lo, hi, num = parse_number(m[1]), parse_number(m[2]), int(m[3])
        return tuple(float(v) for v in np.linspace(lo, hi, num))
    return tuple(parse_number(v) for v in text.split(",") if v.strip())


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams = field(default_factory=ModelParams)
    integration: IntegrationConfig = field(default_factory=IntegrationConfig)
    options: dict = field(default_factory=dict)

    def get(self, key, default=None):
        return self.options.get(key, default)


def _convert(key, raw, line=None):
    try:
        if key in GRID_KEYS:
            grid = parse_grid(raw)
            if not grid:
                raise ValueError("empty grid")
            return grid
        if key in INT_KEYS:
            return int(raw)
        if key in TEXT_KEYS:
            return raw
        return parse_number(raw)
    except ValueError as exc:
        raise ConfigParseError(f"bad value for {key!r}: {exc}", line, key) from None


def parse_pairs(text: str) -> dict:
    """Parse the document into ``{key: converted value}`` (no validation)."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        m = _LINE.match(stripped)
        if not m:
            raise ConfigParseError(f"expected 'key = value', got {line.strip()!r}", lineno)
        key, raw = m[1], m[2]
        if key not in KNOWN_KEYS:
            raise ConfigParseError(f"unknown key {key!r}", lineno, key)
        if key in out:
            raise ConfigParseError(f"duplicate key {key!r}", lineno, key)
        out[key] = _convert(key, raw, lineno)
    return out


def build_config(values: dict) -> RunConfig:
    """Turn parsed key/values into a validated :class:`RunConfig`."""
    params = ModelParams()
    changes = {k: v for k, v in values.items() if k in PARAM_KEYS}
    if "r0" in changes:
        r0 = changes.pop("r0")
        changes.setdefault("r01", r0)
        changes.setdefault("r02", r0)
    params = validate_params(params.replace(**changes))
    # parameter errors propagate as-is; their ``field`` names the config key
    integ = IntegrationConfig(**{k: values[k] for k in INTEGRATION_KEYS if k in values})
    integ.validate()
    options = {k: v for k, v in values.items()
               if k not in PARAM_KEYS and k not in INTEGRATION_KEYS}
    for axis in ("axis1", "axis2"):
        if axis in options and options[axis] not in SWEEPABLE:
            raise ConfigParseError(f"{axis}: cannot sweep over {options[axis]!r}", key=axis)
        if axis in options and f"{axis}_values" not in options:
            raise ConfigParseError(f"{axis} given without {axis}_values", key=axis)
    return RunConfig(params=params, integration=integ, options=options)


def parse_config(text: str) -> RunConfig:
    return build_config(parse_pairs(text))
