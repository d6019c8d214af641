"""Flat ``key = value`` run configuration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .memory import KernelAdmissibilityError, KernelSpec
from .solver import BeamConfig, ConfigError

__all__ = ["RunConfig", "parse_config", "load_config", "SCENARIOS", "REQUIRED_KEYS"]

SCENARIOS = ("zero", "manufactured_poly", "random_smooth", "classical_limit", "perturb_pair")

REQUIRED_KEYS = (
    "beam.rho1", "beam.rho2", "beam.kappa1", "beam.kappa2", "beam.length",
    "time.horizon", "frac.alpha", "grid.n_cells", "grid.n_steps", "kernel.kind",
    "scenario.name", "output.dir", "seed",
)

OPTIONAL_DEFAULTS = {
    "kernel.m0": "0",
    "kernel.lambda": "0",
    "flags.classical_limit": "false",
    "output.stride": "0",
    "output.plot": "false",
}

# parameters each scenario understands, with defaults
SCENARIO_PARAMS = {
    "zero": {},
    "manufactured_poly": {"time_power": "2", "mms_rtol": "0.05"},
    "random_smooth": {"modes": "3", "amplitude": "1"},
    "classical_limit": {},
    "perturb_pair": {"time_power": "2", "epsilon": "1e-3", "n_directions": "20",
                     "modes": "3"},
}

_BEAM_KEYS = {
    "beam.rho1": "rho1", "beam.rho2": "rho2", "beam.kappa1": "kappa1",
    "beam.kappa2": "kappa2", "beam.length": "length", "time.horizon": "horizon",
    "frac.alpha": "alpha", "grid.n_cells": "n_cells", "grid.n_steps": "n_steps",
}


@dataclass(frozen=True)
class RunConfig:
    beam: BeamConfig
    scenario: str
    output_dir: Path
    seed: int
    params: dict = field(default_factory=dict)
    stride: int = 0
    plot: bool = False

    @property
    def snapshot_stride(self) -> int:
        """Time stride of ``solution.csv``; ``0`` means about 64 snapshots."""
        if self.stride > 0:
            return self.stride
        return max(1, math.ceil(self.beam.n_steps / 64))

    def param(self, name: str, kind=float, default=None):
        if name not in self.params:
            if default is None:
                raise KeyError(f"scenario {self.scenario} has no parameter {name!r}")
            return kind(default)
        return kind(self.params[name])


def _float(key, text):
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"{key}: must be finite, got {text!r}")
    return value


def _int(key, text):
    try:
        value = int(text)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from None
    return value


def _bool(key, text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


def _read_pairs(text: str) -> dict:
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in pairs:
            raise ConfigError(f"{key}: given twice (line {lineno})")
        pairs[key] = value
    return pairs


def parse_config(text: str) -> RunConfig:
    """Parse and validate; every failure is a :class:`ConfigError` naming the key."""
    pairs = _read_pairs(text)
    missing = [k for k in REQUIRED_KEYS if k not in pairs]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")

    name = pairs["scenario.name"]
    if name not in SCENARIOS:
        raise ConfigError(f"scenario.name: must be one of {SCENARIOS}, got {name!r}")
    allowed_params = SCENARIO_PARAMS[name]
    for key in pairs:
        if key in REQUIRED_KEYS or key in OPTIONAL_DEFAULTS:
            continue
        if key.startswith("scenario.") and key[len("scenario."):] in allowed_params:
            continue
        raise ConfigError(f"{key}: unknown key")
    values = {**OPTIONAL_DEFAULTS, **pairs}
    params = {p: values.get(f"scenario.{p}", d) for p, d in allowed_params.items()}
    for p, v in params.items():
        _float(f"scenario.{p}", v)

    beam_kwargs = {}
    for key, attr in _BEAM_KEYS.items():
        conv = _int if attr in ("n_cells", "n_steps") else _float
        beam_kwargs[attr] = conv(key, values[key])
    classical = _bool("flags.classical_limit", values["flags.classical_limit"])

    kind = values["kernel.kind"]
    m0 = _float("kernel.m0", values["kernel.m0"])
    lam = _float("kernel.lambda", values["kernel.lambda"])
    try:
        kernel = KernelSpec(kind, m0, lam) if kind == "exponential" else KernelSpec(kind)
    except ValueError as exc:
        raise ConfigError(f"kernel.kind: {exc}") from None

    try:
        beam = BeamConfig(kernel=kernel, classical_limit=classical, **beam_kwargs)
    except KernelAdmissibilityError as exc:
        raise ConfigError(f"kernel: {exc}") from None
    except ConfigError as exc:
        raise ConfigError(f"{_key_for(str(exc))}: {exc}") from None

    if name == "classical_limit" and not (classical and beam.alpha == 1.0
                                          and kernel.kind == "zero"):
        raise ConfigError(
            "scenario.name: classical_limit needs flags.classical_limit = true, "
            "frac.alpha = 1 and kernel.kind = zero")

    stride = _int("output.stride", values["output.stride"])
    if stride < 0:
        raise ConfigError("output.stride: must be nonnegative")
    return RunConfig(
        beam=beam,
        scenario=name,
        output_dir=Path(values["output.dir"]),
        seed=_int("seed", values["seed"]),
        params=params,
        stride=stride,
        plot=_bool("output.plot", values["output.plot"]),
    )


def _key_for(message: str) -> str:
    for key, attr in _BEAM_KEYS.items():
        if message.startswith(attr):
            return key
    if message.startswith("rho1/kappa1"):
        return "beam.rho1"
    return "config"


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())
