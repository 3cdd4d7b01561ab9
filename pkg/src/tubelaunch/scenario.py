"""Scenario container and its TOML form.

Every table maps one-to-one onto a config dataclass; unknown keys are
rejected so typos fail loudly. Pressures in ``[launcher]`` may be given in bar
through the ``*_bar`` aliases. 3-vectors are TOML arrays.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

import tomli_w

from tubelaunch.aero import AeroConfig
from tubelaunch.autonomy import AutonomyConfig
from tubelaunch.constants import BAR
from tubelaunch.dynamics import MAX_DT
from tubelaunch.errors import ConfigError
from tubelaunch.launcher import LauncherConfig
from tubelaunch.sensors import SensorConfig
from tubelaunch.vehicle import VehicleConfig


@dataclass(frozen=True)
class WindConfig:
    """Mean wind plus an Ornstein-Uhlenbeck gust on each axis."""

    mean: tuple = (0.0, 0.0, 0.0)
    gust_std: float = 0.0
    gust_tau: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "mean", tuple(float(x) for x in self.mean))
        if len(self.mean) != 3:
            raise ConfigError("wind.mean must have three components")
        if self.gust_std < 0.0 or not self.gust_tau > 0.0:
            raise ConfigError("gust_std must be non-negative and gust_tau positive")


@dataclass(frozen=True)
class SimConfig:
    duration: float = 25.0
    dt: float = 1.0e-3
    seed: int = 0
    motors_enabled: bool = True
    # std of the transverse body rates imparted at tube exit [rad/s]
    tipoff_rate_std: float = 0.0
    # launcher moving over the ground (adds to the exit velocity) [m/s]
    platform_velocity: tuple = (0.0, 0.0, 0.0)
    include_inertia_rate: bool = False
    hinges_free: bool = True
    # stop this long after tube exit when motors are disabled (0 keeps ``duration``) [s]
    passive_window: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "platform_velocity", tuple(float(x) for x in self.platform_velocity))
        if not self.duration > 0.0:
            raise ConfigError("sim.duration must be positive")
        if not 0.0 < self.dt <= MAX_DT:
            raise ConfigError(f"sim.dt must lie in (0, {MAX_DT}]")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("sim.seed must be a 64-bit unsigned integer")
        if self.tipoff_rate_std < 0.0 or self.passive_window < 0.0:
            raise ConfigError("tipoff_rate_std and passive_window must be non-negative")
        if len(self.platform_velocity) != 3:
            raise ConfigError("platform_velocity must have three components")


@dataclass(frozen=True)
class Scenario:
    vehicle: VehicleConfig = field(default_factory=VehicleConfig)
    launcher: LauncherConfig = field(default_factory=LauncherConfig)
    aero: AeroConfig = field(default_factory=AeroConfig)
    sensors: SensorConfig = field(default_factory=SensorConfig)
    autonomy: AutonomyConfig = field(default_factory=AutonomyConfig)
    wind: WindConfig = field(default_factory=WindConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    name: str = "scenario"

    def __post_init__(self) -> None:
        ticks = (1.0 / self.autonomy.control_rate) / self.sim.dt
        if abs(ticks - round(ticks)) > 1e-9 or round(ticks) < 1:
            raise ConfigError("control period must be a whole number of physics steps")
        if self.launcher.tube_bore < self.vehicle.folded_diameter:
            raise ConfigError("folded vehicle does not fit the tube bore")

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)

    def override(self, dotted: str, value: Any) -> "Scenario":
        """Copy with one ``table.key`` replaced (TOML aliases accepted)."""
        table, _, key = dotted.partition(".")
        if table not in TABLES or not key:
            raise ConfigError(f"unknown override target {dotted!r}")
        sub = getattr(self, table)
        return replace(self, **{table: _build(type(sub), {key: value}, table, base=sub)})


TABLES = {
    "vehicle": VehicleConfig,
    "launcher": LauncherConfig,
    "aero": AeroConfig,
    "sensors": SensorConfig,
    "autonomy": AutonomyConfig,
    "wind": WindConfig,
    "sim": SimConfig,
}

# keys that are not written to or read from TOML
_SKIP = {"sensors": {"rng_seed"}}
_BAR_ALIASES = {"chamber_pressure_bar": "chamber_pressure", "ambient_pressure_bar": "ambient_pressure"}


def _coerce(value: Any, default: Any, where: str) -> Any:
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where} must be a boolean")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where} must be an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number")
        return float(value)
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{where} must be an array")
        return tuple(tuple(x) if isinstance(x, list) else x for x in value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{where} must be a string")
        return value
    return value


def _build(cls, table: Mapping[str, Any], name: str, base=None):
    if not isinstance(table, Mapping):
        raise ConfigError(f"[{name}] must be a table")
    base = base if base is not None else cls()
    known = {f.name for f in fields(cls)} - _SKIP.get(name, set())
    changes = {}
    for key, value in table.items():
        target = key
        if name == "launcher" and key in _BAR_ALIASES:
            target = _BAR_ALIASES[key]
            value = _coerce(value, 1.0, f"{name}.{key}") * BAR
        if target not in known:
            raise ConfigError(f"unknown key {name}.{key}")
        if target in changes:
            raise ConfigError(f"{name}.{target} given twice")
        changes[target] = _coerce(value, getattr(base, target), f"{name}.{key}")
    try:
        return replace(base, **changes)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{name}]: {exc}") from exc


def scenario_from_dict(data: Mapping[str, Any]) -> Scenario:
    unknown = set(data) - set(TABLES) - {"name"}
    if unknown:
        raise ConfigError(f"unknown table(s): {', '.join(sorted(unknown))}")
    parts = {name: _build(cls, data.get(name, {}), name) for name, cls in TABLES.items()}
    name = data.get("name", "scenario")
    if not isinstance(name, str):
        raise ConfigError("name must be a string")
    return Scenario(name=name, **parts)


def load_scenario(path) -> Scenario:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"scenario file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return scenario_from_dict(data)


def _plain(value: Any) -> Any:
    if isinstance(value, (tuple, list, np.ndarray)):
        return [_plain(x) for x in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


def scenario_to_dict(scn: Scenario) -> dict:
    out: dict = {"name": scn.name}
    for name in TABLES:
        sub = getattr(scn, name)
        skip = _SKIP.get(name, set())
        out[name] = {f.name: _plain(getattr(sub, f.name)) for f in fields(sub) if f.name not in skip}
    return out


def dumps_scenario(scn: Scenario) -> str:
    return tomli_w.dumps(scenario_to_dict(scn))


def save_scenario(scn: Scenario, path) -> None:
    Path(path).write_text(dumps_scenario(scn))


def builtin_scenario(name: str) -> Path:
    """Path to a scenario shipped with the package (``nominal``, ``crosswind``, ...)."""
    path = Path(__file__).with_name("scenarios") / f"{name}.toml"
    if not path.exists():
        raise ConfigError(f"no built-in scenario {name!r}")
    return path
