"""Scenario configuration: flat key=value text with [section] headers.

Every key is declared in a per-scenario schema with a type and a default;
anything undeclared is rejected.  The canonical rendering (sorted sections
and keys, one key=value per line) is what run manifests echo, so that a
manifest can be fed back in as a config file.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass
from typing import Any

from .errors import ConfigError

__all__ = ["SCENARIO_NAMES", "ScenarioConfig", "parse_config", "default_config", "canonical_text"]


def _bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _int_list(raw: str) -> tuple:
    return tuple(int(tok) for tok in raw.replace(",", " ").split())


# section -> key -> (parser, default)
Schema = dict[str, dict[str, tuple]]

_GRID_X = {
    "x_min": (float, -16.0),
    "x_max": (float, 16.0),
    "n": (int, 256),
}

SCHEMAS: dict[str, Schema] = {
    "interference-bounce": {
        "run": {"seed": (int, 1), "t_final": (float, 10.0), "dt": (float, 1e-3),
                "trajectories": (int, 16), "record_every": (int, 100)},
        "grid": {"x_min": (float, -64.0), "x_max": (float, 64.0), "n": (int, 2048)},
        "physics": {"separation": (float, 6.0), "sigma": (float, 1.0), "speed": (float, 1.5),
                    "bath": (_bool, False), "bath_rate": (float, 4.0), "bath_sigma": (float, 6.0)},
    },
    "single-collision": {
        "run": {"seed": (int, 1)},
        "grid": {"x_min": (float, -8.0), "x_max": (float, 8.0), "n": (int, 512),
                 "y_min": (float, -16.0), "y_max": (float, 16.0), "y_n": (int, 512)},
        "physics": {"sigma_x": (float, 1.0), "sigma_y": (float, 2.0), "bath_center": (float, 0.0),
                    "x0": (float, 0.3), "y0": (float, 0.5),
                    "window_start": (float, 0.0), "window_end": (float, 1.0)},
    },
    "z-statistics": {
        "run": {"seed": (int, 1), "samples": (int, 10000)},
        "grid": dict(_GRID_X, x_min=(float, -8.0), x_max=(float, 8.0)),
        "physics": {"separation": (float, 2.0), "sigma": (float, 0.6), "bath_sigma": (float, 0.5)},
    },
    "grw-vs-bath": {
        "run": {"seed": (int, 1), "t_final": (float, 4.0), "dt": (float, 1e-3), "runs": (int, 1000)},
        "grid": {"x_min": (float, -32.0), "x_max": (float, 32.0), "n": (int, 512)},
        "physics": {"rate": (float, 1.0), "bath_sigma": (float, 0.5), "sigma0": (float, 1.0)},
    },
    "com-amplification": {
        "run": {"seed": (int, 1), "runs": (int, 400), "t_final": (float, 20.0)},
        "physics": {"rate_per_particle": (float, 0.5), "n_values": (_int_list, (1, 2, 4, 8))},
    },
    "classical-trajectory": {
        "run": {"seed": (int, 1), "t_final": (float, 6.283185307179586), "dt": (float, 1e-3)},
        "physics": {"rate": (float, 1.0), "r_c": (float, 1.0), "mass": (float, 1.0),
                    "spring": (float, 1.0), "x0": (float, 1.0), "v0": (float, 0.0),
                    "fluctuations": (_bool, False)},
    },
    "estimates": {
        "run": {"seed": (int, 1)},
        "physics": {"gas_mass": (float, 4.7e-26), "temperature": (float, 298.0),
                    "pressure": (float, 101325.0), "radius": (float, 1e-3),
                    "sphere_mass": (float, 1e-3), "superposition": (float, 1e-3),
                    "resolution": (float, 1e-3)},
    },
    "verify-all": {
        "run": {"seed": (int, 1)},
    },
}

SCENARIO_NAMES = tuple(SCHEMAS)


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    values: dict  # section -> key -> typed value

    def __getitem__(self, section: str) -> dict:
        return self.values[section]

    @property
    def seed(self) -> int:
        return self.values["run"]["seed"]


def default_config(scenario: str) -> ScenarioConfig:
    schema = _schema_for(scenario)
    values = {sec: {k: spec[1] for k, spec in keys.items()} for sec, keys in schema.items()}
    return ScenarioConfig(scenario, values)


def _schema_for(scenario: str) -> Schema:
    try:
        return SCHEMAS[scenario]
    except KeyError:
        raise ConfigError(
            f"unknown scenario {scenario!r}; expected one of {', '.join(SCENARIO_NAMES)}"
        ) from None


def parse_config(text: str, scenario: str, seed: int | None = None) -> ScenarioConfig:
    """Parse key=value text against the scenario's schema.

    A seed passed explicitly (e.g. from the command line) overrides any
    [run] seed in the text.
    """
    schema = _schema_for(scenario)
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys are case-sensitive
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    values = {sec: {k: spec[1] for k, spec in keys.items()} for sec, keys in schema.items()}
    for section in parser.sections():
        if section not in schema:
            raise ConfigError(f"unknown section [{section}] for scenario {scenario!r}")
        for key, raw in parser.items(section):
            if key not in schema[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            kind = schema[section][key][0]
            try:
                values[section][key] = kind(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for [{section}] {key}: {exc}") from exc
    if seed is not None:
        values["run"]["seed"] = int(seed)
    return ScenarioConfig(scenario, values)


def _render_value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def canonical_text(config: ScenarioConfig) -> str:
    """Deterministic render; parses back to an identical config."""
    lines = []
    for section in sorted(config.values):
        lines.append(f"[{section}]")
        for key in sorted(config.values[section]):
            lines.append(f"{key} = {_render_value(config.values[section][key])}")
        lines.append("")
    return "\n".join(lines)
