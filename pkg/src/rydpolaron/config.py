"""Run configuration: a sectioned key = value file with a fixed schema.

Every key has a type and an admissible range; unknown sections or keys are
rejected with a message naming them. Missing keys take the defaults below.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    pass


def _positive(x):
    return x > 0


def _non_negative(x):
    return x >= 0


def _fraction(x):
    return 0 < x <= 1


def _n_list(text: str) -> tuple[int, ...]:
    items = [t for t in text.replace(",", " ").split() if t]
    if not items:
        raise ValueError("empty list")
    return tuple(int(t) for t in items)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_float(text: str):
    return None if text.strip().lower() in ("", "none", "auto") else float(text)


def _choice(*options):
    def parse(text: str) -> str:
        t = text.strip()
        if t not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return t
    return parse


# key -> (parser, check, default)
SCHEMA: dict[str, dict[str, tuple]] = {
    "rydberg": {
        "n_list": (_n_list, lambda v: all(5 <= n <= 200 for n in v), (49,)),
        "l": (int, lambda v: 0 <= v <= 3, 0),
        "quantum_defect": (float, lambda v: 0 <= v < 5, 3.371),
    },
    "scattering": {
        "a_s0": (float, lambda v: abs(v) < 1e3, -13.2),
        "polarizability": (float, _non_negative, 186.0),
        "include_p_wave": (_bool, None, False),
        "a_p": (float, lambda v: abs(v) < 1e3, 0.0),
    },
    "box": {
        "radius_factor": (float, lambda v: v >= 3, 4.0),
        "grid_points": (int, lambda v: 200 <= v <= 200_000, 8000),
        "l_max": (int, lambda v: 0 <= v <= 10, 0),
        "boundary": (_choice("neumann", "dirichlet"), None, "neumann"),
        "check_convergence": (_bool, None, False),
    },
    "fda": {
        "t_max_factor": (float, _positive, 20.0),
        "n_time_steps": (int, lambda v: v >= 16, 2 ** 14),
        "window_fwhm_hz": (float, _positive, 4e5),
        "form": (_choice("exponentiated", "finite_power"), None, "exponentiated"),
        "moment_tol": (float, lambda v: 0 < v < 0.1, 2e-3),
        "density": (_optional_float, lambda v: v is None or v >= 0, None),
        "dump_overlap": (_bool, None, False),
    },
    "fewbody": {
        "max_total_bound": (int, lambda v: 1 <= v <= 40, 20),
        "prune": (float, lambda v: 0 <= v < 1e-6, 1e-15),
        "max_truncation": (float, lambda v: 0 < v < 1, 1e-6),
        "grid_step_hz": (_optional_float, lambda v: v is None or v > 0, None),
        "line_floor": (float, _non_negative, 1e-9),
    },
    "trap": {
        "peak_density": (float, _positive, 3.6e20),
        "tf_radius": (float, _positive, 8e-6),
        "atom_number": (float, _positive, 3.5e5),
        "temperature": (float, _positive, 150e-9),
        "condensate_fraction": (float, _fraction, 0.75),
        "thermal_width": (_optional_float, lambda v: v is None or v > 0, None),
        "thermal": (_bool, None, True),
        "n_shells": (int, lambda v: v >= 16, 64),
        "n_outer": (int, _non_negative, 16),
    },
    "output": {
        "directory": (str, None, "out"),
        "normalization": (_choice("unit-area", "peak-unit", "raw"), None, "unit-area"),
    },
}


@dataclass(frozen=True)
class RunConfig:
    values: dict = field(default_factory=dict)

    def __getitem__(self, section: str) -> dict:
        return self.values[section]

    def echo(self) -> dict:
        """Plain dict for the manifest."""
        return {s: {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}
                for s, d in self.values.items()}


def defaults() -> RunConfig:
    return RunConfig({s: {k: spec[2] for k, spec in keys.items()} for s, keys in SCHEMA.items()})


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys are case sensitive
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    values = defaults().values
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key '{key}' in [{section}]")
            conv, check, _ = SCHEMA[section][key]
            try:
                value = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for '{key}' in [{section}]: {exc}") from exc
            if isinstance(value, float) and not math.isfinite(value):
                raise ConfigError(f"'{key}' in [{section}] must be finite")
            if check is not None and not check(value):
                raise ConfigError(f"'{key}' in [{section}] out of range: {raw!r}")
            values[section][key] = value
    return RunConfig(values)


def load_config(path) -> RunConfig:
    if path is None:
        return defaults()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def to_text(cfg: RunConfig) -> str:
    """Render back to the file format; parse_config(to_text(c)) == c."""
    lines = []
    for section, keys in cfg.values.items():
        lines.append(f"[{section}]")
        for k, v in keys.items():
            if isinstance(v, tuple):
                v = ", ".join(str(x) for x in v)
            elif v is None:
                v = "auto"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{k} = {v}")
        lines.append("")
    return "\n".join(lines)
