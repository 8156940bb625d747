"""Run-configuration parsing: sectioned key/value text with strict keys."""
import configparser
import io
from dataclasses import dataclass, field, asdict
from pathlib import Path

from .errors import ConfigError
from .parameters import Params, rouse_matrix

_SCHEMA = {
    "model": {
        "epsilon": float,
        "gamma": float,
        "c_p": float,
        "mu_s": float,
        "mu_b": float,
        "one_minus_beta": float,
        "delta": float,
        "xi_bar": float,
        "rho_bar": float,
        "springs": int,
        "extensibility": "float_list",
        "rouse": "rouse",
        "polymer": bool,
        "recipe": str,
        "amplitude": float,
    },
    "grid": {
        "cells": int,
        "q_radial": int,
        "q_angular": int,
    },
    "time": {
        "t_final": float,
        "dt_safety": float,
    },
    "continuation": {
        "epsilon_list": "float_list",
        "acoustic_modes": "mode_list",
    },
    "output": {
        "directory": str,
        "stride": int,
        "ledger_stride": int,
        "n_samples": int,
        "field_dumps": bool,
        "plots": bool,
    },
}

_REQUIRED = (("model", "epsilon"), ("grid", "cells"), ("time", "t_final"))


@dataclass
class RunConfig:
    epsilon: float = 0.1
    gamma: float = 2.0
    c_p: float = 1.0
    mu_s: float = 1.0
    mu_b: float = 0.1
    one_minus_beta: float = 0.5
    delta: float = 0.1
    xi_bar: float = 0.1
    rho_bar: float = 1.0
    springs: int = 1
    extensibility: list = field(default_factory=lambda: [4.0])
    rouse: str = "tridiag"
    polymer: bool = True
    recipe: str = "baseline"
    amplitude: float = 0.1
    cells: int = 32
    q_radial: int = 24
    q_angular: int = 16
    t_final: float = 0.5
    dt_safety: float = 0.45
    epsilon_list: list = field(default_factory=lambda: [0.2, 0.1, 0.05])
    acoustic_modes: list = field(default_factory=lambda: [(1, 0)])
    directory: str = "out"
    stride: int = 10
    ledger_stride: int = 10
    n_samples: int = 50
    field_dumps: bool = False
    plots: bool = True

    def params(self, epsilon=None):
        if self.rouse == "tridiag":
            A = tuple(tuple(row) for row in rouse_matrix(self.springs))
        else:
            A = self.rouse
        return Params(
            epsilon=self.epsilon if epsilon is None else epsilon,
            gamma=self.gamma, c_p=self.c_p, mu_s=self.mu_s, mu_b=self.mu_b,
            beta_comp=self.one_minus_beta, delta=self.delta, xi_bar=self.xi_bar,
            rho_bar=self.rho_bar, K=self.springs, b=tuple(self.extensibility),
            A=A, dim_x=2, dim_q=2,
        )


def _parse_bool(raw, where):
    if raw.strip().lower() == "true":
        return True
    if raw.strip().lower() == "false":
        return False
    raise ConfigError(f"{where}: boolean must be true or false, got {raw!r}")


def _parse_float_list(raw, where):
    body = raw.strip()
    if not (body.startswith("[") and body.endswith("]")):
        raise ConfigError(f"{where}: expected a bracketed list, got {raw!r}")
    items = [s.strip() for s in body[1:-1].split(",") if s.strip()]
    try:
        return [float(s) for s in items]
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _parse_mode_list(raw, where):
    body = raw.strip()
    if not (body.startswith("[") and body.endswith("]")):
        raise ConfigError(f"{where}: expected a bracketed list, got {raw!r}")
    modes = []
    for item in (s.strip() for s in body[1:-1].split(",") if s.strip()):
        parts = item.split(":")
        if len(parts) != 2:
            raise ConfigError(f"{where}: modes are written k:l, got {item!r}")
        try:
            modes.append((int(parts[0]), int(parts[1])))
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None
    return modes


def _parse_rouse(raw, where):
    body = raw.strip()
    if body == "tridiag":
        return "tridiag"
    values = _parse_float_list(body, where)
    n = int(round(len(values) ** 0.5))
    if n * n != len(values):
        raise ConfigError(f"{where}: row-major Rouse matrix must have K^2 entries")
    return tuple(tuple(values[i * n:(i + 1) * n]) for i in range(n))


def parse_config(path):
    """Parse and validate a run-configuration file into a RunConfig."""
    text = Path(path).read_text(encoding="utf-8")
    parser = configparser.ConfigParser(strict=True, interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=str(path))
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r} in section [{exc.section}]") from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration file: {exc}") from None

    unknown = []
    for section in parser.sections():
        if section not in _SCHEMA:
            unknown.append(f"[{section}]")
            continue
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                unknown.append(f"[{section}] {key}")
    if unknown:
        raise ConfigError("unknown configuration keys: " + ", ".join(unknown))

    missing = [f"[{s}] {k}" for (s, k) in _REQUIRED
               if not parser.has_option(s, k)]
    if missing:
        raise ConfigError("missing required keys: " + ", ".join(missing))

    cfg = RunConfig()
    for section, keys in _SCHEMA.items():
        if not parser.has_section(section):
            continue
        for key, kind in keys.items():
            if key not in parser[section]:
                continue
            raw = parser[section][key]
            where = f"[{section}] {key}"
            if kind is float:
                try:
                    value = float(raw)
                except ValueError as exc:
                    raise ConfigError(f"{where}: {exc}") from None
            elif kind is int:
                try:
                    value = int(raw)
                except ValueError as exc:
                    raise ConfigError(f"{where}: {exc}") from None
            elif kind is bool:
                value = _parse_bool(raw, where)
            elif kind is str:
                value = raw.strip()
            elif kind == "float_list":
                value = _parse_float_list(raw, where)
            elif kind == "mode_list":
                value = _parse_mode_list(raw, where)
            elif kind == "rouse":
                value = _parse_rouse(raw, where)
            setattr(cfg, key, value)

    _validate(cfg)
    return cfg


def _validate(cfg):
    problems = []
    if cfg.cells < 8 or cfg.q_radial < 8 or cfg.q_angular < 8:
        problems.append("grid resolutions must be at least 8")
    if cfg.t_final <= 0:
        problems.append("t_final must be positive")
    if not (0 < cfg.dt_safety <= 1):
        problems.append("dt_safety must lie in (0, 1]")
    if not (0 < cfg.epsilon < 1):
        problems.append("epsilon must lie in (0, 1)")
    el = cfg.epsilon_list
    if any(not (0 < e < 1) for e in el):
        problems.append("epsilon_list entries must lie in (0, 1)")
    if any(el[i + 1] >= el[i] for i in range(len(el) - 1)):
        problems.append("epsilon_list must be strictly decreasing")
    if cfg.amplitude < 0:
        problems.append("amplitude must be nonnegative")
    if cfg.stride < 1 or cfg.ledger_stride < 1 or cfg.n_samples < 2:
        problems.append("strides must be >= 1 and n_samples >= 2")
    if cfg.springs < 1 or len(cfg.extensibility) != cfg.springs:
        problems.append("extensibility list must have one entry per spring")
    if any(k < 0 or l < 0 or (k, l) == (0, 0) for (k, l) in cfg.acoustic_modes):
        problems.append("acoustic modes must be nonnegative pairs other than 0:0")
    if problems:
        raise ConfigError("; ".join(problems))


def echo_config(cfg, path):
    """Write the effective configuration (defaults filled in) next to the outputs."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    values = asdict(cfg)
    for section, keys in _SCHEMA.items():
        parser[section] = {}
        for key in keys:
            v = values[key]
            if isinstance(v, bool):
                rendered = "true" if v else "false"
            elif isinstance(v, list) and key == "acoustic_modes":
                rendered = "[" + ", ".join(f"{k}:{l}" for (k, l) in v) + "]"
            elif isinstance(v, (list, tuple)) and key == "rouse":
                flat = [x for row in v for x in row]
                rendered = "[" + ", ".join(f"{x:g}" for x in flat) + "]"
            elif isinstance(v, list):
                rendered = "[" + ", ".join(f"{x:g}" for x in v) + "]"
            else:
                rendered = str(v)
            parser[section][key] = rendered
    buf = io.StringIO()
    parser.write(buf)
    Path(path).write_text(buf.getvalue(), encoding="utf-8")
