"""Configuration documents: INI-style text with sections
``[grid] [model] [initial] [time] [output] [smallness]``.

Example::

    [grid]
    nx = 64
    ny = 64

    [model]
    motility = linear, c=1
    mu = 0

    [initial]
    preset = perturbed
"""

from __future__ import annotations

import configparser
import logging
import os
import re
from dataclasses import replace

from .errors import ConfigError, DomainError
from .grid import GridSpec
from .motility import MotilitySpec
from .simulation import InitialSpec, SimConfig, load_initial

log = logging.getLogger(__name__)


def _bool(s):
    t = s.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_str(s):
    s = s.strip()
    return s or None


def _opt_float(s):
    s = s.strip()
    return None if s in ("", "none", "default") else float(s)


# section -> key -> (target, field name, parser); target "grid", "initial" or "sim"
SCHEMA = {
    "grid": {k: ("grid", k, int if k in ("nx", "ny") else float) for k in ("nx", "ny", "lx", "ly")},
    "model": {
        "motility": ("sim", "motility", str),
        "mu": ("sim", "mu", float),
        "kappa": ("sim", "kappa", int),
        "gravity": ("sim", "gravity", float),
    },
    "initial": {
        "preset": ("initial", "preset", str),
        "n_mean": ("initial", "n_mean", float),
        "v_mean": ("initial", "v_mean", _opt_float),
        "amplitude": ("initial", "amplitude", float),
        "n_mass": ("initial", "n_mass", float),
        "radius": ("initial", "radius", float),
        "strength": ("initial", "strength", float),
        "n0_file": ("initial", "n0_file", _opt_str),
        "v0_file": ("initial", "v0_file", _opt_str),
    },
    "time": {
        "t_end": ("sim", "t_end", float),
        "cfl": ("sim", "cfl", float),
        "dt_max": ("sim", "dt_max", float),
        "poisson_tol": ("sim", "poisson_tol", float),
        "poisson_max_iter": ("sim", "poisson_max_iter", int),
        "linear_solve_tol": ("sim", "linear_solve_tol", float),
        "linear_solver": ("sim", "linear_solver", str),
        "stop_on_convergence": ("sim", "stop_on_convergence", _bool),
        "conv_l2_n": ("sim", "conv_l2_n", float),
        "conv_w1inf_v": ("sim", "conv_w1inf_v", float),
        "conv_w12_u": ("sim", "conv_w12_u", float),
    },
    "output": {
        "output_every": ("sim", "output_every", float),
        "snapshots": ("sim", "snapshots", _bool),
        "plots": ("sim", "plots", _bool),
        "c_f1": ("sim", "c_f1", float),
        "c_f2_u_multiplier": ("sim", "c_f2_u_multiplier", float),
    },
    "smallness": {
        "delta_n": ("sim", "delta_n", _opt_float),
        "delta_v": ("sim", "delta_v", _opt_float),
    },
}
REQUIRED = {("grid", "nx"), ("grid", "ny"), ("model", "motility"), ("initial", "preset")}


def parse_motility(text: str, base_dir: str | None = None) -> MotilitySpec:
    """Parse ``"family, key=value, ..."``."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ConfigError("empty motility specification")
    family = parts[0].lower()
    params = {}
    for p in parts[1:]:
        if "=" not in p:
            raise ConfigError(f"motility parameter {p!r} is not key=value")
        k, val = (s.strip() for s in p.split("=", 1))
        params[k.lower()] = val
    if family == "power":
        alpha = float(params.get("alpha", "1"))
        if alpha != 1.0:
            raise ConfigError(
                f"motility 'power, alpha={alpha:g}' violates the admissibility condition phi'(0) > 0"
                " (phi(v) = v^alpha has phi'(0) = 0 for alpha > 1 and is unbounded for alpha < 1)"
            )
        return MotilitySpec.linear(1.0)
    try:
        if family in ("tabulated", "custom"):
            path = params.get("path")
            if not path:
                raise ConfigError("tabulated motility needs path=<table file>")
            if base_dir and not os.path.isabs(path):
                path = os.path.join(base_dir, path)
            return MotilitySpec.from_table_file(path)
        keys = {"linear": "c", "saturating": "a", "exponential": "chi"}
        spec = MotilitySpec(family, 1.0)
        key = keys[spec.family]
        unknown = set(params) - {key}
        if unknown:
            raise ConfigError(f"unknown motility parameter(s) {sorted(unknown)} for {spec.family}")
        return MotilitySpec(spec.family, float(params.get(key, "1")))
    except DomainError as exc:
        raise ConfigError(f"inadmissible motility: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read motility table: {exc}") from exc


def _key_lines(text):
    """Map ``(section, key)`` to its 1-based line number."""
    out, section = {}, None
    for i, line in enumerate(text.splitlines(), 1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip().lower()
            continue
        m = re.match(r"\s*([A-Za-z0-9_]+)\s*[=:]", line)
        if m and section:
            out[(section, m.group(1).lower())] = i
    return out


def parse_config(text: str, base_dir: str | None = None) -> SimConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"syntax error: {line.strip()!r}", line=lineno) from exc
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("expected a [section] header", line=exc.lineno) from exc
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(str(exc).split(":")[-1].strip(), line=exc.lineno) from exc
    lines = _key_lines(text)

    values = {"grid": {}, "initial": {}, "sim": {}}
    for section in cp.sections():
        sec = section.lower()
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", line=lines.get((sec, None)))
        for key, raw in cp.items(section):
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {key!r} in [{section}]", line=lines.get((sec, key)))
            target, name, conv = SCHEMA[sec][key]
            try:
                val = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {exc}", line=lines.get((sec, key))) from exc
            if name == "motility":
                try:
                    val = parse_motility(raw, base_dir)
                except ConfigError as exc:
                    raise ConfigError(str(exc), line=lines.get((sec, key))) from exc
            values[target][name] = val
    missing = [f"[{s}] {k}" for s, k in sorted(REQUIRED) if not cp.has_option(s, k)]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")

    for key in ("n0_file", "v0_file"):
        path = values["initial"].get(key)
        if path and base_dir and not os.path.isabs(path):
            values["initial"][key] = os.path.join(base_dir, path)

    try:
        grid = GridSpec(**values["grid"])
        initial = InitialSpec(**values["initial"])
        sim = values["sim"]
        if "mu" in sim and not sim["mu"] >= 0:
            raise ConfigError("mu must be >= 0", line=lines.get(("model", "mu")))
        config = SimConfig(grid=grid, initial=initial, **sim)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    _, v0, _ = load_initial(config)
    if config.motility.family == "tabulated":
        if v0.max() > config.motility.vmax:
            raise ConfigError("tabulated motility does not cover the range of v0")
    _echo_defaults(cp, config)
    return config


def _echo_defaults(cp, config):
    for sec, keys in SCHEMA.items():
        for key, (target, name, _) in keys.items():
            if not cp.has_option(sec, key):
                obj = {"grid": config.grid, "initial": config.initial, "sim": config}[target]
                log.info("default [%s] %s = %s", sec, key, _fmt(getattr(obj, name)))


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, MotilitySpec):
        return v.describe()
    return "" if v is None else str(v)


def serialize_config(config: SimConfig) -> str:
    """Canonical text form; ``parse_config(serialize_config(c)) == c``."""
    out = []
    for sec, keys in SCHEMA.items():
        out.append(f"[{sec}]")
        for key, (target, name, _) in keys.items():
            obj = {"grid": config.grid, "initial": config.initial, "sim": config}[target]
            val = getattr(obj, name)
            if val is None:
                continue
            out.append(f"{key} = {_fmt(val)}")
        out.append("")
    return "\n".join(out)


def load_config(path) -> SimConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    return parse_config(text, base_dir=os.path.dirname(os.path.abspath(path)))


def override(config: SimConfig, **changes) -> SimConfig:
    return replace(config, **{k: v for k, v in changes.items() if v is not None})


__all__ = ["parse_config", "serialize_config", "load_config", "parse_motility", "override"]
