"""Experiment configuration: INI-style sections of flat key = value pairs.

A config may name a built-in preset in ``[experiment] preset = ...``; its own
keys then override the preset's.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

from .presets import PRESETS


class ConfigError(ValueError):
    pass


def _parser():
    p = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    p.optionxform = str  # keys are case-sensitive (U vs u)
    return p


def parse_complex_list(text):
    out = []
    for tok in text.replace(";", ",").split(","):
        tok = tok.strip().replace(" ", "")
        if tok:
            try:
                out.append(complex(tok))
            except ValueError as exc:
                raise ConfigError(f"not a complex number: {tok!r}") from exc
    return out


def parse_float_list(text):
    try:
        return [float(t) for t in text.replace(";", ",").split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"not a list of numbers: {text!r}") from exc


@dataclass
class ExperimentConfig:
    """Sectioned key/value settings with typed accessors."""

    sections: dict = field(default_factory=dict)
    source: str = "<memory>"

    @property
    def name(self):
        return self.get("experiment", "name", self.get("experiment", "preset", "unnamed"))

    @property
    def kind(self):
        return self.get("experiment", "kind", "evolution")

    def has(self, section, key):
        return key in self.sections.get(section, {})

    def get(self, section, key, default=None):
        return self.sections.get(section, {}).get(key, default)

    def require(self, section, key):
        v = self.get(section, key)
        if v is None:
            raise ConfigError(f"missing [{section}] {key}")
        return v

    def float(self, section, key, default=None):
        v = self.get(section, key)
        if v is None:
            if default is None:
                raise ConfigError(f"missing [{section}] {key}")
            return float(default)
        try:
            return float(v)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: not a number: {v!r}") from exc

    def int(self, section, key, default=None):
        v = self.get(section, key)
        if v is None:
            if default is None:
                raise ConfigError(f"missing [{section}] {key}")
            return int(default)
        try:
            return int(v)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: not an integer: {v!r}") from exc

    def bool(self, section, key, default=False):
        v = self.get(section, key)
        if v is None:
            return default
        return str(v).strip().lower() in ("1", "true", "yes", "on")

    def set(self, section, key, value):
        self.sections.setdefault(section, {})[key] = str(value)

    def thresholds(self):
        """[acceptance] section as floats."""
        return {k: float(v) for k, v in self.sections.get("acceptance", {}).items()}

    def to_text(self):
        p = _parser()
        for s, kv in self.sections.items():
            p[s] = kv
        from io import StringIO
        buf = StringIO()
        p.write(buf)
        return buf.getvalue()


def _sections(text, source):
    p = _parser()
    try:
        p.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    return {s: dict(p[s]) for s in p.sections()}


def load_config(path_or_preset, overrides=None) -> ExperimentConfig:
    """Read a config file, or a preset when the argument names one."""
    key = str(path_or_preset)
    if key in PRESETS and not Path(key).exists():
        secs = _sections(PRESETS[key], f"<preset {key}>")
        source = f"preset:{key}"
    else:
        path = Path(key)
        if not path.exists():
            raise ConfigError(f"no such config file or preset: {key!r}")
        user = _sections(path.read_text(), str(path))
        base = user.get("experiment", {}).get("preset")
        secs = {}
        if base:
            if base not in PRESETS:
                raise ConfigError(f"unknown preset {base!r}")
            secs = _sections(PRESETS[base], f"<preset {base}>")
        for s, kv in user.items():
            secs.setdefault(s, {}).update(kv)
        source = str(path)
    cfg = ExperimentConfig(secs, source)
    for (s, k), v in (overrides or {}).items():
        cfg.set(s, k, v)
    validate(cfg)
    return cfg


KINDS = ("evolution", "amplifier", "rhs-check", "truncation", "audit")


def validate(cfg: ExperimentConfig):
    if cfg.kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {cfg.kind!r}; expected one of {KINDS}")
    if cfg.kind in ("evolution", "amplifier"):
        dt = cfg.float("evolution", "dt")
        t_final = cfg.float("evolution", "t_final")
        if dt <= 0 or t_final < 0:
            raise ConfigError("need dt > 0 and t_final >= 0")
        steps = t_final / dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ConfigError("t_final must be a whole number of dt steps")
        cfg.int("grid", "n_pts")
    for k, v in cfg.sections.get("acceptance", {}).items():
        try:
            x = float(v)
        except ValueError as exc:
            raise ConfigError(f"[acceptance] {k}: not a number") from exc
        if math.isnan(x):
            raise ConfigError(f"[acceptance] {k}: NaN threshold")
