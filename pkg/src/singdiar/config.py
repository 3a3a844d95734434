"""Tool configuration: YAML file, ``SINGDIAR_*`` environment overrides, defaults.

Schema (all keys optional)::

    sample_rate: 8000
    segment_seconds: 30.0
    vad:
      threshold_db: 10.0
      frame_len: 800          # samples
      median_width: 11        # frames, odd
      min_active_fraction: 0.05
    sim:
      singers_per_mix: 2
      snr_low_db: -5.0
      snr_high_db: 5.0
      mixture_seconds: 30.0
      seed: 0
      peak_norm: 0.9
    paths:
      input_dir: null
      work_dir: null
      output_dir: null

An environment variable ``SINGDIAR_<SECTION>__<KEY>`` (for example
``SINGDIAR_VAD__THRESHOLD_DB=12``) overrides the file; top-level keys use
``SINGDIAR_<KEY>``. Values are parsed as YAML scalars.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from .mixing import SimConfig
from .vad import VadConfig

ENV_PREFIX = "SINGDIAR_"


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending key path."""


def _positive(v):
    return v > 0


def _odd(v):
    return v >= 1 and v % 2 == 1


def _fraction(v):
    return 0.0 <= v <= 1.0


def _nonneg(v):
    return v >= 0


# key -> (types, check, description)
SCHEMA: dict[str, Any] = {
    "sample_rate": (int, _positive, "a positive integer"),
    "segment_seconds": ((int, float), _positive, "a positive number"),
    "vad": {
        "threshold_db": ((int, float), None, "a number"),
        "frame_len": (int, _positive, "a positive integer"),
        "median_width": (int, _odd, "an odd integer >= 1"),
        "min_active_fraction": ((int, float), _fraction, "a number in [0, 1]"),
    },
    "sim": {
        "singers_per_mix": (int, lambda v: v >= 2, "an integer >= 2"),
        "snr_low_db": ((int, float), None, "a number"),
        "snr_high_db": ((int, float), None, "a number"),
        "mixture_seconds": ((int, float), _positive, "a positive number"),
        "seed": (int, _nonneg, "a non-negative integer"),
        "peak_norm": ((int, float), _positive, "a positive number"),
    },
    "paths": {
        "input_dir": ((str, type(None)), None, "a path"),
        "work_dir": ((str, type(None)), None, "a path"),
        "output_dir": ((str, type(None)), None, "a path"),
    },
}


@dataclass(frozen=True)
class ToolConfig:
    sample_rate: int = 8000
    segment_seconds: float = 30.0
    vad: VadConfig = field(default_factory=VadConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    paths: Mapping[str, str | None] = field(
        default_factory=lambda: {"input_dir": None, "work_dir": None, "output_dir": None}
    )

    @property
    def frame_duration(self) -> float:
        return self.vad.frame_len / self.sample_rate

    def as_dict(self) -> dict:
        return {
            "sample_rate": self.sample_rate,
            "segment_seconds": self.segment_seconds,
            "vad": {
                "threshold_db": self.vad.threshold_db,
                "frame_len": self.vad.frame_len,
                "median_width": self.vad.median_width,
                "min_active_fraction": self.vad.min_active_fraction,
            },
            "sim": {
                "singers_per_mix": self.sim.singers_per_mix,
                "snr_low_db": self.sim.snr_range_db[0],
                "snr_high_db": self.sim.snr_range_db[1],
                "mixture_seconds": self.sim.mixture_seconds,
                "seed": self.sim.seed,
                "peak_norm": self.sim.peak_norm,
            },
            "paths": dict(self.paths),
        }


def _check(values: Mapping, schema: Mapping, prefix: str = "") -> None:
    if not isinstance(values, Mapping):
        raise ConfigError(f"{prefix.rstrip('.') or '<root>'}: expected a mapping")
    for key, value in values.items():
        path = f"{prefix}{key}"
        if key not in schema:
            raise ConfigError(f"{path}: unknown key")
        spec = schema[key]
        if isinstance(spec, dict):
            _check(value, spec, path + ".")
            continue
        types, ok, what = spec
        if isinstance(value, bool) or not isinstance(value, types):
            raise ConfigError(f"{path}: expected {what}, got {value!r}")
        if ok is not None and value is not None and not ok(value):
            raise ConfigError(f"{path}: expected {what}, got {value!r}")


def _merge(base: dict, update: Mapping) -> dict:
    out = dict(base)
    for k, v in update.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), Mapping):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def env_overrides(environ: Mapping[str, str] | None = None) -> dict:
    environ = os.environ if environ is None else environ
    out: dict = {}
    for name, raw in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        parts = name[len(ENV_PREFIX):].lower().split("__")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError:
            raise ConfigError(f"{'.'.join(parts)}: cannot parse environment value {raw!r}") from None
        node = out
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = value
    return out


def from_dict(values: Mapping) -> ToolConfig:
    _check(values, SCHEMA)
    merged = _merge(ToolConfig().as_dict(), values)
    sim = merged["sim"]
    if sim["snr_low_db"] > sim["snr_high_db"]:
        raise ConfigError("sim.snr_low_db: must not exceed sim.snr_high_db")
    return ToolConfig(
        sample_rate=merged["sample_rate"],
        segment_seconds=float(merged["segment_seconds"]),
        vad=VadConfig(**{k: merged["vad"][k] for k in SCHEMA["vad"]}),
        sim=SimConfig(
            singers_per_mix=sim["singers_per_mix"],
            snr_range_db=(sim["snr_low_db"], sim["snr_high_db"]),
            mixture_seconds=float(sim["mixture_seconds"]),
            seed=sim["seed"],
            peak_norm=float(sim["peak_norm"]),
        ),
        paths=merged["paths"],
    )


def load_config(path=None, environ: Mapping[str, str] | None = None, overrides: Mapping | None = None) -> ToolConfig:
    """Defaults, then the YAML file, then environment, then ``overrides``."""
    values: dict = {}
    if path is not None:
        try:
            loaded = yaml.safe_load(Path(path).read_text())
        except yaml.YAMLError as exc:
            raise ConfigError(f"<file {path}>: invalid YAML: {exc}") from None
        if loaded is not None:
            _check(loaded, SCHEMA)
            values = _merge(values, loaded)
    env = env_overrides(environ)
    _check(env, SCHEMA)
    values = _merge(values, env)
    if overrides:
        values = _merge(values, overrides)
    return from_dict(values)
