"""Run configuration: built-in defaults, overridden by a YAML file, overridden
by command-line flags."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Optional

import yaml

from .params import ParameterError, SimulationParams

logger = logging.getLogger(__name__)

MODES = ("simulate", "sweep", "oracle", "hp-compare", "parallel-compare")

DEFAULTS: dict[str, Any] = {
    "mode": None,
    "omega0": 2.0,
    "omega": 2.0,
    "amplitude": 1.0,
    "gamma": 0.06,
    "nbar": 0.2,
    "n_atoms": 1,
    "t_max": 300.0,
    "dt": None,
    "record_stride": 10,
    "ss_tolerance": 1e-6,
    "positivity_tolerance": 1e-8,
    "output_dir": "out",
    "drive_convention": "pauli",
    "hp_truncation": 40,
}

SWEEP_DEFAULTS: dict[str, Any] = {
    "n_min": 1,
    "n_max": 30,
    "gamma_list": None,
    "amplitude_list": None,
    "nbar_list": None,
    "objective": "deltaF",
}

_FLOATS = {"omega0", "omega", "amplitude", "gamma", "nbar", "t_max", "dt",
           "ss_tolerance", "positivity_tolerance"}
_INTS = {"n_atoms", "record_stride", "hp_truncation", "n_min", "n_max"}
_FLOAT_LISTS = {"gamma_list", "amplitude_list", "nbar_list"}
_STRINGS = {"mode", "output_dir", "drive_convention", "objective"}


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class SweepBlock:
    n_min: int = 1
    n_max: int = 30
    gamma_list: Optional[list] = None
    amplitude_list: Optional[list] = None
    nbar_list: Optional[list] = None
    objective: str = "deltaF"


@dataclass(frozen=True)
class RunConfig:
    mode: str
    params: SimulationParams
    output_dir: str
    hp_truncation: int
    sweep: SweepBlock
    provenance: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        p = self.params
        out: dict[str, Any] = {"mode": self.mode}
        for key in DEFAULTS:
            if key in ("mode", "output_dir", "hp_truncation"):
                continue
            out[key] = getattr(p, key)
        out["output_dir"] = self.output_dir
        out["hp_truncation"] = self.hp_truncation
        out["sweep"] = {k: getattr(self.sweep, k) for k in SWEEP_DEFAULTS}
        return out


def serialize_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


def _coerce(key: str, value: Any) -> Any:
    if value is None:
        return None
    try:
        if key in _FLOATS:
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if key in _INTS:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            if isinstance(value, str):
                return int(value)
            return int(value)
        if key in _FLOAT_LISTS:
            if isinstance(value, str):
                value = [v for v in value.split(",") if v.strip()]
            if not isinstance(value, (list, tuple)):
                raise TypeError
            return [_coerce("gamma", v) for v in value]
        if key in _STRINGS:
            if not isinstance(value, str):
                raise TypeError
            return value
    except (TypeError, ValueError):
        raise ConfigError(key, f"invalid value {value!r}") from None
    raise ConfigError(key, "unknown key")


def load_config_text(text: str) -> dict:
    """Parse a config document.  A metadata sidecar (which nests the resolved
    configuration under ``config``) is accepted as well."""
    doc = yaml.safe_load(text) if text and text.strip() else {}
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("<document>", "config must be a key-value mapping")
    if "config" in doc and isinstance(doc["config"], dict):
        doc = doc["config"]
    return doc


def _split_layer(layer: dict, source: str) -> tuple[dict, dict]:
    top, sweep = {}, {}
    unknown = []
    for key, value in layer.items():
        if key == "sweep":
            if value is None:
                continue
            if not isinstance(value, dict):
                raise ConfigError("sweep", "must be a mapping")
            for skey, svalue in value.items():
                if skey not in SWEEP_DEFAULTS:
                    unknown.append(f"sweep.{skey}")
                else:
                    sweep[skey] = _coerce(skey, svalue)
        elif key in DEFAULTS:
            top[key] = _coerce(key, value)
        elif key in SWEEP_DEFAULTS:
            sweep[key] = _coerce(key, value)
        else:
            unknown.append(key)
    if unknown:
        raise ConfigError(", ".join(sorted(unknown)), f"unknown key(s) in {source}")
    return top, sweep


def parse_config(text: Optional[str] = None, flags: Optional[dict] = None) -> RunConfig:
    """Resolve a configuration from defaults, a YAML document and flags.

    ``flags`` maps config keys to values; ``None`` values mean "not given".
    """
    values = dict(DEFAULTS)
    sweep_values = dict(SWEEP_DEFAULTS)
    provenance = {k: "default" for k in values}
    provenance.update({f"sweep.{k}": "default" for k in sweep_values})
    layers = []
    if text is not None:
        layers.append((load_config_text(text), "file"))
    if flags:
        layers.append(({k: v for k, v in flags.items() if v is not None}, "flag"))
    for layer, source in layers:
        top, sweep = _split_layer(layer, source)
        values.update(top)
        sweep_values.update(sweep)
        provenance.update({k: source for k in top})
        provenance.update({f"sweep.{k}": source for k in sweep})

    mode = values.pop("mode")
    if mode is None:
        raise ConfigError("mode", f"required; one of {', '.join(MODES)}")
    if mode not in MODES:
        raise ConfigError("mode", f"must be one of {', '.join(MODES)}")
    output_dir = values.pop("output_dir")
    hp_truncation = values.pop("hp_truncation")
    if hp_truncation < 2:
        raise ConfigError("hp_truncation", "must be at least 2")
    try:
        params = SimulationParams(**values)
    except ParameterError as exc:
        raise ConfigError(exc.key, str(exc).split(": ", 1)[1]) from None
    if sweep_values["n_min"] < 1 or sweep_values["n_max"] < sweep_values["n_min"]:
        raise ConfigError("sweep.n_min", "N range must be non-empty with n_min >= 1")
    for key in _FLOAT_LISTS:
        lst = sweep_values[key]
        if lst is not None and (not lst or min(lst) < 0):
            raise ConfigError(f"sweep.{key}", "must be a non-empty list of non-negative values")
    if sweep_values["objective"] not in ("deltaF", "deltaF_per_atom"):
        raise ConfigError("sweep.objective", "must be deltaF or deltaF_per_atom")
    cfg = RunConfig(mode, params, output_dir, hp_truncation, SweepBlock(**sweep_values), provenance)
    for key, value in _flatten(cfg.to_dict()):
        logger.info("config %s = %r (%s)", key, value, provenance.get(key, "default"))
    return cfg


def _flatten(d: dict, prefix: str = ""):
    for k, v in d.items():
        if isinstance(v, dict):
            yield from _flatten(v, f"{prefix}{k}.")
        else:
            yield f"{prefix}{k}", v
