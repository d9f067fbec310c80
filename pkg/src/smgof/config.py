"""JSON run configuration.

Example::

    {
      "kind": "local_vol",
      "n": 200,
      "x0": 1.0,
      "drift": "x",
      "diffusion": "1 + sin(5 * x)",
      "model": "constant",
      "alpha": 0.05,
      "method": "both",
      "bootstrap_reps": 300
    }

Keys
  kind            local_vol | jumps | microstructure | stoch_vol
  n               number of observations (blocks for the fine-grid kinds)
  x0, drift, diffusion
                  price SDE; expressions in t and x (see :mod:`smgof.expr`)
  jumps           {"intensity": 5, "size": "1"}; size is a constant expression
  noise           {"variance": "0.001", "kappa": null}; variance in t and x
  vol             {"x0", "drift", "diffusion"} of the latent spot variance (stoch_vol)
  model           "constant" | "proportional" |
                  {"mu": "...", "param_dim": p, "basis": [...], "bounds": [[lo, hi], ...]}
  truncation      threshold sequence in n, default "log(n)**2"
  alpha, method, bootstrap_reps, euler_substeps
  data            observation CSV to test instead of simulating (relative to the config)
  montecarlo      {"scale": 0.2, "ns": [100, 200, 500], "rows": "substring",
                   "scenarios": [ {...run keys..., "name", "mc_reps", "alpha_levels"} ]}
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .expr import BasisHandle, Expression, ExpressionError, ModelHandle, SdeHandle, SequenceHandle
from .model import JumpSpec, ModelKind, NoiseSpec, ParametricVolModel, SdeSpec
from .observers import TruncationRule, constant_model, make_model, proportional_model

METHODS = ("asymptotic", "bootstrap", "both")
KNOWN_KEYS = {
    "kind", "n", "x0", "drift", "diffusion", "jumps", "noise", "vol", "model", "truncation", "alpha", "method",
    "bootstrap_reps", "euler_substeps", "data", "montecarlo", "seed", "name", "mc_reps", "alpha_levels",
}


class ConfigError(ValueError):
    pass


def load(path) -> dict:
    text = Path(path).read_text()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    check_keys(cfg)
    return cfg


def check_keys(cfg: dict):
    unknown = set(cfg) - KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")


def _get(cfg, key, kind, default=None):
    value = cfg.get(key, default)
    if value is None:
        return None
    try:
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key!r} must be {kind.__name__}, got {value!r}") from None


def _expr(cls, source, key):
    if isinstance(source, (int, float)) and not isinstance(source, bool):
        source = repr(float(source))
    if not isinstance(source, str):
        raise ConfigError(f"{key!r} must be an expression string")
    try:
        return cls(source)
    except ExpressionError as exc:
        raise ConfigError(f"{key}: {exc}") from None


def kind_of(cfg) -> ModelKind:
    try:
        return ModelKind(cfg.get("kind", "local_vol"))
    except ValueError:
        raise ConfigError(f"unknown kind {cfg.get('kind')!r}") from None


def sample_size(cfg) -> int:
    n = _get(cfg, "n", int)
    if n is None or n < 4:
        raise ConfigError("'n' must be an integer >= 4")
    return n


def substeps(cfg) -> int:
    k = _get(cfg, "euler_substeps", int, 10)
    if k < 1:
        raise ConfigError("'euler_substeps' must be >= 1")
    return k


class _ConstantSize:
    def __init__(self, value):
        self.value = float(value)

    def __call__(self, rng, size):
        return np.full(size, self.value)


def sde_spec(cfg) -> SdeSpec:
    drift = _expr(SdeHandle, cfg.get("drift", "0"), "drift")
    diffusion = _expr(SdeHandle, cfg.get("diffusion", "1"), "diffusion")
    jump = noise = None
    if cfg.get("jumps") is not None:
        j = cfg["jumps"]
        size = float(_expr(Expression, j.get("size", "1"), "jumps.size")())
        try:
            jump = JumpSpec(_get(j, "intensity", float, 0.0), _ConstantSize(size))
        except ValueError as exc:
            raise ConfigError(f"jumps: {exc}") from None
    if cfg.get("noise") is not None:
        nz = cfg["noise"]
        try:
            noise = NoiseSpec(_expr(SdeHandle, nz.get("variance", "0"), "noise.variance"), _get(nz, "kappa", float))
        except ValueError as exc:
            raise ConfigError(f"noise: {exc}") from None
    try:
        return SdeSpec(drift, diffusion, _get(cfg, "x0", float, 1.0), jump, noise)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def vol_spec(cfg) -> Optional[SdeSpec]:
    v = cfg.get("vol")
    if v is None:
        if kind_of(cfg) is ModelKind.STOCH_VOL:
            raise ConfigError("stoch_vol needs a 'vol' block")
        return None
    return SdeSpec(_expr(SdeHandle, v.get("drift", "0"), "vol.drift"),
                   _expr(SdeHandle, v.get("diffusion", "0"), "vol.diffusion"), _get(v, "x0", float, 1.0))


def null_model(cfg) -> ParametricVolModel:
    kind = kind_of(cfg)
    m = cfg.get("model", "constant")
    try:
        if m == "constant":
            return constant_model(kind)
        if m == "proportional":
            return proportional_model(kind)
        if isinstance(m, dict) and "mu" in m:
            p = _get(m, "param_dim", int, 1)
            basis = None
            if m.get("basis") is not None:
                if len(m["basis"]) != p:
                    raise ConfigError("model.basis needs one expression per parameter")
                basis = BasisHandle(m["basis"])
            mu = _expr(ModelHandle, m["mu"], "model.mu")
            return make_model(mu, kind, p, basis, m.get("bounds"), m.get("name", "custom"))
    except ExpressionError as exc:
        raise ConfigError(f"model: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from None
    raise ConfigError(f"unknown model {m!r}")


def truncation(cfg) -> Optional[TruncationRule]:
    src = cfg.get("truncation")
    if src is None:
        return None
    return TruncationRule(_expr(SequenceHandle, src, "truncation"))


def alpha(cfg, override=None) -> float:
    a = override if override is not None else _get(cfg, "alpha", float, 0.05)
    if not 0 < a < 1:
        raise ConfigError("alpha must lie in (0, 1)")
    return a


def method(cfg, override=None) -> str:
    m = override or cfg.get("method", "both")
    if m not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}")
    return m


def bootstrap_reps(cfg, override=None) -> int:
    b = override if override is not None else _get(cfg, "bootstrap_reps", int, 1000)
    if b < 50:
        raise ConfigError("bootstrap_reps must be >= 50")
    return b


@dataclass(frozen=True)
class Resolved:
    """A config after validation, with the seed that was actually used."""

    raw: dict
    seed: int

    def header(self) -> list:
        return [f"config: {json.dumps(self.raw, sort_keys=True)}", f"seed: {self.seed}"]

    def as_json(self) -> Any:
        return {"config": self.raw, "seed": self.seed}
