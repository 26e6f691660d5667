"""Experiment configuration: YAML file merged with command-line overrides."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml

from ..sbpsq import SystemParams
from ..schedopt import DEFAULT_BUCKET_LIMIT
from ..simkit import ConfigError

MODES = ("analyze", "optimize", "simulate", "sweep", "reproduce")
POLICIES = ("ops-p", "ops-a", "h1-p", "h1-a", "h2-p", "h2-a", "npb")
SWEEP_VARIABLES = ("rho", "r", "omega", "p1")
PARAM_KEYS = ("lambda1", "lambda2", "nu1", "nu2", "s1", "s2", "w1", "w2")
SHORTHAND_KEYS = ("rho", "r", "omega", "mu")


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    lo: float
    hi: float
    points: int = 20
    log: bool = True

    def values(self) -> list[float]:
        import numpy as np

        if self.points == 1:
            return [float(self.lo)]
        grid = np.geomspace(self.lo, self.hi, self.points) if self.log else np.linspace(self.lo, self.hi, self.points)
        return [float(v) for v in grid]


@dataclass(frozen=True)
class SimSettings:
    horizon: int = 1_000_000
    warmup_fraction: float = 0.2
    replications: int = 10
    seed: int = 0
    workers: int = 1


@dataclass
class ExperimentConfig:
    mode: str
    params: Optional[SystemParams] = None
    shorthand: Optional[dict] = None
    policies: tuple[str, ...] = ("ops-p",)
    p1: Optional[float] = None
    metric: str = "paoi"
    bucket_limit: float = DEFAULT_BUCKET_LIMIT
    sweep: Optional[SweepSpec] = None
    sim: SimSettings = field(default_factory=SimSettings)
    output: Optional[Path] = None
    density: Optional[Path] = None


def load_file(path) -> dict:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config: {path} is not valid YAML: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be a mapping")
    return data


def _num(block: str, key: str, value: Any, kind=float):
    try:
        out = kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{block}.{key}: expected a number, got {value!r}") from None
    if kind is float and math.isnan(out):
        raise ConfigError(f"{block}.{key}: NaN is not allowed")
    return out


def _block(data: dict, name: str) -> dict:
    value = data.get(name) or {}
    if not isinstance(value, dict):
        raise ConfigError(f"{name}: expected a mapping")
    return value


def _unknown(block: str, given: dict, allowed):
    extra = sorted(set(given) - set(allowed))
    if extra:
        raise ConfigError(f"{block}.{extra[0]}: unknown field")


def build_config(mode: str, data: Optional[dict] = None, overrides: Optional[dict] = None) -> ExperimentConfig:
    """
    Merge a parsed config mapping with flag overrides (flags win).

    ``overrides`` uses flat keys: parameter names (``lambda1``, ``w1``, ...),
    shorthand names (``rho``, ``r``, ``omega``, ``mu``), ``policy``, ``p1``,
    ``metric``, ``bucket_limit``, ``seed``, ``output``, ...
    Any invalid field raises :class:`ConfigError` naming it.
    """
    data = dict(data or {})
    ov = {k: v for k, v in (overrides or {}).items() if v is not None}
    mode = ov.pop("mode", None) or data.get("mode") or mode
    if mode not in MODES:
        raise ConfigError(f"mode: unknown mode {mode!r}")
    _unknown("config", data, ("mode", "params", "shorthand", "policy", "sweep", "sim", "output", "density"))

    params_block = dict(_block(data, "params"))
    short_block = dict(_block(data, "shorthand"))
    _unknown("params", params_block, PARAM_KEYS)
    _unknown("shorthand", short_block, SHORTHAND_KEYS)
    for key in PARAM_KEYS:
        if key in ov:
            params_block[key] = ov.pop(key)
    for key in SHORTHAND_KEYS:
        if key in ov:
            short_block[key] = ov.pop(key)

    params = None
    shorthand = None
    if params_block and short_block:
        raise ConfigError("params: give either explicit parameters or the rho/r/omega/mu shorthand, not both")
    if short_block:
        shorthand = {k: _num("shorthand", k, short_block.get(k, 1.0)) for k in SHORTHAND_KEYS}
        for k, v in shorthand.items():
            if not v > 0:
                raise ConfigError(f"shorthand.{k}: must be positive, got {v!r}")
        params = SystemParams.from_shorthand(**shorthand)
    elif params_block:
        vals = {k: _num("params", k, params_block[k]) for k in params_block}
        w1 = vals.pop("w1", None)
        w2 = vals.pop("w2", None)
        if w1 is None and w2 is None:
            w1, w2 = 0.5, 0.5
        elif w2 is None:
            w2 = 1.0 - w1
        elif w1 is None:
            w1 = 1.0 - w2
        for key in ("lambda1", "lambda2"):
            if key not in vals:
                raise ConfigError(f"params.{key}: required")
        try:
            params = SystemParams(omega1=w1, omega2=w2, **vals)
        except ValueError as exc:
            raise ConfigError(f"params: {exc}") from None

    policy_block = data.get("policy") or {}
    if isinstance(policy_block, str):
        policy_block = {"name": policy_block}
    _unknown("policy", policy_block, ("name", "names", "p1", "metric", "bucket_limit"))
    names = ov.pop("policy", None) or policy_block.get("names") or policy_block.get("name") or "ops-p"
    if isinstance(names, str):
        names = [n.strip() for n in names.split(",") if n.strip()]
    names = tuple(n.lower() for n in names)
    for n in names:
        if n not in POLICIES:
            raise ConfigError(f"policy: unknown policy {n!r}; choose from {', '.join(POLICIES)}")

    p1 = ov.pop("p1", policy_block.get("p1"))
    if p1 is not None:
        p1 = _num("policy", "p1", p1)
        if not 0 < p1 < 1:
            raise ConfigError(f"policy.p1: must lie strictly inside (0, 1), got {p1!r}")
    metric = str(ov.pop("metric", policy_block.get("metric", "paoi"))).lower()
    if metric not in ("paoi", "aoi"):
        raise ConfigError(f"policy.metric: expected 'paoi' or 'aoi', got {metric!r}")
    bucket_limit = _num("policy", "bucket_limit", ov.pop("bucket_limit", policy_block.get("bucket_limit", DEFAULT_BUCKET_LIMIT)))
    if not 0 < bucket_limit < math.inf:
        raise ConfigError(f"policy.bucket_limit: must be finite and positive, got {bucket_limit!r}")

    sim_block = dict(_block(data, "sim"))
    _unknown("sim", sim_block, ("horizon", "warmup_fraction", "replications", "seed", "workers"))
    for key in ("horizon", "warmup_fraction", "replications", "seed", "workers"):
        if key in ov:
            sim_block[key] = ov.pop(key)
    defaults = SimSettings()
    sim = SimSettings(
        horizon=_num("sim", "horizon", sim_block.get("horizon", defaults.horizon), int),
        warmup_fraction=_num("sim", "warmup_fraction", sim_block.get("warmup_fraction", defaults.warmup_fraction)),
        replications=_num("sim", "replications", sim_block.get("replications", defaults.replications), int),
        seed=_num("sim", "seed", sim_block.get("seed", defaults.seed), int),
        workers=_num("sim", "workers", sim_block.get("workers", defaults.workers), int),
    )
    if sim.horizon < 10:
        raise ConfigError(f"sim.horizon: must be at least 10 events, got {sim.horizon}")
    if not 0 <= sim.warmup_fraction < 0.5:
        raise ConfigError(f"sim.warmup_fraction: must lie in [0, 0.5), got {sim.warmup_fraction}")
    if sim.replications < 1:
        raise ConfigError(f"sim.replications: must be >= 1, got {sim.replications}")
    if not 0 <= sim.seed < 2**64:
        raise ConfigError("sim.seed: must be an unsigned 64-bit integer")
    if sim.workers < 1:
        raise ConfigError("sim.workers: must be >= 1")

    sweep = None
    sweep_block = dict(_block(data, "sweep"))
    if "sweep_lo" in ov:
        sweep_block.pop("range", None)
    for key in ("variable", "lo", "hi", "points", "log"):
        k = f"sweep_{key}"
        if k in ov:
            sweep_block[key] = ov.pop(k)
    if sweep_block:
        _unknown("sweep", sweep_block, ("variable", "range", "lo", "hi", "points", "log"))
        variable = sweep_block.get("variable")
        if variable not in SWEEP_VARIABLES:
            raise ConfigError(f"sweep.variable: expected one of {', '.join(SWEEP_VARIABLES)}, got {variable!r}")
        rng = sweep_block.get("range")
        if rng is not None:
            if not isinstance(rng, (list, tuple)) or len(rng) != 2:
                raise ConfigError("sweep.range: expected [low, high]")
            lo, hi = rng
        else:
            lo, hi = sweep_block.get("lo"), sweep_block.get("hi")
        lo, hi = _num("sweep", "range", lo), _num("sweep", "range", hi)
        log = bool(sweep_block.get("log", True))
        points = _num("sweep", "points", sweep_block.get("points", 20), int)
        if points < 1:
            raise ConfigError("sweep.points: must be >= 1")
        if not lo <= hi or (log and lo <= 0):
            raise ConfigError(f"sweep.range: invalid bounds [{lo}, {hi}]")
        if variable == "p1" and not (0 < lo and hi < 1):
            raise ConfigError("sweep.range: p1 bounds must lie strictly inside (0, 1)")
        sweep = SweepSpec(variable, lo, hi, points, log)

    output = ov.pop("output", data.get("output"))
    density = ov.pop("density", data.get("density"))
    ov.pop("figure", None)
    if ov:
        raise ConfigError(f"{sorted(ov)[0]}: unknown option")

    if mode in ("analyze", "optimize", "simulate", "sweep") and params is None:
        raise ConfigError("params: no system parameters given (use a params/shorthand block or --rho/--r/--omega/--mu)")
    if mode == "sweep" and sweep is None:
        raise ConfigError("sweep: sweep mode needs a sweep block (variable, range, points)")
    if mode == "sweep" and sweep.variable in ("rho", "r", "omega") and shorthand is None:
        raise ConfigError(f"sweep.variable: sweeping {sweep.variable!r} needs the rho/r/omega/mu shorthand")

    return ExperimentConfig(
        mode=mode,
        params=params,
        shorthand=shorthand,
        policies=names,
        p1=p1,
        metric=metric,
        bucket_limit=bucket_limit,
        sweep=sweep,
        sim=sim,
        output=Path(output) if output else None,
        density=Path(density) if density else None,
    )
