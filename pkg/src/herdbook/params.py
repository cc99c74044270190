"""Model parameters, run configuration and the flat key=value config format."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields


class ConfigError(ValueError):
    """Invalid, missing or inconsistent configuration."""


PARAM_KEYS = (
    "n_agents",
    "lambda_e",
    "eps_cf",
    "eps_fc",
    "xi0",
    "lambda_m",
    "lambda_0",
    "alpha",
    "gamma_k",
    "gamma_theta",
    "p_f",
    "lambda_tc",
    "lambda_tf",
)

RUN_KEYS = ("horizon_s", "sample_interval_s", "burn_in_s", "seed")

# keys parsed as integers; everything else is a float, except booleans below
_INT_KEYS = {"n_agents", "seed"}
_BOOL_KEYS = {"redraw_on_trade"}
_OPTIONAL_KEYS = {"burn_in_s", "redraw_on_trade"}


@dataclass(frozen=True)
class ModelParams:
    """The thirteen market-model parameters.

    ``lambda_e`` is the reference event rate in 1/s; every other ``lambda_*``
    and ``eps_*`` is a dimensionless multiplier of it.  ``gamma_k`` and
    ``gamma_theta`` are the shape/scale of the spread distribution chartists
    quote around the shared valuation; ``p_f``, ``gamma_theta`` and all
    prices share the same generic price unit.
    """

    n_agents: int
    lambda_e: float
    eps_cf: float
    eps_fc: float
    xi0: float
    lambda_m: float
    lambda_0: float
    alpha: float
    gamma_k: float
    gamma_theta: float
    p_f: float
    lambda_tc: float
    lambda_tf: float

    def __post_init__(self):
        if not isinstance(self.n_agents, int) or self.n_agents < 1:
            raise ConfigError(f"n_agents must be a positive integer, got {self.n_agents!r}")
        for name in ("lambda_e", "eps_cf", "eps_fc", "gamma_k", "gamma_theta", "p_f"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive finite real, got {v!r}")
        if not (0 < self.xi0 <= 1):
            raise ConfigError(f"xi0 must lie in (0, 1], got {self.xi0!r}")
        for name in ("lambda_m", "lambda_0", "alpha", "lambda_tc", "lambda_tf"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v >= 0):
                raise ConfigError(f"{name} must be a nonnegative finite real, got {v!r}")

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        missing = [k for k in PARAM_KEYS if k not in d]
        if missing:
            raise ConfigError(f"missing required key(s): {', '.join(missing)}")
        return cls(**{k: d[k] for k in PARAM_KEYS})


@dataclass(frozen=True)
class RunConfig:
    """Time horizon, sampling grid and seed of a single simulation run.

    ``burn_in_s=None`` resolves to 10% of the horizon.  Samples live on the
    uniform grid ``burn_in + (k+1)*sample_interval`` for k = 0..n_samples-1.
    """

    horizon_s: float
    sample_interval_s: float
    seed: int
    burn_in_s: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.horizon_s) and self.horizon_s > 0):
            raise ConfigError(f"horizon_s must be positive, got {self.horizon_s!r}")
        if not (math.isfinite(self.sample_interval_s) and self.sample_interval_s > 0):
            raise ConfigError(
                f"sample_interval_s must be positive, got {self.sample_interval_s!r}"
            )
        if self.burn_in_s is not None and not (
            math.isfinite(self.burn_in_s) and 0 <= self.burn_in_s < self.horizon_s
        ):
            raise ConfigError(
                f"burn_in_s must lie in [0, horizon_s), got {self.burn_in_s!r}"
            )
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {self.seed!r}")
        if self.n_samples < 1:
            raise ConfigError("horizon too short: no sample fits after burn-in")

    @property
    def burn_in(self) -> float:
        return 0.1 * self.horizon_s if self.burn_in_s is None else self.burn_in_s

    @property
    def n_samples(self) -> int:
        return int((self.horizon_s - self.burn_in) / self.sample_interval_s + 1e-9)

    def as_dict(self) -> dict:
        return {
            "horizon_s": self.horizon_s,
            "sample_interval_s": self.sample_interval_s,
            "burn_in_s": self.burn_in,
            "seed": self.seed,
        }


def parse_config_text(text: str) -> dict:
    """Parse the flat ``key = value`` config format (# starts a comment)."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        out[key] = _parse_value(key, value, lineno)
    return out


def _parse_value(key: str, value: str, lineno: int):
    try:
        if key in _BOOL_KEYS:
            low = value.lower()
            if low in ("1", "true", "yes"):
                return True
            if low in ("0", "false", "no"):
                return False
            raise ValueError(value)
        if key in _INT_KEYS:
            f = float(value)
            if f != int(f):
                raise ValueError(value)
            return int(f)
        return float(value)
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot parse value for {key!r}: {value!r}") from None


def apply_overrides(cfg: dict, overrides: list[str]) -> dict:
    """Apply ``key=value`` strings on top of a parsed config (last wins)."""
    out = dict(cfg)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        key, _, value = item.partition("=")
        key = key.strip()
        out[key] = _parse_value(key, value.strip(), 0)
    return out


def run_setup_from_config(cfg: dict) -> tuple[ModelParams, RunConfig, bool]:
    """Build (params, run config, redraw flag) from a flat config dict."""
    known = set(PARAM_KEYS) | set(RUN_KEYS) | _OPTIONAL_KEYS
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    required = [k for k in RUN_KEYS if k not in _OPTIONAL_KEYS]
    missing = [k for k in (*PARAM_KEYS, *required) if k not in cfg]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    params = ModelParams.from_dict(cfg)
    run = RunConfig(
        horizon_s=cfg["horizon_s"],
        sample_interval_s=cfg["sample_interval_s"],
        seed=cfg["seed"],
        burn_in_s=cfg.get("burn_in_s"),
    )
    redraw = bool(cfg.get("redraw_on_trade", True))
    return params, run, redraw
