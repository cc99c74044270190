"""Simulated-annealing calibration against four target curves.

The objective runs the simulator, builds the return/activity PDF and PSD
curves, interpolates them onto the target grids in log-log space and scores
the worst of the four RMSEs (mean aggregation available).  The annealer is
a plain Metropolis walk with geometric cooling, one multiplicative
single-parameter proposal per iteration, and per-iteration evaluation seeds
derived from the master seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .market import FrozenMarketError, run_simulation
from .params import ConfigError, ModelParams, RunConfig
from .series import SampledSeries
from .stats import (
    DegenerateSeriesError,
    StatCurve,
    abs_log_returns,
    curve_rmse_loglog,
    log_rebin,
    normalize,
    pdf_log_bins,
    psd,
)

CURVE_NAMES = ("return_pdf", "return_psd", "activity_pdf", "activity_psd")

# score assigned when a parameter point cannot produce a comparable curve
PENALTY = 1e3

# parameters the fits hold fixed unless explicitly freed
DEFAULT_FROZEN = frozenset({"n_agents", "lambda_e", "gamma_k", "gamma_theta", "p_f"})

# proposal space per parameter: multiplicative for scale-like positives,
# additive for bounded/zero-anchored ones
LINEAR_PROPOSAL = {"xi0", "alpha"}


@dataclass
class StatsConfig:
    """Knobs of the series -> curves pipeline shared by stats and calibrate."""

    lag: int = 1
    pdf_bins_per_decade: int = 20
    psd_segment_length: int = 4096
    psd_overlap: float = 0.5
    psd_bins_per_decade: int = 20


@dataclass
class CalibrationTarget:
    return_pdf: StatCurve
    return_psd: StatCurve
    activity_pdf: StatCurve
    activity_psd: StatCurve
    fit_ranges: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in CURVE_NAMES:
            c = getattr(self, name)
            if not isinstance(c, StatCurve):
                raise ConfigError(f"target curve {name} missing or not a StatCurve")
        for name, rng_ in self.fit_ranges.items():
            if name not in CURVE_NAMES:
                raise ConfigError(f"unknown fit range name {name!r}")
            lo, hi = rng_
            if not 0 < lo < hi:
                raise ConfigError(f"invalid fit range for {name}: {rng_!r}")

    def curve(self, name: str) -> StatCurve:
        return getattr(self, name)

    def fit_range(self, name: str):
        return self.fit_ranges.get(name)


def model_curves(
    params: ModelParams,
    run: RunConfig,
    stats_cfg: StatsConfig,
    return_scale_divisor: float = 1.0,
) -> dict[str, StatCurve]:
    """Simulate and build the four comparison curves.

    The divisor rescales the *normalized* absolute returns before binning
    (dividing the raw returns would cancel in the normalization).
    """
    result = run_simulation(params, run)
    returns = normalize(abs_log_returns(result.price_series(), stats_cfg.lag), "std")
    if return_scale_divisor != 1.0:
        returns = SampledSeries(
            returns.values / return_scale_divisor,
            returns.sample_interval,
            t0=returns.t0,
            kind=returns.kind,
            norm_mode=returns.norm_mode,
            norm_value=returns.norm_value * return_scale_divisor,
        )
    activity = normalize(result.trades_series(), "mean")
    return {
        "return_pdf": pdf_log_bins(returns, stats_cfg.pdf_bins_per_decade),
        "return_psd": log_rebin(
            psd(returns, stats_cfg.psd_segment_length, stats_cfg.psd_overlap),
            stats_cfg.psd_bins_per_decade,
        ),
        "activity_pdf": pdf_log_bins(activity, stats_cfg.pdf_bins_per_decade),
        "activity_psd": log_rebin(
            psd(activity, stats_cfg.psd_segment_length, stats_cfg.psd_overlap),
            stats_cfg.psd_bins_per_decade,
        ),
    }


def objective(
    params: ModelParams,
    target: CalibrationTarget,
    run: RunConfig,
    stats_cfg: StatsConfig | None = None,
    *,
    return_scale_divisor: float = 1.0,
    aggregate: str = "max",
) -> float:
    """Worst-of-four (or mean) log-log RMSE against the target curves.

    Parameter points whose runs cannot produce a curve (degenerate series,
    frozen market) or have no grid overlap score the finite PENALTY rather
    than raising, so the annealer can walk away from them.
    """
    if aggregate not in ("max", "mean"):
        raise ConfigError(f"aggregate must be 'max' or 'mean', got {aggregate!r}")
    stats_cfg = stats_cfg or StatsConfig()
    try:
        curves = model_curves(params, run, stats_cfg, return_scale_divisor)
    except (DegenerateSeriesError, FrozenMarketError, ValueError):
        return PENALTY
    scores = []
    for name in CURVE_NAMES:
        rmse = curve_rmse_loglog(curves[name], target.curve(name), target.fit_range(name))
        scores.append(PENALTY if rmse is None else rmse)
    return float(max(scores) if aggregate == "max" else np.mean(scores))


@dataclass
class AnnealingConfig:
    initial: ModelParams
    bounds: dict
    run: RunConfig
    iterations: int = 300
    initial_temperature: float = 0.3
    cooling: float = 0.99
    proposal_scale: float = 0.3
    replicas: int = 1
    seed: int = 0
    frozen: frozenset = DEFAULT_FROZEN
    return_scale_divisor: float = 1.0
    aggregate: str = "max"
    stats: StatsConfig = field(default_factory=StatsConfig)

    def __post_init__(self):
        if not 0 < self.cooling < 1:
            raise ConfigError(f"cooling ratio must lie in (0, 1), got {self.cooling!r}")
        if self.iterations < 0 or self.replicas < 1:
            raise ConfigError("need iterations >= 0 and replicas >= 1")
        if self.initial_temperature <= 0 or self.proposal_scale <= 0:
            raise ConfigError("temperature and proposal scale must be positive")
        self.frozen = frozenset(self.frozen)
        free = self.free_names()
        if not free and self.iterations > 0:
            raise ConfigError("no free parameters to anneal")
        for name in free:
            if name not in self.bounds:
                raise ConfigError(f"free parameter {name!r} needs bounds")
            lo, hi = self.bounds[name]
            v = getattr(self.initial, name)
            if not lo <= v <= hi:
                raise ConfigError(f"initial {name}={v} outside bounds [{lo}, {hi}]")

    def free_names(self) -> list[str]:
        from .params import PARAM_KEYS

        return [k for k in PARAM_KEYS if k not in self.frozen and k in self.bounds]


@dataclass
class AnnealResult:
    best_params: ModelParams
    best_objective: float
    trace: dict  # iteration, temperature, objective, accepted, best

    def __post_init__(self):
        self.trace = {k: np.asarray(v) for k, v in self.trace.items()}


def _evaluation_seed(master: int, iteration: int, replica: int) -> int:
    ss = np.random.SeedSequence([int(master), int(iteration), int(replica)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _evaluate(params, target, cfg: AnnealingConfig, iteration: int) -> float:
    vals = []
    for r in range(cfg.replicas):
        run = replace(cfg.run, seed=_evaluation_seed(cfg.seed, iteration, r))
        vals.append(
            objective(
                params,
                target,
                run,
                cfg.stats,
                return_scale_divisor=cfg.return_scale_divisor,
                aggregate=cfg.aggregate,
            )
        )
    return float(np.mean(vals))


def _propose(params: ModelParams, name: str, scale: float, lo: float, hi: float, rng) -> ModelParams:
    v = getattr(params, name)
    if name in LINEAR_PROPOSAL or lo <= 0:
        new = v + rng.normal(0.0, scale * (hi - lo))
    else:
        new = v * math.exp(rng.normal(0.0, scale))
    new = min(hi, max(lo, new))
    if name == "n_agents":
        new = max(2, int(round(new)))
    return replace(params, **{name: new})


def anneal(cfg: AnnealingConfig, target: CalibrationTarget) -> AnnealResult:
    """Metropolis walk with geometric cooling; returns the best-ever point.

    Reproducible: the proposal stream comes from the config seed and every
    objective evaluation at iteration i uses seeds derived from
    (seed, i, replica).
    """
    rng = np.random.default_rng(cfg.seed)
    free = cfg.free_names()
    current = cfg.initial
    current_obj = _evaluate(current, target, cfg, 0)
    best, best_obj = current, current_obj
    trace = {"iteration": [0], "temperature": [cfg.initial_temperature],
             "objective": [current_obj], "accepted": [True], "best": [best_obj]}
    temperature = cfg.initial_temperature
    for it in range(1, cfg.iterations + 1):
        name = free[int(rng.random() * len(free))]
        lo, hi = cfg.bounds[name]
        candidate = _propose(current, name, cfg.proposal_scale, lo, hi, rng)
        cand_obj = _evaluate(candidate, target, cfg, it)
        delta = cand_obj - current_obj
        accepted = delta <= 0 or rng.random() < math.exp(-delta / temperature)
        if accepted:
            current, current_obj = candidate, cand_obj
            if cand_obj < best_obj:
                best, best_obj = candidate, cand_obj
        trace["iteration"].append(it)
        trace["temperature"].append(temperature)
        trace["objective"].append(cand_obj)
        trace["accepted"].append(accepted)
        trace["best"].append(best_obj)
        temperature *= cfg.cooling
    return AnnealResult(best_params=best, best_objective=best_obj, trace=trace)
