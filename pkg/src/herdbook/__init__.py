"""Event-driven order book market with herding agents.

Five Poisson event channels (strategy switching both ways, mood flips,
chartist and fundamentalist market orders) drive a symmetric limit order
book around a shared valuation.  The package bundles the exact event-driven
simulator, the statistics pipeline (log-binned PDFs, averaged-periodogram
PSDs, slope fits), independent SDE/ODE reference integrators, tick-data
ingestion and a simulated-annealing calibrator.
"""

from .params import ConfigError, ModelParams, RunConfig
from .series import SampledSeries
from .market import (
    EventKind,
    FrozenMarketError,
    MarketState,
    SimulationResult,
    TradeRecord,
    apply_event,
    equilibrium_price_orderbook,
    equilibrium_price_path,
    event_rates,
    gillespie_step,
    initial_state,
    modulating_return,
    run_simulation,
    tau_inverse,
)
from .stats import (
    DegenerateSeriesError,
    SlopeFit,
    StatCurve,
    abs_log_returns,
    average_curves,
    curve_rmse_loglog,
    log_rebin,
    loglog_slope,
    normalize,
    pdf_log_bins,
    pearson_correlation,
    psd,
)
from .sde import (
    IntegrationError,
    KirmanSdeParams,
    YSdeParams,
    bass_trajectory,
    equilibrium_price_clearing,
    integrate_kirman_x,
    integrate_y,
    predicted_exponents,
    simulate_switching_chain,
)
from .calibrate import (
    AnnealingConfig,
    AnnealResult,
    CalibrationTarget,
    StatsConfig,
    anneal,
    model_curves,
    objective,
)

__version__ = "0.1.0"
