"""Order book market with herding agents: state, event channels, simulation.

Two execution paths share one contract.  ``gillespie_step``/``apply_event``
advance a :class:`MarketState` one event at a time and are the readable
reference; ``run_simulation`` drives the jitted loop in
:mod:`herdbook.engine` for long runs.  Both consume random draws in the
exact same order from the same PCG64 generator, so for equal seeds they
produce bit-identical trajectories (see tests/test_market.py).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import engine
from .book import SpreadBook
from .params import ModelParams, RunConfig
from .series import SampledSeries


class FrozenMarketError(RuntimeError):
    """All five event rates vanished: no event can ever fire again."""


class EventKind(enum.Enum):
    SWITCH_CF = "switch-cf"
    SWITCH_FC = "switch-fc"
    MOOD_FLIP = "mood-flip"
    TRADE_FUNDAMENTALIST = "trade-fundamentalist"
    TRADE_CHARTIST = "trade-chartist"


@dataclass(frozen=True)
class TradeRecord:
    t: float
    price: float
    side: str  # 'bid' (buyer-initiated) or 'ask' (seller-initiated)
    initiator: str  # 'chartist' or 'fundamentalist'


@dataclass(frozen=True)
class EventRates:
    cf: float
    fc: float
    mood: float
    fund: float
    chart: float

    @property
    def total(self) -> float:
        return self.cf + self.fc + self.mood + self.fund + self.chart

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.cf, self.fc, self.mood, self.fund, self.chart)


def tau_inverse(n_c: int, params: ModelParams) -> float:
    """State-dependent speed-up of all event rates.

    Returns ``lambda_0 + (n_c/(N-n_c))**alpha`` with two edge rules: at
    n_c == N the power term becomes (2*n_c)**alpha, and for alpha == 0 the
    power term is 1 for every n_c (0**0 := 1).
    """
    n = params.n_agents
    if not 0 <= n_c <= n:
        raise ValueError(f"n_c must lie in [0, {n}], got {n_c}")
    if params.alpha == 0.0:
        pw = 1.0
    elif n_c == 0:
        pw = 0.0
    elif n_c == n:
        pw = (2.0 * n_c) ** params.alpha
    else:
        pw = (n_c / (n - n_c)) ** params.alpha
    return params.lambda_0 + pw


def modulating_return(n_c, n: int):
    """y = n_c / (N - n_c), with the n_c == N edge mapped to 2*N.

    Mirrors the edge rule of :func:`tau_inverse` so the ratio stays finite;
    accepts scalars or arrays.
    """
    n_c = np.asarray(n_c, dtype=np.float64)
    denom = np.maximum(n - n_c, 0.5)
    out = n_c / denom
    return float(out) if out.ndim == 0 else out


class MarketState:
    """Mutable market snapshot: clock, mood, valuation, last price, book."""

    def __init__(self, params: ModelParams, rng: np.random.Generator):
        n = params.n_agents
        self.n = n
        self.t = 0.0
        self.mood = params.xi0
        self.valuation = params.p_f
        self.price = params.p_f
        self.book = SpreadBook(n)
        n0 = n // 2
        self.book.size = engine.seed_book(
            rng,
            params.gamma_k,
            params.gamma_theta,
            n0,
            self.book.spread,
            self.book.tag,
            self.book.slot_of,
        )
        self.free_tags = np.empty(n, dtype=np.int64)
        self.free_tags[: n - n0] = np.arange(n0, n)
        self.free_count = n - n0

    @property
    def n_c(self) -> int:
        return len(self.book)

    @property
    def best_ask(self) -> float:
        return self.valuation + self.book.min_spread

    @property
    def best_bid(self) -> float:
        return self.valuation - self.book.min_spread


def initial_state(params: ModelParams, rng: np.random.Generator) -> MarketState:
    """Unbiased start: half chartists, mood +xi0, price = valuation = p_f."""
    return MarketState(params, rng)


def event_rates(state: MarketState, params: ModelParams) -> EventRates:
    nc = state.n_c
    nf = state.n - nc
    base = params.lambda_e * tau_inverse(nc, params)
    return EventRates(
        cf=base * nc * (params.eps_cf + nf),
        fc=base * nf * (params.eps_fc + nc),
        mood=base * params.lambda_m,
        fund=base * params.lambda_tf * nf * abs(np.log(state.price / params.p_f)),
        chart=base * params.lambda_tc * nc,
    )


def gillespie_step(
    state: MarketState, params: ModelParams, rng: np.random.Generator
) -> tuple[float, EventKind]:
    """Draw the waiting time and the next event; advances the clock only.

    The chosen event is *not* applied — pass it to :func:`apply_event`.
    Raises :class:`FrozenMarketError` when every rate is zero (possible only
    when all of lambda_m, lambda_tc, lambda_tf vanish together with one of
    the switching products, e.g. n_c == 0 with lambda_e * eps_fc == 0).
    """
    rates = event_rates(state, params)
    total = rates.total
    if total <= 0.0:
        raise FrozenMarketError(f"all event rates are zero at t={state.t}")
    dt = rng.standard_exponential() / total
    u = rng.random() * total
    state.t += dt
    if u < rates.cf:
        kind = EventKind.SWITCH_CF
    elif u < rates.cf + rates.fc:
        kind = EventKind.SWITCH_FC
    elif u < rates.cf + rates.fc + rates.mood:
        kind = EventKind.MOOD_FLIP
    elif u < rates.cf + rates.fc + rates.mood + rates.fund:
        kind = EventKind.TRADE_FUNDAMENTALIST
    else:
        kind = EventKind.TRADE_CHARTIST
    return dt, kind


def apply_event(
    state: MarketState,
    event: EventKind,
    params: ModelParams,
    rng: np.random.Generator,
    redraw_on_trade: bool = True,
) -> TradeRecord | None:
    """Mutate the state according to the event; returns a trade if one filled.

    Null outcomes (fundamental price inside the spread, empty book, or the
    price-positivity guard) consume the event without touching the state.
    """
    if event is EventKind.SWITCH_CF:
        assert state.n_c > 0, "switch-cf fired with no chartists"
        slot = int(rng.random() * state.n_c)
        agent = state.book.remove_slot(slot)
        state.free_tags[state.free_count] = agent
        state.free_count += 1
        return None
    if event is EventKind.SWITCH_FC:
        assert state.n_c < state.n, "switch-fc fired with no fundamentalists"
        state.free_count -= 1
        agent = int(state.free_tags[state.free_count])
        s = rng.standard_gamma(params.gamma_k) * params.gamma_theta
        state.book.push(agent, s)
        return None
    if event is EventKind.MOOD_FLIP:
        state.mood = -state.mood
        return None
    if event is EventKind.TRADE_FUNDAMENTALIST:
        if state.n_c == 0:
            return None
        s_min = state.book.min_spread
        if state.valuation + s_min < params.p_f:
            return _execute(state, state.valuation + s_min, "bid", "fundamentalist", params, rng, redraw_on_trade)
        if state.valuation - s_min > params.p_f:
            return _execute(state, state.valuation - s_min, "ask", "fundamentalist", params, rng, redraw_on_trade)
        return None
    if event is EventKind.TRADE_CHARTIST:
        assert state.n_c > 0, "trade-chartist fired with no chartists"
        u = rng.random()
        s_min = state.book.min_spread
        if u < 0.5 * (1.0 + state.mood):
            return _execute(state, state.valuation + s_min, "bid", "chartist", params, rng, redraw_on_trade)
        quote = state.valuation - s_min
        if quote <= 0.0:
            return None
        return _execute(state, quote, "ask", "chartist", params, rng, redraw_on_trade)
    raise ValueError(f"unknown event {event!r}")


def _execute(state, quote, side, initiator, params, rng, redraw):
    state.price = quote
    state.valuation = quote
    if redraw:
        s = rng.standard_gamma(params.gamma_k) * params.gamma_theta
        state.book.replace_min(s)
    return TradeRecord(state.t, quote, side, initiator)


def equilibrium_price_orderbook(state: MarketState, params: ModelParams) -> float:
    """Price at which mean chartist and fundamentalist order flows cancel."""
    nc = state.n_c
    if not 0 < nc < state.n:
        raise ValueError(f"equilibrium price undefined at n_c={nc}")
    if params.lambda_tf <= 0:
        raise ValueError("equilibrium price undefined for lambda_tf == 0")
    y = nc / (state.n - nc)
    return params.p_f * np.exp(params.lambda_tc / params.lambda_tf * y * state.mood)


def equilibrium_price_path(n_c, mood, params: ModelParams) -> np.ndarray:
    """Vectorized equilibrium price along a sampled (n_c, mood) trajectory."""
    if params.lambda_tf <= 0:
        raise ValueError("equilibrium price undefined for lambda_tf == 0")
    y = modulating_return(n_c, params.n_agents)
    return params.p_f * np.exp(params.lambda_tc / params.lambda_tf * y * np.asarray(mood))


@dataclass
class EventCounters:
    switches_cf: int
    switches_fc: int
    mood_flips: int
    fund_orders: int
    chart_orders: int
    trades: int
    fund_null: int
    guard_null: int

    @classmethod
    def from_array(cls, a: np.ndarray) -> "EventCounters":
        return cls(*(int(v) for v in a))


@dataclass
class TradeLog:
    """Executed trades: times in seconds from run start (burn-in included)."""

    t: np.ndarray
    price: np.ndarray
    side: np.ndarray  # +1 bid (buy), -1 ask (sell)
    initiator: np.ndarray  # 0 chartist, 1 fundamentalist

    def __len__(self) -> int:
        return self.t.size


@dataclass
class SimulationResult:
    params: ModelParams
    run: RunConfig
    price: np.ndarray
    trades: np.ndarray
    n_chartists: np.ndarray
    mood: np.ndarray
    counters: EventCounters
    trade_log: TradeLog | None = None

    @property
    def t(self) -> np.ndarray:
        return self.run.burn_in + (np.arange(self.price.size) + 1) * self.run.sample_interval_s

    def price_series(self) -> SampledSeries:
        return SampledSeries(
            self.price, self.run.sample_interval_s, t0=float(self.t[0]), kind="price"
        )

    def trades_series(self) -> SampledSeries:
        return SampledSeries(
            self.trades, self.run.sample_interval_s, t0=float(self.t[0]), kind="trades"
        )

    def modulating_series(self) -> SampledSeries:
        return SampledSeries(
            modulating_return(self.n_chartists, self.params.n_agents),
            self.run.sample_interval_s,
            t0=float(self.t[0]),
            kind="modulating-return",
        )


_INITIAL_LOG_CAPACITY = 1 << 16


def run_simulation(
    params: ModelParams,
    run: RunConfig,
    *,
    record_trades: bool = False,
    redraw_on_trade: bool = True,
) -> SimulationResult:
    """Simulate until the horizon and sample on the uniform grid.

    Per window the price is the last trade at or before the window end
    (forward-filled), ``trades`` counts fills (null events excluded), and
    ``n_chartists``/``mood`` snapshot the state at the window end.  Identical
    (params, run) give bit-identical results.
    """
    n = params.n_agents
    n_samples = run.n_samples
    rng = np.random.default_rng(run.seed)

    spread = np.zeros(n, dtype=np.float64)
    tag = np.full(n, -1, dtype=np.int64)
    slot_of = np.full(n, -1, dtype=np.int64)
    free_tags = np.empty(n, dtype=np.int64)
    n0 = n // 2
    size = engine.seed_book(rng, params.gamma_k, params.gamma_theta, n0, spread, tag, slot_of)
    free_tags[: n - n0] = np.arange(n0, n)

    state_f = np.array([0.0, params.p_f, params.p_f, params.xi0], dtype=np.float64)
    state_i = np.zeros(5, dtype=np.int64)
    state_i[engine.I_SIZE] = size
    state_i[engine.I_FREE] = n - n0
    counters = np.zeros(8, dtype=np.int64)

    out_price = np.empty(n_samples, dtype=np.float64)
    out_trades = np.zeros(n_samples, dtype=np.int64)
    out_nc = np.empty(n_samples, dtype=np.int64)
    out_mood = np.empty(n_samples, dtype=np.float64)

    cap = _INITIAL_LOG_CAPACITY if record_trades else 0
    log_t = np.empty(cap, dtype=np.float64)
    log_price = np.empty(cap, dtype=np.float64)
    log_side = np.empty(cap, dtype=np.int8)
    log_init = np.empty(cap, dtype=np.int8)

    while True:
        status = engine.advance(
            n,
            params.lambda_e,
            params.eps_cf,
            params.eps_fc,
            params.lambda_m,
            params.lambda_0,
            params.alpha,
            params.gamma_k,
            params.gamma_theta,
            params.p_f,
            params.lambda_tc,
            params.lambda_tf,
            redraw_on_trade,
            run.horizon_s,
            run.sample_interval_s,
            run.burn_in,
            n_samples,
            rng,
            spread,
            tag,
            slot_of,
            free_tags,
            state_f,
            state_i,
            counters,
            out_price,
            out_trades,
            out_nc,
            out_mood,
            record_trades,
            log_t,
            log_price,
            log_side,
            log_init,
        )
        if status == engine.STATUS_LOG_FULL:
            new_cap = 2 * log_t.size
            log_t = _grow(log_t, new_cap)
            log_price = _grow(log_price, new_cap)
            log_side = _grow(log_side, new_cap)
            log_init = _grow(log_init, new_cap)
            continue
        if status == engine.STATUS_FROZEN:
            raise FrozenMarketError(
                f"all event rates are zero at t={state_f[engine.F_T]}"
            )
        break

    log = None
    if record_trades:
        m = int(state_i[engine.I_LOG_LEN])
        log = TradeLog(log_t[:m].copy(), log_price[:m].copy(), log_side[:m].copy(), log_init[:m].copy())

    return SimulationResult(
        params=params,
        run=run,
        price=out_price,
        trades=out_trades,
        n_chartists=out_nc,
        mood=out_mood,
        counters=EventCounters.from_array(counters),
        trade_log=log,
    )


def _grow(a: np.ndarray, new_cap: int) -> np.ndarray:
    out = np.empty(new_cap, dtype=a.dtype)
    out[: a.size] = a
    return out
