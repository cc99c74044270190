"""Tick parsing, minute aggregation and the simulator round trip."""
import logging

import numpy as np
import pytest

from herdbook.calibrate import StatsConfig
from herdbook.ingest import (
    IngestError,
    empirical_target,
    parse_ticks,
    ticks_to_csv_lines,
    to_minute_series,
    trade_log_to_ticks,
)
from herdbook.market import run_simulation
from herdbook.params import RunConfig
from herdbook.presets import DENSE_TRADING
from herdbook.stats import abs_log_returns, curve_rmse_loglog, log_rebin, normalize, pdf_log_bins, psd


def test_parse_single_line():
    ticks = parse_ticks(["1500000000,2500.5,0.1"])
    assert len(ticks) == 1
    assert ticks.t[0] == 1500000000
    assert ticks.price[0] == 2500.5
    assert ticks.amount[0] == 0.1


def test_parse_sorts_out_of_order(caplog):
    lines = ["1500000300,10.0,1", "1500000000,11.0,1", "1500000600,12.0,1"]
    with caplog.at_level(logging.WARNING):
        ticks = parse_ticks(lines)
    assert "out of order" in caplog.text
    assert list(ticks.t) == [1500000000, 1500000300, 1500000600]
    assert list(ticks.price) == [11.0, 10.0, 12.0]


def test_parse_skips_malformed_below_threshold():
    good = [f"{1500000000 + i},10.0,1" for i in range(300)]
    lines = good + ["1500009999,-5.0,1", "not,a,line"]
    ticks = parse_ticks(lines)
    assert len(ticks) == 300
    assert ticks.n_malformed == 2


def test_parse_aborts_above_threshold():
    lines = ["1500000000,10.0,1", "garbage line", "1500000060,-1.0,1"]
    with pytest.raises(IngestError, match="malformed"):
        parse_ticks(lines)


def test_parse_empty_and_header():
    with pytest.raises(IngestError):
        parse_ticks([])
    ticks = parse_ticks(["unixtime,price,amount", "1500000000,10.0,1"], has_header=True)
    assert len(ticks) == 1


def test_parse_column_permutation():
    ticks = parse_ticks(["10.0,0.5,1500000000"], columns=("price", "amount", "t"))
    assert ticks.t[0] == 1500000000 and ticks.price[0] == 10.0 and ticks.amount[0] == 0.5
    with pytest.raises(IngestError):
        parse_ticks(["1,2,3"], columns=("t", "t", "amount"))


def test_minute_grid_one_tick_per_minute():
    t0 = 1500000000  # on a minute boundary
    lines = [f"{t0 + 30 + 60 * k},10.0,1" for k in range(10)]
    price, trades = to_minute_series(parse_ticks(lines))
    assert np.all(trades.values == 1)
    assert len(trades) == 10
    assert trades.sample_interval == 60.0


def test_minute_gap_forward_fill():
    t0 = 1500000000
    lines = [f"{t0 + 30},10.0,1", f"{t0 + 45},11.0,1", f"{t0 + 330},12.0,1"]
    price, trades = to_minute_series(parse_ticks(lines))
    assert list(trades.values) == [2, 0, 0, 0, 0, 1]
    assert list(price.values) == [11.0, 11.0, 11.0, 11.0, 11.0, 12.0]
    returns = abs_log_returns(price, 1)
    assert np.all(returns.values[:4] == 0.0)


def test_counts_ignore_amount():
    t0 = 1500000000
    lines = [f"{t0 + 10},10.0,0.001", f"{t0 + 20},10.5,250.0"]
    _, trades = to_minute_series(parse_ticks(lines))
    assert trades.values[0] == 2


def test_counts_conserved_and_range():
    rng = np.random.default_rng(0)
    t0 = 1500000000
    times = np.sort(rng.integers(t0, t0 + 36000, size=5000))
    lines = [f"{t},10.0,1" for t in times]
    ticks = parse_ticks(lines)
    price, trades = to_minute_series(ticks)
    assert trades.values.sum() == 5000
    lo, hi = t0 + 600, t0 + 1200
    _, trades_cut = to_minute_series(ticks, t_start=lo, t_end=hi)
    assert trades_cut.values.sum() == np.sum((times >= lo) & (times < hi))


def test_to_minute_series_empty_range():
    ticks = parse_ticks(["1500000000,10.0,1"])
    with pytest.raises(IngestError):
        to_minute_series(ticks, t_start=1600000000.0)


def test_drop_empty_windows():
    t0 = 1500000000
    lines = [f"{t0 + 30},10.0,1", f"{t0 + 330},12.0,1"]
    _, trades = to_minute_series(parse_ticks(lines), drop_empty=True)
    assert list(trades.values) == [1, 1]


# ----------------------------------------------------------- empirical target


def _asset_pair(seed, n=6000):
    rng = np.random.default_rng(seed)
    from herdbook.series import SampledSeries

    price = SampledSeries(100.0 * np.exp(np.cumsum(rng.normal(0, 1e-3, n))), 60.0, kind="price")
    trades = SampledSeries(rng.poisson(5.0, n).astype(np.int64), 60.0, kind="trades")
    return price, trades


def test_target_single_asset_is_identity():
    pair = _asset_pair(1)
    scfg = StatsConfig(psd_segment_length=1024)
    target = empirical_target([pair], scfg)
    own_pdf = pdf_log_bins(normalize(abs_log_returns(pair[0], 1), "std"), scfg.pdf_bins_per_decade)
    assert curve_rmse_loglog(target.return_pdf, own_pdf) < 0.02


def test_target_duplicate_assets_match_single():
    pair = _asset_pair(2)
    scfg = StatsConfig(psd_segment_length=1024)
    one = empirical_target([pair], scfg)
    two = empirical_target([pair, pair], scfg)
    np.testing.assert_allclose(one.return_pdf.values, two.return_pdf.values, rtol=1e-9)
    np.testing.assert_allclose(one.activity_psd.values, two.activity_psd.values, rtol=1e-9)


def test_empirical_target_requires_input():
    with pytest.raises(IngestError):
        empirical_target([])


# ------------------------------------------------------------- round trip


def test_simulator_round_trip_through_ticks():
    run = RunConfig(horizon_s=6e5, sample_interval_s=60.0, seed=31, burn_in_s=6e4)
    result = run_simulation(DENSE_TRADING, run, record_trades=True)
    scfg = StatsConfig(pdf_bins_per_decade=10, psd_segment_length=2048, psd_bins_per_decade=10)

    direct_price = result.price_series()
    direct_trades = result.trades_series()

    ticks = trade_log_to_ticks(result.trade_log)
    reparsed = parse_ticks(ticks_to_csv_lines(ticks))
    price, trades = to_minute_series(reparsed, t_start=run.burn_in, t_end=run.horizon_s)

    assert price.t0 == direct_price.t0
    assert len(price) <= len(direct_price)
    n = len(price)
    same = np.mean(price.values == direct_price.values[:n])
    assert same > 0.95  # integer-second tick times move ~1/60 of boundaries

    for direct, ingested, mode in [
        (direct_price, price, "returns"),
        (direct_trades, trades, "activity"),
    ]:
        if mode == "returns":
            a = normalize(abs_log_returns(direct, 1), "std")
            b = normalize(abs_log_returns(ingested, 1), "std")
        else:
            from herdbook.series import SampledSeries

            a = normalize(SampledSeries(direct.values[:n], 60.0, kind="trades"), "mean")
            b = normalize(ingested, "mean")
        pdf_a = pdf_log_bins(a, scfg.pdf_bins_per_decade)
        pdf_b = pdf_log_bins(b, scfg.pdf_bins_per_decade)
        assert curve_rmse_loglog(pdf_b, pdf_a) < 0.05
        psd_a = log_rebin(psd(a, scfg.psd_segment_length), scfg.psd_bins_per_decade)
        psd_b = log_rebin(psd(b, scfg.psd_segment_length), scfg.psd_bins_per_decade)
        assert curve_rmse_loglog(psd_b, psd_a) < 0.05
