"""Tick file ingestion: parse, aggregate to minute bars, build target curves.

Input convention is the bitcoincharts-style CSV ``unixtime,price,amount``
(no header); column order and a header row are configurable.  Activity
counts trades per window — the traded amount is parsed and kept but never
enters the statistics.
"""
from __future__ import annotations

import io as _io
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .calibrate import CalibrationTarget, StatsConfig
from .series import SampledSeries
from .stats import abs_log_returns, average_curves, log_rebin, normalize, pdf_log_bins, psd

log = logging.getLogger(__name__)

COLUMNS = ("t", "price", "amount")


class IngestError(ValueError):
    """Unusable tick input (too many malformed lines, empty file, ...)."""


@dataclass
class TickData:
    """Validated, time-sorted tick records."""

    t: np.ndarray  # int64 unix seconds
    price: np.ndarray
    amount: np.ndarray
    n_malformed: int = 0

    def __len__(self) -> int:
        return self.t.size


def parse_ticks(
    source,
    *,
    columns: tuple[str, ...] = COLUMNS,
    has_header: bool = False,
    max_malformed_fraction: float = 0.01,
) -> TickData:
    """Parse a tick CSV from a path, file object or iterable of lines.

    Malformed lines (wrong field count, unparsable numbers, price <= 0,
    amount < 0) are counted and skipped; more than ``max_malformed_fraction``
    of them aborts with diagnostics.  Out-of-order input is sorted with a
    warning.
    """
    if sorted(columns) != sorted(COLUMNS):
        raise IngestError(f"columns must be a permutation of {COLUMNS}, got {columns!r}")
    close = False
    if isinstance(source, (str, Path)):
        fh = open(source)
        close = True
    elif isinstance(source, _io.IOBase):
        fh = source
    else:
        fh = iter(source)
    it = iter(fh)
    try:
        if has_header:
            next(it, None)
        i_t = columns.index("t")
        i_p = columns.index("price")
        i_a = columns.index("amount")
        ts, ps, am = [], [], []
        n_malformed = 0
        n_lines = 0
        bad_samples: list[str] = []
        for raw in it:
            line = raw.strip()
            if not line:
                continue
            n_lines += 1
            parts = line.split(",")
            if len(parts) != 3:
                n_malformed += 1
                if len(bad_samples) < 3:
                    bad_samples.append(line)
                continue
            try:
                t = float(parts[i_t])
                p = float(parts[i_p])
                a = float(parts[i_a])
            except ValueError:
                n_malformed += 1
                if len(bad_samples) < 3:
                    bad_samples.append(line)
                continue
            if not (np.isfinite(t) and np.isfinite(p) and np.isfinite(a)) or p <= 0 or a < 0 or t != int(t):
                n_malformed += 1
                if len(bad_samples) < 3:
                    bad_samples.append(line)
                continue
            ts.append(int(t))
            ps.append(p)
            am.append(a)
    finally:
        if close:
            fh.close()
    if n_lines == 0 or not ts:
        raise IngestError("no tick records found in input")
    if n_malformed > max_malformed_fraction * n_lines:
        raise IngestError(
            f"{n_malformed}/{n_lines} malformed lines exceeds the "
            f"{max_malformed_fraction:.1%} threshold; examples: {bad_samples}"
        )
    if n_malformed:
        log.warning("skipped %d malformed tick line(s)", n_malformed)
    t = np.asarray(ts, dtype=np.int64)
    p = np.asarray(ps, dtype=np.float64)
    a = np.asarray(am, dtype=np.float64)
    if np.any(np.diff(t) < 0):
        log.warning("tick input out of order; sorting by timestamp")
        order = np.argsort(t, kind="stable")
        t, p, a = t[order], p[order], a[order]
    return TickData(t=t, price=p, amount=a, n_malformed=n_malformed)


def to_minute_series(
    ticks: TickData,
    t_start: float | None = None,
    t_end: float | None = None,
    *,
    interval: float = 60.0,
    drop_empty: bool = False,
) -> tuple[SampledSeries, SampledSeries]:
    """Aggregate ticks to a uniform grid: last price per window and counts.

    Windows are (base + k*interval, base + (k+1)*interval]; the price at a
    window end is the last trade at or before it (forward-filled across
    gaps) and leading windows before the first tick are trimmed.
    ``drop_empty`` instead removes zero-trade windows, compressing the time
    axis (PDF comparisons only; the grid is no longer physical time).
    """
    t = ticks.t.astype(np.float64)
    p = ticks.price
    if t_start is not None or t_end is not None:
        lo = -np.inf if t_start is None else t_start
        hi = np.inf if t_end is None else t_end
        keep = (t >= lo) & (t < hi)
        t, p = t[keep], p[keep]
    if t.size == 0:
        raise IngestError("no ticks in the requested time range")
    base = np.floor((t[0] if t_start is None else t_start) / interval) * interval
    n_win = int(np.ceil((t[-1] - base) / interval + 1e-9))
    n_win = max(n_win, 1)
    edges = base + interval * np.arange(n_win + 1)
    idx = np.searchsorted(t, edges, side="right")
    counts = np.diff(idx)
    # trim windows ending before the first tick
    first = int(np.searchsorted(idx[1:], 1))
    counts = counts[first:]
    ends = edges[1 + first :]
    last_idx = idx[1 + first :] - 1
    prices = p[last_idx]
    if drop_empty:
        keep = counts > 0
        counts = counts[keep]
        prices = prices[keep]
        ends = ends[: counts.size]
    t0 = float(ends[0])
    price_series = SampledSeries(prices, interval, t0=t0, kind="price")
    trades_series = SampledSeries(counts.astype(np.int64), interval, t0=t0, kind="trades")
    return price_series, trades_series


def empirical_target(
    series_pairs: list[tuple[SampledSeries, SampledSeries]],
    stats_cfg: StatsConfig | None = None,
    fit_ranges: dict | None = None,
) -> CalibrationTarget:
    """Average per-asset return/activity curves into one calibration target.

    Per asset: absolute log-returns normalized to unit std and activity
    normalized to unit mean, each reduced to a log-binned PDF and a
    log-binned PSD, then averaged across assets curve by curve.
    """
    if not series_pairs:
        raise IngestError("need at least one (price, trades) series pair")
    stats_cfg = stats_cfg or StatsConfig()
    per_curve: dict[str, list] = {"return_pdf": [], "return_psd": [], "activity_pdf": [], "activity_psd": []}
    for price, trades in series_pairs:
        returns = normalize(abs_log_returns(price, stats_cfg.lag), "std")
        activity = normalize(trades, "mean")
        per_curve["return_pdf"].append(pdf_log_bins(returns, stats_cfg.pdf_bins_per_decade))
        per_curve["return_psd"].append(
            log_rebin(psd(returns, stats_cfg.psd_segment_length, stats_cfg.psd_overlap), stats_cfg.psd_bins_per_decade)
        )
        per_curve["activity_pdf"].append(pdf_log_bins(activity, stats_cfg.pdf_bins_per_decade))
        per_curve["activity_psd"].append(
            log_rebin(psd(activity, stats_cfg.psd_segment_length, stats_cfg.psd_overlap), stats_cfg.psd_bins_per_decade)
        )
    averaged = {name: average_curves(curves) for name, curves in per_curve.items()}
    return CalibrationTarget(fit_ranges=fit_ranges or {}, **averaged)


def trade_log_to_ticks(log, *, amount: float = 1.0) -> TickData:
    """Export a simulator trade log as tick records (unit volume).

    Trade times are truncated to integer seconds, matching the tick file
    convention.
    """
    return TickData(
        t=log.t.astype(np.int64),
        price=log.price.astype(np.float64),
        amount=np.full(log.t.size, amount),
    )


def ticks_to_csv_lines(ticks: TickData):
    for i in range(len(ticks)):
        yield f"{int(ticks.t[i])},{repr(float(ticks.price[i]))},{repr(float(ticks.amount[i]))}"
