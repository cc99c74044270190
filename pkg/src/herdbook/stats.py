"""Statistics pipeline: returns, activity, log-binned PDFs, PSDs, slopes.

Everything here is a pure function of its inputs.  Curves are compared in
log-log space throughout (re-gridding, averaging, RMSE distances), which is
also how the power-law slopes are read off.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .series import SampledSeries


class DegenerateSeriesError(ValueError):
    """A statistic needed for normalization or binning is zero/empty."""


@dataclass
class StatCurve:
    """A (grid, value) curve: log-binned PDF or power spectral density.

    ``grid`` holds bin centers (PDF) or frequencies in Hz (PSD), strictly
    increasing and positive.  ``meta`` carries normalization and binning
    details (norm_mode, norm_value, zero_fraction, bins_per_decade,
    segment_length, ...).
    """

    grid: np.ndarray
    values: np.ndarray
    kind: str  # 'pdf' | 'psd'
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.grid.ndim != 1 or self.grid.size == 0 or self.grid.shape != self.values.shape:
            raise ValueError("grid and values must be matching nonempty 1-D arrays")
        if not np.all(self.grid > 0) or not np.all(np.diff(self.grid) > 0):
            raise ValueError("grid must be positive and strictly increasing")
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0):
            raise ValueError("values must be finite and nonnegative")
        if self.kind not in ("pdf", "psd"):
            raise ValueError(f"kind must be 'pdf' or 'psd', got {self.kind!r}")

    def __len__(self) -> int:
        return self.grid.size


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    stderr: float
    n_points: int


def abs_log_returns(prices: SampledSeries, lag: int = 1) -> SampledSeries:
    """|ln(p_i / p_{i-lag})|; the series shrinks by ``lag`` samples."""
    if prices.kind != "price":
        raise ValueError(f"expected a price series, got kind={prices.kind!r}")
    if lag < 1:
        raise ValueError(f"lag must be >= 1, got {lag}")
    p = np.asarray(prices.values, dtype=np.float64)
    if p.size <= lag:
        raise ValueError(f"series of length {p.size} too short for lag {lag}")
    if np.any(p <= 0):
        raise ValueError("prices must be positive")
    r = np.abs(np.log(p[lag:] / p[:-lag]))
    return SampledSeries(
        r,
        prices.sample_interval,
        t0=prices.t0 + lag * prices.sample_interval,
        kind="abs-return",
    )


def normalize(series: SampledSeries, mode: str) -> SampledSeries:
    """Divide by the population std ('std') or the mean ('mean')."""
    v = np.asarray(series.values, dtype=np.float64)
    if mode == "std":
        divisor = float(v.std())
    elif mode == "mean":
        divisor = float(v.mean())
    else:
        raise ValueError(f"mode must be 'std' or 'mean', got {mode!r}")
    if divisor == 0.0:
        raise DegenerateSeriesError(f"cannot normalize by zero {mode}")
    return SampledSeries(
        v / divisor,
        series.sample_interval,
        t0=series.t0,
        kind=series.kind,
        norm_mode=mode,
        norm_value=divisor,
    )


def pdf_log_bins(
    series: SampledSeries,
    bins_per_decade: int = 20,
    value_range: tuple[float, float] | None = None,
) -> StatCurve:
    """Log-binned probability density of the positive values.

    Zeros are excluded from the bins; their fraction lands in
    ``meta['zero_fraction']`` so mass is conserved: the density integrates to
    the retained mass 1 - zero_fraction.  Empty bins are dropped.
    """
    v = np.asarray(series.values, dtype=np.float64)
    if np.any(v < 0):
        raise ValueError("values must be nonnegative")
    pos = v[v > 0]
    if pos.size == 0:
        raise DegenerateSeriesError("no positive values to bin")
    zero_fraction = 1.0 - pos.size / v.size
    if value_range is not None:
        lo, hi = value_range
        if not (0 < lo < hi):
            raise ValueError(f"invalid value_range {value_range!r}")
        pos = pos[(pos >= lo) & (pos <= hi)]
        if pos.size == 0:
            raise DegenerateSeriesError("no values inside value_range")
    else:
        lo, hi = float(pos.min()), float(pos.max())
    if lo == hi:
        edges = np.array([lo * (1 - 1e-9), hi * (1 + 1e-9)])
    else:
        n_bins = max(1, int(np.ceil(np.log10(hi / lo) * bins_per_decade)))
        edges = np.geomspace(lo, hi, n_bins + 1)
        edges[0] = lo  # guard against roundoff excluding the extremes
        edges[-1] = hi
    counts, _ = np.histogram(pos, bins=edges)
    widths = np.diff(edges)
    density = counts / (v.size * widths)
    centers = np.sqrt(edges[:-1] * edges[1:])
    keep = counts > 0
    return StatCurve(
        centers[keep],
        density[keep],
        kind="pdf",
        meta={
            "zero_fraction": zero_fraction,
            "retained_mass": float(counts.sum() / v.size),
            "support": (float(edges[0]), float(edges[-1])),
            "n_bins": int(len(edges) - 1),
            "bins_per_decade": bins_per_decade,
            "n_samples": int(v.size),
            "norm_mode": series.norm_mode,
            "norm_value": series.norm_value,
        },
    )


def psd(
    series: SampledSeries,
    segment_length: int,
    overlap_fraction: float = 0.5,
) -> StatCurve:
    """Averaged-periodogram spectral density (rectangular window).

    The global mean is removed, the series is cut into segments overlapping
    by ``overlap_fraction``, and one-sided densities are averaged.  The grid
    is f_k = k / (segment_length * dt) in Hz for k = 1..segment_length/2, so
    sum(power) * df equals the series variance (Parseval) up to the missing
    DC bin.
    """
    v = np.asarray(series.values, dtype=np.float64)
    m = int(segment_length)
    if m < 16:
        raise ValueError(f"segment_length must be >= 16, got {segment_length}")
    if v.size < m:
        raise ValueError(f"series of length {v.size} shorter than one segment ({m})")
    if not 0 <= overlap_fraction < 1:
        raise ValueError(f"overlap_fraction must lie in [0, 1), got {overlap_fraction}")
    dt = series.sample_interval
    step = max(1, m - int(overlap_fraction * m))
    x = v - v.mean()
    n_seg = 1 + (x.size - m) // step
    starts = np.arange(n_seg) * step
    segs = np.stack([x[s : s + m] for s in starts])
    spec = np.fft.rfft(segs, axis=1)
    power = (np.abs(spec) ** 2).mean(axis=0)
    # one-sided density: double everything except DC and (for even m) Nyquist
    scale = dt / m
    density = power * scale
    density[1 : (m + 1) // 2] *= 2.0
    freqs = np.fft.rfftfreq(m, d=dt)
    return StatCurve(
        freqs[1:],
        density[1:],
        kind="psd",
        meta={
            "segment_length": m,
            "overlap_fraction": overlap_fraction,
            "n_segments": int(n_seg),
            "sample_interval": dt,
            "norm_mode": series.norm_mode,
            "norm_value": series.norm_value,
        },
    )


def log_rebin(curve: StatCurve, bins_per_decade: int = 20) -> StatCurve:
    """Average curve points into log-spaced grid bins (stabilizes PSDs)."""
    g = curve.grid
    v = curve.values
    lo, hi = g[0], g[-1]
    if lo == hi:
        return StatCurve(g.copy(), v.copy(), curve.kind, dict(curve.meta))
    n_bins = max(1, int(np.ceil(np.log10(hi / lo) * bins_per_decade)))
    edges = np.geomspace(lo, hi, n_bins + 1)
    idx = np.clip(np.digitize(g, edges) - 1, 0, n_bins - 1)
    sums = np.bincount(idx, weights=v, minlength=n_bins)
    log_pos = np.bincount(idx, weights=np.log10(g), minlength=n_bins)
    counts = np.bincount(idx, minlength=n_bins)
    keep = counts > 0
    centers = 10 ** (log_pos[keep] / counts[keep])
    meta = dict(curve.meta)
    meta["rebin_per_decade"] = bins_per_decade
    return StatCurve(centers, sums[keep] / counts[keep], curve.kind, meta)


def loglog_slope(curve: StatCurve, fit_range: tuple[float, float]) -> SlopeFit:
    """Least-squares line through (log10 grid, log10 value) on fit_range."""
    lo, hi = fit_range
    if not (0 < lo < hi):
        raise ValueError(f"invalid fit_range {fit_range!r}")
    mask = (curve.grid >= lo) & (curve.grid <= hi) & (curve.values > 0)
    n = int(mask.sum())
    if n < 5:
        raise ValueError(f"need >= 5 positive points in fit range, found {n}")
    x = np.log10(curve.grid[mask])
    y = np.log10(curve.values[mask])
    xm = x - x.mean()
    sxx = float(xm @ xm)
    slope = float(xm @ y) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    if n > 2:
        stderr = float(np.sqrt((resid @ resid) / (n - 2) / sxx))
    else:
        stderr = 0.0
    return SlopeFit(slope=slope, intercept=intercept, stderr=stderr, n_points=n)


def pearson_correlation(a: SampledSeries | np.ndarray, b: SampledSeries | np.ndarray) -> float:
    """Product-moment correlation of two equally long series."""
    va = np.asarray(a.values if isinstance(a, SampledSeries) else a, dtype=np.float64)
    vb = np.asarray(b.values if isinstance(b, SampledSeries) else b, dtype=np.float64)
    if va.shape != vb.shape or va.size < 2:
        raise ValueError("series must have equal length >= 2")
    if va.std() == 0 or vb.std() == 0:
        raise DegenerateSeriesError("correlation undefined for constant series")
    return float(np.corrcoef(va, vb)[0, 1])


def average_curves(curves: list[StatCurve], points_per_decade: int = 20) -> StatCurve:
    """Pointwise geometric mean of curves on a common log-spaced grid.

    Each curve is interpolated in log-log space onto the common grid within
    its own support only; a grid point is kept when at least half the inputs
    cover it.  ``meta['full_overlap']`` flags whether any point was covered
    by every input.
    """
    if not curves:
        raise ValueError("need at least one curve")
    kind = curves[0].kind
    if any(c.kind != kind for c in curves):
        raise ValueError("curves must share one kind")
    lo = min(float(c.grid[0]) for c in curves)
    hi = max(float(c.grid[-1]) for c in curves)
    if lo == hi:
        grid = np.array([lo])
    else:
        n_pts = max(2, int(np.ceil(np.log10(hi / lo) * points_per_decade)) + 1)
        grid = np.geomspace(lo, hi, n_pts)
    lg = np.log10(grid)
    acc = np.zeros(grid.size)
    cover = np.zeros(grid.size, dtype=np.int64)
    for c in curves:
        pos = c.values > 0
        if pos.sum() < 1:
            continue
        cg = np.log10(c.grid[pos])
        cv = np.log10(c.values[pos])
        inside = (lg >= cg[0] - 1e-12) & (lg <= cg[-1] + 1e-12)
        acc[inside] += np.interp(lg[inside], cg, cv)
        cover[inside] += 1
    need = (len(curves) + 1) // 2
    keep = cover >= need
    if not np.any(keep):
        raise ValueError("curves have no grid region with enough common support")
    values = 10 ** (acc[keep] / cover[keep])
    return StatCurve(
        grid[keep],
        values,
        kind,
        meta={
            "n_curves": len(curves),
            "full_overlap": bool(np.any(cover == len(curves))),
            "points_per_decade": points_per_decade,
        },
    )


def curve_rmse_loglog(
    model: StatCurve,
    target: StatCurve,
    grid_range: tuple[float, float] | None = None,
) -> float | None:
    """RMSE between log10 curves on the target grid, or None if no overlap.

    The model curve is interpolated (log-log) onto the target grid points
    that fall inside ``grid_range``, the target's own support and the model's
    support.
    """
    tpos = target.values > 0
    mpos = model.values > 0
    if tpos.sum() == 0 or mpos.sum() < 2:
        return None
    tg = target.grid[tpos]
    tv = np.log10(target.values[tpos])
    mg = np.log10(model.grid[mpos])
    mv = np.log10(model.values[mpos])
    mask = (tg >= model.grid[mpos][0]) & (tg <= model.grid[mpos][-1])
    if grid_range is not None:
        lo, hi = grid_range
        mask &= (tg >= lo) & (tg <= hi)
    if not np.any(mask):
        return None
    interp = np.interp(np.log10(tg[mask]), mg, mv)
    diff = interp - tv[mask]
    return float(np.sqrt(np.mean(diff**2)))
