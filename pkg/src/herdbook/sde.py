"""Reference integrators used to cross-validate the agent-based market.

These are deliberately independent of the event engine: Euler-Maruyama paths
of the two-state switching diffusion (x in [0,1]), the modulating-return
diffusion (y > 0) with its feedback-scaled clock, the deterministic adoption
ODE, the market-clearing equilibrium price and the closed-form power-law
exponent predictions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .params import ConfigError
from .series import SampledSeries


class IntegrationError(RuntimeError):
    """The integrator produced a non-finite state."""


@dataclass
class KirmanSdeParams:
    """Two-state switching diffusion dx = h[e1(1-x) - e2 x]dt + sqrt(2hx(1-x))dW.

    Either the dimensionless eps_i or the raw idiosyncratic rates sigma_i
    (eps_i = sigma_i / h) may be given; giving both demands consistency.
    """

    eps1: float | None = None
    eps2: float | None = None
    h: float = 1.0
    sigma1: float | None = None
    sigma2: float | None = None
    n_extensive: int | None = None

    def __post_init__(self):
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ConfigError(f"h must be positive, got {self.h!r}")
        for i in ("1", "2"):
            eps = getattr(self, "eps" + i)
            sigma = getattr(self, "sigma" + i)
            if eps is None and sigma is None:
                raise ConfigError(f"give eps{i} or sigma{i}")
            if eps is None:
                eps = sigma / self.h
                setattr(self, "eps" + i, eps)
            elif sigma is not None and not math.isclose(eps, sigma / self.h, rel_tol=1e-9):
                raise ConfigError(f"eps{i} != sigma{i}/h ({eps} vs {sigma / self.h})")
            if not (eps > 0 and math.isfinite(eps)):
                raise ConfigError(f"eps{i} must be positive, got {eps!r}")


@dataclass
class YSdeParams:
    """Modulating-return diffusion with feedback exponent alpha:

    dy = h [eps_fc + (2 - eps_cf) y] (1+y) y^alpha dt
         + sqrt(2 h y^(1+alpha)) (1+y) dW,   y in (0, inf).
    """

    eps_fc: float
    eps_cf: float
    alpha: float
    h: float = 1.0

    def __post_init__(self):
        for name in ("eps_fc", "eps_cf", "h"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ConfigError(f"{name} must be positive, got {v!r}")
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise ConfigError(f"alpha must be nonnegative, got {self.alpha!r}")


@njit(cache=True)
def _kirman_core(eps1, eps2, h, dt, m_steps, n_samples, rng, out, x0):
    x = x0
    sq = math.sqrt(2.0 * h * dt)
    for i in range(n_samples):
        for _ in range(m_steps):
            x += h * (eps1 * (1.0 - x) - eps2 * x) * dt
            x += sq * math.sqrt(max(x * (1.0 - x), 0.0)) * rng.standard_normal()
            while x < 0.0 or x > 1.0:
                if x < 0.0:
                    x = -x
                else:
                    x = 2.0 - x
        out[i] = x


def integrate_kirman_x(
    params: KirmanSdeParams,
    dt: float,
    horizon: float,
    seed: int,
    *,
    sample_interval: float | None = None,
    burn_in: float = 0.0,
    x0: float | None = None,
) -> SampledSeries:
    """Euler-Maruyama path of x, reflected into [0, 1].

    Stationary law is Beta(eps1, eps2).  Requires the boundary drift per
    step, h * max(eps) * dt, to stay below 0.1.
    """
    if dt <= 0 or horizon <= 0 or not 0 <= burn_in < horizon:
        raise ConfigError("need dt > 0 and 0 <= burn_in < horizon")
    if params.h * max(params.eps1, params.eps2) * dt >= 0.1:
        raise ConfigError(f"dt={dt} too coarse: boundary drift per step >= 0.1")
    si = dt if sample_interval is None else sample_interval
    m_steps = max(1, round(si / dt))
    si = m_steps * dt
    n_samples = int((horizon - burn_in) / si)
    if n_samples < 1:
        raise ConfigError("horizon too short for one sample")
    rng = np.random.default_rng(seed)
    start = params.eps1 / (params.eps1 + params.eps2) if x0 is None else x0
    if not 0 <= start <= 1:
        raise ConfigError(f"x0 must lie in [0, 1], got {x0!r}")
    out = np.empty(n_samples, dtype=np.float64)
    n_burn = int(burn_in / si)
    if n_burn:
        burn = np.empty(n_burn, dtype=np.float64)
        _kirman_core(params.eps1, params.eps2, params.h, dt, m_steps, n_burn, rng, burn, start)
        start = burn[-1]
    _kirman_core(params.eps1, params.eps2, params.h, dt, m_steps, n_samples, rng, out, start)
    return SampledSeries(out, si, t0=burn_in + si, kind="x")


@njit(cache=True)
def _y_core(eps_fc, eps_cf, alpha, h, dt_max, kappa, y_min, y_max, horizon, interval, n_samples, rng, out, y0):
    y = y0
    t = 0.0
    nxt = 0
    k2 = kappa * kappa
    while nxt < n_samples:
        step = k2 * y ** (1.0 - alpha) / (2.0 * h * (1.0 + y) ** 2)
        if step > dt_max:
            step = dt_max
        drift = h * (eps_fc + (2.0 - eps_cf) * y) * (1.0 + y) * y**alpha
        dw = math.sqrt(2.0 * h * y ** (1.0 + alpha) * step) * (1.0 + y)
        y_new = y + drift * step + dw * rng.standard_normal()
        if not math.isfinite(y_new):
            return 1, step
        bounce = 0
        while y_new < y_min or y_new > y_max:
            if y_new < y_min:
                y_new = 2.0 * y_min - y_new
            else:
                y_new = 2.0 * y_max - y_new
            bounce += 1
            if bounce > 100:
                return 1, step
        t_new = t + step
        while nxt < n_samples and (nxt + 1) * interval <= t_new:
            out[nxt] = y
            nxt += 1
        t = t_new
        y = y_new
    return 0, 0.0


def integrate_y(
    params: YSdeParams,
    dt: float,
    horizon: float,
    seed: int,
    y_clip: tuple[float, float] = (1e-4, 1e4),
    *,
    sample_interval: float | None = None,
    kappa: float = 0.1,
    burn_in: float = 0.0,
    y0: float = 1.0,
) -> SampledSeries:
    """Path of the full modulating-return SDE, reflected at the clip bounds.

    The step adapts to the local noise scale, dt_i = min(dt, kappa^2 *
    y^(1-alpha) / (2 h (1+y)^2)), which keeps the relative move per step near
    kappa across the whole y range; a fixed step stable at y_max would make
    long horizons unreachable.  ``dt`` caps the step (and bounds the sampling
    error of the zero-order-hold output).
    """
    y_min, y_max = y_clip
    if not (0 < y_min < y_max):
        raise ConfigError(f"need 0 < y_min < y_max, got {y_clip!r}")
    if dt <= 0 or horizon <= 0 or not 0 <= burn_in < horizon:
        raise ConfigError("need dt > 0 and 0 <= burn_in < horizon")
    if not 0 < kappa <= 0.5:
        raise ConfigError(f"kappa must lie in (0, 0.5], got {kappa!r}")
    if not y_min <= y0 <= y_max:
        raise ConfigError(f"y0 must lie inside y_clip, got {y0!r}")
    si = dt if sample_interval is None else sample_interval
    n_total = int(horizon / si)
    n_burn = int(burn_in / si)
    n_keep = n_total - n_burn
    if n_keep < 1:
        raise ConfigError("horizon too short for one sample")
    rng = np.random.default_rng(seed)
    out = np.empty(n_total, dtype=np.float64)
    bad, step = _y_core(
        params.eps_fc, params.eps_cf, params.alpha, params.h,
        dt, kappa, y_min, y_max, horizon, si, n_total, rng, out, y0,
    )
    if bad:
        raise IntegrationError(f"non-finite state at step size {step:g}")
    return SampledSeries(out[n_burn:], si, t0=(n_burn + 1) * si, kind="modulating-return")


def bass_trajectory(sigma1: float, h: float, x0: float, dt: float, horizon: float) -> SampledSeries:
    """Deterministic adoption curve dx = (1-x)(sigma1 + h x) dt, via RK4."""
    if sigma1 < 0 or h < 0:
        raise ConfigError("sigma1 and h must be nonnegative")
    if not 0 <= x0 <= 1:
        raise ConfigError(f"x0 must lie in [0, 1], got {x0!r}")
    if dt <= 0 or horizon <= 0:
        raise ConfigError("need dt > 0 and horizon > 0")
    n = int(round(horizon / dt))
    out = np.empty(n + 1, dtype=np.float64)
    out[0] = x = x0

    def f(v):
        return (1.0 - v) * (sigma1 + h * v)

    for i in range(n):
        k1 = f(x)
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        x = min(1.0, x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))
        out[i + 1] = x
    return SampledSeries(out, dt, t0=0.0, kind="x")


def equilibrium_price_clearing(r0: float, n_c: int, n: int, xi: float, p_f: float) -> float:
    """Walras price P_f * exp(r0 * n_c/(n-n_c) * xi) of the clearing model."""
    if not 0 < n_c < n:
        raise ValueError(f"equilibrium price undefined at n_c={n_c} (n={n})")
    if p_f <= 0:
        raise ValueError(f"p_f must be positive, got {p_f!r}")
    return p_f * math.exp(r0 * n_c / (n - n_c) * xi)


def predicted_exponents(eps_cf: float, alpha: float) -> tuple[float, float]:
    """Closed-form tail exponents (pdf_slope, psd_slope) of the y process."""
    if alpha <= -1:
        raise ValueError(f"alpha must exceed -1, got {alpha!r}")
    return (-eps_cf - alpha - 1.0, -1.0 - (eps_cf + alpha - 2.0) / (1.0 + alpha))


@njit(cache=True)
def _chain_core(n, s1, s2, h, extensive, horizon, interval, burn_in, n_samples, rng, out, x_init):
    x = x_init
    t = 0.0
    nxt = 0
    while True:
        if extensive:
            up = (n - x) * (s1 + h * x / n)
            dn = x * (s2 + h * (n - x) / n)
        else:
            up = (n - x) * (s1 + h * x)
            dn = x * (s2 + h * (n - x))
        total = up + dn
        if total <= 0.0:
            while nxt < n_samples:
                out[nxt] = x
                nxt += 1
            break
        dt = rng.standard_exponential() / total
        u = rng.random() * total
        t_new = t + dt
        if t_new > horizon:
            while nxt < n_samples:
                out[nxt] = x
                nxt += 1
            break
        while nxt < n_samples and burn_in + (nxt + 1) * interval < t_new:
            out[nxt] = x
            nxt += 1
        t = t_new
        if u < up:
            x += 1
        else:
            x -= 1


def simulate_switching_chain(
    n: int,
    sigma1: float,
    sigma2: float,
    h: float,
    horizon: float,
    sample_interval: float,
    seed: int,
    *,
    extensive: bool = True,
    burn_in: float = 0.0,
    x0: float | None = None,
) -> SampledSeries:
    """Exact two-channel jump chain of the switching model, as fraction x.

    ``extensive=True`` uses the per-capita attraction (sigma + h X/N) whose
    fluctuations die out with N; ``extensive=False`` uses the global form
    (sigma + h X) that keeps fluctuating for any N.
    """
    if n < 1 or sigma1 < 0 or sigma2 < 0 or h < 0:
        raise ConfigError("need n >= 1 and nonnegative rates")
    if horizon <= 0 or sample_interval <= 0 or not 0 <= burn_in < horizon:
        raise ConfigError("invalid horizon/sample_interval/burn_in")
    n_samples = int((horizon - burn_in) / sample_interval)
    if n_samples < 1:
        raise ConfigError("horizon too short for one sample")
    start = n // 2 if x0 is None else int(round(x0 * n))
    rng = np.random.default_rng(seed)
    out = np.empty(n_samples, dtype=np.float64)
    _chain_core(n, sigma1, sigma2, h, extensive, horizon, sample_interval, burn_in, n_samples, rng, out, start)
    return SampledSeries(out / n, sample_interval, t0=burn_in + sample_interval, kind="x")
