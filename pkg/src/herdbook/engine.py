"""Jitted Gillespie core advancing the market through its five event channels.

All mutable scalars live in two small state arrays so a run can be suspended
(e.g. when the trade-log buffer fills up) and resumed without losing RNG,
clock or book state.  The RNG draw order per event is frozen and mirrored
exactly by the pure-Python stepper in :mod:`herdbook.market`:

    1. waiting time:   rng.standard_exponential() / total_rate
    2. channel pick:   rng.random() * total_rate vs cumulative rates in the
                       fixed order (cf, fc, mood, fundamentalist, chartist)
    3. per event:      cf      -> rng.random() picks the leaving chartist slot
                       fc      -> rng.standard_gamma(k) * theta new spread
                       chartist-> rng.random() picks bid/ask, then (on a fill,
                                  redraw mode only) one gamma draw
                       fund    -> no draw; one gamma draw only on a fill in
                                  redraw mode
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .book import heap_push, heap_remove, heap_replace_min

# state_f slots
F_T, F_VALUATION, F_PRICE, F_MOOD = 0, 1, 2, 3
# state_i slots
I_SIZE, I_FREE, I_NEXT_SAMPLE, I_WINDOW_TRADES, I_LOG_LEN = 0, 1, 2, 3, 4
# counter slots
C_CF, C_FC, C_MOOD, C_FUND, C_CHART, C_TRADES, C_FUND_NULL, C_GUARD_NULL = range(8)

STATUS_DONE, STATUS_LOG_FULL, STATUS_FROZEN = 0, 1, 2


@njit(cache=True)
def seed_book(rng, gamma_k, gamma_theta, n_init, spread, tag, slot_of):
    """Draw the initial chartists' spreads (tags 0..n_init-1, in order)."""
    size = 0
    for g in range(n_init):
        s = rng.standard_gamma(gamma_k) * gamma_theta
        size = heap_push(spread, tag, slot_of, size, s, g)
    return size


@njit(cache=True, error_model="numpy")
def advance(
    n,
    lam_e,
    eps_cf,
    eps_fc,
    lam_m,
    lam_0,
    alpha,
    gamma_k,
    gamma_theta,
    p_f,
    lam_tc,
    lam_tf,
    redraw,
    horizon,
    interval,
    burn_in,
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
    record_log,
    log_t,
    log_price,
    log_side,
    log_init,
):
    t = state_f[F_T]
    valuation = state_f[F_VALUATION]
    price = state_f[F_PRICE]
    mood = state_f[F_MOOD]
    size = state_i[I_SIZE]
    free = state_i[I_FREE]
    nxt = state_i[I_NEXT_SAMPLE]
    wtrades = state_i[I_WINDOW_TRADES]
    loglen = state_i[I_LOG_LEN]
    cap = log_t.shape[0]
    status = STATUS_DONE

    while True:
        if record_log and loglen >= cap:
            status = STATUS_LOG_FULL
            break

        nc = size
        nf = n - nc
        if alpha == 0.0:
            pw = 1.0
        elif nc == 0:
            pw = 0.0
        elif nc == n:
            pw = (2.0 * nc) ** alpha
        else:
            pw = (nc / nf) ** alpha
        base = lam_e * (lam_0 + pw)
        r_cf = base * nc * (eps_cf + nf)
        r_fc = base * nf * (eps_fc + nc)
        r_m = base * lam_m
        r_tf = base * lam_tf * nf * abs(np.log(price / p_f))
        r_tc = base * lam_tc * nc
        total = r_cf + r_fc + r_m + r_tf + r_tc
        if total <= 0.0:
            status = STATUS_FROZEN
            break

        dt = rng.standard_exponential() / total
        u = rng.random() * total
        t_new = t + dt
        if t_new > horizon:
            t = horizon
            while nxt < n_samples:
                out_price[nxt] = price
                out_trades[nxt] = wtrades
                out_nc[nxt] = nc
                out_mood[nxt] = mood
                wtrades = 0
                nxt += 1
            break
        while nxt < n_samples and burn_in + (nxt + 1) * interval < t_new:
            out_price[nxt] = price
            out_trades[nxt] = wtrades
            out_nc[nxt] = nc
            out_mood[nxt] = mood
            wtrades = 0
            nxt += 1
        t = t_new

        exec_price = 0.0
        side = 0
        initiator = 0
        if u < r_cf:
            counters[C_CF] += 1
            slot = int(rng.random() * size)
            g = tag[slot]
            size = heap_remove(spread, tag, slot_of, size, slot)
            free_tags[free] = g
            free += 1
        elif u < r_cf + r_fc:
            counters[C_FC] += 1
            free -= 1
            g = free_tags[free]
            s = rng.standard_gamma(gamma_k) * gamma_theta
            size = heap_push(spread, tag, slot_of, size, s, g)
        elif u < r_cf + r_fc + r_m:
            counters[C_MOOD] += 1
            mood = -mood
        elif u < r_cf + r_fc + r_m + r_tf:
            counters[C_FUND] += 1
            initiator = 1
            if size == 0:
                counters[C_FUND_NULL] += 1
            else:
                s_min = spread[0]
                if valuation + s_min < p_f:
                    exec_price = valuation + s_min
                    side = 1
                elif valuation - s_min > p_f:
                    exec_price = valuation - s_min
                    side = -1
                else:
                    counters[C_FUND_NULL] += 1
        else:
            counters[C_CHART] += 1
            u2 = rng.random()
            s_min = spread[0]
            if u2 < 0.5 * (1.0 + mood):
                exec_price = valuation + s_min
                side = 1
            else:
                exec_price = valuation - s_min
                side = -1
                if exec_price <= 0.0:
                    counters[C_GUARD_NULL] += 1
                    side = 0

        if side != 0:
            price = exec_price
            valuation = exec_price
            if redraw:
                s2 = rng.standard_gamma(gamma_k) * gamma_theta
                heap_replace_min(spread, tag, slot_of, size, s2)
            counters[C_TRADES] += 1
            if t > burn_in:
                wtrades += 1
            if record_log:
                log_t[loglen] = t
                log_price[loglen] = exec_price
                log_side[loglen] = side
                log_init[loglen] = initiator
                loglen += 1

    state_f[F_T] = t
    state_f[F_VALUATION] = valuation
    state_f[F_PRICE] = price
    state_f[F_MOOD] = mood
    state_i[I_SIZE] = size
    state_i[I_FREE] = free
    state_i[I_NEXT_SAMPLE] = nxt
    state_i[I_WINDOW_TRADES] = wtrades
    state_i[I_LOG_LEN] = loglen
    return status
