"""Command-line entry point: simulate, stats, sweep, calibrate, ingest, sde.

Exit codes: 0 success, 2 configuration error, 3 runtime/data error.  Every
subcommand that writes files also writes a ``*_manifest.json`` with the
resolved configuration, seed, version and output checksums, enough to rerun
the command exactly.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import io as hio
from .calibrate import (
    CURVE_NAMES,
    AnnealingConfig,
    CalibrationTarget,
    StatsConfig,
    anneal,
    model_curves,
    objective,
)
from .ingest import IngestError, empirical_target, parse_ticks, to_minute_series
from .market import FrozenMarketError, run_simulation
from .params import (
    PARAM_KEYS,
    ConfigError,
    ModelParams,
    RunConfig,
    apply_overrides,
    parse_config_text,
    run_setup_from_config,
)
from .sde import (
    KirmanSdeParams,
    YSdeParams,
    bass_trajectory,
    integrate_kirman_x,
    integrate_y,
    simulate_switching_chain,
)
from .series import SampledSeries
from .stats import (
    DegenerateSeriesError,
    abs_log_returns,
    log_rebin,
    loglog_slope,
    normalize,
    pdf_log_bins,
    psd,
)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

# default bounds used by `calibrate` for freed parameters without --bound
DEFAULT_BOUNDS = {
    "n_agents": (50, 10_000),
    "lambda_e": (1e-9, 1e-4),
    "eps_cf": (0.1, 20.0),
    "eps_fc": (0.1, 20.0),
    "xi0": (0.01, 1.0),
    "lambda_m": (1e-2, 1e5),
    "lambda_0": (1e-3, 50.0),
    "alpha": (0.0, 4.0),
    "gamma_k": (0.5, 64.0),
    "gamma_theta": (0.1, 1000.0),
    "p_f": (1.0, 1e6),
    "lambda_tc": (1e-2, 1e6),
    "lambda_tf": (1e-2, 1e6),
}


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _spawn_seed(master: int, *counters: int) -> int:
    ss = np.random.SeedSequence([int(master), *map(int, counters)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _load_config(args) -> dict:
    cfg = parse_config_text(Path(args.config).read_text())
    return apply_overrides(cfg, args.set or [])


def _stats_config(args) -> StatsConfig:
    return StatsConfig(
        lag=args.lag,
        pdf_bins_per_decade=args.pdf_bins_per_decade,
        psd_segment_length=args.segment_length,
        psd_overlap=args.overlap,
        psd_bins_per_decade=args.psd_bins_per_decade,
    )


def _add_stats_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lag", type=int, default=1, help="return lag in samples")
    p.add_argument("--pdf-bins-per-decade", type=int, default=20)
    p.add_argument("--segment-length", type=int, default=4096, help="PSD segment length")
    p.add_argument("--overlap", type=float, default=0.5, help="PSD segment overlap fraction")
    p.add_argument("--psd-bins-per-decade", type=int, default=20, help="log re-binning of the PSD")


def _series_curves(price: SampledSeries, trades: SampledSeries, scfg: StatsConfig) -> dict:
    returns = normalize(abs_log_returns(price, scfg.lag), "std")
    activity = normalize(trades, "mean")
    return {
        "return_pdf": pdf_log_bins(returns, scfg.pdf_bins_per_decade),
        "return_psd": log_rebin(psd(returns, scfg.psd_segment_length, scfg.psd_overlap), scfg.psd_bins_per_decade),
        "activity_pdf": pdf_log_bins(activity, scfg.pdf_bins_per_decade),
        "activity_psd": log_rebin(psd(activity, scfg.psd_segment_length, scfg.psd_overlap), scfg.psd_bins_per_decade),
    }


def _fit_ranges_from_args(args) -> dict:
    out = {}
    for name, lo, hi in args.fit_range or []:
        if name not in CURVE_NAMES:
            raise ConfigError(f"unknown curve name in --fit-range: {name!r}")
        out[name] = (float(lo), float(hi))
    return out


# ---------------------------------------------------------------- simulate


def cmd_simulate(args) -> int:
    started = _utcnow()
    cfg = _load_config(args)
    params, run, redraw = run_setup_from_config(cfg)
    result = run_simulation(params, run, record_trades=args.trade_log, redraw_on_trade=redraw)
    prefix = Path(args.out_prefix)
    outputs = [hio.write_series_csv(f"{prefix}_series.csv", result, full=args.full)]
    if args.trade_log:
        outputs.append(hio.write_trades_csv(f"{prefix}_trades.csv", result.trade_log))
    resolved = {**params.as_dict(), **run.as_dict(), "redraw_on_trade": redraw}
    hio.write_manifest(
        f"{prefix}_manifest.json",
        subcommand="simulate",
        config=resolved,
        seed=run.seed,
        outputs=outputs,
        started_utc=started,
        finished_utc=_utcnow(),
    )
    print(f"wrote {outputs[0]} ({len(result.price)} samples, {result.counters.trades} trades)")
    return EXIT_OK


# ------------------------------------------------------------------- stats


def cmd_stats(args) -> int:
    started = _utcnow()
    data = hio.read_series_csv(args.series)
    scfg = _stats_config(args)
    curves = _series_curves(data["price"], data["trades"], scfg)
    prefix = Path(args.out_prefix)
    outputs = []
    for name, curve in curves.items():
        csv_path, json_path = hio.write_curve(f"{prefix}_{name}", curve)
        outputs += [csv_path, json_path]
    if args.target_out:
        target = CalibrationTarget(fit_ranges=_fit_ranges_from_args(args), **curves)
        outputs.append(hio.write_target(args.target_out, target))
    hio.write_manifest(
        f"{prefix}_manifest.json",
        subcommand="stats",
        config={"series": str(args.series), **scfg.__dict__},
        seed=None,
        outputs=outputs,
        started_utc=started,
        finished_utc=_utcnow(),
    )
    print(f"wrote {len(outputs)} stats files under {prefix}")
    return EXIT_OK


# ------------------------------------------------------------------- sweep


def _sweep_fit_ranges(args) -> dict:
    return {
        "return_pdf": tuple(args.return_pdf_fit),
        "return_psd": tuple(args.return_psd_fit),
        "activity_pdf": tuple(args.activity_pdf_fit),
        "activity_psd": tuple(args.activity_psd_fit),
    }


def _sweep_one(task):
    cfg, scfg_dict, fit_ranges, out_dir, param, value, seed = task
    params, run, redraw = run_setup_from_config({**cfg, param: value, "seed": seed})
    scfg = StatsConfig(**scfg_dict)
    result = run_simulation(params, run, redraw_on_trade=redraw)
    sub = Path(out_dir) / f"{param}={value:g}"
    outputs = [hio.write_series_csv(sub / "series.csv", result)]
    curves = _series_curves(result.price_series(), result.trades_series(), scfg)
    row = {"value": value, "seed": seed}
    for name, curve in curves.items():
        csv_path, json_path = hio.write_curve(sub / name, curve)
        outputs += [csv_path, json_path]
        fit = loglog_slope(curve, fit_ranges[name])
        row[f"{name}_slope"] = fit.slope
        row[f"{name}_stderr"] = fit.stderr
    return row, [str(p) for p in outputs]


def cmd_sweep(args) -> int:
    started = _utcnow()
    cfg = _load_config(args)
    if args.param not in PARAM_KEYS:
        raise ConfigError(f"unknown sweep parameter {args.param!r}")
    values = [float(v) for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("empty --values list")
    if args.param == "n_agents":
        values = [int(v) for v in values]
    run_setup_from_config(cfg)  # validate the base config before any run
    fit_ranges = _sweep_fit_ranges(args)
    scfg = _stats_config(args)
    master = int(cfg["seed"])
    tasks = [
        (cfg, scfg.__dict__, fit_ranges, str(args.out_dir), args.param, v, _spawn_seed(master, i))
        for i, v in enumerate(values)
    ]
    if args.threads > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            results = list(pool.map(_sweep_one, tasks))
    else:
        results = [_sweep_one(t) for t in tasks]
    rows = [r for r, _ in results]
    outputs = [p for _, ps in results for p in ps]
    cols = list(rows[0])
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join(repr(row[c]) if isinstance(row[c], float) else str(row[c]) for c in cols))
    summary = hio.atomic_write_text(Path(args.out_dir) / "summary.csv", "\n".join(lines) + "\n")
    outputs.append(summary)
    hio.write_manifest(
        Path(args.out_dir) / "manifest.json",
        subcommand="sweep",
        config={**cfg, "param": args.param, "values": values, **scfg.__dict__,
                "fit_ranges": {k: list(v) for k, v in fit_ranges.items()}},
        seed=master,
        outputs=outputs,
        started_utc=started,
        finished_utc=_utcnow(),
    )
    print(f"swept {args.param} over {values}; summary at {summary}")
    return EXIT_OK


# --------------------------------------------------------------- calibrate


def cmd_calibrate(args) -> int:
    started = _utcnow()
    cfg = _load_config(args)
    params, run, _ = run_setup_from_config(cfg)
    target = hio.read_target(args.target)
    free = [name.strip() for name in args.free.split(",") if name.strip()]
    for name in free:
        if name not in PARAM_KEYS:
            raise ConfigError(f"unknown free parameter {name!r}")
    bounds = {name: DEFAULT_BOUNDS[name] for name in free}
    for spec in args.bound or []:
        name, lo, hi = spec.split(":")
        if name not in free:
            raise ConfigError(f"--bound given for non-free parameter {name!r}")
        bounds[name] = (float(lo), float(hi))
    acfg = AnnealingConfig(
        initial=params,
        bounds=bounds,
        run=run,
        iterations=args.iterations,
        initial_temperature=args.t0,
        cooling=args.cooling,
        proposal_scale=args.scale,
        replicas=args.replicas,
        seed=run.seed if args.seed is None else args.seed,
        frozen=frozenset(k for k in PARAM_KEYS if k not in free),
        return_scale_divisor=args.return_scale_divisor,
        aggregate=args.aggregate,
        stats=_stats_config(args),
    )
    result = anneal(acfg, target)
    prefix = Path(args.out_prefix)
    accepted = result.trace["accepted"]
    doc = {
        "best_params": result.best_params.as_dict(),
        "best_objective": result.best_objective,
        "iterations": args.iterations,
        "acceptance_rate": float(np.mean(accepted)),
        "seed": acfg.seed,
    }
    outputs = [hio.atomic_write_text(f"{prefix}_result.json", json.dumps(doc, indent=2) + "\n")]
    tr = result.trace
    lines = ["iteration,temperature,objective,accepted,best"]
    for i in range(tr["iteration"].size):
        lines.append(
            f"{int(tr['iteration'][i])},{repr(float(tr['temperature'][i]))},"
            f"{repr(float(tr['objective'][i]))},{int(tr['accepted'][i])},{repr(float(tr['best'][i]))}"
        )
    outputs.append(hio.atomic_write_text(f"{prefix}_trace.csv", "\n".join(lines) + "\n"))
    hio.write_manifest(
        f"{prefix}_manifest.json",
        subcommand="calibrate",
        config={**cfg, "free": free, "bounds": {k: list(v) for k, v in bounds.items()},
                "iterations": args.iterations, "t0": args.t0, "cooling": args.cooling,
                "scale": args.scale, "replicas": args.replicas,
                "return_scale_divisor": args.return_scale_divisor, "aggregate": args.aggregate},
        seed=acfg.seed,
        outputs=outputs,
        started_utc=started,
        finished_utc=_utcnow(),
    )
    print(f"best objective {result.best_objective:.4f} at {doc['best_params']}")
    return EXIT_OK


# ------------------------------------------------------------------ ingest


def cmd_ingest(args) -> int:
    started = _utcnow()
    columns = tuple(c.strip() for c in args.columns.split(","))
    scfg = _stats_config(args)
    out_dir = Path(args.out_dir)
    outputs = []
    pairs = []
    for path in args.ticks:
        ticks = parse_ticks(path, columns=columns, has_header=args.has_header)
        price, trades = to_minute_series(
            ticks, args.t_start, args.t_end, interval=args.interval, drop_empty=args.drop_empty
        )
        pairs.append((price, trades))
        stem = Path(path).stem
        lines = ["t_s,price,trades"]
        for i in range(len(price)):
            t = price.t0 + i * price.sample_interval
            lines.append(f"{repr(float(t))},{repr(float(price.values[i]))},{int(trades.values[i])}")
        outputs.append(hio.atomic_write_text(out_dir / f"{stem}_series.csv", "\n".join(lines) + "\n"))
    if args.target_out:
        target = empirical_target(pairs, scfg, fit_ranges=_fit_ranges_from_args(args))
        outputs.append(hio.write_target(args.target_out, target))
    hio.write_manifest(
        out_dir / "manifest.json",
        subcommand="ingest",
        config={"ticks": [str(p) for p in args.ticks], "columns": list(columns),
                "has_header": args.has_header, "t_start": args.t_start, "t_end": args.t_end,
                "interval": args.interval, "drop_empty": args.drop_empty, **scfg.__dict__},
        seed=None,
        outputs=outputs,
        started_utc=started,
        finished_utc=_utcnow(),
    )
    print(f"ingested {len(args.ticks)} file(s) into {out_dir}")
    return EXIT_OK


# --------------------------------------------------------------------- sde


def cmd_sde(args) -> int:
    started = _utcnow()
    if args.which == "kirman":
        series = integrate_kirman_x(
            KirmanSdeParams(eps1=args.eps1, eps2=args.eps2, h=args.h),
            args.dt,
            args.horizon,
            args.seed,
            sample_interval=args.sample_interval,
            burn_in=args.burn_in,
        )
    elif args.which == "y":
        series = integrate_y(
            YSdeParams(eps_fc=args.eps_fc, eps_cf=args.eps_cf, alpha=args.alpha, h=args.h),
            args.dt,
            args.horizon,
            args.seed,
            (args.y_min, args.y_max),
            sample_interval=args.sample_interval,
            burn_in=args.burn_in,
        )
    elif args.which == "bass":
        series = bass_trajectory(args.sigma1, args.h, args.x0, args.dt, args.horizon)
    else:  # chain
        series = simulate_switching_chain(
            args.n,
            args.sigma1,
            args.sigma2,
            args.h,
            args.horizon,
            args.sample_interval or args.dt,
            args.seed,
            extensive=not args.nonextensive,
            burn_in=args.burn_in,
        )
    prefix = Path(args.out_prefix)
    lines = ["t_s,value"]
    for i, v in enumerate(series.values):
        lines.append(f"{repr(float(series.t0 + i * series.sample_interval))},{repr(float(v))}")
    outputs = [hio.atomic_write_text(f"{prefix}_series.csv", "\n".join(lines) + "\n")]
    hio.write_manifest(
        f"{prefix}_manifest.json",
        subcommand="sde",
        config={k: v for k, v in vars(args).items() if k not in ("func", "set")},
        seed=args.seed,
        outputs=outputs,
        started_utc=started,
        finished_utc=_utcnow(),
    )
    print(f"wrote {outputs[0]} ({len(series)} samples)")
    return EXIT_OK


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="herdbook", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the market and write the sampled series")
    p.add_argument("--config", required=True)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--trade-log", action="store_true", help="also write the executed trades")
    p.add_argument("--full", action="store_true", help="add n_c and mood columns")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("stats", help="series CSV -> the four PDF/PSD curves")
    p.add_argument("--series", required=True)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--target-out", help="also write a calibration target JSON")
    p.add_argument("--fit-range", action="append", nargs=3, metavar=("NAME", "LO", "HI"))
    _add_stats_options(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("sweep", help="repeat simulate+stats over one parameter")
    p.add_argument("--config", required=True)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--param", required=True)
    p.add_argument("--values", required=True, help="comma-separated list")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--threads", type=int, default=1)
    for flag in ("--return-pdf-fit", "--return-psd-fit", "--activity-pdf-fit", "--activity-psd-fit"):
        p.add_argument(flag, nargs=2, type=float, required=True, metavar=("LO", "HI"),
                       help="slope fit range for the summary table")
    _add_stats_options(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("calibrate", help="simulated annealing against a target")
    p.add_argument("--config", required=True)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--target", required=True)
    p.add_argument("--free", required=True, help="comma-separated parameter names")
    p.add_argument("--bound", action="append", metavar="NAME:LO:HI")
    p.add_argument("--iterations", type=int, default=300)
    p.add_argument("--t0", type=float, default=0.3, help="initial temperature")
    p.add_argument("--cooling", type=float, default=0.99)
    p.add_argument("--scale", type=float, default=0.3, help="proposal scale")
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--seed", type=int, default=None, help="annealer seed (default: config seed)")
    p.add_argument("--return-scale-divisor", type=float, default=1.0)
    p.add_argument("--aggregate", choices=("max", "mean"), default="max")
    p.add_argument("--out-prefix", required=True)
    _add_stats_options(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("ingest", help="tick CSVs -> minute series and target curves")
    p.add_argument("--ticks", nargs="+", required=True)
    p.add_argument("--columns", default="t,price,amount")
    p.add_argument("--has-header", action="store_true")
    p.add_argument("--t-start", type=float, default=None)
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--interval", type=float, default=60.0)
    p.add_argument("--drop-empty", action="store_true")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--target-out")
    p.add_argument("--fit-range", action="append", nargs=3, metavar=("NAME", "LO", "HI"))
    _add_stats_options(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("sde", help="reference SDE/ODE integrators")
    p.add_argument("--which", choices=("kirman", "y", "bass", "chain"), required=True)
    p.add_argument("--eps1", type=float, default=1.0)
    p.add_argument("--eps2", type=float, default=1.0)
    p.add_argument("--eps-fc", type=float, default=1.0)
    p.add_argument("--eps-cf", type=float, default=2.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--h", type=float, default=1.0)
    p.add_argument("--sigma1", type=float, default=1.0)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--nonextensive", action="store_true")
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--y-min", type=float, default=1e-4)
    p.add_argument("--y-max", type=float, default=1e4)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--sample-interval", type=float, default=None)
    p.add_argument("--burn-in", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_sde)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DegenerateSeriesError, IngestError, FrozenMarketError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
