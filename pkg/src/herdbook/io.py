"""File formats: series/trade CSVs, curve CSV + JSON sidecars, run manifests.

Floats are written with shortest round-trip repr so re-running with the same
seed yields byte-identical files.
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .series import SampledSeries
from .stats import StatCurve

SERIES_HEADER = "t_s,price,trades"
SERIES_HEADER_FULL = "t_s,price,trades,n_c,mood"
TRADES_HEADER = "t_s,price,side,initiator"
CURVE_HEADER = "grid,value"


def _fmt(x) -> str:
    return repr(float(x))


def atomic_write_text(path: str | Path, text: str) -> Path:
    """Write via a temp file + rename so readers never see partial output."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_series_csv(path: str | Path, result, full: bool = False) -> Path:
    """Series of a SimulationResult: t_s,price,trades(,n_c,mood)."""
    lines = [SERIES_HEADER_FULL if full else SERIES_HEADER]
    t = result.t
    for i in range(result.price.size):
        row = f"{_fmt(t[i])},{_fmt(result.price[i])},{int(result.trades[i])}"
        if full:
            row += f",{int(result.n_chartists[i])},{_fmt(result.mood[i])}"
        lines.append(row)
    return atomic_write_text(path, "\n".join(lines) + "\n")


def read_series_csv(path: str | Path) -> dict:
    """Read a series CSV back into arrays; infers the sample interval."""
    with open(path) as fh:
        header = fh.readline().strip()
        names = header.split(",")
        if names[:3] != ["t_s", "price", "trades"]:
            raise ValueError(f"unexpected series header {header!r} in {path}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        raise ValueError(f"empty series file {path}")
    t = data[:, 0]
    if t.size > 1:
        steps = np.diff(t)
        interval = float(steps[0])
        if not np.allclose(steps, interval, rtol=1e-9, atol=1e-9):
            raise ValueError(f"non-uniform time grid in {path}")
    else:
        interval = float(t[0]) if t[0] > 0 else 1.0
    out = {
        "t": t,
        "interval": interval,
        "price": SampledSeries(data[:, 1], interval, t0=float(t[0]), kind="price"),
        "trades": SampledSeries(data[:, 2], interval, t0=float(t[0]), kind="trades"),
    }
    if len(names) >= 5:
        out["n_c"] = data[:, 3].astype(np.int64)
        out["mood"] = data[:, 4]
    return out


def write_trades_csv(path: str | Path, log) -> Path:
    lines = [TRADES_HEADER]
    for i in range(len(log)):
        side = "bid" if log.side[i] > 0 else "ask"
        who = "fundamentalist" if log.initiator[i] else "chartist"
        lines.append(f"{_fmt(log.t[i])},{_fmt(log.price[i])},{side},{who}")
    return atomic_write_text(path, "\n".join(lines) + "\n")


def write_curve(base: str | Path, curve: StatCurve) -> tuple[Path, Path]:
    """Write <base>.csv (grid,value) and <base>.json (kind + metadata)."""
    base = Path(base)
    lines = [CURVE_HEADER]
    for g, v in zip(curve.grid, curve.values):
        lines.append(f"{_fmt(g)},{_fmt(v)}")
    csv_path = atomic_write_text(base.with_suffix(".csv"), "\n".join(lines) + "\n")
    meta = {"kind": curve.kind, **_jsonable(curve.meta)}
    json_path = atomic_write_text(base.with_suffix(".json"), json.dumps(meta, indent=2) + "\n")
    return csv_path, json_path


def read_curve(base: str | Path) -> StatCurve:
    base = Path(base)
    csv_path = base if base.suffix == ".csv" else base.with_suffix(".csv")
    with open(csv_path) as fh:
        header = fh.readline().strip()
        if header != CURVE_HEADER:
            raise ValueError(f"unexpected curve header {header!r} in {csv_path}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    json_path = csv_path.with_suffix(".json")
    meta = {}
    kind = "pdf"
    if json_path.exists():
        meta = json.loads(json_path.read_text())
        kind = meta.pop("kind", "pdf")
    return StatCurve(data[:, 0], data[:, 1], kind=kind, meta=meta)


def write_target(path: str | Path, target) -> Path:
    """Calibration target: four curve files next to a JSON manifest."""
    path = Path(path)
    stem = path.stem
    entry = {}
    for name in ("return_pdf", "return_psd", "activity_pdf", "activity_psd"):
        base = path.parent / f"{stem}_{name}"
        write_curve(base, getattr(target, name))
        entry[name] = base.name + ".csv"
    doc = {"curves": entry, "fit_ranges": {k: list(v) for k, v in target.fit_ranges.items()}}
    return atomic_write_text(path, json.dumps(doc, indent=2) + "\n")


def read_target(path: str | Path):
    from .calibrate import CalibrationTarget

    path = Path(path)
    doc = json.loads(path.read_text())
    curves = {
        name: read_curve(path.parent / rel) for name, rel in doc["curves"].items()
    }
    fit_ranges = {k: tuple(v) for k, v in doc.get("fit_ranges", {}).items()}
    return CalibrationTarget(fit_ranges=fit_ranges, **curves)


def sha256_of(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(
    path: str | Path,
    *,
    subcommand: str,
    config: dict,
    seed,
    outputs: list[str | Path],
    started_utc: str,
    finished_utc: str,
) -> Path:
    from . import __version__

    doc = {
        "tool": "herdbook",
        "version": __version__,
        "subcommand": subcommand,
        "config": _jsonable(config),
        "seed": seed,
        "started_utc": started_utc,
        "finished_utc": finished_utc,
        "outputs": [
            {
                "path": str(Path(p).name),
                "bytes": os.path.getsize(p),
                "sha256": sha256_of(p),
            }
            for p in outputs
        ],
    }
    return atomic_write_text(path, json.dumps(doc, indent=2) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj
