"""Run directories: time series, summary, plot data and the resolved scenario.

Floats are written with ``repr`` so that reading ``timeseries.csv`` back
gives the recorded values bit for bit.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import yaml

from .checks import summary_fields
from .errors import ParseError
from .scenario import Scenario, resolved_yaml
from .simulate import SCALAR_COLUMNS, RunRecord

META_KEYS = ("dt", "duration", "battery_power_rating", "i_c_max", "z_min", "z_max")


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def write_timeseries(record: RunRecord, path: Path) -> None:
    data = record.numeric_matrix().tolist()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(record.header())
        for row, ev in zip(data, record.events):
            w.writerow([*map(repr, row), ev])


def read_timeseries(path: str | Path, meta: dict | None = None) -> RunRecord:
    """Parse a ``timeseries.csv`` back into a RunRecord."""
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ParseError(f"cannot open ({exc.strerror})", str(path)) from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[: len(SCALAR_COLUMNS)] != list(SCALAR_COLUMNS):
            raise ParseError("missing or unexpected header", f"{path}:1")
        n_t = (len(header) - len(SCALAR_COLUMNS) - 1) // 2
        rows, events = [], []
        for row in reader:
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", f"{path}:{reader.line_num}")
            try:
                rows.append([float(x) for x in row[:-1]])
            except ValueError as exc:
                raise ParseError(str(exc), f"{path}:{reader.line_num}") from exc
            events.append(row[-1])
    ns = len(SCALAR_COLUMNS)
    mat = np.array(rows, dtype=float).reshape(len(rows), ns + 2 * n_t)
    meta = dict(meta or {})
    return RunRecord(
        {c: mat[:, i].copy() for i, c in enumerate(SCALAR_COLUMNS)},
        mat[:, ns : ns + n_t].copy(),
        mat[:, ns + n_t :].copy(),
        events,
        float(meta.pop("lambda_barrier", 0.0)),
        meta,
    )


def _write_long(path: Path, time: np.ndarray, series: dict[str, np.ndarray]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "series", "value"])
        t = time.tolist()
        for name, values in series.items():
            for ti, v in zip(t, values.tolist()):
                w.writerow([repr(ti), name, repr(v)])


def write_plot_data(record: RunRecord, plots: Path) -> None:
    plots.mkdir(parents=True, exist_ok=True)
    t = record.time
    _write_long(
        plots / "powers_vs_time.csv",
        t,
        {"wind": record.p_wind, "solar": record.p_solar, "battery": record.p_battery, "total": record.p_total},
    )
    _write_long(plots / "demand_vs_total.csv", t, {"demand": record.demand, "total": record.p_total})
    _write_long(plots / "soc_vs_time.csv", t, {"soc": record.soc})


def format_summary(fields: dict[str, object], defaults_applied=()) -> str:
    lines = [f"{k}: {_fmt(v)}" for k, v in fields.items()]
    if defaults_applied:
        lines.append("defaults_applied: " + "; ".join(defaults_applied))
    return "\n".join(lines) + "\n"


def parse_summary(text: str) -> dict[str, str]:
    out = {}
    for line in text.splitlines():
        key, sep, value = line.partition(": ")
        if sep:
            out[key] = value
    return out


def write_outputs(record: RunRecord, out_dir: str | Path, scenario: Scenario | None = None) -> list[Path]:
    """Write the run directory; return the files written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = [out / "timeseries.csv", out / "summary.txt", out / "run_meta.yaml"]
    write_timeseries(record, files[0])
    defaults = scenario.defaults_applied if scenario is not None else ()
    files[1].write_text(format_summary(summary_fields(record), defaults))
    meta = {k: float(record.meta[k]) for k in META_KEYS if k in record.meta}
    meta["lambda_barrier"] = float(record.lambda_barrier)
    files[2].write_text(yaml.safe_dump(meta, sort_keys=False))
    if scenario is not None:
        files.append(out / "scenario_resolved.yaml")
        files[-1].write_text(
            "# defaults applied: " + ("; ".join(defaults) if defaults else "none") + "\n" + resolved_yaml(scenario)
        )
    write_plot_data(record, out / "plots")
    files += [out / "plots" / n for n in ("powers_vs_time.csv", "demand_vs_total.csv", "soc_vs_time.csv")]
    return files


def load_run(run_dir: str | Path) -> RunRecord:
    run = Path(run_dir)
    meta_path = run / "run_meta.yaml"
    meta = yaml.safe_load(meta_path.read_text()) if meta_path.exists() else {}
    return read_timeseries(run / "timeseries.csv", meta)


def summarize(run_dir: str | Path) -> str:
    """Recompute the summary of a run directory from its time series."""
    return format_summary(summary_fields(load_run(run_dir)))
