"""Metrics and invariant audits over a finished run."""
from __future__ import annotations

from collections import Counter

import numpy as np

from .simulate import RunRecord

LAMBDA_TOL = 1e-6
SOC_TOL = 1e-4
CURRENT_TOL = 1e-6


def tracking_error(record: RunRecord) -> np.ndarray:
    return record.p_total - record.demand


def rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(x)))) if x.size else 0.0


def headroom_mask(record: RunRecord, battery_rating: float) -> np.ndarray:
    """Rows where free-stream renewables cover demand plus the battery rating."""
    return record.wind_avail + record.solar_avail >= record.demand + battery_rating


def shortfall_mask(record: RunRecord) -> np.ndarray:
    """Rows where free-stream renewables cannot cover demand."""
    return record.wind_avail + record.solar_avail < record.demand


def lambda_violations(record: RunRecord, tol: float = LAMBDA_TOL) -> np.ndarray:
    """Per-step audit of the tip-speed-ratio barrier, shape ``(rows - 1, turbines)``.

    The barrier is a statement about rotor dynamics under the free stream
    the controller acted on, so each step is judged with that stream held:
    a turbine that starts a step inside the safe set must end it inside
    (``lam_held <= barrier * (1 + tol)``), and one that starts outside,
    because the free stream dropped between samples, must not move further
    out.
    """
    b = record.lambda_barrier
    start, end = record.lam[:-1], record.lam_held[1:]
    inside = start <= b
    return np.where(inside, end > b * (1.0 + tol), end > start)


def soc_violations(record: RunRecord, z_min: float, z_max: float, tol: float = SOC_TOL) -> int:
    z = record.soc
    return int(np.count_nonzero((z < z_min - tol) | (z > z_max + tol)))


def current_violations(record: RunRecord, i_c_max: float, tol: float = CURRENT_TOL) -> int:
    return int(np.count_nonzero(np.abs(record.i_cell) > i_c_max * (1.0 + tol)))


def event_counts(record: RunRecord) -> Counter:
    counts: Counter = Counter()
    for row in record.events:
        for ev in filter(None, row.split(";")):
            counts[ev.split("=")[0]] += 1
    return counts


def summary_fields(record: RunRecord) -> dict[str, object]:
    """Everything ``summary.txt`` reports, in order."""
    m = record.meta
    n = len(record)
    out: dict[str, object] = {"rows": n, "duration_s": m.get("duration", 0.0), "dt_s": m.get("dt", 0.0)}
    if n == 0:
        out["note"] = "zero rows recorded"
        return out
    rating = m["battery_power_rating"]
    err = tracking_error(record)
    gate = headroom_mask(record, rating)
    short = shortfall_mask(record)
    mean_demand = float(np.mean(record.demand))
    out["mean_demand_W"] = mean_demand
    out["rms_tracking_error_W"] = rms(err)
    out["rms_tracking_error_headroom_W"] = rms(err[gate])
    out["headroom_fraction"] = float(np.mean(gate))
    out["shortfall_fraction"] = float(np.mean(short))
    if mean_demand > 0:
        out["rms_tracking_error_rel_mean_demand"] = out["rms_tracking_error_W"] / mean_demand
        out["rms_tracking_error_headroom_rel_mean_demand"] = out["rms_tracking_error_headroom_W"] / mean_demand
    avail = record.wind_avail + record.solar_avail
    renew_cmd = record.p_wind_sp + record.p_solar_sp
    out["renewables_saturated_fraction"] = float(np.mean((avail > 0) & (renew_cmd >= avail * (1 - 1e-9))))
    out["battery_setpoint_saturated_fraction"] = float(np.mean(np.abs(record.p_batt_sp) >= rating * (1 - 1e-9)))
    out["battery_current_limited_fraction"] = float(
        np.mean(np.abs(record.i_cell) >= m["i_c_max"] * (1 - 1e-3))
    )
    out["soc_min"] = float(record.soc.min())
    out["soc_max"] = float(record.soc.max())
    out["lambda_max"] = float(record.lam.max())
    out["lambda_barrier"] = record.lambda_barrier
    out["lambda_violations"] = int(np.count_nonzero(lambda_violations(record))) if n > 1 else 0
    out["soc_violations"] = soc_violations(record, m["z_min"], m["z_max"])
    out["current_violations"] = current_violations(record, m["i_c_max"])
    for key, count in sorted(event_counts(record).items()):
        out[f"events.{key}"] = count
    return out
