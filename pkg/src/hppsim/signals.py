"""Synthetic exogenous signals and two-column signal CSV files.

The field wind, irradiance and regulation-demand records a real study
would use are not redistributable, so desk scenarios run on seeded
stand-ins with similar texture.
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.signal import lfilter

from .errors import ParseError
from .simcore import SignalSeries

PROFILES = ("steady", "ramping", "gusty")


class SignalSet(NamedTuple):
    wind: SignalSeries
    irradiance: SignalSeries
    demand: SignalSeries


def _smoothed_noise(rng: np.random.Generator, n: int, dt: float, tau: float, std: float) -> np.ndarray:
    """Stationary Ornstein-Uhlenbeck path with correlation time ``tau``."""
    phi = np.exp(-dt / tau)
    kick = std * np.sqrt(1.0 - phi**2)
    x0 = std * rng.standard_normal()
    noise = rng.standard_normal(n)
    noise[0] = 0.0
    out, _ = lfilter([kick], [1.0, -phi], noise, zi=[phi * x0])
    out[0] = x0
    return out


def _irradiance(t: np.ndarray, start_hour: float, peak: float) -> np.ndarray:
    """Clear-sky bump, sunrise 06:00 and sunset 18:00."""
    hour = start_hour + t / 3600.0
    return peak * np.clip(np.sin(np.pi * (hour - 6.0) / 12.0), 0.0, None)


def generate_synthetic_signals(
    seed: int,
    duration: float,
    profile: str = "gusty",
    *,
    plant_rating: float = 100e6,
    demand_mean: float = 0.6,
    demand_std: float = 0.12,
    wind_mean: float = 10.0,
    sample_period: float = 1.0,
    start_hour: float = 9.0,
) -> SignalSet:
    """Wind (m/s), irradiance (W/m^2) and demand (W) sampled every ``sample_period``.

    ``demand_mean`` and ``demand_std`` are fractions of ``plant_rating``;
    demand is a band-limited random walk clamped to ``[0, plant_rating]``.
    The profile shapes the wind: ``steady`` is nearly constant,
    ``ramping`` drifts from 2 m/s below to 2 m/s above the mean, and
    ``gusty`` adds minute-scale turbulence and passing cloud.
    """
    if profile not in PROFILES:
        raise ValueError(f"profile must be one of {PROFILES}, got {profile!r}")
    if not duration > 0 or not sample_period > 0:
        raise ValueError("duration and sample_period must be positive")
    if not 8.0 <= wind_mean <= 12.0:
        raise ValueError("wind_mean must lie in [8, 12] m/s")
    rng = np.random.default_rng(seed)
    n = int(np.ceil(duration / sample_period - 1e-9)) + 1
    t = np.arange(n) * sample_period

    if profile == "steady":
        wind = wind_mean + _smoothed_noise(rng, n, sample_period, 60.0, 0.05)
        cloud = np.ones(n)
    elif profile == "ramping":
        wind = wind_mean + 4.0 * (t / t[-1] - 0.5) if n > 1 else np.full(n, wind_mean)
        wind = wind + _smoothed_noise(rng, n, sample_period, 120.0, 0.3)
        cloud = np.ones(n)
    else:
        slow = _smoothed_noise(rng, n, sample_period, 1800.0, 1.2)
        fast = _smoothed_noise(rng, n, sample_period, 60.0, 0.15)
        wind = wind_mean + slow + fast
        cloud = 1.0 - 0.35 * np.clip(_smoothed_noise(rng, n, sample_period, 600.0, 0.6), 0.0, 1.0)
    wind = np.clip(wind, 3.0, 25.0)
    irr = _irradiance(t, start_hour, 1000.0) * cloud

    walk = _smoothed_noise(rng, n, sample_period, 900.0, demand_std * plant_rating)
    walk += _smoothed_noise(rng, n, sample_period, 60.0, 0.25 * demand_std * plant_rating)
    demand = np.clip(demand_mean * plant_rating + walk, 0.0, plant_rating)
    return SignalSet(
        SignalSeries(t, wind, "wind"),
        SignalSeries(t, irr, "irradiance"),
        SignalSeries(t, demand, "demand"),
    )


def read_signal_csv(path: str | Path, name: str = "") -> SignalSeries:
    """Read a ``time,value`` CSV with a header row."""
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ParseError(f"cannot open signal file ({exc.strerror})", str(path)) from exc
    times, values = [], []
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError("empty signal file", str(path))
        for row in reader:
            if not row:
                continue
            try:
                t, v = (float(x) for x in row)
            except ValueError as exc:
                raise ParseError(
                    f"expected two numeric columns, got {row!r}", f"{path}:{reader.line_num}"
                ) from exc
            times.append(t)
            values.append(v)
    try:
        return SignalSeries(np.array(times), np.array(values), name or path.stem)
    except ValueError as exc:
        raise ParseError(str(exc), str(path)) from exc


def write_signal_csv(series: SignalSeries, path: str | Path, value_header: str = "value") -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", value_header])
        for t, v in zip(series.timestamps.tolist(), series.values.tolist()):
            w.writerow([repr(t), repr(v)])
