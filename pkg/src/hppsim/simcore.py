"""Numerical substrate shared by every subsystem.

Scalar QPs are solved in closed form: each barrier or actuator row is a
half-line ``a * u <= b`` on the single decision variable, the rows
intersect to an interval, and the minimiser of ``0.5 * (u - u_star)**2``
over an interval is the clamp of ``u_star``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .errors import EmptyFeasibleSet, NonFiniteDerivative, OutOfRange


class Halfplane(NamedTuple):
    """The constraint ``a * u <= b``."""

    a: float
    b: float

    def slack(self, u: float) -> float:
        return self.b - self.a * u


@dataclass(frozen=True)
class Interval:
    lo: float = -math.inf
    hi: float = math.inf

    @property
    def empty(self) -> bool:
        return not self.lo <= self.hi

    def __contains__(self, u: float) -> bool:
        return self.lo <= u <= self.hi


EMPTY = Interval(math.inf, -math.inf)


def intersect_halfplanes(constraints: Iterable[Halfplane]) -> Interval:
    """Exact feasible set ``{u : a_i u <= b_i for all i}``.

    An infeasible set comes back as an empty Interval (``lo > hi``) with the
    tightest bounds retained, so callers can inspect the violated pair.
    """
    lo, hi = -math.inf, math.inf
    for a, b in constraints:
        if a > 0.0:
            hi = min(hi, b / a)
        elif a < 0.0:
            lo = max(lo, b / a)
        elif b < 0.0:
            return EMPTY
    return Interval(lo, hi)


def project_to_interval(u_star: float, feasible: Interval) -> float:
    if feasible.empty:
        raise EmptyFeasibleSet(f"no feasible control in [{feasible.lo}, {feasible.hi}]")
    return min(max(u_star, feasible.lo), feasible.hi)


def integrate_step(
    state: np.ndarray, derivative_fn: Callable[[np.ndarray], np.ndarray], dt: float
) -> np.ndarray:
    """One classical RK4 step of ``x' = derivative_fn(x)``.

    Controls must already be baked into ``derivative_fn`` (zero-order hold).
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    x = np.asarray(state, dtype=float)
    k1 = _checked(derivative_fn(x))
    k2 = _checked(derivative_fn(x + 0.5 * dt * k1))
    k3 = _checked(derivative_fn(x + 0.5 * dt * k2))
    k4 = _checked(derivative_fn(x + dt * k3))
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_scalars(
    state: Sequence[float],
    derivative_fn: Callable[[Sequence[float]], Sequence[float]],
    dt: float,
) -> tuple[float, ...]:
    """RK4 on a short tuple of floats.

    Same scheme as :func:`integrate_step`; avoids numpy overhead for the
    four-state battery and two-state solar models, which step tens of
    thousands of times per simulated hour.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    h2 = 0.5 * dt
    k1 = _checked_seq(derivative_fn(state))
    k2 = _checked_seq(derivative_fn([x + h2 * k for x, k in zip(state, k1)]))
    k3 = _checked_seq(derivative_fn([x + h2 * k for x, k in zip(state, k2)]))
    k4 = _checked_seq(derivative_fn([x + dt * k for x, k in zip(state, k3)]))
    h6 = dt / 6.0
    return tuple(
        x + h6 * (a + 2.0 * b + 2.0 * c + d)
        for x, a, b, c, d in zip(state, k1, k2, k3, k4)
    )


def substeps(dt: float, max_substep: float) -> tuple[int, float]:
    """Split ``dt`` into the fewest equal pieces no longer than ``max_substep``."""
    n = max(1, math.ceil(dt / max_substep - 1e-12))
    return n, dt / n


def _checked(k: np.ndarray) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    if not np.all(np.isfinite(k)):
        raise NonFiniteDerivative(f"derivative evaluated to {k}")
    return k


def _checked_seq(k: Sequence[float]) -> Sequence[float]:
    for v in k:
        if not math.isfinite(v):
            raise NonFiniteDerivative(f"derivative evaluated to {tuple(k)}")
    return k


@dataclass(frozen=True, eq=False)
class SignalSeries:
    """Timestamped exogenous samples (wind speed, irradiance, demand)."""

    timestamps: np.ndarray
    values: np.ndarray
    name: str = ""
    interpolation: str = "zoh"

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=float)
        vs = np.asarray(self.values, dtype=float)
        if ts.ndim != 1 or ts.shape != vs.shape:
            raise ValueError("timestamps and values must be 1-D and the same length")
        if ts.size == 0:
            raise ValueError("a signal needs at least one sample")
        if np.any(np.diff(ts) <= 0.0):
            raise ValueError(f"signal {self.name!r}: timestamps must be strictly increasing")
        if not (np.all(np.isfinite(ts)) and np.all(np.isfinite(vs))):
            raise ValueError(f"signal {self.name!r}: non-finite sample")
        if self.interpolation not in ("zoh", "linear"):
            raise ValueError(f"unknown interpolation {self.interpolation!r}")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vs)

    @property
    def start(self) -> float:
        return float(self.timestamps[0])

    @property
    def end(self) -> float:
        return float(self.timestamps[-1])

    def covers(self, t0: float, t1: float) -> bool:
        return self.start <= t0 and t1 <= self.end

    def __len__(self) -> int:
        return self.timestamps.size

    def __call__(self, t: float) -> float:
        return sample_signal(self, t)


def sample_signal(series: SignalSeries, t: float) -> float:
    """Value at ``t``; zero-order hold unless the series asks for linear."""
    ts = series.timestamps
    if t < ts[0] or t > ts[-1]:
        raise OutOfRange(
            f"t={t} outside signal {series.name!r} span [{ts[0]}, {ts[-1]}]"
        )
    i = int(np.searchsorted(ts, t, side="right")) - 1
    if series.interpolation == "linear" and i < ts.size - 1:
        t0, t1 = ts[i], ts[i + 1]
        v0, v1 = series.values[i], series.values[i + 1]
        return float(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
    return float(series.values[i])
