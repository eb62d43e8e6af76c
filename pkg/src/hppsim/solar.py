"""First-order solar plant under PI setpoint tracking.

The tracking error is ``e = setpoint - P_s`` (negative feedback), which
gives the closed loop

    P_s' = (-(1 + kp) P_s + ki * e_int + kp * setpoint) / tau
    e_int' = setpoint - P_s

The plant output is the filtered power clipped to ``[0, available]``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import NegativeIrradiance
from .simcore import integrate_scalars, substeps


@dataclass(frozen=True)
class SolarParams:
    area: float = 1.0e5
    efficiency: float = 0.5
    tau: float = 10.0
    kp: float = 2.5
    ki: float = 0.2
    max_substep: float = 0.25

    def __post_init__(self):
        if not self.area > 0:
            raise ValueError("area must be positive")
        if not 0 < self.efficiency <= 1:
            raise ValueError("efficiency must lie in (0, 1]")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.max_substep > 0:
            raise ValueError("max_substep must be positive")
        if np.any(np.linalg.eigvals(self.closed_loop_matrix()).real >= 0):
            raise ValueError(f"PI gains kp={self.kp}, ki={self.ki} give an unstable loop")

    def closed_loop_matrix(self) -> np.ndarray:
        return np.array([[-(1.0 + self.kp) / self.tau, self.ki / self.tau], [-1.0, 0.0]])


class SolarState(NamedTuple):
    p_s: float = 0.0
    e_int: float = 0.0


def solar_available(params: SolarParams, irradiance: float) -> float:
    if irradiance < 0:
        raise NegativeIrradiance(f"irradiance must be non-negative, got {irradiance}")
    return irradiance * params.area * params.efficiency


def solar_output(params: SolarParams, state: SolarState, irradiance: float) -> float:
    return min(max(state.p_s, 0.0), solar_available(params, irradiance))


def solar_step(
    params: SolarParams,
    state: SolarState,
    p_setpoint: float,
    irradiance: float,
    dt: float,
) -> tuple[SolarState, float]:
    """Advance the filter and integrator by ``dt``; return (state, output)."""
    avail = solar_available(params, irradiance)
    tau, kp, ki = params.tau, params.kp, params.ki
    n, h = substeps(dt, params.max_substep)
    x = tuple(state)
    for _ in range(n):
        # conditional integration: hold e_int while clipped at availability
        # and the error would wind it further up
        frozen = x[0] >= avail and p_setpoint - x[0] > 0.0

        def deriv(s, frozen=frozen):
            e = p_setpoint - s[0]
            return ((-s[0] + kp * e + ki * s[1]) / tau, 0.0 if frozen else e)

        x = integrate_scalars(x, deriv, h)
    new = SolarState(*x)
    return new, min(max(new.p_s, 0.0), avail)
