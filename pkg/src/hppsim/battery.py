"""Li-ion pack as an equivalent circuit (R0, one RC branch, one-state
hysteresis) with a current-rate control law filtered by barrier rows.

Internally current is charge-positive. ``battery_step`` is the only place
that flips to the discharge-positive convention used by the supervisor and
all recorded outputs.

State ``(u1, z, h, i_c)``; the control is ``nu = di_c/dt``.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

from .errors import DenominatorNonpositive
from .simcore import (
    Halfplane,
    integrate_scalars,
    intersect_halfplanes,
    project_to_interval,
    substeps,
)
from .wind import read_two_column_csv

_DATA = Path(__file__).parent / "data"


@dataclass(frozen=True, eq=False)
class OcvTable:
    """Open-circuit voltage against state of charge, piecewise linear."""

    z: tuple[float, ...]
    volts: tuple[float, ...]

    def __post_init__(self):
        z = tuple(float(v) for v in self.z)
        v = tuple(float(x) for x in self.volts)
        if len(z) != len(v) or len(z) < 2:
            raise ValueError("OCV table needs at least two (z, volts) points")
        if z[0] != 0.0 or z[-1] != 1.0:
            raise ValueError("OCV table must span z in [0, 1]")
        if any(b <= a for a, b in zip(z, z[1:])):
            raise ValueError("OCV z breakpoints must be strictly increasing")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("OCV must be strictly increasing in z")
        if v[0] <= 0:
            raise ValueError("OCV voltages must be positive")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "volts", v)
        slopes = tuple((v[k + 1] - v[k]) / (z[k + 1] - z[k]) for k in range(len(z) - 1))
        object.__setattr__(self, "_slopes", slopes)

    def _segment(self, z: float) -> int:
        k = bisect.bisect_right(self.z, z) - 1
        return min(max(k, 0), len(self.z) - 2)

    def __call__(self, z: float) -> float:
        if z <= 0.0:
            return self.volts[0]
        if z >= 1.0:
            return self.volts[-1]
        k = self._segment(z)
        return self.volts[k] + self._slopes[k] * (z - self.z[k])

    def slope(self, z: float) -> float:
        if z < 0.0 or z > 1.0:
            return 0.0
        return self._slopes[self._segment(z)]

    @classmethod
    def from_csv(cls, path) -> "OcvTable":
        z, v = read_two_column_csv(path)
        return cls(tuple(z), tuple(v))


def default_ocv() -> OcvTable:
    return OcvTable.from_csv(_DATA / "ocv_synthetic.csv")


def pack_size(energy_wh: float, v_nom: float, q_cell: float) -> int:
    """Cells in series (= cells in parallel) for a square pack."""
    return int(round(math.sqrt(energy_wh / (v_nom * q_cell))))


@dataclass(frozen=True, eq=False)
class BatteryParams:
    r0: float = 0.005
    r1: float = 0.002
    c1: float = 5000.0
    eta_b: float = 0.99
    q_cell: float = 20.0
    n_s: int = 1557
    n_p: int = 1557
    g_hyst: float = 150.0
    m_hyst: float = 0.03
    ocv: OcvTable = field(default_factory=default_ocv)
    i_c_max: float = 5.0
    z_min: float = 0.1
    z_max: float = 0.9
    # per-cell gain on the per-cell power error; equals 20/(n_s n_p) on pack power
    k_ic: float = 20.0
    r_e: float = 0.0
    c_ic: float = 20.0
    c_z1_min: float = 1.0
    c_z2_min: float = 1.0
    c_z1_max: float = 1.0
    c_z2_max: float = 1.0
    soc_ns_factor: bool = True
    max_substep: float = 0.025

    def __post_init__(self):
        for name in ("r0", "r1", "c1", "q_cell", "i_c_max", "k_ic", "c_ic", "max_substep"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("c_z1_min", "c_z2_min", "c_z1_max", "c_z2_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.n_s < 1 or self.n_p < 1:
            raise ValueError("n_s and n_p must be at least 1")
        if not 0.0 <= self.z_min < self.z_max <= 1.0:
            raise ValueError("z_min < z_max")
        if not 0 < self.eta_b <= 1:
            raise ValueError("eta_b must lie in (0, 1]")
        worst = (
            self.ocv(self.z_min)
            - (self.r0 + self.r1 + abs(self.r_e)) * self.i_c_max
            - self.m_hyst
        )
        if worst <= 0:
            raise ValueError("v + r_e*i_c can reach zero inside the operating envelope")
        # hot-loop constants
        ns = self.n_s if self.soc_ns_factor else 1
        object.__setattr__(self, "_n_cells", self.n_s * self.n_p)
        object.__setattr__(self, "_soc_gain", self.eta_b * ns / (3600.0 * self.n_p * self.q_cell))

    @classmethod
    def sized(
        cls,
        energy_wh: float = 160e6,
        v_nom: float = 3.3,
        q_cell: float = 20.0,
        max_c_rate: float = 0.25,
        **kw,
    ) -> "BatteryParams":
        n = pack_size(energy_wh, v_nom, q_cell)
        return cls(q_cell=q_cell, n_s=n, n_p=n, i_c_max=max_c_rate * q_cell, **kw)

    @property
    def n_cells(self) -> int:
        return self._n_cells

    @property
    def capacity_coulombs(self) -> float:
        return 3600.0 * self.n_p * self.q_cell

    @property
    def soc_gain(self) -> float:
        """dz/dt per ampere of cell current."""
        return self._soc_gain

    def max_power(self, z: float) -> float:
        """Pack power at the current limit and open-circuit voltage."""
        return self.n_cells * self.ocv(z) * self.i_c_max


class BatteryState(NamedTuple):
    u1: float = 0.0
    z: float = 0.5
    h: float = 0.0
    i_c: float = 0.0


def battery_outputs(params: BatteryParams, state: BatteryState) -> tuple[float, float]:
    """Cell terminal voltage and pack power (charge-positive)."""
    v = params.ocv(state.z) - params.r0 * state.i_c - state.u1 + state.h
    return v, params.n_cells * v * state.i_c


def _sign(x: float) -> float:
    return 1.0 if x > 0.0 else (-1.0 if x < 0.0 else 0.0)


def battery_derivatives(params: BatteryParams, state, nu: float) -> tuple[float, float, float, float]:
    u1, _, h, i = state
    kz = params.soc_gain
    rate = abs(params.g_hyst * kz * i)
    return (
        -u1 / (params.r1 * params.c1) + i / params.c1,
        kz * i,
        -rate * h - rate * _sign(i) * params.m_hyst,
        nu,
    )


def voltage_rate(params: BatteryParams, state: BatteryState, nu: float) -> float:
    """dV/dt along the dynamics with control ``nu``."""
    du1, dz, dh, _ = battery_derivatives(params, state, nu)
    return params.ocv.slope(state.z) * dz - params.r0 * nu - du1 + dh


def current_control_nominal(params: BatteryParams, state: BatteryState, p_setpoint: float) -> float:
    """Continuous Newton-Raphson current rate toward a pack setpoint (charge-positive W)."""
    v, p = battery_outputs(params, state)
    den = v + params.r_e * state.i_c
    if den <= 0:
        raise DenominatorNonpositive(f"v + r_e*i_c = {den} <= 0")
    e = (p - p_setpoint) / params.n_cells
    return -params.k_ic * e / den


def tracking_gain(params: BatteryParams, state: BatteryState) -> float:
    """Error decay rate ``k_ic * v / (v + r_e * i_c)``."""
    v, _ = battery_outputs(params, state)
    return params.k_ic * v / (v + params.r_e * state.i_c)


def battery_cbf_rows(params: BatteryParams, state: BatteryState) -> list[Halfplane]:
    """Current-box barriers and second-order SOC barriers as half-lines in nu.

    Order: i_c >= -i_c_max, i_c <= i_c_max, z >= z_min, z <= z_max.
    """
    _, z, _, i = state
    kz = params.soc_gain
    c = params.c_ic
    psi1_min = kz * i + params.c_z1_min * (z - params.z_min)
    psi1_max = -kz * i + params.c_z1_max * (params.z_max - z)
    return [
        Halfplane(-1.0, c * (i + params.i_c_max)),
        Halfplane(1.0, c * (params.i_c_max - i)),
        Halfplane(-kz, params.c_z1_min * kz * i + params.c_z2_min * psi1_min),
        Halfplane(kz, -params.c_z1_max * kz * i + params.c_z2_max * psi1_max),
    ]


class BatteryStepInfo(NamedTuple):
    nu_nominal: float
    nu: float
    qp_active: bool
    infeasible: int
    gain_min: float
    disturbance_max: float
    # cell charge moved over the step (A s); i_c is piecewise linear in
    # time, so the trapezoid over substeps is exact
    charge: float


class BatteryStepResult(NamedTuple):
    state: BatteryState
    power: float
    info: BatteryStepInfo


def battery_step(
    params: BatteryParams, state: BatteryState, p_setpoint: float, dt: float
) -> BatteryStepResult:
    """Track a discharge-positive pack setpoint for ``dt`` seconds.

    The current rate is held over substeps of at most ``params.max_substep``;
    the tracking and barrier gains (20 1/s by default) need that resolution.
    An empty feasible set takes the midpoint of the crossed bounds and is
    counted in ``info.infeasible``.
    """
    target = -float(p_setpoint)
    n, h = substeps(dt, params.max_substep)
    x = BatteryState(*state)
    active = False
    n_bad = 0
    gain_min = math.inf
    dist_max = 0.0
    nu_star = nu = 0.0
    charge = 0.0
    for _ in range(n):
        nu_star = current_control_nominal(params, x, target)
        feasible = intersect_halfplanes(battery_cbf_rows(params, x))
        if feasible.empty:
            n_bad += 1
            nu = 0.5 * (feasible.lo + feasible.hi)
        else:
            nu = project_to_interval(nu_star, feasible)
        active = active or nu != nu_star
        gain_min = min(gain_min, tracking_gain(params, x))
        dist_max = max(dist_max, abs(x.i_c * voltage_rate(params, x, nu)))
        i0 = x.i_c
        x = BatteryState(*integrate_scalars(x, lambda s, nu=nu: battery_derivatives(params, s, nu), h))
        charge += 0.5 * h * (i0 + x.i_c)
    _, p = battery_outputs(params, x)
    info = BatteryStepInfo(nu_star, nu, active, n_bad, gain_min, dist_max, charge)
    return BatteryStepResult(x, -p, info)
