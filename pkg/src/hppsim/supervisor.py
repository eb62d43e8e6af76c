"""Rule-based plant dispatcher.

Rules, applied every update period:

* Wind and solar are asked for ``min(demand, wind_avail + solar_avail)``,
  split in proportion to availability, plus an integral correction that
  makes up for what the farm loses to wakes. The correction stops
  integrating while the renewable command sits at availability.
* The battery fills whatever the renewables are not delivering right now
  (``demand - measured wind - measured solar``), so it covers both genuine
  shortfalls and the renewables' response lag.
* The battery's discharge limit is derated linearly from the rating to
  zero as SOC falls through ``[soc_low, soc_low + ramp]``; its charge
  limit likewise as SOC rises through ``[soc_high - ramp, soc_high]``.
* Optionally, surplus renewables recharge the battery while SOC is below
  ``soc_high``.

Battery power is discharge-positive throughout.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple


@dataclass(frozen=True)
class SupervisorParams:
    soc_low_threshold: float = 0.15
    soc_high_threshold: float = 0.85
    battery_power_rating: float = 40e6
    update_period: float = 1.0
    saturation_margin: float = 0.0
    integral_gain: float = 0.2
    ramp_width: float = 0.05
    charge_from_surplus: bool = False

    def __post_init__(self):
        if not self.soc_low_threshold < self.soc_high_threshold:
            raise ValueError("soc_low_threshold < soc_high_threshold")
        if not self.battery_power_rating > 0:
            raise ValueError("battery_power_rating must be positive")
        if not self.update_period > 0:
            raise ValueError("update_period must be positive")
        if not self.saturation_margin >= 0:
            raise ValueError("saturation_margin must be non-negative")
        if not 0 <= self.integral_gain <= 1:
            raise ValueError("integral_gain must lie in [0, 1]")
        if not self.ramp_width > 0:
            raise ValueError("ramp_width must be positive")


class DispatchCommand(NamedTuple):
    p_wind_sp: float
    p_solar_sp: float
    p_batt_sp: float


class Measured(NamedTuple):
    wind: float = 0.0
    solar: float = 0.0
    battery: float = 0.0


def _clip(x: float, lo: float, hi: float) -> float:
    return min(max(x, lo), hi)


def discharge_scale(params: SupervisorParams, soc: float) -> float:
    return _clip((soc - params.soc_low_threshold) / params.ramp_width, 0.0, 1.0)


def charge_scale(params: SupervisorParams, soc: float) -> float:
    return _clip((params.soc_high_threshold - soc) / params.ramp_width, 0.0, 1.0)


class Supervisor:
    """Stateful dispatcher; the only state is the renewable integral term."""

    def __init__(self, params: SupervisorParams | None = None, integral: float = 0.0):
        self.params = params or SupervisorParams()
        self.integral = integral

    def supervise(
        self,
        demand: float,
        wind_avail: float,
        solar_avail: float,
        measured: Measured | tuple[float, float, float],
        soc: float,
    ) -> DispatchCommand:
        p = self.params
        if demand < 0 or wind_avail < 0 or solar_avail < 0:
            raise ValueError("demand and availabilities must be non-negative")
        if not 0.0 <= soc <= 1.0:
            raise ValueError(f"soc must lie in [0, 1], got {soc}")
        m = Measured(*measured)
        rating = p.battery_power_rating
        avail = wind_avail + solar_avail
        cap = avail * (1.0 + p.saturation_margin)

        base = min(demand, avail)
        charge = 0.0
        if p.charge_from_surplus and avail > demand:
            charge = min(avail - demand, rating) * charge_scale(p, soc)
        target = base + charge

        # renewable shortfall against what was asked of them, not against demand:
        # the battery already hides it from the plant total
        residual = target - (m.wind + m.solar)
        command = _clip(target + self.integral, 0.0, cap)
        saturated = command >= cap
        if not (saturated and residual > 0.0):
            self.integral += p.integral_gain * residual
            self.integral = _clip(self.integral, -target, cap - target)
        command = _clip(target + self.integral, 0.0, cap)

        if avail > 0.0:
            wind_sp = command * wind_avail / avail
            solar_sp = command * solar_avail / avail
        else:
            wind_sp = solar_sp = 0.0

        # renewables already carry any recharge power above demand; the SOC
        # ramps derate the battery's power envelope, not the gap itself
        gap = demand - (m.wind + m.solar)
        batt = _clip(gap, -rating * charge_scale(p, soc), rating * discharge_scale(p, soc))
        return DispatchCommand(wind_sp, solar_sp, batt)
