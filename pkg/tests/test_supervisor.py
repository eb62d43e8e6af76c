import pytest
from hypothesis import given
from hypothesis import strategies as st

from hppsim.supervisor import (
    DispatchCommand,
    Supervisor,
    SupervisorParams,
    charge_scale,
    discharge_scale,
)

P = SupervisorParams()


def fresh(**kw):
    return Supervisor(SupervisorParams(**kw))


def test_zero_demand_commands_nothing():
    cmd = fresh().supervise(0.0, 80e6, 20e6, (0.0, 0.0, 0.0), 0.5)
    assert cmd == DispatchCommand(0.0, 0.0, 0.0)


def test_surplus_split_by_availability():
    cmd = fresh().supervise(100e6, 160e6, 40e6, (80e6, 20e6, 0.0), 0.5)
    assert cmd == pytest.approx((80e6, 20e6, 0.0))


def test_shortfall_goes_to_battery():
    cmd = fresh().supervise(100e6, 50e6, 10e6, (50e6, 10e6, 0.0), 0.5)
    assert cmd == pytest.approx((50e6, 10e6, 40e6))


def test_battery_command_limited_to_rating():
    cmd = fresh().supervise(100e6, 20e6, 0.0, (20e6, 0.0, 0.0), 0.5)
    assert cmd.p_batt_sp == pytest.approx(P.battery_power_rating)


def test_battery_covers_renewable_lag():
    # renewables commanded to demand but still ramping up
    cmd = fresh().supervise(60e6, 100e6, 0.0, (50e6, 0.0, 0.0), 0.5)
    assert cmd.p_batt_sp == pytest.approx(10e6)


def test_soc_derating_ramps():
    assert discharge_scale(P, 0.15) == 0.0
    assert discharge_scale(P, 0.175) == pytest.approx(0.5)
    assert discharge_scale(P, 0.3) == 1.0
    assert charge_scale(P, 0.85) == 0.0
    assert charge_scale(P, 0.825) == pytest.approx(0.5)
    assert fresh().supervise(100e6, 0.0, 0.0, (0, 0, 0), 0.12).p_batt_sp == 0.0
    assert fresh().supervise(0.0, 0.0, 0.0, (30e6, 0, 0), 0.9).p_batt_sp == 0.0


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_derating_is_continuous(z, dz):
    z2 = min(z + dz * 1e-6, 1.0)
    assert abs(discharge_scale(P, z2) - discharge_scale(P, z)) <= (z2 - z) / P.ramp_width + 1e-12


def test_integral_compensates_persistent_loss():
    sup = fresh()
    for _ in range(200):
        cmd = sup.supervise(60e6, 150e6, 0.0, (0.9 * sup.integral + 54e6, 0.0, 0.0), 0.5)
    assert sup.integral > 0
    assert cmd.p_wind_sp > 60e6


def test_integral_frozen_at_availability_cap():
    sup = fresh()
    for _ in range(50):
        cmd = sup.supervise(100e6, 60e6, 0.0, (50e6, 0.0, 0.0), 0.5)
    assert cmd.p_wind_sp == pytest.approx(60e6)
    assert sup.integral == 0.0


def test_inputs_validated():
    with pytest.raises(ValueError):
        fresh().supervise(-1.0, 0.0, 0.0, (0, 0, 0), 0.5)
    with pytest.raises(ValueError):
        fresh().supervise(1.0, 0.0, 0.0, (0, 0, 0), 1.5)
    with pytest.raises(ValueError):
        SupervisorParams(soc_low_threshold=0.9, soc_high_threshold=0.1)


power = st.floats(0.0, 2e8)


@given(power, power, power, st.tuples(power, power, st.floats(-5e7, 5e7)), st.floats(0.0, 1.0))
def test_commands_stay_within_availability_and_rating(demand, wa, sa, measured, soc):
    sup = fresh()
    for _ in range(3):
        cmd = sup.supervise(demand, wa, sa, measured, soc)
        assert 0.0 <= cmd.p_wind_sp <= wa * (1 + 1e-12)
        assert 0.0 <= cmd.p_solar_sp <= sa * (1 + 1e-12)
        assert -P.battery_power_rating <= cmd.p_batt_sp <= P.battery_power_rating


@given(power, power, power, st.tuples(power, power, power), st.floats(0.0, 1.0))
def test_deterministic(demand, wa, sa, measured, soc):
    a, b = fresh(), fresh()
    assert a.supervise(demand, wa, sa, measured, soc) == b.supervise(demand, wa, sa, measured, soc)
