"""The plant loop: sample signals, supervise, step every subsystem."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .battery import BatteryState, battery_outputs, battery_step
from .errors import HppError, SimulationError
from .scenario import Scenario
from .solar import SolarState, solar_available, solar_output, solar_step
from .supervisor import DispatchCommand, Supervisor

SCALAR_COLUMNS = (
    "time",
    "demand",
    "wind_speed",
    "irradiance",
    "wind_avail",
    "solar_avail",
    "p_wind",
    "p_solar",
    "p_battery",
    "p_total",
    "p_wind_sp",
    "p_solar_sp",
    "p_batt_sp",
    "soc",
    "i_cell",
    "cell_charge",
)


@dataclass(eq=False)
class RunRecord:
    """One row per simulated instant ``t_k = k * dt``.

    Powers are in W with the battery discharge-positive. ``lam`` is each
    turbine's tip-speed ratio in the wind at ``t_k``; ``lam_held`` is the
    same rotor speed against the wind the controller last acted on, which
    is the quantity its barrier constrains. ``cell_charge`` is cumulative
    cell charge (A s, charge-positive) since ``t = 0``. Setpoint columns
    hold the command in force from ``t_k`` onward.
    """

    scalars: dict[str, np.ndarray]
    lam: np.ndarray
    lam_held: np.ndarray
    events: list[str]
    lambda_barrier: float = 0.0
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.scalars["time"].size

    def __getattr__(self, name):
        scalars = self.__dict__.get("scalars")
        if scalars is not None and name in scalars:
            return scalars[name]
        raise AttributeError(name)

    @property
    def n_turbines(self) -> int:
        return self.lam.shape[1]

    def header(self) -> list[str]:
        n = self.n_turbines
        return (
            list(SCALAR_COLUMNS)
            + [f"lambda_{j}" for j in range(n)]
            + [f"lambda_held_{j}" for j in range(n)]
            + ["events"]
        )

    def numeric_matrix(self) -> np.ndarray:
        cols = [self.scalars[c] for c in SCALAR_COLUMNS]
        return np.column_stack(cols + [self.lam, self.lam_held]) if len(self) else np.empty(
            (0, len(SCALAR_COLUMNS) + 2 * self.n_turbines)
        )

    def equals(self, other: "RunRecord") -> bool:
        """Bit-for-bit equality of every recorded value."""
        return (
            self.header() == other.header()
            and self.events == other.events
            and np.array_equal(self.numeric_matrix(), other.numeric_matrix())
        )


def empty_record(n_turbines: int, lambda_barrier: float = 0.0) -> RunRecord:
    return RunRecord(
        {c: np.empty(0) for c in SCALAR_COLUMNS},
        np.empty((0, n_turbines)),
        np.empty((0, n_turbines)),
        [],
        lambda_barrier,
    )


def run_scenario(scenario: Scenario) -> RunRecord:
    """Simulate ``scenario`` from ``t = 0`` to ``duration``.

    Each row records the plant at ``t_k``. When ``t_k`` falls on a
    supervisor period, the supervisor sees that row's measured outputs and
    signal samples and its command is held until the next period. Then
    every subsystem advances by ``dt``.
    """
    sc = scenario
    dt, n = sc.dt, sc.n_rows
    stride = sc.supervisor_stride
    wind_sig, irr_sig, dem_sig = sc.signals
    farm = sc.build_farm()
    n_t = farm.n_turbines
    supervisor = Supervisor(sc.supervisor)

    cols = {c: np.empty(n) for c in SCALAR_COLUMNS}
    lam = np.empty((n, n_t))
    lam_held = np.empty((n, n_t))
    events = [""] * n

    u0 = wind_sig(0.0)
    fstate = farm.initial_state(u0, sc.initial.lambda0)
    sstate = SolarState(sc.initial.solar_power, 0.0)
    bstate = BatteryState(0.0, sc.initial.soc, 0.0, sc.initial.cell_current)
    cmd = DispatchCommand(0.0, 0.0, 0.0)
    held = None
    charge = 0.0
    pending: list[str] = []

    for k in range(n):
        t = k * dt
        try:
            u, irr, demand = wind_sig(t), irr_sig(t), dem_sig(t)
            snap = farm.observe(fstate, u)
            p_wind = float(snap.power.sum())
            p_solar = solar_output(sc.solar, sstate, irr)
            _, p_b = battery_outputs(sc.battery, bstate)
            p_batt = -p_b
            w_avail = farm.available_power(u)
            s_avail = solar_available(sc.solar, irr)
            if k % stride == 0:
                cmd = supervisor.supervise(demand, w_avail, s_avail, (p_wind, p_solar, p_batt), bstate.z)
        except HppError as exc:
            raise SimulationError(t, exc) from exc

        row = cols
        row["time"][k] = t
        row["demand"][k] = demand
        row["wind_speed"][k] = u
        row["irradiance"][k] = irr
        row["wind_avail"][k] = w_avail
        row["solar_avail"][k] = s_avail
        row["p_wind"][k] = p_wind
        row["p_solar"][k] = p_solar
        row["p_battery"][k] = p_batt
        row["p_total"][k] = p_wind + p_solar + p_batt
        row["p_wind_sp"][k] = cmd.p_wind_sp
        row["p_solar_sp"][k] = cmd.p_solar_sp
        row["p_batt_sp"][k] = cmd.p_batt_sp
        row["soc"][k] = bstate.z
        row["i_cell"][k] = bstate.i_c
        row["cell_charge"][k] = charge
        lam[k] = snap.lam
        lam_held[k] = snap.lam if held is None else held
        events[k] = ";".join(pending)
        if k == n - 1:
            break

        try:
            fr = farm.step(fstate, u, cmd.p_wind_sp, dt, snap)
            sstate, _ = solar_step(sc.solar, sstate, cmd.p_solar_sp, irr, dt)
            br = battery_step(sc.battery, bstate, cmd.p_batt_sp, dt)
        except HppError as exc:
            raise SimulationError(t, exc) from exc
        fstate, bstate = fr.state, br.state
        held = fr.lam_held
        charge += br.info.charge
        pending = []
        n_bad = int(fr.infeasible.sum())
        if n_bad:
            pending.append(f"wind_infeasible={n_bad}")
        if br.info.infeasible:
            pending.append(f"battery_infeasible={br.info.infeasible}")
        if br.info.qp_active:
            pending.append("battery_filter_active")

    return RunRecord(
        cols,
        lam,
        lam_held,
        events,
        sc.controller.lambda_barrier,
        {
            "dt": dt,
            "duration": sc.duration,
            "battery_power_rating": sc.supervisor.battery_power_rating,
            "i_c_max": sc.battery.i_c_max,
            "z_min": sc.battery.z_min,
            "z_max": sc.battery.z_max,
            "final_omega": fstate.omega.copy(),
            "final_solar": tuple(sstate),
            "final_battery": tuple(bstate),
            "supervisor_integral": supervisor.integral,
        },
    )


def final_state_vector(record: RunRecord) -> np.ndarray:
    """Concatenated end-of-run states, for self-convergence checks."""
    m = record.meta
    return np.concatenate(
        [m["final_omega"], np.asarray(m["final_solar"]), np.asarray(m["final_battery"])]
    )
