"""Wind farm: rotor dynamics, torque tracking law with a tip-speed-ratio
barrier, and steady-state wake superposition within columns.

Turbines are indexed column-major: turbine ``j`` sits in column
``j // n_rows`` at streamwise position ``j % n_rows`` (0 = front row).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.special import erf

from . import _farm_kernels as _kernels
from .errors import CtOutOfRange, NonFiniteDerivative, NonPositiveWind, ParseError
from .simcore import (
    Halfplane,
    intersect_halfplanes,
    project_to_interval,
    substeps,
)

BETZ_LIMIT = 16.0 / 27.0

# NREL 5MW rotor inertia about the low-speed shaft and rotor radius.
NREL5MW_ROTOR_INERTIA = 38_759_228.0
NREL5MW_ROTOR_RADIUS = 63.0


@dataclass(frozen=True, eq=False)
class PowerCurve:
    """Piecewise-linear coefficient table over tip-speed ratio.

    Evaluation clamps to the end values outside the tabulated range.
    """

    lam: np.ndarray
    value: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float)
        val = np.asarray(self.value, dtype=float)
        if lam.ndim != 1 or lam.shape != val.shape or lam.size < 2:
            raise ValueError("a curve needs at least two (lambda, value) points")
        if np.any(np.diff(lam) <= 0):
            raise ValueError("curve lambda breakpoints must be strictly increasing")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "value", val)

    def __call__(self, lam):
        out = np.interp(lam, self.lam, self.value)
        return float(out) if np.ndim(out) == 0 else out

    @classmethod
    def from_csv(cls, path: str | Path) -> "PowerCurve":
        lam, val = read_two_column_csv(path)
        return cls(lam, val)


def read_two_column_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Read a headed two-column numeric CSV."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ParseError(str(exc), str(path)) from exc
    xs, ys = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or not "".join(row).strip():
            continue
        try:
            xs.append(float(row[0]))
            ys.append(float(row[1]))
        except (ValueError, IndexError) as exc:
            raise ParseError(f"bad numeric row {row!r}", f"{path}:{lineno}") from exc
    if not xs:
        raise ParseError("no data rows", str(path))
    return np.array(xs), np.array(ys)


_DATA = Path(__file__).parent / "data"


def default_cp_curve() -> PowerCurve:
    return PowerCurve.from_csv(_DATA / "cp_nrel5mw_like.csv")


def default_ct_curve() -> PowerCurve:
    return PowerCurve.from_csv(_DATA / "ct_nrel5mw_like.csv")


@dataclass(frozen=True, eq=False)
class TurbineParams:
    J_r: float = NREL5MW_ROTOR_INERTIA
    R_r: float = NREL5MW_ROTOR_RADIUS
    rho: float = 1.225
    cp_curve: PowerCurve = field(default_factory=default_cp_curve)
    ct_curve: PowerCurve = field(default_factory=default_ct_curve)
    rated_power: float = 5.0e6
    lambda_opt: float = field(init=False)
    cp_max: float = field(init=False)

    def __post_init__(self):
        for name in ("J_r", "R_r", "rho", "rated_power"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        cp, ct = self.cp_curve.value, self.ct_curve.value
        if np.any(cp < 0) or np.any(cp > BETZ_LIMIT):
            raise ValueError("cp_curve must stay within [0, Betz limit]")
        if np.any(ct < 0) or np.any(ct >= 1):
            raise ValueError("ct_curve must stay within [0, 1)")
        k = int(np.argmax(cp))
        object.__setattr__(self, "lambda_opt", float(self.cp_curve.lam[k]))
        object.__setattr__(self, "cp_max", float(cp[k]))

    @property
    def A_r(self) -> float:
        return math.pi * self.R_r**2


@dataclass(frozen=True)
class WindControllerParams:
    K: float = 2.0
    c_w: float = 1.0
    lambda_barrier: float = 0.95 * 7.55
    tg_max: float = 1.0e7

    def check(self, turbine: TurbineParams) -> None:
        if not self.K > 0:
            raise ValueError("K must be positive")
        if not self.c_w > 0:
            raise ValueError("c_w must be positive")
        if not 0 < self.lambda_barrier < turbine.lambda_opt:
            raise ValueError("lambda_barrier must lie in (0, lambda_opt)")
        if not self.tg_max > 0:
            raise ValueError("tg_max must be positive")

    @classmethod
    def for_turbine(cls, turbine: TurbineParams, fraction: float = 0.95, **kw):
        return cls(lambda_barrier=fraction * turbine.lambda_opt, **kw)


@dataclass(frozen=True)
class FarmLayout:
    n_rows: int = 8
    n_cols: int = 4
    dx: float = 7 * 2 * NREL5MW_ROTOR_RADIUS
    k_w: float = 0.04
    u_min: float = 1.0

    def __post_init__(self):
        if self.n_rows < 1 or self.n_cols < 1:
            raise ValueError("farm needs at least one row and one column")
        if not self.dx > 0:
            raise ValueError("dx must be positive")
        if not self.u_min > 0:
            raise ValueError("u_min must be positive")

    @property
    def n_turbines(self) -> int:
        return self.n_rows * self.n_cols

    def position(self, j: int) -> tuple[int, int]:
        """(column, row) of turbine ``j``."""
        return divmod(j, self.n_rows)

    @property
    def graph(self) -> list[list[int]]:
        """Upstream turbines of each turbine, same column only."""
        out = []
        for j in range(self.n_turbines):
            col, row = self.position(j)
            out.append([col * self.n_rows + r for r in range(row)])
        return out

    def streamwise_distance(self, i: int, j: int) -> float:
        return (self.position(j)[1] - self.position(i)[1]) * self.dx


@dataclass(frozen=True, eq=False)
class FarmState:
    omega: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "omega", np.asarray(self.omega, dtype=float))


# -- single-turbine physics ---------------------------------------------------


def tip_speed_ratio(params: TurbineParams, omega_r, u_eff):
    return params.R_r * omega_r / u_eff


def aero_power(params: TurbineParams, omega_r, u_eff):
    """``0.5 * rho * A * Cp(lambda) * U**3`` (scalar or elementwise)."""
    if np.any(np.asarray(u_eff) <= 0):
        raise NonPositiveWind(f"effective wind must be positive, got {u_eff}")
    cp = params.cp_curve(params.R_r * np.asarray(omega_r) / u_eff)
    p = 0.5 * params.rho * params.A_r * cp * np.asarray(u_eff) ** 3
    return float(p) if np.ndim(p) == 0 else p


def axial_induction(ct):
    """``0.5 * (1 - sqrt(1 - ct))`` for ``0 <= ct < 1``."""
    ct_arr = np.asarray(ct, dtype=float)
    if np.any(ct_arr < 0) or np.any(ct_arr >= 1):
        raise CtOutOfRange(f"thrust coefficient must lie in [0, 1), got {ct}")
    a = 0.5 * (1.0 - np.sqrt(1.0 - ct_arr))
    return float(a) if np.ndim(a) == 0 else a


def wake_diameter(dx: float, R_r: float, k_w: float) -> float:
    """Normalised wake expansion ``1 + k_w * ln(1 + exp(dx / R_r))``."""
    return 1.0 + k_w * np.logaddexp(0.0, dx / R_r)


def wake_deficit(u_at_source, a, dx: float, R_r: float, k_w: float):
    if np.any(np.asarray(dx) <= 0):
        raise ValueError("streamwise distance must be positive")
    d_w = wake_diameter(dx, R_r, k_w)
    return u_at_source * (2.0 * a / d_w**2) * (1.0 + erf(dx / (R_r * math.sqrt(2.0))))


def wake_factor_matrix(layout: FarmLayout, R_r: float) -> np.ndarray:
    """``F[i, j]`` so that the deficit of i on j is ``U_i * a_i * F[i, j]``."""
    n = layout.n_turbines
    F = np.zeros((n, n))
    for j, ups in enumerate(layout.graph):
        for i in ups:
            F[i, j] = wake_deficit(1.0, 1.0, layout.streamwise_distance(i, j), R_r, layout.k_w)
    return F


def effective_wind_field(
    u_inf: float, layout: FarmLayout, inductions, R_r: float
) -> np.ndarray:
    """Root-sum-square superposition of upstream deficits, floored at ``u_min``.

    Each deficit is scaled by the wind at its source turbine, so rows are
    resolved front to back.
    """
    a = np.asarray(inductions, dtype=float)
    F2 = wake_factor_matrix(layout, R_r) ** 2
    return _superpose(u_inf, layout, F2, lambda rows, u: a[rows])[0]


def _superpose(u_inf, layout: FarmLayout, F2: np.ndarray, induction_of):
    """Resolve effective winds row by row; ``induction_of(rows, u_rows)`` gives a."""
    n, n_rows = layout.n_turbines, layout.n_rows
    u = np.full(n, float(u_inf))
    a = np.zeros(n)
    ua2 = np.zeros(n)
    for r in range(n_rows):
        rows = np.arange(r, n, n_rows)
        if r > 0:
            u[rows] = np.maximum(u_inf - np.sqrt(ua2 @ F2[:, rows]), layout.u_min)
        a[rows] = induction_of(rows, u[rows])
        ua2[rows] = (u[rows] * a[rows]) ** 2
    return u, a


# -- torque control -----------------------------------------------------------


def torque_nominal(
    params: TurbineParams,
    ctrl: WindControllerParams,
    omega_r,
    u_eff,
    p_setpoint,
    gain=None,
):
    """Feedback-linearising torque with ``1/(dCp/dlambda)`` replaced by ``K``.

    ``gain`` overrides ``ctrl.K``; passing the true ``1/(dCp/dlambda)``
    recovers the exact ``e' = -e`` law.
    """
    k = ctrl.K if gain is None else gain
    p = aero_power(params, omega_r, u_eff)
    e = p - p_setpoint
    return 2.0 * e * params.J_r * k / (params.rho * params.A_r * params.R_r * u_eff**2) + p / omega_r


def barrier_value(params: TurbineParams, ctrl: WindControllerParams, omega_r, u_eff):
    return ctrl.lambda_barrier - params.R_r * omega_r / u_eff


def torque_rows(
    params, ctrl, omega_r: float, u_eff: float, wind_rate: float = 0.0
) -> list[Halfplane]:
    """Barrier row plus actuator box, as half-lines in generator torque.

    ``wind_rate`` is dU/dt at the turbine; it adds ``lambda * U' / U`` to the
    barrier derivative and is zero for a constant effective wind.
    """
    p = aero_power(params, omega_r, u_eff)
    g = params.R_r / (u_eff * params.J_r)
    b_lam = barrier_value(params, ctrl, omega_r, u_eff)
    drift = params.R_r * omega_r * wind_rate / u_eff**2
    return [
        Halfplane(-g, -g * p / omega_r + drift + ctrl.c_w * b_lam),
        Halfplane(-1.0, 0.0),
        Halfplane(1.0, ctrl.tg_max),
    ]


class TorqueSolution(NamedTuple):
    torque: float
    nominal: float
    infeasible: bool


def torque_safe(
    params, ctrl, omega_r: float, u_eff: float, p_setpoint: float, wind_rate: float = 0.0
) -> TorqueSolution:
    t_star = torque_nominal(params, ctrl, omega_r, u_eff, p_setpoint)
    feasible = intersect_halfplanes(torque_rows(params, ctrl, omega_r, u_eff, wind_rate))
    if feasible.empty:
        return TorqueSolution(ctrl.tg_max, t_star, True)
    return TorqueSolution(project_to_interval(t_star, feasible), t_star, False)


def torque_safe_array(params, ctrl, omega, u_eff, p_setpoint, wind_rate=0.0):
    """Elementwise :func:`torque_safe` for a whole farm.

    Returns ``(torque, nominal, infeasible_mask)``.
    """
    p = aero_power(params, omega, u_eff)
    e = p - p_setpoint
    ff = p / omega
    t_star = 2.0 * e * params.J_r * ctrl.K / (params.rho * params.A_r * params.R_r * u_eff**2) + ff
    lam = params.R_r * omega / u_eff
    margin = ctrl.c_w * (ctrl.lambda_barrier - lam) + lam * wind_rate / u_eff
    lower = ff - margin * u_eff * params.J_r / params.R_r
    lo = np.maximum(lower, 0.0)
    infeasible = lo > ctrl.tg_max
    torque = np.where(infeasible, ctrl.tg_max, np.clip(t_star, lo, ctrl.tg_max))
    return torque, t_star, infeasible


def rotor_acceleration(params: TurbineParams, omega, u_eff, torque):
    return (aero_power(params, omega, u_eff) / omega - torque) / params.J_r


def farm_available_power(u_inf: float, params: TurbineParams, n_turbines: int) -> float:
    """Free-stream estimate ignoring wakes: every turbine at ``cp_max``, capped at rating."""
    if u_inf < 0:
        raise NonPositiveWind(f"wind speed must be non-negative, got {u_inf}")
    per = 0.5 * params.rho * params.A_r * params.cp_max * u_inf**3
    return n_turbines * min(per, params.rated_power)


# -- farm ---------------------------------------------------------------------


class FarmSnapshot(NamedTuple):
    u_eff: np.ndarray
    lam: np.ndarray
    power: np.ndarray
    induction: np.ndarray


class FarmStepResult(NamedTuple):
    state: FarmState
    turbine_power: np.ndarray
    total_power: float
    torque: np.ndarray
    # end-of-step tip-speed ratios with the free stream held at its sampled value
    lam_held: np.ndarray
    infeasible: np.ndarray


class WindFarm:
    """Homogeneous farm of turbines sharing one controller tuning.

    Internally per-turbine quantities are laid out as ``(n_rows, n_cols)``
    grids; a column's wake factors depend only on the row gap.
    """

    def __init__(
        self,
        turbine: TurbineParams | None = None,
        controller: WindControllerParams | None = None,
        layout: FarmLayout | None = None,
        omega_min: float = 0.1,
        max_substep: float = 0.5,
    ):
        self.turbine = turbine or TurbineParams()
        self.controller = controller or WindControllerParams.for_turbine(self.turbine)
        self.layout = layout or FarmLayout()
        self.controller.check(self.turbine)
        if not omega_min > 0:
            raise ValueError("omega_min must be positive")
        self.omega_min = omega_min
        self.max_substep = max_substep

        t, lay = self.turbine, self.layout
        gaps = np.arange(lay.n_rows) * lay.dx
        g2 = np.zeros(lay.n_rows)
        if lay.n_rows > 1:
            g2[1:] = wake_deficit(1.0, 1.0, gaps[1:], t.R_r, lay.k_w) ** 2
        # _G2[r, q] = squared unit deficit of row q on row r (zero unless q < r)
        self._G2 = np.array(
            [[g2[r - q] if q < r else 0.0 for q in range(lay.n_rows)] for r in range(lay.n_rows)]
        )
        self._half_rho_a = 0.5 * t.rho * t.A_r
        self._torque_gain = 2.0 * t.J_r / (t.rho * t.A_r * t.R_r)

    @property
    def n_turbines(self) -> int:
        return self.layout.n_turbines

    def _grid(self, flat: np.ndarray) -> np.ndarray:
        return flat.reshape(self.layout.n_cols, self.layout.n_rows).T

    @staticmethod
    def _flat(grid: np.ndarray) -> np.ndarray:
        return grid.T.reshape(-1)

    def _power(self, omega, u):
        t = self.turbine
        cp = np.interp(t.R_r * omega / u, t.cp_curve.lam, t.cp_curve.value)
        return self._half_rho_a * cp * u**3

    def _induction(self, lam):
        ct = np.interp(lam, self.turbine.ct_curve.lam, self.turbine.ct_curve.value)
        return 0.5 * (1.0 - np.sqrt(1.0 - ct))

    def _wind_grid(self, u_inf: float, omega_g: np.ndarray, lam0: float | None = None):
        t = self.turbine
        return _kernels.wind_grid(
            float(u_inf), np.ascontiguousarray(omega_g), self._G2, t.R_r, self.layout.u_min,
            t.ct_curve.lam, t.ct_curve.value, -1.0 if lam0 is None else float(lam0),
        )

    def observe(self, state: FarmState, u_inf: float) -> FarmSnapshot:
        """Effective winds, tip-speed ratios and aerodynamic powers at ``u_inf``."""
        if not u_inf > 0:
            raise NonPositiveWind(f"free-stream wind must be positive, got {u_inf}")
        omega = state.omega
        u = self._flat(self._wind_grid(u_inf, self._grid(omega)))
        lam = self.turbine.R_r * omega / u
        return FarmSnapshot(u, lam, self._power(omega, u), self._induction(lam))

    def initial_state(self, u_inf: float, lambda0: float) -> FarmState:
        """Rotor speeds putting every turbine at ``lambda0`` in its own waked wind."""
        if not u_inf > 0:
            raise NonPositiveWind(f"free-stream wind must be positive, got {u_inf}")
        g = self._wind_grid(u_inf, np.zeros((self.layout.n_rows, self.layout.n_cols)), lambda0)
        omega = np.maximum(lambda0 * g / self.turbine.R_r, self.omega_min)
        return FarmState(self._flat(omega))

    def step(
        self,
        state: FarmState,
        u_inf: float,
        p_farm_setpoint: float,
        dt: float,
        snapshot: FarmSnapshot | None = None,
    ) -> FarmStepResult:
        """Advance every rotor by ``dt`` with the wake field held (quasi-static).

        The farm setpoint is split evenly. ``snapshot`` may be passed when the
        caller already observed ``state`` at ``u_inf``.
        """
        snap = snapshot if snapshot is not None else self.observe(state, u_inf)
        p_sp = p_farm_setpoint / self.n_turbines
        u = snap.u_eff
        n_sub, h = substeps(dt, self.max_substep)
        omega = state.omega
        infeasible = np.zeros(self.n_turbines, dtype=bool)
        for k in range(n_sub):
            if k > 0:
                u = self._flat(self._wind_grid(u_inf, self._grid(omega)))
            omega, torque, bad = self._advance_rows(omega, u, u_inf, p_sp, h)
            infeasible |= bad
        # wake field of the new rotor speeds under the same free stream
        u = self._flat(self._wind_grid(u_inf, self._grid(omega)))
        power = self._power(omega, u)
        return FarmStepResult(
            FarmState(omega),
            power,
            float(power.sum()),
            torque,
            self.turbine.R_r * omega / u,
            infeasible,
        )

    def _advance_rows(self, omega, u, u_inf, p_sp, h):
        """Resolve torques and integrate rotors over one substep, front row first.

        Rows only see wakes from rows ahead of them, so once a row has been
        integrated its end speeds fix the wind the next row will see at the
        end of the substep. That wind rate enters the next row's barrier;
        without it a rotor at the barrier is pushed over it when the rows
        ahead slow down. Where the barrier row binds, it is re-solved
        against the RK4 end speed so the held torque cannot overshoot
        through curvature of P/omega within the substep.
        """
        t, c = self.turbine, self.controller
        w_new, torque, infeasible, bad = _kernels.advance_rows(
            np.ascontiguousarray(self._grid(omega)), np.ascontiguousarray(self._grid(u)),
            float(u_inf), float(p_sp), float(h), self._G2,
            t.R_r, t.J_r, self._half_rho_a, self._torque_gain,
            c.K, c.c_w, c.lambda_barrier, c.tg_max, self.omega_min, self.layout.u_min,
            t.cp_curve.lam, t.cp_curve.value, t.ct_curve.lam, t.ct_curve.value,
        )
        if bad:
            raise NonFiniteDerivative("rotor speed became non-finite")
        return self._flat(w_new), self._flat(torque), self._flat(infeasible)

    def available_power(self, u_inf: float) -> float:
        return farm_available_power(u_inf, self.turbine, self.n_turbines)
