"""Scenario files: a YAML tree with a schema version, one section per
subsystem, and defaults for everything except what makes the run unique.

Unknown keys are rejected so that typos do not silently fall back to
defaults. Every default that was filled in is recorded on the Scenario.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .battery import BatteryParams, OcvTable, default_ocv
from .errors import ParseError, ValidationError
from .signals import PROFILES, SignalSet, generate_synthetic_signals, read_signal_csv
from .solar import SolarParams
from .supervisor import SupervisorParams
from .wind import (
    NREL5MW_ROTOR_INERTIA,
    NREL5MW_ROTOR_RADIUS,
    FarmLayout,
    PowerCurve,
    TurbineParams,
    WindControllerParams,
    WindFarm,
    default_cp_curve,
    default_ct_curve,
)

SCHEMA_VERSION = 1

DEFAULTS: dict[str, dict[str, Any]] = {
    "run": {"duration": 6 * 3600.0, "dt": 0.5, "seed": 0},
    "signals": {
        "source": "synthetic",
        "profile": "gusty",
        "plant_rating": 100e6,
        "demand_mean": 0.6,
        "demand_std": 0.12,
        "wind_mean": 10.0,
        "sample_period": 1.0,
        "start_hour": 9.0,
        "wind": None,
        "irradiance": None,
        "demand": None,
    },
    "farm": {
        "n_rows": 8,
        "n_cols": 4,
        "spacing_diameters": 7.0,
        "k_w": 0.04,
        "u_min": 1.0,
        "rotor_inertia": NREL5MW_ROTOR_INERTIA,
        "rotor_radius": NREL5MW_ROTOR_RADIUS,
        "air_density": 1.225,
        "rated_power": 5e6,
        "cp_curve": None,
        "ct_curve": None,
        "K": 2.0,
        "c_w": 1.0,
        "lambda_barrier_fraction": 0.95,
        "tg_max": 1e7,
        "omega_min": 0.1,
        "max_substep": 0.5,
    },
    "solar": {
        "area": 1e5,
        "efficiency": 0.5,
        "tau": 10.0,
        "kp": 2.5,
        "ki": 0.2,
        "max_substep": 0.25,
    },
    "battery": {
        "energy_wh": 160e6,
        "v_nom": 3.3,
        "q_cell": 20.0,
        "max_c_rate": 0.25,
        "r0": 0.005,
        "r1": 0.002,
        "c1": 5000.0,
        "eta_b": 0.99,
        "g_hyst": 150.0,
        "m_hyst": 0.03,
        "ocv_curve": None,
        "z_min": 0.1,
        "z_max": 0.9,
        "k_ic": 20.0,
        "r_e": 0.0,
        "c_ic": 20.0,
        "c_z1_min": 1.0,
        "c_z2_min": 1.0,
        "c_z1_max": 1.0,
        "c_z2_max": 1.0,
        "soc_ns_factor": True,
        "max_substep": 0.025,
    },
    "supervisor": {
        "soc_low_threshold": 0.15,
        "soc_high_threshold": 0.85,
        "battery_power_rating": 40e6,
        "update_period": 1.0,
        "saturation_margin": 0.0,
        "integral_gain": 0.2,
        "ramp_width": 0.05,
        "charge_from_surplus": False,
    },
    "initial": {
        "lambda0": None,
        "soc": 0.5,
        "solar_power": 0.0,
        "cell_current": 0.0,
    },
}

_OPTIONAL_PATHS = {
    ("signals", "wind"),
    ("signals", "irradiance"),
    ("signals", "demand"),
    ("farm", "cp_curve"),
    ("farm", "ct_curve"),
    ("battery", "ocv_curve"),
}
_STRINGS = {("signals", "source"), ("signals", "profile")}
_INTS = {("run", "seed"), ("farm", "n_rows"), ("farm", "n_cols")}
_BOOLS = {("battery", "soc_ns_factor"), ("supervisor", "charge_from_surplus")}
_NULLABLE = {("initial", "lambda0")}


@dataclass(frozen=True)
class InitialConditions:
    lambda0: float
    soc: float
    solar_power: float
    cell_current: float


@dataclass(frozen=True, eq=False)
class Scenario:
    duration: float
    dt: float
    seed: int
    signals: SignalSet
    turbine: TurbineParams
    controller: WindControllerParams
    layout: FarmLayout
    omega_min: float
    farm_max_substep: float
    solar: SolarParams
    battery: BatteryParams
    supervisor: SupervisorParams
    initial: InitialConditions
    resolved: dict = field(default_factory=dict)
    defaults_applied: tuple[str, ...] = ()
    source: str = ""

    @property
    def n_rows(self) -> int:
        return math.floor(self.duration / self.dt + 1e-9) + 1

    @property
    def supervisor_stride(self) -> int:
        return round(self.supervisor.update_period / self.dt)

    def build_farm(self) -> WindFarm:
        return WindFarm(
            self.turbine, self.controller, self.layout, self.omega_min, self.farm_max_substep
        )


def _coerce(section: str, key: str, value: Any, where: str) -> Any:
    tag = (section, key)
    if value is None:
        if tag in _OPTIONAL_PATHS or tag in _NULLABLE:
            return None
        raise ParseError("value must not be empty", where)
    if tag in _STRINGS or tag in _OPTIONAL_PATHS:
        if not isinstance(value, str):
            raise ParseError(f"expected a string, got {value!r}", where)
        return value
    if tag in _BOOLS:
        if not isinstance(value, bool):
            raise ParseError(f"expected true/false, got {value!r}", where)
        return value
    if isinstance(value, bool):
        raise ParseError(f"expected a number, got {value!r}", where)
    if tag in _INTS:
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int):
            raise ParseError(f"expected an integer, got {value!r}", where)
        return value
    if isinstance(value, str):
        # YAML 1.1 reads "1e6" (no decimal point) as a string
        try:
            value = float(value)
        except ValueError:
            raise ParseError(f"expected a number, got {value!r}", where) from None
    if not isinstance(value, (int, float)):
        raise ParseError(f"expected a number, got {value!r}", where)
    return float(value)


def _merge(raw: dict, overrides: dict, where: str) -> tuple[dict, list[str]]:
    """Resolve every section against DEFAULTS; return (tree, defaulted keys)."""
    resolved: dict[str, dict[str, Any]] = {}
    applied: list[str] = []
    run_keys = set(DEFAULTS["run"])
    for key in raw:
        known = (key in DEFAULTS and key != "run") or key in run_keys or key == "schema_version"
        if not known:
            raise ParseError(f"unknown section or field {key!r}", where)
    for section, defaults in DEFAULTS.items():
        if section == "run":
            given = {k: raw[k] for k in run_keys if k in raw}
        else:
            given = raw.get(section) or {}
            if not isinstance(given, dict):
                raise ParseError(f"section {section!r} must be a mapping", where)
            for key in given:
                if key not in defaults:
                    raise ParseError(f"unknown field {section}.{key}", where)
        out = {}
        for key, default in defaults.items():
            label = key if section == "run" else f"{section}.{key}"
            if label in overrides:
                out[key] = _coerce(section, key, overrides[label], f"{where}: override {label}")
            elif key in given:
                out[key] = _coerce(section, key, given[key], f"{where}: {label}")
            else:
                out[key] = default
                applied.append(f"{label}={default!r}")
        resolved[section] = out
    return resolved, applied


def _load_yaml(path: Path) -> dict:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read scenario ({exc.strerror})", str(path)) from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}" if mark is not None else str(path)
        problem = getattr(exc, "problem", None) or str(exc)
        raise ParseError(problem, where) from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ParseError("top level must be a mapping", str(path))
    return raw


def _validated(invariant_fn):
    try:
        return invariant_fn()
    except ValidationError:
        raise
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc


def _resolve_path(base: Path, p: str) -> Path:
    q = Path(p)
    return q if q.is_absolute() else base / q


def _curve(base: Path, p: str | None, default, where: str) -> PowerCurve | None:
    if p is None:
        return default()
    path = _resolve_path(base, p)
    if not path.exists():
        raise ParseError(f"file not found: {path}", where)
    return PowerCurve.from_csv(path)


def load_scenario(path: str | Path, overrides: dict[str, Any] | None = None) -> Scenario:
    """Parse and validate a scenario file.

    ``overrides`` maps dotted field names (``"dt"``, ``"duration"``,
    ``"battery.z_min"``) to values that replace the file's.
    """
    path = Path(path)
    raw = _load_yaml(path)
    version = raw.get("schema_version")
    if version is None:
        raise ParseError("missing schema_version", str(path))
    if version != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})", str(path))
    tree, applied = _merge(raw, dict(overrides or {}), str(path))
    return build_scenario(tree, applied, base_dir=path.parent, source=str(path))


def build_scenario(
    tree: dict, defaults_applied=(), base_dir: Path | str = ".", source: str = ""
) -> Scenario:
    """Validate a fully resolved tree (as produced by :func:`load_scenario`)."""
    base = Path(base_dir)
    tree = {k: dict(v) for k, v in tree.items()}
    for section, key in _OPTIONAL_PATHS:
        if tree[section][key] is not None:
            tree[section][key] = str(_resolve_path(base, tree[section][key]).resolve())
    run, sig, fm, so, ba, su, ini = (
        tree[k] for k in ("run", "signals", "farm", "solar", "battery", "supervisor", "initial")
    )
    duration, dt = run["duration"], run["dt"]
    if not duration > 0:
        raise ValidationError("duration > 0", f"got {duration}")
    if not dt > 0:
        raise ValidationError("dt > 0", f"got {dt}")

    turbine = _validated(
        lambda: TurbineParams(
            J_r=fm["rotor_inertia"],
            R_r=fm["rotor_radius"],
            rho=fm["air_density"],
            cp_curve=_curve(base, fm["cp_curve"], default_cp_curve, "farm.cp_curve"),
            ct_curve=_curve(base, fm["ct_curve"], default_ct_curve, "farm.ct_curve"),
            rated_power=fm["rated_power"],
        )
    )
    controller = WindControllerParams.for_turbine(
        turbine, fm["lambda_barrier_fraction"], K=fm["K"], c_w=fm["c_w"], tg_max=fm["tg_max"]
    )
    _validated(lambda: controller.check(turbine))
    layout = _validated(
        lambda: FarmLayout(
            n_rows=fm["n_rows"],
            n_cols=fm["n_cols"],
            dx=fm["spacing_diameters"] * 2.0 * turbine.R_r,
            k_w=fm["k_w"],
            u_min=fm["u_min"],
        )
    )
    if not fm["omega_min"] > 0:
        raise ValidationError("omega_min > 0")
    if not fm["max_substep"] > 0:
        raise ValidationError("farm.max_substep > 0")

    solar = _validated(lambda: SolarParams(**so))

    ocv = default_ocv()
    if ba["ocv_curve"] is not None:
        p = _resolve_path(base, ba["ocv_curve"])
        if not p.exists():
            raise ParseError(f"file not found: {p}", "battery.ocv_curve")
        ocv = _validated(lambda: OcvTable.from_csv(p))
    cell_keys = {k: v for k, v in ba.items() if k not in ("energy_wh", "v_nom", "q_cell", "max_c_rate", "ocv_curve")}
    battery = _validated(
        lambda: BatteryParams.sized(
            ba["energy_wh"], ba["v_nom"], ba["q_cell"], ba["max_c_rate"], ocv=ocv, **cell_keys
        )
    )

    supervisor = _validated(lambda: SupervisorParams(**su))
    if not battery.z_min <= supervisor.soc_low_threshold:
        raise ValidationError("z_min <= soc_low_threshold")
    if not supervisor.soc_high_threshold <= battery.z_max:
        raise ValidationError("soc_high_threshold <= z_max")
    if not supervisor.update_period >= dt:
        raise ValidationError("update_period >= dt")
    stride = supervisor.update_period / dt
    if abs(stride - round(stride)) > 1e-9 * stride:
        raise ValidationError("update_period is a whole number of dt steps")

    lambda0 = ini["lambda0"] if ini["lambda0"] is not None else controller.lambda_barrier
    initial = InitialConditions(lambda0, ini["soc"], ini["solar_power"], ini["cell_current"])
    if not 0 <= lambda0 <= controller.lambda_barrier:
        raise ValidationError("0 <= initial lambda0 <= lambda_barrier", f"got {lambda0}")
    if not battery.z_min <= initial.soc <= battery.z_max:
        raise ValidationError("z_min <= initial soc <= z_max", f"got {initial.soc}")
    if not abs(initial.cell_current) <= battery.i_c_max:
        raise ValidationError("|initial cell_current| <= i_c_max")
    if not initial.solar_power >= 0:
        raise ValidationError("initial solar_power >= 0")

    signals = _signals(sig, run, base)
    for s in signals:
        if not s.covers(0.0, duration):
            raise ValidationError(
                "signal spans cover [0, duration]",
                f"{s.name} spans [{s.start}, {s.end}], duration {duration}",
            )

    return Scenario(
        duration=duration,
        dt=dt,
        seed=run["seed"],
        signals=signals,
        turbine=turbine,
        controller=controller,
        layout=layout,
        omega_min=fm["omega_min"],
        farm_max_substep=fm["max_substep"],
        solar=solar,
        battery=battery,
        supervisor=supervisor,
        initial=initial,
        resolved=tree,
        defaults_applied=tuple(defaults_applied),
        source=source,
    )


def _signals(sig: dict, run: dict, base: Path) -> SignalSet:
    if sig["source"] == "synthetic":
        if sig["profile"] not in PROFILES:
            raise ValidationError(f"signals.profile in {PROFILES}", f"got {sig['profile']!r}")
        return _validated(
            lambda: generate_synthetic_signals(
                run["seed"],
                run["duration"],
                sig["profile"],
                plant_rating=sig["plant_rating"],
                demand_mean=sig["demand_mean"],
                demand_std=sig["demand_std"],
                wind_mean=sig["wind_mean"],
                sample_period=sig["sample_period"],
                start_hour=sig["start_hour"],
            )
        )
    if sig["source"] == "csv":
        out = []
        for name in ("wind", "irradiance", "demand"):
            if sig[name] is None:
                raise ParseError(f"csv signals need a path for signals.{name}", f"signals.{name}")
            p = _resolve_path(base, sig[name])
            if not p.exists():
                raise ParseError(f"file not found: {p}", f"signals.{name}")
            out.append(read_signal_csv(p, name))
        wind, irr, demand = out
        if (wind.values <= 0).any():
            raise ValidationError("wind speed > 0")
        if (irr.values < 0).any():
            raise ValidationError("irradiance >= 0")
        if (demand.values < 0).any():
            raise ValidationError("demand >= 0")
        return SignalSet(wind, irr, demand)
    raise ValidationError("signals.source in ('synthetic', 'csv')", f"got {sig['source']!r}")


def resolved_yaml(scenario: Scenario) -> str:
    """The fully resolved configuration, loadable by :func:`load_scenario`."""
    tree = {"schema_version": SCHEMA_VERSION}
    tree.update(scenario.resolved["run"])
    for section in DEFAULTS:
        if section != "run":
            tree[section] = dict(scenario.resolved[section])
    return yaml.safe_dump(tree, sort_keys=False)
