"""Hybrid power plant simulator: wind farm, solar plant and battery under
barrier-filtered local controllers and a rule-based supervisor."""

from .scenario import Scenario, load_scenario
from .simulate import RunRecord, run_scenario

__all__ = ["RunRecord", "Scenario", "load_scenario", "run_scenario"]
__version__ = "0.1.0"
