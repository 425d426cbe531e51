"""Energy-constrained aerial relay optimization under a probabilistic
line-of-sight channel: trajectory, transmit power, and user scheduling."""

from .channel import (AirPosition, ChannelParams, GroundNode, elevation_deg,
                      expected_rate, los_probability, lower_bound_rate)
from .driver import (RunReport, SchemeConfig, compare_schemes, optimize,
                     scheme_config, scheme_names)
from .energy import BudgetReport, RotorcraftParams, average_propulsion
from .model import (DecisionVariables, Scenario, ScenarioError,
                    feasibility_audit, init_solution, load_builtin_scenario,
                    load_scenario, objective, scenario_from_dict)

__version__ = "0.1.0"

__all__ = [
    "AirPosition", "BudgetReport", "ChannelParams", "DecisionVariables",
    "GroundNode", "RotorcraftParams", "RunReport", "Scenario",
    "ScenarioError", "SchemeConfig", "average_propulsion", "compare_schemes",
    "elevation_deg", "expected_rate", "feasibility_audit", "init_solution",
    "load_builtin_scenario", "load_scenario", "los_probability",
    "lower_bound_rate", "objective", "optimize", "scenario_from_dict",
    "scheme_config", "scheme_names", "__version__",
]
