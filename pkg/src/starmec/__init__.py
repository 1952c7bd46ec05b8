"""Energy-efficiency optimization for a STAR-RIS assisted UAV-MEC network.

A scenario describes the physical network (users, base station, UAV-mounted
simultaneously transmitting/reflecting surface, compute limits); the
optimizer jointly tunes resource allocation, user scheduling, the surface's
passive beamforming, and the UAV trajectory to maximize completed task bits
per joule, with benchmark baselines and a serializable report pipeline.
"""

from .scenario import (FlightPowerParams, Scenario, Trajectory, kinematics,
                       load_bundled, load_scenario, straight_line_trajectory,
                       heuristic_traversal_trajectory, validate_scenario)
from .star_ris import StarRisProfile, composite_gain, mrt_phases
from .tasks_energy import (Allocation, EnergyBreakdown, check_feasibility,
                           energy_breakdown, energy_efficiency, flight_power,
                           offload_rates, total_bits)
from .optimizer import BcdOptions, SolveReport, bcd_solve, default_initializer

__version__ = "0.1.0"

__all__ = [
    "FlightPowerParams", "Scenario", "Trajectory", "kinematics",
    "load_bundled", "load_scenario", "straight_line_trajectory",
    "heuristic_traversal_trajectory", "validate_scenario",
    "StarRisProfile", "composite_gain", "mrt_phases",
    "Allocation", "EnergyBreakdown", "check_feasibility", "energy_breakdown",
    "energy_efficiency", "flight_power", "offload_rates", "total_bits",
    "BcdOptions", "SolveReport", "bcd_solve", "default_initializer",
    "__version__",
]
