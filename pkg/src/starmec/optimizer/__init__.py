from .bcd import (MODE_SPLIT, MODE_STAR, BcdOptions, SolveReport, bcd_solve,
                  default_initializer)
from .beamforming import (BeamformingResult, saturate_amplitudes,
                          split_profile, subproblem2_solve,
                          subproblem2_split_solve)
from .resource import ResourceProgram, resource_dinkelbach, schedule_matrix
from .scheduling import SchedulingResult, round_schedule, subproblem1_solve
from .state import DinkelbachState, PenaltyState, dinkelbach_loop
from .trajectory_opt import TrajectoryResult, subproblem3_solve

__all__ = [
    "BcdOptions", "SolveReport", "bcd_solve", "default_initializer",
    "MODE_STAR", "MODE_SPLIT",
    "BeamformingResult", "saturate_amplitudes", "split_profile",
    "subproblem2_solve", "subproblem2_split_solve",
    "ResourceProgram", "resource_dinkelbach", "schedule_matrix",
    "SchedulingResult", "round_schedule", "subproblem1_solve",
    "DinkelbachState", "PenaltyState", "dinkelbach_loop",
    "TrajectoryResult", "subproblem3_solve",
]
