"""Simulated tasks: ball batting, handover, and footstep placement."""

from phaseprim.tasks.base import (
    CostSpec,
    TaskWorld,
    TrajectoryLog,
    WorldObs,
    save_trajectory_csv,
    second_differences,
)
from phaseprim.tasks.ball import BallConfig, BallWorld
from phaseprim.tasks.controller import PhaseController, run_phase_controller
from phaseprim.tasks.footstep import (
    FootstepConfig,
    FootstepWorld,
    footstep_portrait,
    run_footstep_placement,
    touchdown_errors,
    touchdown_indices,
)
from phaseprim.tasks.handover import (
    HandoverConfig,
    HandoverWorld,
    run_handover_giver,
    settle_time,
)

__all__ = [
    "BallConfig",
    "BallWorld",
    "CostSpec",
    "FootstepConfig",
    "FootstepWorld",
    "HandoverConfig",
    "HandoverWorld",
    "PhaseController",
    "TaskWorld",
    "TrajectoryLog",
    "WorldObs",
    "footstep_portrait",
    "run_footstep_placement",
    "run_handover_giver",
    "run_phase_controller",
    "save_trajectory_csv",
    "second_differences",
    "settle_time",
    "touchdown_errors",
    "touchdown_indices",
]
