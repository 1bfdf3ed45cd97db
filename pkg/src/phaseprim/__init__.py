"""Phase-coupled movement primitives.

A target's progress signal is mapped to a phase angle, a coupled oscillator
tracks that phase, and a phase-indexed library of joint Gaussians turns the
oscillator phase plus the observed target into a commanded robot pose.
Policy search over the oscillator coupling closes the loop on simulated
interaction tasks.
"""

from phaseprim.phases import (
    MODE_CYCLIC,
    MODE_SINGLE_STROKE,
    OscillatorState,
    PhaseEstimate,
    PlaneSignal,
    PlaneSpec,
    estimate_velocity,
    phase_from_plane,
    step_oscillator,
    wrap_angle,
)

__all__ = [
    "MODE_CYCLIC",
    "MODE_SINGLE_STROKE",
    "OscillatorState",
    "PhaseEstimate",
    "PlaneSignal",
    "PlaneSpec",
    "estimate_velocity",
    "phase_from_plane",
    "step_oscillator",
    "wrap_angle",
]

__version__ = "0.1.0"
