"""Phase angles, phase-plane estimation, and the coupled phase oscillator.

The phase of a moving point is read off its normalized phase plane
(position vs. velocity), and a first-order oscillator drives the robot's
own phase toward the target's with a configurable stiffness and offset.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

TWO_PI = 2.0 * math.pi

# Phase ranges come in two flavours: closed orbits that wrap around the
# circle, and one-shot motions confined to the upper half of the plane.
MODE_CYCLIC = "cyclic"
MODE_SINGLE_STROKE = "single_stroke"

#: Both normalized plane components below this magnitude count as degenerate.
DEGENERATE_EPS = 1e-12


def wrap_angle(x: float) -> float:
    """Wrap an angle to (-pi, pi], mapping -pi to +pi."""
    w = math.remainder(x, TWO_PI)
    if w <= -math.pi:
        w += TWO_PI
    return w


def clamp_stroke(x: float) -> float:
    """Clamp an angle to the single-stroke range [0, pi].

    Negative angles snap to whichever endpoint is closer on the circle:
    values just past -pi are the wrap image of pi (the inner apex), not of
    the stroke start, so a settled stroke stays at pi under rate noise.
    """
    x = wrap_angle(x)
    if x < 0.0:
        return math.pi if x < -0.5 * math.pi else 0.0
    return x


def _check_mode(mode: str) -> None:
    if mode not in (MODE_CYCLIC, MODE_SINGLE_STROKE):
        raise ValueError(f"unknown phase mode {mode!r}")


@dataclass(frozen=True)
class PlaneSpec:
    """Normalization constants for a phase-plane signal.

    ``y_center`` shifts the position to zero-mean and ``y_scale`` /
    ``y_dot_scale`` bring position and velocity to comparable magnitude, so
    the plane trajectory is roughly circular and its angle is well defined.
    """

    y_center: float = 0.0
    y_scale: float = 1.0
    y_dot_scale: float = 1.0

    def __post_init__(self) -> None:
        if not (self.y_scale > 0.0):
            raise ValueError("y_scale must be positive")
        if not (self.y_dot_scale > 0.0):
            raise ValueError("y_dot_scale must be positive")

    def signal(self, y: float, y_dot: float) -> "PlaneSignal":
        """Bundle a raw (position, velocity) pair with these constants."""
        return PlaneSignal(
            y=y,
            y_dot=y_dot,
            y_center=self.y_center,
            y_scale=self.y_scale,
            y_dot_scale=self.y_dot_scale,
        )


@dataclass(frozen=True)
class PlaneSignal:
    """One observation of a progress coordinate on its phase plane."""

    y: float
    y_dot: float
    y_center: float = 0.0
    y_scale: float = 1.0
    y_dot_scale: float = 1.0

    def __post_init__(self) -> None:
        if not (self.y_scale > 0.0):
            raise ValueError("y_scale must be positive")
        if not (self.y_dot_scale > 0.0):
            raise ValueError("y_dot_scale must be positive")


class PhaseEstimate(NamedTuple):
    angle: float
    degenerate: bool


def phase_from_plane(
    signal: PlaneSignal, prev_phase: Optional[float] = None
) -> PhaseEstimate:
    """Phase angle of a point on its normalized phase plane.

    The angle is ``-atan2(y_dot_n, y_n)`` over the normalized components, so
    a positive velocity sweeps the phase clockwise through the lower half
    plane and a decaying return closes the orbit through the upper half.
    When both components vanish the angle is undefined; the previous phase
    (or 0.0 if none is given) is returned with the degenerate flag set.
    """
    y_n = (signal.y - signal.y_center) / signal.y_scale
    y_dot_n = signal.y_dot / signal.y_dot_scale
    if abs(y_n) < DEGENERATE_EPS and abs(y_dot_n) < DEGENERATE_EPS:
        fallback = 0.0 if prev_phase is None else prev_phase
        return PhaseEstimate(fallback, True)
    return PhaseEstimate(wrap_angle(-math.atan2(y_dot_n, y_n)), False)


def estimate_velocity(
    y_now: float,
    y_prev: float,
    dt: float,
    y_dot_prev: float = 0.0,
    smoothing: float = 0.5,
) -> float:
    """First-difference velocity with exponential smoothing.

    ``smoothing`` keeps that fraction of the previous estimate; 0 yields the
    raw finite difference. Raises ValueError for a non-positive step.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if not 0.0 <= smoothing < 1.0:
        raise ValueError("smoothing must lie in [0, 1)")
    raw = (y_now - y_prev) / dt
    return smoothing * y_dot_prev + (1.0 - smoothing) * raw


@dataclass
class OscillatorState:
    """State of the robot-side phase oscillator.

    ``omega`` is the free-running rate; the default 0 makes the oscillator
    advance only when coupled to a target.
    """

    phi_robot: float = 0.0
    omega: float = 0.0
    mode: str = field(default=MODE_CYCLIC)

    def __post_init__(self) -> None:
        _check_mode(self.mode)
        if not math.isfinite(self.phi_robot):
            raise ValueError("phi_robot must be finite")
        if self.mode == MODE_CYCLIC:
            self.phi_robot = wrap_angle(self.phi_robot)
        else:
            if not 0.0 <= self.phi_robot <= math.pi:
                raise ValueError(
                    "single-stroke phase must lie in [0, pi], got "
                    f"{self.phi_robot!r}"
                )


def step_oscillator(
    state: OscillatorState,
    phi_target: float,
    coupling_k: float,
    alpha: float,
    dt: float,
) -> OscillatorState:
    """One explicit Euler step of the coupled phase oscillator.

    The phase rate is ``omega + K * sin(phi_target - phi_robot + alpha)``,
    pulling the robot phase toward the target phase offset by ``alpha``.
    Cyclic phases wrap to (-pi, pi]; single-stroke phases clamp to [0, pi].
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if coupling_k < 0.0:
        raise ValueError("coupling stiffness must be non-negative")
    if not all(
        math.isfinite(v) for v in (phi_target, coupling_k, alpha, dt, state.phi_robot)
    ):
        raise ValueError("oscillator step received a non-finite input")
    if coupling_k * dt > 1.0:
        warnings.warn(
            "coupling stiffness times step exceeds 1; the phase may "
            "overshoot its fixed point",
            RuntimeWarning,
            stacklevel=2,
        )
    rate = state.omega + coupling_k * math.sin(
        phi_target - state.phi_robot + alpha
    )
    phi = state.phi_robot + dt * rate
    if state.mode == MODE_CYCLIC:
        phi = wrap_angle(phi)
    else:
        phi = clamp_stroke(phi)
    return OscillatorState(phi_robot=phi, omega=state.omega, mode=state.mode)
