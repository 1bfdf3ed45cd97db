"""Synthetic demonstration generators.

Each task gets a scripted nominal demonstration: paired joint and target
trajectories built from sinusoid / minimum-jerk profiles and inverse
kinematics. The ball script encodes the batting coordination directly: the
hand track crosses slightly beyond the ball track inside a push window (the
gap dips below zero), which is what later lets the conditioned hand sweep
through the real ball and transfer velocity on contact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from phaseprim.kinematics import (
    DualArm,
    KinematicChain,
    desk_dual_arm,
    dual_inverse,
    forward,
    inverse,
    planar_leg,
    reach_arm,
)
from phaseprim.tasks.ball import GRAVITY


def min_jerk(s: np.ndarray) -> np.ndarray:
    """Smooth 0..1 profile with zero boundary velocity and acceleration."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    return s**3 * (10.0 - 15.0 * s + 6.0 * s * s)


@dataclass(frozen=True)
class BallDemoSpec:
    ball_center: float = 0.75
    ball_amplitude: float = 0.45
    hand_lateral: float = 0.22
    gap_base: float = 0.29  # mean hand shortfall behind the ball
    gap_swing: float = 0.34  # stroke depth; > gap_base gives penetration
    push_phase: float = math.pi + 0.3  # where the hand crosses deepest
    string_length: float = 1.5
    dt: float = 1.0 / 30.0

    @property
    def period(self) -> float:
        steps = int(round(2.0 * math.pi * math.sqrt(self.string_length / GRAVITY) / self.dt))
        return steps * self.dt

    def ball_y(self, phi):
        return self.ball_center + self.ball_amplitude * np.cos(phi)

    def hand_y(self, phi):
        gap = self.gap_base - self.gap_swing * np.cos(phi - self.push_phase)
        return self.ball_y(phi) - gap


def ball_demo(spec: BallDemoSpec = None, robot: DualArm = None):
    """One cycle of the batting coordination: (q, x, dt).

    q is the seven-joint trajectory tracking symmetric hand targets, x the
    ball target (lateral, progress). The hand stroke is a strict subset of
    the ball's travel range.
    """
    spec = spec or BallDemoSpec()
    robot = robot or desk_dual_arm()
    n_steps = int(round(spec.period / spec.dt))
    phi = 2.0 * math.pi * np.arange(n_steps) / n_steps
    hand_y = spec.hand_y(phi)
    ball_y = spec.ball_y(phi)
    q = np.zeros((n_steps, 7))
    guess = np.array([0.0, 1.9, -1.5, 0.6, -1.9, 1.5, -0.6])
    for i in range(n_steps):
        left = np.array([spec.hand_lateral, hand_y[i]])
        right = np.array([-spec.hand_lateral, hand_y[i]])
        guess = dual_inverse(robot, left, right, guess)
        q[i] = guess
    x = np.stack([np.zeros(n_steps), ball_y], axis=1)
    return q, x, spec.dt


@dataclass(frozen=True)
class HandoverDemoSpec:
    settle_time: float = 1.5
    giver_start: float = 0.90
    giver_end: float = 0.55
    hand_start: float = 0.25  # keep the fold clear of joint-limit corners
    hand_end: float = 0.55
    tail: float = 0.5  # hold after the stroke completes
    dt: float = 1.0 / 100.0


def handover_demo(spec: HandoverDemoSpec = None, arm: KinematicChain = None):
    """Receiver reaching to meet an approaching giver hand: (q, x, dt)."""
    spec = spec or HandoverDemoSpec()
    arm = arm or reach_arm()
    n_stroke = int(round(spec.settle_time / spec.dt))
    n_tail = int(round(spec.tail / spec.dt))
    s = min_jerk(np.arange(n_stroke + n_tail + 1) / n_stroke)
    giver = spec.giver_start + (spec.giver_end - spec.giver_start) * s
    hand = spec.hand_start + (spec.hand_end - spec.hand_start) * s
    q = np.zeros((s.size, arm.n_joints))
    guess = np.array([0.0, 2.2, -1.1])
    for i in range(s.size):
        guess = inverse(arm, np.array([0.0, hand[i]]), guess)
        q[i] = guess
    x = np.stack([np.zeros(s.size), giver], axis=1)
    return q, x, spec.dt


def giver_trajectory(spec: HandoverDemoSpec, t: float) -> float:
    """Giver progress position at time t under the minimum-jerk stroke."""
    return float(
        spec.giver_start
        + (spec.giver_end - spec.giver_start) * min_jerk(t / spec.settle_time)
    )


@dataclass(frozen=True)
class FootstepDemoSpec:
    gait_period: float = 1.0
    swing_center: float = 0.33  # mid-stance height, comfortably inside reach
    swing_amplitude: float = 0.08
    dt: float = 1.0 / 100.0


def footstep_demo(spec: FootstepDemoSpec = None, leg: KinematicChain = None):
    """One gait cycle with the foot tracking the swing target: (q, x, dt)."""
    spec = spec or FootstepDemoSpec()
    leg = leg or planar_leg()
    n_steps = int(round(spec.gait_period / spec.dt))
    phi = 2.0 * math.pi * np.arange(n_steps) / n_steps
    y = spec.swing_center + spec.swing_amplitude * np.cos(phi)
    q = np.zeros((n_steps, leg.n_joints))
    guess = np.array([0.0, 2.2, -1.1])
    for i in range(n_steps):
        guess = inverse(leg, np.array([0.0, y[i]]), guess)
        q[i] = guess
    x = np.stack([np.zeros(n_steps), y], axis=1)
    return q, x, spec.dt
