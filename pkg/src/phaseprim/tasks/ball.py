"""Ball-on-a-string world.

The ball hangs from a fixed pivot and swings in the progress direction; the
robot bats it with whichever hand leads. Contact is kinematic: when a hand
reaches the ball while closing on it, the ball rides the hand surface and
takes over the faster of the two velocities, which makes pushing (hand
faster than ball) and blocking (hand slower or still) distinct regimes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from phaseprim.coupling import PolicyWeights, RbfBasis
from phaseprim.kinematics import DualArm, desk_dual_arm
from phaseprim.policy_search import RolloutOutcome
from phaseprim.portrait import PhasePortrait
from phaseprim.tasks.base import CostSpec, WorldObs

GRAVITY = 9.81
# below this string-vertical cosine the progress/angle conversion degenerates
MIN_STRING_COS = 0.1


@dataclass
class BallConfig:
    string_length: float = 1.5
    pivot_y: float = 0.45  # progress position of the hanging point
    damping: float = 0.15  # 1/s; keeps the discrete pendulum dissipative
    dt: float = 1.0 / 30.0
    lag: float = 0.08  # actuator time constant, 0 = ideal tracking
    initial_angle: float = 0.3755  # released from roughly 1 m progress
    initial_velocity: float = 0.0
    lateral_relax: float = 0.5  # s, lateral recentering after a disturbance
    q_home: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.string_length <= 0 or self.dt <= 0:
            raise ValueError("string_length and dt must be positive")
        if self.damping < 0 or self.lag < 0:
            raise ValueError("damping and lag must be non-negative")


def _default_home() -> np.ndarray:
    # symmetric crouch with both hands low in front of the waist
    arm = np.array([1.5, -1.4, 0.4])
    return np.concatenate([[0.0], arm, -arm])


class BallWorld:
    """Damped pendulum pushed by the dual-arm robot."""

    def __init__(self, config: BallConfig = None, robot: DualArm = None):
        self.config = config or BallConfig()
        self.robot = robot or desk_dual_arm()
        self.dt = self.config.dt
        self.reset()

    def reset(self) -> WorldObs:
        cfg = self.config
        self.t = 0.0
        self.theta = float(cfg.initial_angle)
        self.theta_dot = float(cfg.initial_velocity)
        home = cfg.q_home if cfg.q_home is not None else _default_home()
        self.q = np.asarray(home, dtype=float).copy()
        self.ball_x = 0.0
        self.grabbed = False
        self._failed = False
        return self._observe(contact=False)

    @property
    def ball_y(self) -> float:
        cfg = self.config
        return cfg.pivot_y + cfg.string_length * math.sin(self.theta)

    @property
    def ball_y_dot(self) -> float:
        cfg = self.config
        return cfg.string_length * math.cos(self.theta) * self.theta_dot

    def energy(self) -> float:
        """Pendulum energy above the rest state, per unit mass."""
        cfg = self.config
        speed = cfg.string_length * self.theta_dot
        return 0.5 * speed * speed + GRAVITY * cfg.string_length * (
            1.0 - math.cos(self.theta)
        )

    def set_ball_progress(self, y: float, y_dot: float = 0.0) -> None:
        """Place the ball at a progress position (used by grab/release)."""
        cfg = self.config
        s = (y - cfg.pivot_y) / cfg.string_length
        s = min(1.0, max(-1.0, s))
        self.theta = math.asin(s)
        cos_t = max(math.cos(self.theta), MIN_STRING_COS)
        self.theta_dot = y_dot / (cfg.string_length * cos_t)

    def _track(self, q_cmd: np.ndarray) -> None:
        cfg = self.config
        q_cmd = self.robot.clamp(np.asarray(q_cmd, dtype=float))
        if not np.all(np.isfinite(q_cmd)):
            self._failed = True
            return
        if cfg.lag <= 0:
            self.q = q_cmd
        else:
            self.q = self.q + (cfg.dt / cfg.lag) * (q_cmd - self.q)

    def _observe(self, contact: bool) -> WorldObs:
        left, right = self.robot.hands(self.q)
        return WorldObs(
            target=np.array([self.ball_x, self.ball_y]),
            y_left=float(left[1]),
            y_right=float(right[1]),
            q=self.q.copy(),
            contact=contact,
            failed=self._failed,
        )

    def step(self, q_cmd: np.ndarray) -> WorldObs:
        cfg = self.config
        prev_left, prev_right = self.robot.hands(self.q)
        self._track(q_cmd)
        left, right = self.robot.hands(self.q)
        if left[1] >= right[1]:
            y_hand, y_hand_prev = left[1], prev_left[1]
        else:
            y_hand, y_hand_prev = right[1], prev_right[1]
        hand_vel = (y_hand - y_hand_prev) / cfg.dt

        contact = False
        if self.grabbed:
            # held by the external agent: dynamics suspended
            self.theta_dot = 0.0
        else:
            self.theta_dot += cfg.dt * (
                -(GRAVITY / cfg.string_length) * math.sin(self.theta)
                - cfg.damping * self.theta_dot
            )
            self.theta += cfg.dt * self.theta_dot
            self.ball_x += (cfg.dt / cfg.lateral_relax) * (0.0 - self.ball_x)
            if y_hand >= self.ball_y and hand_vel >= self.ball_y_dot:
                contact = True
                new_vel = max(self.ball_y_dot, hand_vel)
                self.set_ball_progress(y_hand, new_vel)
        self.t += cfg.dt
        if not (math.isfinite(self.theta) and math.isfinite(self.theta_dot)):
            self._failed = True
        return self._observe(contact)


def push_onsets(contact: np.ndarray, dt: float, merge_window: float = 0.3):
    """Times where a push begins; contact runs closer than the window merge."""
    contact = np.asarray(contact, dtype=bool)
    onsets = []
    last_end = -math.inf
    in_contact = False
    for i, c in enumerate(contact):
        if c and not in_contact:
            t = i * dt
            if t - last_end > merge_window:
                onsets.append(t)
            in_contact = True
        elif not c and in_contact:
            last_end = i * dt
            in_contact = False
    return np.asarray(onsets)


def longest_push_streak(onset_times, max_gap: float = 4.0) -> int:
    """Longest run of pushes whose spacing never exceeds max_gap seconds."""
    onset_times = np.asarray(onset_times, dtype=float)
    if onset_times.size == 0:
        return 0
    best = run = 1
    for gap in np.diff(onset_times):
        run = run + 1 if gap <= max_gap else 1
        best = max(best, run)
    return best


@dataclass
class BallRolloutTask:
    """Adapts the ball world + controller to the policy-search interface."""

    portrait: PhasePortrait
    basis: RbfBasis
    config: BallConfig
    robot: DualArm = None
    cost_spec: CostSpec = None
    duration: float = 30.0

    def __post_init__(self):
        if self.robot is None:
            self.robot = desk_dual_arm()
        if self.cost_spec is None:
            self.cost_spec = CostSpec()

    def run(self, weights: PolicyWeights):
        from phaseprim.tasks.controller import run_phase_controller

        world = BallWorld(self.config, self.robot)
        return run_phase_controller(
            world, self.portrait, self.basis, weights, self.duration
        )

    def rollout(self, weight_vector) -> RolloutOutcome:
        weights = PolicyWeights.from_concat(np.asarray(weight_vector, dtype=float))
        log = self.run(weights)
        cost = log.rollout_cost(self.cost_spec)
        if log.failed or not math.isfinite(cost):
            return RolloutOutcome(cost=self.cost_spec.failure_cost, failed=True)
        return RolloutOutcome(cost=cost)
