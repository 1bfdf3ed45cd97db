"""Handover task: a scripted giver hand approaches, the receiver reaches.

The giver's progress position plays the target role; the receiver arm is
driven by the phase controller. Slower approaches (a fuller cup) stretch
the stroke, and the receiver's settling time stretches with them without
retraining because the portrait is indexed by phase, not time.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from phaseprim.kinematics import KinematicChain, forward, inverse, reach_arm
from phaseprim.tasks.base import WorldObs
from phaseprim.tasks.synth import HandoverDemoSpec, giver_trajectory


@dataclass
class HandoverConfig:
    demo: HandoverDemoSpec = field(default_factory=HandoverDemoSpec)
    dt: float = 1.0 / 100.0
    lag: float = 0.0
    q_home: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.lag < 0:
            raise ValueError("lag must be non-negative")


class HandoverWorld:
    """Scripted giver plus a lag-tracked receiver arm."""

    def __init__(
        self,
        config: HandoverConfig = None,
        arm: KinematicChain = None,
    ):
        self.config = config or HandoverConfig()
        self.arm = arm or reach_arm()
        self.dt = self.config.dt
        self.reset()

    def _home(self) -> np.ndarray:
        if self.config.q_home is not None:
            return np.asarray(self.config.q_home, dtype=float).copy()
        # ready pose: hand waiting at the demonstrated stroke start
        start = np.array([0.0, self.config.demo.hand_start])
        return inverse(self.arm, start, np.array([-1.2, 2.4, -1.2]))

    def reset(self) -> WorldObs:
        self.t = 0.0
        self.q = self._home()
        self._failed = False
        return self._observe()

    @property
    def giver_y(self) -> float:
        return giver_trajectory(self.config.demo, self.t)

    def _observe(self) -> WorldObs:
        hand = forward(self.arm, self.q)
        return WorldObs(
            target=np.array([0.0, self.giver_y]),
            y_left=float(hand[1]),
            y_right=float(hand[1]),
            q=self.q.copy(),
            contact=False,
            failed=self._failed,
        )

    def step(self, q_cmd: np.ndarray) -> WorldObs:
        cfg = self.config
        q_cmd = self.arm.clamp(np.asarray(q_cmd, dtype=float))
        if not np.all(np.isfinite(q_cmd)):
            self._failed = True
        elif cfg.lag <= 0:
            self.q = q_cmd
        else:
            self.q = self.q + (cfg.dt / cfg.lag) * (q_cmd - self.q)
        self.t += cfg.dt
        return self._observe()


def run_handover_giver(world, portrait, replay_phases, duration: float = None):
    """Drive the receiver along a recorded phase trajectory.

    The oscillator is bypassed; the pose is still conditioned on the live
    giver position each tick, so a replayed phase with a moving partner
    yields a pose that varies only through conditioning.
    """
    from phaseprim.coupling import PolicyWeights, RbfBasis
    from phaseprim.tasks.controller import run_phase_controller

    replay_phases = np.asarray(replay_phases, dtype=float)
    if replay_phases.size < 1:
        raise ValueError("replay needs at least one phase sample")
    if duration is None:
        duration = replay_phases.size * world.dt
    basis = RbfBasis.uniform(1, portrait.mode)
    weights = PolicyWeights.constant(1, 0.0, 0.0)
    return run_phase_controller(
        world, portrait, basis, weights, duration, replay_phases=replay_phases
    )


def settle_time(t: np.ndarray, y: np.ndarray, fraction: float = 0.95) -> float:
    """First time the displacement covers ``fraction`` of its final value."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size != y.size or t.size < 2:
        raise ValueError("need matching t and y with at least two samples")
    displacement = y - y[0]
    final = displacement[-1]
    if abs(final) < 1e-12:
        return float(t[0])
    progress = displacement / final
    hits = np.nonzero(progress >= fraction)[0]
    if hits.size == 0:
        return math.inf
    return float(t[hits[0]])
