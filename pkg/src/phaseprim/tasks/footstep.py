"""Footstep placement task: cyclic gait with per-cycle lateral targets.

The swing height follows the gait clock; each cycle announces a lateral
placement target for the upcoming touchdown. The phase-indexed portrait
adapts by conditioning on the shifted target, so a "plan" is one linear
solve per tick instead of an optimization run.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from phaseprim.coupling import PolicyWeights, RbfBasis
from phaseprim.kinematics import KinematicChain, augment, forward, planar_leg
from phaseprim.phases import MODE_CYCLIC
from phaseprim.portrait import PhasePortrait, fit_portrait
from phaseprim.tasks.base import TrajectoryLog, WorldObs
from phaseprim.tasks.controller import run_phase_controller
from phaseprim.tasks.synth import FootstepDemoSpec, footstep_demo


@dataclass
class FootstepConfig:
    demo: FootstepDemoSpec = field(default_factory=FootstepDemoSpec)
    schedule: Sequence[float] = (0.0,)  # lateral target per gait cycle
    lag: float = 0.0
    q_home: Optional[np.ndarray] = None

    def __post_init__(self):
        self.schedule = np.asarray(self.schedule, dtype=float)
        if self.schedule.ndim != 1 or self.schedule.size < 1:
            raise ValueError("schedule needs at least one lateral target")
        if self.lag < 0:
            raise ValueError("lag must be non-negative")

    @property
    def dt(self) -> float:
        return self.demo.dt


class FootstepWorld:
    """Gait clock plus a lag-tracked swing leg."""

    def __init__(self, config: FootstepConfig = None, leg: KinematicChain = None):
        self.config = config or FootstepConfig()
        self.leg = leg or planar_leg()
        self.dt = self.config.dt
        self.reset()

    def _home(self) -> np.ndarray:
        if self.config.q_home is not None:
            return np.asarray(self.config.q_home, dtype=float).copy()
        from phaseprim.kinematics import inverse

        demo = self.config.demo
        start = np.array([0.0, demo.swing_center + demo.swing_amplitude])
        return inverse(self.leg, start, np.array([0.0, 2.2, -1.1]))

    def reset(self) -> WorldObs:
        self.t = 0.0
        self.q = self._home()
        self._failed = False
        return self._observe()

    @property
    def cycle(self) -> int:
        return int(math.floor(self.t / self.config.demo.gait_period + 1e-9))

    @property
    def gait_phase(self) -> float:
        """Clock phase in [0, 2 pi), advancing monotonically modulo 2 pi."""
        demo = self.config.demo
        frac = (self.t / demo.gait_period) % 1.0
        return 2.0 * math.pi * frac

    @property
    def lateral_target(self) -> float:
        schedule = self.config.schedule
        return float(schedule[min(self.cycle, schedule.size - 1)])

    @property
    def swing_target(self) -> float:
        demo = self.config.demo
        return demo.swing_center + demo.swing_amplitude * math.cos(
            self.gait_phase
        )

    def _observe(self) -> WorldObs:
        foot = forward(self.leg, self.q)
        return WorldObs(
            target=np.array([self.lateral_target, self.swing_target]),
            y_left=float(foot[1]),
            y_right=float(foot[1]),
            q=self.q.copy(),
            contact=False,
            failed=self._failed,
        )

    def step(self, q_cmd: np.ndarray) -> WorldObs:
        cfg = self.config
        q_cmd = self.leg.clamp(np.asarray(q_cmd, dtype=float))
        if not np.all(np.isfinite(q_cmd)):
            self._failed = True
        elif cfg.lag <= 0:
            self.q = q_cmd
        else:
            self.q = self.q + (cfg.dt / cfg.lag) * (q_cmd - self.q)
        self.t += cfg.dt
        return self._observe()


def footstep_portrait(
    spec: FootstepDemoSpec = None,
    n_samples: int = 10,
    sigma: float = 0.03,
    seed: int = 0,
    leg: KinematicChain = None,
) -> PhasePortrait:
    """Fit a cyclic portrait from the augmented gait demonstration."""
    spec = spec or FootstepDemoSpec()
    leg = leg or planar_leg()
    q, x, dt = footstep_demo(spec, leg)
    demos = augment(q, x, n_samples, sigma, leg, seed=seed, dt=dt)
    return fit_portrait(demos, mode=MODE_CYCLIC, progress_dim=1)


def run_footstep_placement(
    portrait: PhasePortrait,
    schedule,
    coupling_k: float = 30.0,
    alpha: float = 0.0,
    spec: FootstepDemoSpec = None,
    lag: float = 0.0,
    leg: KinematicChain = None,
) -> TrajectoryLog:
    """Walk the schedule, one gait cycle per lateral target.

    The adaptation is entirely in the conditioning step: the controller
    conditions every tick on the announced (lateral, swing) target, so the
    touchdown lands on the scheduled placement without any re-optimization.
    """
    spec = spec or FootstepDemoSpec()
    config = FootstepConfig(demo=spec, schedule=schedule, lag=lag)
    world = FootstepWorld(config, leg=leg)
    basis = RbfBasis.uniform(10, portrait.mode)
    weights = PolicyWeights.constant(10, coupling_k, alpha)
    # one extra tick so the last cycle's boundary lands inside the log
    duration = config.schedule.size * spec.gait_period + spec.dt
    return run_phase_controller(world, portrait, basis, weights, duration)


def touchdown_indices(t: np.ndarray, gait_period: float) -> np.ndarray:
    """Last tick of each completed gait cycle (the touchdown samples)."""
    t = np.asarray(t, dtype=float)
    cycles = np.floor(t / gait_period + 1e-9).astype(int)
    ends = np.nonzero(np.diff(cycles) > 0)[0]
    return ends


def touchdown_errors(
    log, leg: KinematicChain, schedule, gait_period: float
) -> np.ndarray:
    """Lateral placement error at each touchdown in a trajectory log."""
    schedule = np.asarray(schedule, dtype=float)
    idx = touchdown_indices(log.t, gait_period)
    errors = np.zeros(idx.size)
    cycles = np.floor(log.t[idx] / gait_period + 1e-9).astype(int)
    for k, (i, c) in enumerate(zip(idx, cycles)):
        foot = forward(leg, leg.clamp(log.q_cmd[i]))
        target = schedule[min(c, schedule.size - 1)]
        errors[k] = abs(float(foot[0]) - target)
    return errors
