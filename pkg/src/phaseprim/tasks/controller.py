"""Phase-coupled control loop.

Each tick the controller estimates the target's phase from its progress
coordinate, advances the robot's phase through the coupled oscillator,
indexes the portrait at the robot phase, and conditions the selected joint
distribution on the observed target. The conditioned mean is the command.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from phaseprim.coupling import PolicyWeights, RbfBasis, eval_coupling
from phaseprim.phases import (
    MODE_SINGLE_STROKE,
    OscillatorState,
    clamp_stroke,
    estimate_velocity,
    phase_from_plane,
    step_oscillator,
)
from phaseprim.portrait import PhasePortrait, condition, lookup
from phaseprim.tasks.base import TaskWorld, TrajectoryLog, WorldObs


@dataclass
class ControlTick:
    phi_target: float
    phi_robot: float
    coupling_k: float
    alpha: float
    q_cmd: np.ndarray


class PhaseController:
    """Stateful tick-by-tick controller; worlds and servers drive it."""

    def __init__(
        self,
        portrait: PhasePortrait,
        basis: RbfBasis,
        weights: PolicyWeights,
        dt: float,
        omega: float = 0.0,
        smoothing: float = 0.5,
    ):
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.portrait = portrait
        self.basis = basis
        self.weights = weights
        self.dt = dt
        self.omega = omega
        self.smoothing = smoothing
        self.override: Optional[tuple] = None  # (K, alpha) pinning
        self._y = None
        self._y_dot = 0.0
        self._phi_target = None
        self._osc: Optional[OscillatorState] = None

    def _estimate_phase(self, obs: WorldObs) -> float:
        y = float(obs.target[self.portrait.progress_dim])
        if self._y is None:
            self._y_dot = 0.0
        else:
            self._y_dot = estimate_velocity(
                y, self._y, self.dt, self._y_dot, self.smoothing
            )
        self._y = y
        signal = self.portrait.plane_spec.signal(y, self._y_dot)
        est = phase_from_plane(signal, prev_phase=self._phi_target)
        phi = est.angle
        if self.portrait.mode == MODE_SINGLE_STROKE:
            phi = clamp_stroke(phi)
        self._phi_target = phi
        return phi

    def coupling_at(self, phi_target: float) -> tuple:
        if self.override is not None:
            return self.override
        return eval_coupling(self.basis, self.weights, phi_target)

    def tick(self, obs: WorldObs) -> ControlTick:
        phi_t = self._estimate_phase(obs)
        coupling_k, alpha = self.coupling_at(phi_t)
        if self._osc is None:
            self._osc = OscillatorState(
                phi_robot=phi_t, omega=self.omega, mode=self.portrait.mode
            )
        else:
            self._osc = step_oscillator(
                self._osc, phi_t, coupling_k, alpha, self.dt
            )
        return self._command(obs, phi_t, coupling_k, alpha, self._osc.phi_robot)

    def tick_with_phase(self, obs: WorldObs, phi_robot: float) -> ControlTick:
        """Open-loop variant: the robot phase is supplied, not integrated."""
        phi_t = self._estimate_phase(obs)
        coupling_k, alpha = self.coupling_at(phi_t)
        return self._command(obs, phi_t, coupling_k, alpha, float(phi_robot))

    def _command(self, obs, phi_t, coupling_k, alpha, phi_r) -> ControlTick:
        gaussian = lookup(self.portrait, phi_r)
        mu_cond, _ = condition(gaussian, obs.target)
        return ControlTick(
            phi_target=phi_t,
            phi_robot=phi_r,
            coupling_k=float(coupling_k),
            alpha=float(alpha),
            q_cmd=mu_cond,
        )


def run_phase_controller(
    world: TaskWorld,
    portrait: PhasePortrait,
    basis: RbfBasis,
    weights: PolicyWeights,
    duration: float,
    omega: float = 0.0,
    smoothing: float = 0.5,
    replay_phases: Optional[np.ndarray] = None,
) -> TrajectoryLog:
    """Run the coupled controller against a world for a fixed duration.

    With ``replay_phases`` the oscillator is bypassed and the robot phase
    follows the supplied sequence (shorter sequences hold their last value).
    """
    controller = PhaseController(
        portrait, basis, weights, world.dt, omega=omega, smoothing=smoothing
    )
    n_steps = int(round(duration / world.dt))
    if n_steps < 1:
        raise ValueError("duration must cover at least one tick")
    obs = world.reset()
    rows = {
        name: np.zeros(n_steps)
        for name in (
            "t",
            "phi_target",
            "phi_robot",
            "coupling_k",
            "alpha",
            "y_target",
            "y_left",
            "y_right",
        )
    }
    q_cmd = np.zeros((n_steps, obs.q.size))
    target = np.zeros((n_steps, 2))
    contact = np.zeros(n_steps, dtype=bool)
    failed = False
    i = 0
    for i in range(n_steps):
        if replay_phases is None:
            tick = controller.tick(obs)
        else:
            idx = min(i, len(replay_phases) - 1)
            tick = controller.tick_with_phase(obs, replay_phases[idx])
        rows["t"][i] = i * world.dt
        rows["phi_target"][i] = tick.phi_target
        rows["phi_robot"][i] = tick.phi_robot
        rows["coupling_k"][i] = tick.coupling_k
        rows["alpha"][i] = tick.alpha
        rows["y_target"][i] = obs.target[portrait.progress_dim]
        rows["y_left"][i] = obs.y_left
        rows["y_right"][i] = obs.y_right
        q_cmd[i] = tick.q_cmd
        target[i] = obs.target
        obs = world.step(tick.q_cmd)
        contact[i] = obs.contact
        if obs.failed:
            failed = True
            break
    n = i + 1 if failed else n_steps
    return TrajectoryLog(
        dt=world.dt,
        t=rows["t"][:n],
        phi_target=rows["phi_target"][:n],
        phi_robot=rows["phi_robot"][:n],
        coupling_k=rows["coupling_k"][:n],
        alpha=rows["alpha"][:n],
        y_target=rows["y_target"][:n],
        y_left=rows["y_left"][:n],
        y_right=rows["y_right"][:n],
        q_cmd=q_cmd[:n],
        target=target[:n],
        contact=contact[:n],
        failed=failed,
    )
