"""Shared pieces of the simulated tasks.

Worlds advance one control tick at a time from a commanded joint vector and
report what the controller can observe: the target position and the
progress coordinates of the robot's end-effectors. Costs are assembled
after the rollout because the acceleration term differentiates the
commanded trajectory.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Protocol

import numpy as np


@dataclass(frozen=True)
class CostSpec:
    """Weighted instantaneous cost over accelerations and distances.

    c_t = accel_weight * sum(qdd^2)
        + goal_weight * |y_goal - y_target|
        + hand_weight * mean(|y_hand_i - y_target|)

    A negative hand_weight rewards driving the target away from the hands.
    """

    accel_weight: float = 10.0
    goal_weight: float = 5.0
    hand_weight: float = -20.0
    y_goal: float = 3.0
    failure_cost: float = 1e3

    def __post_init__(self):
        vals = (
            self.accel_weight,
            self.goal_weight,
            self.hand_weight,
            self.y_goal,
            self.failure_cost,
        )
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("cost weights must be finite")

    def instantaneous(self, qdd_sq_sum, y_target, y_left, y_right) -> float:
        near = 0.5 * abs(y_left - y_target) + 0.5 * abs(y_right - y_target)
        return float(
            self.accel_weight * qdd_sq_sum
            + self.goal_weight * abs(self.y_goal - y_target)
            + self.hand_weight * near
        )


ZERO_COST = CostSpec(
    accel_weight=0.0, goal_weight=0.0, hand_weight=0.0, y_goal=0.0
)


def second_differences(q: np.ndarray, dt: float = 1.0) -> np.ndarray:
    """Central second differences of a (T, d) trajectory; endpoints zero.

    The default dt=1 returns the plain per-tick second difference, which is
    what the cost uses: it keeps the acceleration term on the same scale as
    the distance terms instead of letting the 1/dt^2 factor swamp them.
    """
    q = np.asarray(q, dtype=float)
    if q.ndim != 2 or q.shape[0] < 1:
        raise ValueError("q must be (T, d) with T >= 1")
    if dt <= 0:
        raise ValueError("dt must be positive")
    out = np.zeros_like(q)
    if q.shape[0] >= 3:
        out[1:-1] = (q[2:] - 2.0 * q[1:-1] + q[:-2]) / (dt * dt)
    return out


@dataclass
class WorldObs:
    """What the controller sees after a tick."""

    target: np.ndarray  # (2,) lateral, progress
    y_left: float
    y_right: float
    q: np.ndarray
    contact: bool = False
    failed: bool = False


class TaskWorld(Protocol):
    dt: float

    def reset(self) -> WorldObs: ...

    def step(self, q_cmd: np.ndarray) -> WorldObs: ...


TRAJECTORY_HEADER = (
    "t,phi_target,phi_robot,K,alpha,y_ball,y_left,y_right"
)


@dataclass
class TrajectoryLog:
    """Per-tick record of a controller run."""

    dt: float
    t: np.ndarray
    phi_target: np.ndarray
    phi_robot: np.ndarray
    coupling_k: np.ndarray
    alpha: np.ndarray
    y_target: np.ndarray
    y_left: np.ndarray
    y_right: np.ndarray
    q_cmd: np.ndarray  # (T, d_q)
    target: np.ndarray  # (T, 2)
    contact: np.ndarray  # (T,) bool
    failed: bool = False
    costs: Optional[np.ndarray] = None

    @property
    def n_steps(self) -> int:
        return self.t.size

    def compute_costs(self, spec: CostSpec) -> np.ndarray:
        """Instantaneous costs from the logged commanded trajectory."""
        qdd = second_differences(self.q_cmd)
        qdd_sq = np.sum(qdd * qdd, axis=1)
        costs = np.array(
            [
                spec.instantaneous(
                    qdd_sq[i], self.y_target[i], self.y_left[i], self.y_right[i]
                )
                for i in range(self.n_steps)
            ]
        )
        self.costs = costs
        return costs

    def rollout_cost(self, spec: CostSpec) -> float:
        """Mean instantaneous cost, or the failure cost for failed runs."""
        if self.failed:
            return float(spec.failure_cost)
        return float(np.mean(self.compute_costs(spec)))


def save_trajectory_csv(path, log: TrajectoryLog, spec: CostSpec) -> None:
    costs = log.compute_costs(spec)
    d_q = log.q_cmd.shape[1]
    header = TRAJECTORY_HEADER.split(",") + [f"q{j}" for j in range(d_q)] + ["c_t"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(log.n_steps):
            row = [
                repr(float(log.t[i])),
                repr(float(log.phi_target[i])),
                repr(float(log.phi_robot[i])),
                repr(float(log.coupling_k[i])),
                repr(float(log.alpha[i])),
                repr(float(log.y_target[i])),
                repr(float(log.y_left[i])),
                repr(float(log.y_right[i])),
            ]
            row += [repr(float(v)) for v in log.q_cmd[i]]
            row.append(repr(float(costs[i])))
            writer.writerow(row)
