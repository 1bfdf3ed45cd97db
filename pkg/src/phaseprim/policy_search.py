"""Black-box policy improvement by reward-weighted noise averaging.

Each update perturbs the weight vector with Gaussian exploration noise,
rolls out every perturbation, converts costs to normalized probabilities,
and moves the weights by the probability-weighted average of the noise.
Exploration shrinks geometrically across updates.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol, Sequence

import numpy as np


@dataclass
class RolloutOutcome:
    """What a task reports back for one rollout."""

    cost: float
    failed: bool = False
    info: Optional[dict] = None


class RolloutTask(Protocol):
    def rollout(self, weights: np.ndarray) -> RolloutOutcome: ...


@dataclass
class RolloutRecord:
    epsilon: np.ndarray
    cost: float
    failed: bool = False


@dataclass
class LogRow:
    update: int
    rollout: int
    kind: str  # "clean" or "explore"
    cost: float
    failed: bool = False


@dataclass
class SearchConfig:
    """Knobs for the exploration loop.

    ``noise_var`` is the diagonal of the exploration covariance (a scalar is
    broadcast); it is multiplied by ``noise_decay`` after every update.
    ``schedule`` optionally chains stages of (updates, rollouts_per_update),
    overriding the two scalar fields.
    """

    updates: int = 10
    rollouts_per_update: int = 10
    noise_var: float | np.ndarray = 1.0
    lam: float = 10.0
    noise_decay: float = 0.95
    seed: int = 0
    failure_cost: float = 1e3
    schedule: Optional[Sequence[tuple[int, int]]] = None
    parallel: int = 0

    def stages(self) -> list[tuple[int, int]]:
        if self.schedule is not None:
            out = [(int(u), int(r)) for u, r in self.schedule]
            if any(u < 0 or r < 1 for u, r in out):
                raise ValueError("schedule entries need updates >= 0, rollouts >= 1")
            return out
        if self.updates < 0 or self.rollouts_per_update < 1:
            raise ValueError("need updates >= 0 and rollouts_per_update >= 1")
        return [(self.updates, self.rollouts_per_update)]


@dataclass
class TrainingResult:
    weights: np.ndarray
    history: list[LogRow]
    snapshots: list[np.ndarray] = field(default_factory=list)


def perturb(
    weights: np.ndarray,
    noise_var: float | np.ndarray,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw one exploration sample; returns (perturbed weights, noise)."""
    weights = np.asarray(weights, dtype=float)
    var = np.broadcast_to(np.asarray(noise_var, dtype=float), weights.shape)
    if np.any(var < 0):
        raise ValueError("noise variance must be non-negative")
    eps = rng.standard_normal(weights.shape) * np.sqrt(var)
    return weights + eps, eps


def probability_weights(costs: Sequence[float], lam: float) -> np.ndarray:
    """Normalized costs mapped to a softmax over negated cost.

    Costs are min-max scaled to [0, 1] first; a zero range maps everything
    to zero, i.e. a uniform distribution.
    """
    costs = np.asarray(costs, dtype=float)
    if costs.ndim != 1 or costs.size < 1:
        raise ValueError("costs must be a non-empty vector")
    if not np.all(np.isfinite(costs)):
        raise ValueError("costs must be finite; map failures to a penalty first")
    if lam < 0:
        raise ValueError("lam must be non-negative")
    lo, hi = costs.min(), costs.max()
    if hi - lo < 1e-300:
        normalized = np.zeros_like(costs)
    else:
        normalized = (costs - lo) / (hi - lo)
    logits = -lam * normalized
    logits -= logits.max()
    p = np.exp(logits)
    return p / p.sum()


def update_weights(
    weights: np.ndarray, records: Sequence[RolloutRecord], lam: float
) -> np.ndarray:
    """Move the weights by the probability-weighted average of the noise."""
    weights = np.asarray(weights, dtype=float)
    if not records:
        raise ValueError("need at least one rollout record")
    probs = probability_weights([r.cost for r in records], lam)
    step = np.zeros_like(weights)
    for p, rec in zip(probs, records):
        step += p * rec.epsilon
    return weights + step


def _run_one(
    task: RolloutTask, weights: np.ndarray, failure_cost: float
) -> tuple[float, bool]:
    out = task.rollout(weights)
    cost = out.cost
    failed = out.failed or not math.isfinite(cost)
    if failed:
        cost = failure_cost
    return float(cost), failed


def run_training(
    task: RolloutTask,
    initial_weights: np.ndarray,
    config: SearchConfig,
    on_update: Optional[Callable[[int, np.ndarray], None]] = None,
) -> TrainingResult:
    """Run the exploration loop over the configured schedule.

    Per update: the exploration rollouts are drawn and evaluated, the
    weights move, and one clean rollout of the updated weights is logged as
    that update's cost. With zero updates a single clean rollout of the
    initial weights is logged instead. Failed or non-finite rollouts count
    at ``failure_cost`` and training continues.
    """
    weights = np.asarray(initial_weights, dtype=float).copy()
    rng = np.random.default_rng(config.seed)
    var = np.broadcast_to(
        np.asarray(config.noise_var, dtype=float), weights.shape
    ).copy()
    if np.any(var < 0):
        raise ValueError("noise variance must be non-negative")

    history: list[LogRow] = []
    snapshots: list[np.ndarray] = []
    stages = config.stages()
    total_updates = sum(u for u, _ in stages)

    if total_updates == 0:
        cost, failed = _run_one(task, weights, config.failure_cost)
        history.append(LogRow(update=0, rollout=0, kind="clean", cost=cost, failed=failed))
        return TrainingResult(weights=weights, history=history, snapshots=[weights.copy()])

    update_no = 0
    for stage_updates, rollouts in stages:
        for _ in range(stage_updates):
            update_no += 1
            # Draw all noise first so the stream is independent of execution
            # order, then evaluate (possibly in parallel).
            candidates = []
            for _ in range(rollouts):
                w_r, eps = perturb(weights, var, rng)
                candidates.append((w_r, eps))
            if config.parallel and config.parallel > 1:
                with ThreadPoolExecutor(max_workers=config.parallel) as pool:
                    results = list(
                        pool.map(
                            lambda c: _run_one(task, c[0], config.failure_cost),
                            candidates,
                        )
                    )
            else:
                results = [
                    _run_one(task, w_r, config.failure_cost)
                    for w_r, _ in candidates
                ]
            records = []
            for r, ((_, eps), (cost, failed)) in enumerate(
                zip(candidates, results), start=1
            ):
                records.append(RolloutRecord(epsilon=eps, cost=cost, failed=failed))
                history.append(
                    LogRow(
                        update=update_no,
                        rollout=r,
                        kind="explore",
                        cost=cost,
                        failed=failed,
                    )
                )
            weights = update_weights(weights, records, config.lam)
            var *= config.noise_decay
            clean_cost, clean_failed = _run_one(task, weights, config.failure_cost)
            history.append(
                LogRow(
                    update=update_no,
                    rollout=0,
                    kind="clean",
                    cost=clean_cost,
                    failed=clean_failed,
                )
            )
            snapshots.append(weights.copy())
            if on_update is not None:
                on_update(update_no, weights)
    return TrainingResult(weights=weights, history=history, snapshots=snapshots)
