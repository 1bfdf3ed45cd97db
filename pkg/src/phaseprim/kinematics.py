"""Planar serial-chain kinematics for a desk-scale bimanual robot.

The robot works in a horizontal plane: x is lateral, y points away from the
body along the task's progress direction. Two mirrored three-joint arms
share a one-joint waist, giving seven controlled joints. Inverse kinematics
is damped least squares with joint limits clamped every iteration, which
keeps the redundancy (a guess is always required).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from phaseprim.portrait import DemonstrationSet

IK_TOL = 1e-6
IK_MAX_ITER = 200
IK_DAMPING = 1e-3
IK_RESTARTS = 8


class UnreachableTargetError(ValueError):
    """Target outside the chain's reachable annulus."""

    def __init__(self, target, closest):
        self.target = np.asarray(target, dtype=float)
        self.closest = np.asarray(closest, dtype=float)
        super().__init__(
            f"target {self.target.tolist()} is unreachable; closest reachable "
            f"point is {self.closest.tolist()}"
        )


class IkConvergenceError(RuntimeError):
    """The iteration stopped above the residual tolerance."""

    def __init__(self, residual, q):
        self.residual = float(residual)
        self.q = np.asarray(q, dtype=float)
        super().__init__(
            f"inverse kinematics stalled at residual {self.residual:.3e} m"
        )


@dataclass(frozen=True)
class KinematicChain:
    link_lengths: np.ndarray
    joint_limits: np.ndarray  # (n, 2) lower/upper, radians
    base_xy: np.ndarray
    base_heading: float

    def __post_init__(self):
        object.__setattr__(
            self, "link_lengths", np.asarray(self.link_lengths, dtype=float)
        )
        object.__setattr__(
            self, "joint_limits", np.asarray(self.joint_limits, dtype=float)
        )
        object.__setattr__(self, "base_xy", np.asarray(self.base_xy, dtype=float))
        if self.link_lengths.ndim != 1 or self.link_lengths.size < 1:
            raise ValueError("link_lengths must be a non-empty vector")
        if np.any(self.link_lengths <= 0):
            raise ValueError("link lengths must be positive")
        if self.joint_limits.shape != (self.link_lengths.size, 2):
            raise ValueError("joint_limits must be (n, 2)")
        if np.any(self.joint_limits[:, 0] >= self.joint_limits[:, 1]):
            raise ValueError("each joint limit needs lower < upper")
        if self.base_xy.shape != (2,):
            raise ValueError("base_xy must be a 2-vector")

    @property
    def n_joints(self) -> int:
        return self.link_lengths.size

    def clamp(self, q: np.ndarray) -> np.ndarray:
        return np.clip(q, self.joint_limits[:, 0], self.joint_limits[:, 1])

    def mirrored(self) -> "KinematicChain":
        """The chain reflected across the x = 0 plane (lateral mirror)."""
        return KinematicChain(
            link_lengths=self.link_lengths.copy(),
            joint_limits=np.stack(
                [-self.joint_limits[:, 1], -self.joint_limits[:, 0]], axis=1
            ),
            base_xy=np.array([-self.base_xy[0], self.base_xy[1]]),
            base_heading=math.pi - self.base_heading,
        )


def _check_q(chain: KinematicChain, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (chain.n_joints,):
        raise ValueError(
            f"q has shape {q.shape}, expected ({chain.n_joints},)"
        )
    if not np.all(np.isfinite(q)):
        raise ValueError("q contains non-finite values")
    return q


def joint_positions(chain: KinematicChain, q) -> np.ndarray:
    """Positions of the base and every joint tip, shape (n+1, 2)."""
    q = _check_q(chain, q)
    pts = np.empty((chain.n_joints + 1, 2))
    pts[0] = chain.base_xy
    heading = chain.base_heading
    for i in range(chain.n_joints):
        heading += q[i]
        pts[i + 1] = pts[i] + chain.link_lengths[i] * np.array(
            [math.cos(heading), math.sin(heading)]
        )
    return pts


def forward(chain: KinematicChain, q) -> np.ndarray:
    """End-effector position for a joint vector."""
    return joint_positions(chain, q)[-1]


def jacobian(chain: KinematicChain, q) -> np.ndarray:
    """Planar position Jacobian, shape (2, n)."""
    pts = joint_positions(chain, q)
    tip = pts[-1]
    jac = np.empty((2, chain.n_joints))
    for i in range(chain.n_joints):
        r = tip - pts[i]
        jac[0, i] = -r[1]
        jac[1, i] = r[0]
    return jac


def reachable_annulus(chain: KinematicChain) -> tuple[float, float]:
    """Conservative (r_min, r_max) radii around the chain base."""
    total = float(chain.link_lengths.sum())
    longest = float(chain.link_lengths.max())
    r_min = max(0.0, 2.0 * longest - total)
    return r_min, total


def _closest_reachable(chain: KinematicChain, target: np.ndarray) -> np.ndarray:
    r_min, r_max = reachable_annulus(chain)
    offset = target - chain.base_xy
    r = np.linalg.norm(offset)
    if r < 1e-12:
        return chain.base_xy + np.array([r_min, 0.0])
    return chain.base_xy + offset * (np.clip(r, r_min, r_max) / r)


def inverse(
    chain: KinematicChain,
    x_target,
    q_guess,
    tol: float = IK_TOL,
    max_iter: int = IK_MAX_ITER,
    damping: float = IK_DAMPING,
) -> np.ndarray:
    """Damped least-squares inverse kinematics.

    Iterates from the guess, clamping to joint limits each step, until the
    position residual drops below ``tol`` meters. Raises
    UnreachableTargetError for targets outside the reachable annulus and
    IkConvergenceError if the iteration stalls.
    """
    target = np.asarray(x_target, dtype=float)
    if target.shape != (2,):
        raise ValueError("x_target must be a 2-vector")
    r = np.linalg.norm(target - chain.base_xy)
    r_min, r_max = reachable_annulus(chain)
    if r > r_max + 1e-9 or r < r_min - 1e-9:
        raise UnreachableTargetError(target, _closest_reachable(chain, target))
    lam_sq = damping * damping

    def attempt(q0: np.ndarray):
        q = chain.clamp(q0)
        for _ in range(max_iter):
            err = target - forward(chain, q)
            if np.linalg.norm(err) <= tol:
                return q, 0.0
            jac = jacobian(chain, q)
            jjt = jac @ jac.T + lam_sq * np.eye(2)
            dq = jac.T @ np.linalg.solve(jjt, err)
            q = chain.clamp(q + dq)
        return q, float(np.linalg.norm(target - forward(chain, q)))

    # clamping can wedge the iteration into a joint-limit corner; retry
    # from a deterministic spread of start poses before giving up
    best_q, best_err = attempt(_check_q(chain, q_guess))
    if best_err <= tol:
        return best_q
    rng = np.random.default_rng(1799)
    lo, hi = chain.joint_limits[:, 0], chain.joint_limits[:, 1]
    for _ in range(IK_RESTARTS):
        q, err = attempt(rng.uniform(lo, hi))
        if err <= tol:
            return q
        if err < best_err:
            best_q, best_err = q, err
    raise IkConvergenceError(best_err, best_q)


@dataclass(frozen=True)
class DualArm:
    """Two mirrored arms on a shared waist joint.

    The seven-joint vector is [waist, left arm (3), right arm (3)]; the
    right arm's joints are expressed in the mirrored chain's convention, so
    a symmetric pose has q_right = -q_left.
    """

    left: KinematicChain
    right: KinematicChain

    def __post_init__(self):
        if self.left.n_joints != 4 or self.right.n_joints != 4:
            raise ValueError("each arm chain needs 4 joints (waist + 3)")

    @property
    def n_joints(self) -> int:
        return 7

    def split(self, q) -> tuple[np.ndarray, np.ndarray]:
        q = np.asarray(q, dtype=float)
        if q.shape != (7,):
            raise ValueError(f"q has shape {q.shape}, expected (7,)")
        return np.concatenate([[q[0]], q[1:4]]), np.concatenate([[q[0]], q[4:7]])

    def hands(self, q) -> tuple[np.ndarray, np.ndarray]:
        ql, qr = self.split(q)
        return forward(self.left, ql), forward(self.right, qr)

    def endeff(self, q) -> np.ndarray:
        """Midpoint of the two hands; the bimanual progress reference."""
        left, right = self.hands(q)
        return 0.5 * (left + right)

    def clamp(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        ql = self.left.clamp(np.concatenate([[q[0]], q[1:4]]))
        qr = self.right.clamp(np.concatenate([[q[0]], q[4:7]]))
        waist = 0.5 * (ql[0] + qr[0])
        return np.concatenate([[waist], ql[1:], qr[1:]])


def desk_dual_arm() -> DualArm:
    """The default desk-scale bimanual robot."""
    left = KinematicChain(
        link_lengths=[0.25, 0.30, 0.25, 0.15],
        joint_limits=[
            [-0.6, 0.6],  # waist
            [0.2, 2.9],  # shoulder, measured from the lateral axis
            [-2.7, 2.7],  # elbow
            [-1.9, 1.9],  # wrist
        ],
        base_xy=[0.0, 0.0],
        base_heading=0.0,
    )
    return DualArm(left=left, right=left.mirrored())


def reach_arm() -> KinematicChain:
    """A single forward-facing arm used by one-shot reaching tasks."""
    return KinematicChain(
        link_lengths=[0.30, 0.25, 0.15],
        joint_limits=[[-1.3, 1.3], [-2.7, 2.7], [-1.9, 1.9]],
        base_xy=[0.0, 0.0],
        base_heading=math.pi / 2,
    )


def planar_leg() -> KinematicChain:
    """A three-joint leg in the ground plane; the foot is the end-effector."""
    return KinematicChain(
        link_lengths=[0.26, 0.26, 0.12],
        joint_limits=[[-1.3, 1.3], [-2.7, 2.7], [-1.9, 1.9]],
        base_xy=[0.0, 0.0],
        base_heading=math.pi / 2,
    )


def dual_inverse(
    dual: DualArm,
    left_target,
    right_target,
    q_guess,
    tol: float = IK_TOL,
    max_iter: int = IK_MAX_ITER,
    damping: float = IK_DAMPING,
) -> np.ndarray:
    """Solve both hand positions at once through the shared waist."""
    lt = np.asarray(left_target, dtype=float)
    rt = np.asarray(right_target, dtype=float)
    for chain, tgt in ((dual.left, lt), (dual.right, rt)):
        r = np.linalg.norm(tgt - chain.base_xy)
        r_min, r_max = reachable_annulus(chain)
        if r > r_max + 1e-9 or r < r_min - 1e-9:
            raise UnreachableTargetError(tgt, _closest_reachable(chain, tgt))
    q = dual.clamp(np.asarray(q_guess, dtype=float))
    lam_sq = damping * damping
    for _ in range(max_iter):
        ql, qr = dual.split(q)
        err = np.concatenate([lt - forward(dual.left, ql), rt - forward(dual.right, qr)])
        if np.linalg.norm(err[:2]) <= tol and np.linalg.norm(err[2:]) <= tol:
            return q
        jl = jacobian(dual.left, ql)
        jr = jacobian(dual.right, qr)
        jac = np.zeros((4, 7))
        jac[0:2, 0] = jl[:, 0]
        jac[0:2, 1:4] = jl[:, 1:]
        jac[2:4, 0] = jr[:, 0]
        jac[2:4, 4:7] = jr[:, 1:]
        jjt = jac @ jac.T + lam_sq * np.eye(4)
        dq = jac.T @ np.linalg.solve(jjt, err)
        q = dual.clamp(q + dq)
    ql, qr = dual.split(q)
    res = max(
        np.linalg.norm(lt - forward(dual.left, ql)),
        np.linalg.norm(rt - forward(dual.right, qr)),
    )
    if res <= tol:
        return q
    raise IkConvergenceError(res, q)


Chainlike = Union[KinematicChain, DualArm]


def chain_endeff(chain: Chainlike, q) -> np.ndarray:
    if isinstance(chain, DualArm):
        return chain.endeff(q)
    return forward(chain, q)


def augment(
    q_demo: np.ndarray,
    x_demo: np.ndarray,
    n_samples: int,
    sigma: float,
    chain: Chainlike,
    seed: int = 0,
    dt: float = 1.0 / 30.0,
    max_retries: int = 10,
) -> DemonstrationSet:
    """Expand one nominal demonstration into spatial variations.

    Per sample and step, a zero-mean Gaussian displacement (std ``sigma``)
    moves the target and the hand goals coherently; joints are re-solved by
    inverse kinematics warm-started at the nominal pose, so the joint
    distribution mirrors the spatial one. Unreachable draws are retried up
    to ``max_retries`` times. All samples share the nominal time base.
    """
    q_demo = np.asarray(q_demo, dtype=float)
    x_demo = np.asarray(x_demo, dtype=float)
    if q_demo.ndim != 2 or x_demo.ndim != 2 or q_demo.shape[0] != x_demo.shape[0]:
        raise ValueError("q_demo and x_demo must be (T, dim) with equal T")
    if x_demo.shape[1] != 2:
        raise ValueError("augmentation expects planar (lateral, progress) targets")
    if n_samples < 2:
        raise ValueError("need at least two samples to fit a portrait")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    t_steps = q_demo.shape[0]
    is_dual = isinstance(chain, DualArm)
    if is_dual:
        nominal_hands = [chain.hands(q_demo[t]) for t in range(t_steps)]
    else:
        nominal_hands = [forward(chain, q_demo[t]) for t in range(t_steps)]

    q_out = np.empty((n_samples, t_steps, q_demo.shape[1]))
    x_out = np.empty((n_samples, t_steps, 2))
    e_out = np.empty((n_samples, t_steps, 2))
    for n in range(n_samples):
        rng = np.random.default_rng([seed, n])
        for t in range(t_steps):
            last_error: Exception | None = None
            for _ in range(max_retries):
                eps = rng.normal(0.0, sigma, size=2)
                try:
                    if is_dual:
                        left, right = nominal_hands[t]
                        q_new = dual_inverse(
                            chain, left + eps, right + eps, q_demo[t]
                        )
                    else:
                        q_new = inverse(
                            chain, nominal_hands[t] + eps, q_demo[t]
                        )
                except (UnreachableTargetError, IkConvergenceError) as exc:
                    last_error = exc
                    continue
                q_out[n, t] = q_new
                x_out[n, t] = x_demo[t] + eps
                e_out[n, t] = chain_endeff(chain, q_new)
                break
            else:
                raise RuntimeError(
                    f"augmentation failed at sample {n}, step {t} after "
                    f"{max_retries} retries"
                ) from last_error
    return DemonstrationSet(q=q_out, x=x_out, dt=dt, endeff=e_out)


def chain_to_dict(chain: KinematicChain) -> dict:
    return {
        "type": "chain",
        "link_lengths": chain.link_lengths.tolist(),
        "joint_limits": chain.joint_limits.tolist(),
        "base_xy": chain.base_xy.tolist(),
        "base_heading": chain.base_heading,
    }


def save_chain(path, chain: Chainlike) -> None:
    if isinstance(chain, DualArm):
        doc = {
            "type": "dual_arm",
            "left": chain_to_dict(chain.left),
            "right": chain_to_dict(chain.right),
        }
    else:
        doc = chain_to_dict(chain)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def _chain_from_dict(doc: dict) -> KinematicChain:
    try:
        return KinematicChain(
            link_lengths=doc["link_lengths"],
            joint_limits=doc["joint_limits"],
            base_xy=doc["base_xy"],
            base_heading=float(doc["base_heading"]),
        )
    except KeyError as exc:
        raise ValueError(f"chain description missing field {exc.args[0]!r}") from None


def load_chain(path) -> Chainlike:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    kind = doc.get("type")
    if kind == "chain":
        return _chain_from_dict(doc)
    if kind == "dual_arm":
        return DualArm(
            left=_chain_from_dict(doc["left"]),
            right=_chain_from_dict(doc["right"]),
        )
    raise ValueError(f"unknown chain type {kind!r}")
