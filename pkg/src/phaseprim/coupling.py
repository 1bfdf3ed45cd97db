"""Phase-dependent oscillator coupling as a normalized radial-basis policy.

The coupling stiffness K and the phase offset alpha are each a weighted sum
of Gaussian bumps over the target phase. Features are normalized to sum to
one, so equal weights reproduce a constant coupling exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from phaseprim.phases import MODE_CYCLIC, MODE_SINGLE_STROKE, wrap_angle

TWO_PI = 2.0 * math.pi


class PolicyFormatError(ValueError):
    """A policy file failed validation; the message names the field."""


@dataclass(frozen=True)
class RbfBasis:
    """Gaussian bumps with centers spread uniformly over the phase range."""

    centers: np.ndarray
    width: float
    cyclic: bool

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "centers", np.asarray(self.centers, dtype=float)
        )
        if self.centers.ndim != 1 or self.centers.size < 1:
            raise ValueError("centers must be a non-empty vector")
        if not np.all(np.isfinite(self.centers)):
            raise ValueError("centers must be finite")
        if np.any(np.diff(self.centers) <= 0):
            raise ValueError("centers must be strictly increasing")
        if not (self.width > 0.0):
            raise ValueError("width must be positive")

    @property
    def size(self) -> int:
        return self.centers.size

    @property
    def range(self) -> tuple[float, float]:
        return (-math.pi, math.pi) if self.cyclic else (0.0, math.pi)

    @classmethod
    def uniform(cls, n: int, mode: str, width_scale: float = 1.0) -> "RbfBasis":
        """N centers spanning the phase range for the given mode.

        Cyclic centers sit on an offset grid so none duplicates across the
        wrap; single-stroke centers include both endpoints. The width
        defaults to the center spacing.
        """
        if n < 1:
            raise ValueError("basis needs at least one center")
        if width_scale <= 0.0:
            raise ValueError("width_scale must be positive")
        if mode == MODE_CYCLIC:
            spacing = TWO_PI / n
            centers = -math.pi + spacing * (np.arange(n) + 0.5)
            return cls(centers=centers, width=width_scale * spacing, cyclic=True)
        if mode == MODE_SINGLE_STROKE:
            if n == 1:
                return cls(
                    centers=np.array([math.pi / 2]),
                    width=width_scale * math.pi,
                    cyclic=False,
                )
            centers = np.linspace(0.0, math.pi, n)
            spacing = math.pi / (n - 1)
            return cls(centers=centers, width=width_scale * spacing, cyclic=False)
        raise ValueError(f"unknown phase mode {mode!r}")


@dataclass
class PolicyWeights:
    """Weights for the stiffness and offset heads of the coupling policy."""

    w_k: np.ndarray
    w_alpha: np.ndarray

    def __post_init__(self) -> None:
        self.w_k = np.asarray(self.w_k, dtype=float)
        self.w_alpha = np.asarray(self.w_alpha, dtype=float)
        if self.w_k.shape != self.w_alpha.shape or self.w_k.ndim != 1:
            raise ValueError("w_k and w_alpha must be vectors of equal length")
        if not (np.all(np.isfinite(self.w_k)) and np.all(np.isfinite(self.w_alpha))):
            raise ValueError("policy weights must be finite")

    @property
    def size(self) -> int:
        return self.w_k.size

    def concat(self) -> np.ndarray:
        """Stack into the 2N vector the policy search operates on."""
        return np.concatenate([self.w_k, self.w_alpha])

    @classmethod
    def from_concat(cls, vec: np.ndarray) -> "PolicyWeights":
        vec = np.asarray(vec, dtype=float)
        if vec.ndim != 1 or vec.size % 2 != 0:
            raise ValueError("concatenated weights must have even length")
        half = vec.size // 2
        return cls(w_k=vec[:half].copy(), w_alpha=vec[half:].copy())

    @classmethod
    def constant(cls, n: int, k: float, alpha: float) -> "PolicyWeights":
        """Weights that evaluate to the constant pair (k, alpha) everywhere."""
        return cls(w_k=np.full(n, k), w_alpha=np.full(n, alpha))


def eval_basis(basis: RbfBasis, phi: float) -> np.ndarray:
    """Feature vector at a phase: Gaussian bumps normalized to sum to one."""
    if not math.isfinite(phi):
        raise ValueError("phi must be finite")
    if basis.cyclic:
        d = np.array([wrap_angle(phi - c) for c in basis.centers])
    else:
        d = phi - basis.centers
    feats = np.exp(-(d * d) / (2.0 * basis.width * basis.width))
    total = feats.sum()
    if total <= 0.0 or not np.isfinite(total):
        # All bumps underflowed; fall back to the nearest center.
        out = np.zeros(basis.size)
        out[int(np.argmin(np.abs(d)))] = 1.0
        return out
    return feats / total


def eval_coupling(
    basis: RbfBasis, weights: PolicyWeights, phi_target: float
) -> tuple[float, float]:
    """Coupling pair (K, alpha) at a target phase.

    K is clamped at zero from below so exploration noise can never produce
    a repulsive coupling.
    """
    if weights.size != basis.size:
        raise ValueError(
            f"weights have {weights.size} entries for a basis of {basis.size}"
        )
    feats = eval_basis(basis, phi_target)
    k = float(feats @ weights.w_k)
    alpha = float(feats @ weights.w_alpha)
    return max(0.0, k), alpha


def save_policy(
    path,
    basis: RbfBasis,
    weights: PolicyWeights,
    manifest: Optional[dict] = None,
) -> None:
    if weights.size != basis.size:
        raise ValueError("weights and basis sizes disagree")
    doc = {
        "range": list(basis.range),
        "centers": basis.centers.tolist(),
        "width": basis.width,
        "w_K": weights.w_k.tolist(),
        "w_alpha": weights.w_alpha.tolist(),
    }
    if manifest is not None:
        doc["manifest"] = manifest
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_policy(path) -> tuple[RbfBasis, PolicyWeights]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise PolicyFormatError(
                f"not valid JSON (line {exc.lineno}, column {exc.colno}): {exc.msg}"
            ) from None
    for key in ("range", "centers", "width", "w_K", "w_alpha"):
        if key not in doc:
            raise PolicyFormatError(f"missing field {key!r}")
    lo, hi = (float(v) for v in doc["range"])
    cyclic = lo < 0.0
    expected = (-math.pi, math.pi) if cyclic else (0.0, math.pi)
    if not (
        math.isclose(lo, expected[0], abs_tol=1e-9)
        and math.isclose(hi, expected[1], abs_tol=1e-9)
    ):
        raise PolicyFormatError(f"unsupported phase range [{lo}, {hi}]")
    try:
        basis = RbfBasis(
            centers=np.array(doc["centers"], dtype=float),
            width=float(doc["width"]),
            cyclic=cyclic,
        )
        weights = PolicyWeights(
            w_k=np.array(doc["w_K"], dtype=float),
            w_alpha=np.array(doc["w_alpha"], dtype=float),
        )
    except (TypeError, ValueError) as exc:
        raise PolicyFormatError(str(exc)) from None
    if weights.size != basis.size:
        raise PolicyFormatError("w_K/w_alpha length must match centers")
    return basis, weights
