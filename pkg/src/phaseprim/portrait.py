"""Phase-indexed joint Gaussians over robot pose and target position.

A portrait is fitted per time step from a set of aligned demonstrations,
then re-indexed by the phase of the mean end-effector progress coordinate.
At run time the step nearest to the oscillator phase is conditioned on the
observed target to produce a commanded pose distribution.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from phaseprim.phases import (
    MODE_CYCLIC,
    MODE_SINGLE_STROKE,
    PlaneSpec,
    clamp_stroke,
    phase_from_plane,
    wrap_angle,
)

SYMMETRY_TOL = 1e-10
PSD_TOL = -1e-9
#: Conditioning is refused above this condition number of the target block.
MAX_CONDITION_NUMBER = 1e12


class PortraitFormatError(ValueError):
    """A portrait file failed validation; the message names the field."""


def _as_float_array(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


@dataclass
class JointGaussian:
    """A Gaussian over the stacked vector (pose q, target x)."""

    mean: np.ndarray
    cov: np.ndarray
    d_q: int
    d_x: int

    def __post_init__(self) -> None:
        self.mean = _as_float_array(self.mean, "mean")
        self.cov = _as_float_array(self.cov, "cov")
        d = self.d_q + self.d_x
        if self.d_q < 1 or self.d_x < 1:
            raise ValueError("d_q and d_x must be at least 1")
        if self.mean.shape != (d,):
            raise ValueError(
                f"mean has shape {self.mean.shape}, expected ({d},)"
            )
        if self.cov.shape != (d, d):
            raise ValueError(
                f"cov has shape {self.cov.shape}, expected ({d}, {d})"
            )
        if np.max(np.abs(self.cov - self.cov.T)) > SYMMETRY_TOL:
            raise ValueError("cov is not symmetric")
        eigvals = np.linalg.eigvalsh(self.cov)
        if eigvals.min() < PSD_TOL:
            raise ValueError(
                f"cov is not positive semi-definite (min eigenvalue {eigvals.min():g})"
            )

    @property
    def mu_q(self) -> np.ndarray:
        return self.mean[: self.d_q]

    @property
    def mu_x(self) -> np.ndarray:
        return self.mean[self.d_q :]

    @property
    def cov_qq(self) -> np.ndarray:
        return self.cov[: self.d_q, : self.d_q]

    @property
    def cov_qx(self) -> np.ndarray:
        return self.cov[: self.d_q, self.d_q :]

    @property
    def cov_xx(self) -> np.ndarray:
        return self.cov[self.d_q :, self.d_q :]


@dataclass
class DemonstrationSet:
    """Aligned demonstrations: pose and target trajectories sharing T and dt.

    ``endeff`` optionally carries the end-effector positions matching ``q``;
    fitting a portrait needs them to compute its phase index.
    """

    q: np.ndarray  # (N, T, d_q)
    x: np.ndarray  # (N, T, d_x)
    dt: float
    endeff: Optional[np.ndarray] = None  # (N, T, d_e)

    def __post_init__(self) -> None:
        self.q = _as_float_array(self.q, "q")
        self.x = _as_float_array(self.x, "x")
        if self.q.ndim != 3 or self.x.ndim != 3:
            raise ValueError("q and x must have shape (N, T, dim)")
        if self.q.shape[:2] != self.x.shape[:2]:
            raise ValueError(
                "q and x disagree on demonstration count or length: "
                f"{self.q.shape[:2]} vs {self.x.shape[:2]}"
            )
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.endeff is not None:
            self.endeff = _as_float_array(self.endeff, "endeff")
            if self.endeff.ndim != 3 or self.endeff.shape[:2] != self.q.shape[:2]:
                raise ValueError("endeff must align with q on (N, T)")

    @property
    def n_demos(self) -> int:
        return self.q.shape[0]

    @property
    def n_steps(self) -> int:
        return self.q.shape[1]

    @property
    def d_q(self) -> int:
        return self.q.shape[2]

    @property
    def d_x(self) -> int:
        return self.x.shape[2]


@dataclass
class PhasePortrait:
    steps: list[JointGaussian]
    phase_index: np.ndarray
    mode: str
    plane_spec: PlaneSpec
    progress_dim: int
    d_q: int = field(init=False)
    d_x: int = field(init=False)

    def __post_init__(self) -> None:
        if self.mode not in (MODE_CYCLIC, MODE_SINGLE_STROKE):
            raise ValueError(f"unknown portrait mode {self.mode!r}")
        if len(self.steps) < 2:
            raise ValueError("a portrait needs at least two steps")
        self.phase_index = _as_float_array(self.phase_index, "phase_index")
        if self.phase_index.shape != (len(self.steps),):
            raise ValueError("phase_index length must match steps")
        self.d_q = self.steps[0].d_q
        self.d_x = self.steps[0].d_x
        for i, g in enumerate(self.steps):
            if g.d_q != self.d_q or g.d_x != self.d_x:
                raise ValueError(f"step {i} disagrees on dimensions")
        if self.mode == MODE_CYCLIC:
            if np.any(self.phase_index <= -math.pi) or np.any(
                self.phase_index > math.pi
            ):
                raise ValueError("cyclic phase index must lie in (-pi, pi]")
        else:
            if np.any(self.phase_index < 0.0) or np.any(
                self.phase_index > math.pi
            ):
                raise ValueError("single-stroke phase index must lie in [0, pi]")
        if not 0 <= self.progress_dim:
            raise ValueError("progress_dim must be non-negative")

    @property
    def n_steps(self) -> int:
        return len(self.steps)


def _periodic_gradient(values: np.ndarray, dt: float) -> np.ndarray:
    """Central differences treating the trajectory as one closed cycle."""
    forward = np.roll(values, -1)
    backward = np.roll(values, 1)
    return (forward - backward) / (2.0 * dt)


def _range_spec(values: np.ndarray) -> tuple[float, float]:
    center = 0.5 * (float(values.max()) + float(values.min()))
    half = 0.5 * (float(values.max()) - float(values.min()))
    if half < 1e-12:
        half = 1.0  # flat signal: fall back to unit scale
    return center, half


def _plane_spec_for(values: np.ndarray, rates: np.ndarray) -> PlaneSpec:
    # Mid-range / half-range of the demonstrated signal; velocity keeps its
    # natural zero, only its half-range is used as scale.
    y_center, y_scale = _range_spec(values)
    _, y_dot_scale = _range_spec(rates)
    return PlaneSpec(y_center=y_center, y_scale=y_scale, y_dot_scale=y_dot_scale)


def _smooth_progress(values: np.ndarray, mode: str) -> np.ndarray:
    """Hann-window smoothing of a mean trajectory before differentiation.

    Averaging across demonstrations leaves per-step sampling noise whose
    finite differences would swamp the true rates at fine time steps; a
    window of ~5% of the trajectory removes it without distorting the
    stroke. Cyclic signals pad by wrapping, strokes by edge extension so
    boundary rates stay near zero.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    window = max(3, int(round(0.05 * n)))
    if window % 2 == 0:
        window += 1
    if n <= window:
        return values
    kernel = np.hanning(window + 2)[1:-1]
    kernel /= kernel.sum()
    pad = window // 2
    padded = np.pad(values, pad, mode="wrap" if mode == MODE_CYCLIC else "edge")
    return np.convolve(padded, kernel, mode="valid")


def _index_phases(
    progress: np.ndarray, dt: float, mode: str
) -> np.ndarray:
    """Phase of the mean end-effector progress coordinate, one per step."""
    progress = _smooth_progress(progress, mode)
    if mode == MODE_CYCLIC:
        rates = _periodic_gradient(progress, dt)
    else:
        rates = np.gradient(progress, dt)
        # A stroke advances by closing the remaining distance; orient the
        # coordinate so the phase runs 0 -> pi over the motion.
        if progress[-1] > progress[0]:
            progress = -progress
            rates = -rates
    spec = _plane_spec_for(progress, rates)
    phases = np.empty(progress.shape[0])
    prev = None
    for t in range(progress.shape[0]):
        est = phase_from_plane(spec.signal(progress[t], rates[t]), prev_phase=prev)
        phases[t] = est.angle
        prev = est.angle
    if mode == MODE_SINGLE_STROKE:
        phases = np.array([clamp_stroke(p) for p in phases])
    return phases


def fit_portrait(
    demos: DemonstrationSet,
    mode: str,
    progress_dim: int,
    regularization: float = 1e-6,
) -> PhasePortrait:
    """Fit per-step joint Gaussians and index them by end-effector phase.

    Covariances use the unbiased (N-1) estimator plus ``regularization`` on
    the diagonal. The demonstration set must carry end-effector trajectories;
    the target block of every step must be invertible after regularization.
    """
    if mode not in (MODE_CYCLIC, MODE_SINGLE_STROKE):
        raise ValueError(f"unknown portrait mode {mode!r}")
    if demos.n_demos < 2:
        raise ValueError(
            f"portrait fitting needs N >= 2 demonstrations, got {demos.n_demos}"
        )
    if regularization < 0.0:
        raise ValueError("regularization must be non-negative")
    if demos.endeff is None:
        raise ValueError(
            "demonstration set lacks end-effector trajectories; "
            "attach them before fitting"
        )
    if not 0 <= progress_dim < demos.endeff.shape[2]:
        raise ValueError(
            f"progress_dim {progress_dim} out of range for end-effector "
            f"dimension {demos.endeff.shape[2]}"
        )
    if not progress_dim < demos.d_x:
        raise ValueError(
            f"progress_dim {progress_dim} out of range for target dimension "
            f"{demos.d_x}"
        )

    joint = np.concatenate([demos.q, demos.x], axis=2)  # (N, T, d)
    d = joint.shape[2]
    d_q = demos.d_q
    steps: list[JointGaussian] = []
    for t in range(demos.n_steps):
        samples = joint[:, t, :]
        mean = samples.mean(axis=0)
        centered = samples - mean
        cov = centered.T @ centered / (demos.n_demos - 1)
        cov += regularization * np.eye(d)
        cov = 0.5 * (cov + cov.T)
        sigma_xx = cov[d_q:, d_q:]
        try:
            cholesky(sigma_xx, lower=True)
        except np.linalg.LinAlgError:
            raise ValueError(
                f"target covariance block is singular at step {t} even after "
                f"regularization {regularization:g}"
            ) from None
        steps.append(JointGaussian(mean=mean, cov=cov, d_q=d_q, d_x=demos.d_x))

    progress = demos.endeff[:, :, progress_dim].mean(axis=0)
    phase_index = _index_phases(progress, demos.dt, mode)

    target_progress = _smooth_progress(
        demos.x[:, :, progress_dim].mean(axis=0), mode
    )
    if mode == MODE_CYCLIC:
        target_rates = _periodic_gradient(target_progress, demos.dt)
    else:
        target_rates = np.gradient(target_progress, demos.dt)
    plane_spec = _plane_spec_for(target_progress, target_rates)

    return PhasePortrait(
        steps=steps,
        phase_index=phase_index,
        mode=mode,
        plane_spec=plane_spec,
        progress_dim=progress_dim,
    )


def phase_distance(a: float, b: float, mode: str) -> float:
    """Distance between two phases: wrapped for cyclic, absolute otherwise."""
    if mode == MODE_CYCLIC:
        return abs(wrap_angle(a - b))
    return abs(a - b)


def lookup(portrait: PhasePortrait, phi: float) -> JointGaussian:
    """Step whose indexed phase is nearest to ``phi`` (ties: earlier step)."""
    if not math.isfinite(phi):
        raise ValueError("lookup phase must be finite")
    if portrait.mode == MODE_CYCLIC:
        d = np.abs(
            np.remainder(portrait.phase_index - phi + math.pi, 2.0 * math.pi)
            - math.pi
        )
    else:
        d = np.abs(portrait.phase_index - phi)
    return portrait.steps[int(np.argmin(d))]


def condition(
    g: JointGaussian, x_obs: Sequence[float]
) -> tuple[np.ndarray, np.ndarray]:
    """Condition the pose block on an observed target position.

    Returns the conditional mean and covariance of q given x. The target
    block must be well conditioned (condition number <= 1e12); the returned
    covariance is symmetrized and positive semi-definite up to round-off.
    """
    x = _as_float_array(x_obs, "x_obs")
    if x.shape != (g.d_x,):
        raise ValueError(f"x_obs has shape {x.shape}, expected ({g.d_x},)")
    sigma_xx = g.cov_xx
    cond_number = np.linalg.cond(sigma_xx)
    if not np.isfinite(cond_number) or cond_number > MAX_CONDITION_NUMBER:
        raise ValueError(
            f"target covariance block is ill-conditioned "
            f"(condition number {cond_number:.3g})"
        )
    try:
        low = cholesky(sigma_xx, lower=True)
    except np.linalg.LinAlgError:
        raise ValueError("target covariance block is not positive definite") from None
    innovation = x - g.mu_x
    mu_cond = g.mu_q + g.cov_qx @ cho_solve((low, True), innovation)
    # cov_qq - B Sxx^-1 B^T via the Cholesky factor keeps the result
    # symmetric PSD by construction.
    half = solve_triangular(low, g.cov_qx.T, lower=True)
    cov_cond = g.cov_qq - half.T @ half
    cov_cond = 0.5 * (cov_cond + cov_cond.T)
    return mu_cond, cov_cond


def portrait_to_dict(portrait: PhasePortrait) -> dict:
    return {
        "mode": portrait.mode,
        "d_q": portrait.d_q,
        "d_x": portrait.d_x,
        "progress_dim": portrait.progress_dim,
        "plane_spec": {
            "y_center": portrait.plane_spec.y_center,
            "y_scale": portrait.plane_spec.y_scale,
            "y_dot_scale": portrait.plane_spec.y_dot_scale,
        },
        "steps": [
            {
                "phase": float(portrait.phase_index[t]),
                "mean": g.mean.tolist(),
                "cov": g.cov.tolist(),
            }
            for t, g in enumerate(portrait.steps)
        ],
    }


def save_portrait(portrait: PhasePortrait, path, manifest: Optional[dict] = None) -> None:
    """Write a portrait as JSON with full double precision."""
    doc = portrait_to_dict(portrait)
    if manifest is not None:
        doc["manifest"] = manifest
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise PortraitFormatError(f"missing field {key!r} in {where}")
    return doc[key]


def portrait_from_dict(doc: dict) -> PhasePortrait:
    mode = _require(doc, "mode", "portrait")
    d_q = _require(doc, "d_q", "portrait")
    d_x = _require(doc, "d_x", "portrait")
    progress_dim = _require(doc, "progress_dim", "portrait")
    spec_doc = _require(doc, "plane_spec", "portrait")
    raw_steps = _require(doc, "steps", "portrait")
    if not isinstance(raw_steps, list) or len(raw_steps) < 2:
        raise PortraitFormatError("steps must be a list with at least two entries")
    try:
        plane_spec = PlaneSpec(
            y_center=float(_require(spec_doc, "y_center", "plane_spec")),
            y_scale=float(_require(spec_doc, "y_scale", "plane_spec")),
            y_dot_scale=float(_require(spec_doc, "y_dot_scale", "plane_spec")),
        )
    except (TypeError, ValueError) as exc:
        raise PortraitFormatError(f"invalid plane_spec: {exc}") from None
    steps = []
    phases = []
    for t, entry in enumerate(raw_steps):
        where = f"steps[{t}]"
        phase = _require(entry, "phase", where)
        mean = _require(entry, "mean", where)
        cov = _require(entry, "cov", where)
        try:
            g = JointGaussian(mean=mean, cov=cov, d_q=int(d_q), d_x=int(d_x))
        except ValueError as exc:
            raise PortraitFormatError(f"invalid {where}: {exc}") from None
        steps.append(g)
        phases.append(float(phase))
    try:
        return PhasePortrait(
            steps=steps,
            phase_index=np.array(phases),
            mode=mode,
            plane_spec=plane_spec,
            progress_dim=int(progress_dim),
        )
    except ValueError as exc:
        raise PortraitFormatError(str(exc)) from None


def load_portrait(path) -> PhasePortrait:
    """Read and validate a portrait JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise PortraitFormatError(
                f"not valid JSON (line {exc.lineno}, column {exc.colno}): {exc.msg}"
            ) from None
    if not isinstance(doc, dict):
        raise PortraitFormatError("top-level document must be an object")
    return portrait_from_dict(doc)


def save_demo_csv(path, q: np.ndarray, x: np.ndarray, dt: float) -> None:
    """Write one demonstration as CSV with header t,q0..,x0.. ."""
    q = _as_float_array(q, "q")
    x = _as_float_array(x, "x")
    if q.ndim != 2 or x.ndim != 2 or q.shape[0] != x.shape[0]:
        raise ValueError("q and x must be (T, dim) arrays sharing T")
    header = (
        ["t"]
        + [f"q{i}" for i in range(q.shape[1])]
        + [f"x{i}" for i in range(x.shape[1])]
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for t in range(q.shape[0]):
            row = [repr(float(t * dt))]
            row += [repr(float(v)) for v in q[t]]
            row += [repr(float(v)) for v in x[t]]
            fh.write(",".join(row) + "\n")


def load_demo_csv(path) -> tuple[np.ndarray, np.ndarray, float]:
    """Read one demonstration CSV; returns (q, x, dt)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty demonstration file")
    header = lines[0].split(",")
    if header[0] != "t":
        raise ValueError(f"{path}: first column must be 't', got {header[0]!r}")
    d_q = sum(1 for h in header if h.startswith("q"))
    d_x = sum(1 for h in header if h.startswith("x"))
    expected = ["t"] + [f"q{i}" for i in range(d_q)] + [f"x{i}" for i in range(d_x)]
    if header != expected or d_q < 1 or d_x < 1:
        raise ValueError(f"{path}: malformed header {header!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(header):
            raise ValueError(
                f"{path}: line {lineno} has {len(parts)} fields, "
                f"expected {len(header)}"
            )
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise ValueError(f"{path}: line {lineno} has a non-numeric field") from None
    data = np.array(rows)
    if data.shape[0] < 2:
        raise ValueError(f"{path}: a demonstration needs at least two rows")
    times = data[:, 0]
    dts = np.diff(times)
    if np.any(dts <= 0) or np.max(np.abs(dts - dts[0])) > 1e-9:
        raise ValueError(f"{path}: time column must increase uniformly")
    q = data[:, 1 : 1 + d_q]
    x = data[:, 1 + d_q :]
    if not np.all(np.isfinite(data)):
        raise ValueError(f"{path}: demonstration contains non-finite values")
    return q, x, float(dts[0])


def load_demo_dir(paths) -> DemonstrationSet:
    """Stack demonstration CSVs (same T, dt, dims) into a set."""
    paths = sorted(paths)
    if not paths:
        raise ValueError("no demonstration files given")
    qs, xs = [], []
    dt = None
    for p in paths:
        q, x, this_dt = load_demo_csv(p)
        if dt is None:
            dt = this_dt
        elif abs(this_dt - dt) > 1e-9:
            raise ValueError(f"{p}: dt {this_dt} differs from {dt}")
        if qs and (q.shape != qs[0].shape or x.shape != xs[0].shape):
            raise ValueError(f"{p}: shape differs from the first demonstration")
        qs.append(q)
        xs.append(x)
    return DemonstrationSet(q=np.stack(qs), x=np.stack(xs), dt=float(dt))
