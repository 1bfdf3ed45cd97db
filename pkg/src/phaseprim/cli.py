"""Command line driving the pipeline: synth -> augment -> fit -> train -> eval.

Every command reads one JSON config; flags only override single values. An
output directory gets a manifest.json recording the config hash, seed, and
input artifacts, and JSON artifacts embed the same manifest, so identical
manifests reproduce artifacts byte for byte (wall-time columns excepted).
Exit codes: 0 success, 1 config error, 2 runtime failure.
"""

import argparse
import dataclasses
import hashlib
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from phaseprim import __version__
from phaseprim.coupling import (
    PolicyFormatError,
    PolicyWeights,
    RbfBasis,
    load_policy,
    save_policy,
)
from phaseprim.kinematics import augment, desk_dual_arm, planar_leg, reach_arm
from phaseprim.phases import MODE_CYCLIC, MODE_SINGLE_STROKE
from phaseprim.portrait import (
    DemonstrationSet,
    PhasePortrait,
    PortraitFormatError,
    fit_portrait,
    load_portrait,
    save_portrait,
)
from phaseprim.policy_search import SearchConfig, run_training
from phaseprim.tasks.ball import (
    BallConfig,
    BallRolloutTask,
    BallWorld,
    longest_push_streak,
    push_onsets,
)
from phaseprim.tasks.base import ZERO_COST, CostSpec, save_trajectory_csv
from phaseprim.tasks.controller import run_phase_controller
from phaseprim.tasks.footstep import (
    FootstepConfig,
    FootstepWorld,
    run_footstep_placement,
    touchdown_errors,
)
from phaseprim.tasks.handover import HandoverConfig, HandoverWorld, settle_time
from phaseprim.tasks.synth import (
    BallDemoSpec,
    FootstepDemoSpec,
    HandoverDemoSpec,
    ball_demo,
    footstep_demo,
    handover_demo,
)

log = logging.getLogger("phaseprim")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

_LOG_ENV = "PHASEPRIM_LOG"
_TASKS = ("ball", "handover", "footstep")


class ConfigError(Exception):
    """Anything wrong with configs, flags, or input artifacts."""


class _Parser(argparse.ArgumentParser):
    # bad flags exit with the config-error status, not argparse's usual 2
    def error(self, message):
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="phaseprim",
        description="Phase-coupled movement primitives pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="task config JSON")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=".", help="output directory")
        return p

    add("demo-gen", "write the nominal demonstration CSV")
    add("augment", "expand the nominal demonstration into spatial variations")

    fit = add("fit", "fit a phase portrait from augmented demonstrations")
    fit.add_argument("--demos", default=None, help="augmented demos .npz to reuse")

    train = add("train", "run policy search over the coupling weights")
    train.add_argument("--portrait", default=None, help="portrait JSON to reuse")
    train.add_argument("--updates", type=int, default=None, help="override update count")
    train.add_argument("--parallel", type=int, default=0, help="parallel rollout workers")

    run = add("run", "execute one rollout and write the trajectory CSV")
    run.add_argument("--portrait", default=None)
    run.add_argument("--policy", default=None, help="trained policy JSON")
    run.add_argument("--duration", type=float, default=None, help="rollout seconds")

    ev = add("eval", "compute the task's acceptance metrics")
    ev.add_argument("--portrait", default=None)
    ev.add_argument("--policy", default=None)

    cmp_p = add("compare-dmp", "footstep replanning comparison table")
    cmp_p.add_argument("--portrait", default=None)

    serve = add("serve", "start the interactive bridge server")
    serve.add_argument("--portrait", default=None)
    serve.add_argument("--policy", default=None)
    serve.add_argument("--port", type=int, default=None, help="override config port")
    return parser


# ---------------------------------------------------------------- config


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config is not valid JSON (line {exc.lineno}): {exc.msg}"
        ) from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    task = doc.get("task")
    if task not in _TASKS:
        raise ConfigError(f"config needs \"task\" set to one of {_TASKS}")
    return doc


def _section(cfg: dict, name: str) -> dict:
    sec = cfg.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"config section {name!r} must be an object")
    return sec


def _build_dataclass(cls, doc: dict, where: str):
    valid = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(doc) - valid)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")
    try:
        return cls(**doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {where}: {exc}") from None


_DEMO_SPECS = {
    "ball": BallDemoSpec,
    "handover": HandoverDemoSpec,
    "footstep": FootstepDemoSpec,
}
_GENERATORS = {
    "ball": ball_demo,
    "handover": handover_demo,
    "footstep": footstep_demo,
}
_MODES = {
    "ball": MODE_CYCLIC,
    "handover": MODE_SINGLE_STROKE,
    "footstep": MODE_CYCLIC,
}


class TaskBundle:
    """Per-task construction shared by every command."""

    def __init__(self, cfg: dict):
        self.cfg = cfg
        self.kind = cfg["task"]
        self.demo_spec = _build_dataclass(
            _DEMO_SPECS[self.kind], _section(cfg, "demo"), "demo"
        )
        self.mode = _MODES[self.kind]
        self.progress_dim = 1

    def chain(self):
        if self.kind == "ball":
            return desk_dual_arm()
        if self.kind == "handover":
            return reach_arm()
        return planar_leg()

    def demo(self):
        return _GENERATORS[self.kind](self.demo_spec, self.chain())

    def augmented(self, seed: int) -> DemonstrationSet:
        aug = _section(self.cfg, "augment")
        n_samples = int(aug.get("n_samples", 10))
        sigma = float(aug.get("sigma", 0.03))
        if n_samples < 2:
            raise ConfigError(
                "N < 2: augmentation must produce at least two demonstrations"
            )
        q, x, dt = self.demo()
        log.info(
            "augmenting %s demo into %d samples (sigma %g)",
            self.kind,
            n_samples,
            sigma,
        )
        return augment(q, x, n_samples, sigma, self.chain(), seed=seed, dt=dt)

    def portrait(self, seed: int) -> PhasePortrait:
        reg = float(_section(self.cfg, "portrait").get("regularization", 1e-6))
        demos = self.augmented(seed)
        return fit_portrait(
            demos, mode=self.mode, progress_dim=self.progress_dim, regularization=reg
        )


def _effective_seed(args, cfg: dict) -> int:
    if args.seed is not None:
        return int(args.seed)
    return int(cfg.get("seed", 0))


# ---------------------------------------------------------------- manifest


def _sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def build_manifest(command: str, args, cfg: dict, inputs: dict) -> dict:
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    manifest = {
        "tool": {"name": "phaseprim", "version": __version__},
        "command": command,
        "config_path": str(args.config),
        "config_sha256": hashlib.sha256(canonical.encode()).hexdigest(),
        "seed": _effective_seed(args, cfg),
        "out": str(args.out),
        "inputs": {
            name: {"path": str(p), "sha256": _sha256_file(p)}
            for name, p in sorted(inputs.items())
        },
    }
    return manifest


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path, doc: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


# ---------------------------------------------------------------- artifacts


def save_demo_csv(path, q: np.ndarray, x: np.ndarray, dt: float) -> None:
    names = ["t"] + [f"q{i}" for i in range(q.shape[1])] + ["x0", "x1"]
    lines = [",".join(names)]
    for i in range(q.shape[0]):
        values = [i * dt, *q[i], *x[i]]
        lines.append(",".join(repr(float(v)) for v in values))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def save_demos_npz(path, demos: DemonstrationSet) -> None:
    np.savez(
        path,
        q=demos.q,
        x=demos.x,
        endeff=demos.endeff,
        dt=np.float64(demos.dt),
    )


def load_demos_npz(path) -> DemonstrationSet:
    try:
        with np.load(path) as data:
            return DemonstrationSet(
                q=data["q"],
                x=data["x"],
                dt=float(data["dt"]),
                endeff=data["endeff"],
            )
    except FileNotFoundError:
        raise ConfigError(f"demos file not found: {path}") from None
    except (KeyError, ValueError, OSError) as exc:
        raise ConfigError(f"demos file {path} is not usable: {exc}") from None


def _load_portrait_checked(path) -> PhasePortrait:
    try:
        return load_portrait(path)
    except FileNotFoundError:
        raise ConfigError(f"portrait file not found: {path}") from None
    except PortraitFormatError as exc:
        raise ConfigError(f"portrait file {path}: {exc}") from None


def _load_policy_checked(path):
    try:
        return load_policy(path)
    except FileNotFoundError:
        raise ConfigError(f"policy file not found: {path}") from None
    except PolicyFormatError as exc:
        raise ConfigError(f"policy file {path}: {exc}") from None


def _portrait_for(args, bundle: TaskBundle, seed: int, inputs: dict) -> PhasePortrait:
    path = getattr(args, "portrait", None)
    if path:
        inputs["portrait"] = Path(path)
        return _load_portrait_checked(path)
    log.info("no portrait artifact given; fitting one from the config")
    return bundle.portrait(seed)


def _policy_for(args, bundle: TaskBundle, portrait_mode: str, inputs: dict):
    path = getattr(args, "policy", None)
    if path:
        inputs["policy"] = Path(path)
        return _load_policy_checked(path)
    run_cfg = _section(bundle.cfg, "run")
    n_basis = int(run_cfg.get("n_basis", 10))
    coupling_k = float(run_cfg.get("coupling_k", 30.0))
    alpha = float(run_cfg.get("alpha", 0.0))
    basis = RbfBasis.uniform(n_basis, portrait_mode)
    return basis, PolicyWeights.constant(n_basis, coupling_k, alpha)


# ---------------------------------------------------------------- worlds


def _ball_config(cfg: dict, demo_spec: BallDemoSpec) -> BallConfig:
    world = dict(_section(cfg, "world"))
    world.setdefault("string_length", demo_spec.string_length)
    world.setdefault("dt", demo_spec.dt)
    return _build_dataclass(BallConfig, world, "world")


def _world_and_duration(args, bundle: TaskBundle, cfg: dict):
    kind = bundle.kind
    run_cfg = _section(cfg, "run")
    duration = getattr(args, "duration", None)
    if duration is None:
        duration = run_cfg.get("duration")
    if kind == "ball":
        world = BallWorld(_ball_config(cfg, bundle.demo_spec))
        return world, float(duration if duration is not None else 30.0)
    if kind == "handover":
        spec = bundle.demo_spec
        lag = float(_section(cfg, "world").get("lag", 0.0))
        world = HandoverWorld(HandoverConfig(demo=spec, dt=spec.dt, lag=lag))
        fallback = spec.settle_time + spec.tail
        return world, float(duration if duration is not None else fallback)
    spec = bundle.demo_spec
    schedule = run_cfg.get("schedule", _section(cfg, "compare").get("schedule"))
    if schedule is None:
        raise ConfigError("footstep runs need a lateral target schedule")
    lag = float(_section(cfg, "world").get("lag", 0.0))
    config = _build_dataclass(
        FootstepConfig,
        {"demo": spec, "schedule": schedule, "lag": lag},
        "footstep world",
    )
    world = FootstepWorld(config)
    fallback = len(schedule) * spec.gait_period + spec.dt
    return world, float(duration if duration is not None else fallback)


# ---------------------------------------------------------------- commands


def cmd_demo_gen(args) -> int:
    cfg = load_config(args.config)
    bundle = TaskBundle(cfg)
    q, x, dt = bundle.demo()
    out = _out_dir(args)
    save_demo_csv(out / "demo.csv", q, x, dt)
    _write_json(out / "manifest.json", build_manifest("demo-gen", args, cfg, {}))
    log.info("wrote %s (%d steps)", out / "demo.csv", q.shape[0])
    return EXIT_OK


def cmd_augment(args) -> int:
    cfg = load_config(args.config)
    bundle = TaskBundle(cfg)
    demos = bundle.augmented(_effective_seed(args, cfg))
    out = _out_dir(args)
    save_demos_npz(out / "demos.npz", demos)
    _write_json(out / "manifest.json", build_manifest("augment", args, cfg, {}))
    log.info("wrote %s (%d samples)", out / "demos.npz", demos.n_demos)
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg = load_config(args.config)
    bundle = TaskBundle(cfg)
    inputs: dict = {}
    reg = float(_section(cfg, "portrait").get("regularization", 1e-6))
    if args.demos:
        inputs["demos"] = Path(args.demos)
        demos = load_demos_npz(args.demos)
        if demos.n_demos < 2:
            raise ConfigError("N < 2: portrait fitting needs at least two demonstrations")
        portrait = fit_portrait(
            demos, mode=bundle.mode, progress_dim=bundle.progress_dim, regularization=reg
        )
    else:
        n_samples = int(_section(cfg, "augment").get("n_samples", 10))
        if n_samples < 2:
            raise ConfigError("N < 2: portrait fitting needs at least two demonstrations")
        portrait = bundle.portrait(_effective_seed(args, cfg))
    out = _out_dir(args)
    manifest = build_manifest("fit", args, cfg, inputs)
    save_portrait(portrait, out / "portrait.json", manifest=manifest)
    _write_json(out / "manifest.json", manifest)
    log.info("wrote %s (%d steps)", out / "portrait.json", portrait.n_steps)
    return EXIT_OK


def _noise_var(train_cfg: dict, n_basis: int):
    raw = train_cfg.get("noise_var", 1.0)
    if isinstance(raw, (int, float)):
        return float(raw)
    values = [float(v) for v in raw]
    if len(values) == 2:
        # one variance per head: stiffness weights then offset weights
        return np.concatenate(
            [np.full(n_basis, values[0]), np.full(n_basis, values[1])]
        )
    if len(values) == 2 * n_basis:
        return np.asarray(values)
    raise ConfigError(
        "train.noise_var must be a scalar, a [K, alpha] pair, or 2*n_basis values"
    )


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    bundle = TaskBundle(cfg)
    if bundle.kind != "ball":
        raise ConfigError("train drives the ball task; other tasks have no policy")
    seed = _effective_seed(args, cfg)
    inputs: dict = {}
    portrait = _portrait_for(args, bundle, seed, inputs)

    train_cfg = _section(cfg, "train")
    n_basis = int(train_cfg.get("n_basis", 10))
    basis = RbfBasis.uniform(n_basis, portrait.mode)
    init = PolicyWeights.constant(
        n_basis,
        float(train_cfg.get("init_coupling_k", 30.0)),
        float(train_cfg.get("init_alpha", 0.0)),
    )
    updates = args.updates if args.updates is not None else train_cfg.get("updates", 10)
    search = SearchConfig(
        updates=int(updates),
        rollouts_per_update=int(train_cfg.get("rollouts_per_update", 10)),
        noise_var=_noise_var(train_cfg, n_basis),
        lam=float(train_cfg.get("lam", 10.0)),
        noise_decay=float(train_cfg.get("noise_decay", 0.95)),
        seed=seed,
        parallel=int(args.parallel),
    )
    task = BallRolloutTask(
        portrait=portrait,
        basis=basis,
        config=_ball_config(cfg, bundle.demo_spec),
        duration=float(train_cfg.get("duration", 30.0)),
    )
    log.info("training %d updates x %d rollouts", search.updates, search.rollouts_per_update)
    result = run_training(
        task,
        init.concat(),
        search,
        on_update=lambda k, w: log.info("update %d done", k),
    )
    clean = [row for row in result.history if row.kind == "clean"]
    best = int(np.argmin([row.cost for row in clean]))
    weights = PolicyWeights.from_concat(result.snapshots[best])

    out = _out_dir(args)
    manifest = build_manifest("train", args, cfg, inputs)
    save_policy(out / "policy.json", basis, weights, manifest=manifest)
    lines = ["update,rollout,kind,cost,failed"]
    for row in result.history:
        lines.append(
            f"{row.update},{row.rollout},{row.kind},{repr(float(row.cost))},{int(row.failed)}"
        )
    with open(out / "train_log.csv", "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    _write_json(out / "manifest.json", manifest)
    log.info(
        "wrote %s (best clean cost %g at update %d)",
        out / "policy.json",
        clean[best].cost,
        clean[best].update,
    )
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    bundle = TaskBundle(cfg)
    seed = _effective_seed(args, cfg)
    inputs: dict = {}
    portrait = _portrait_for(args, bundle, seed, inputs)
    basis, weights = _policy_for(args, bundle, portrait.mode, inputs)
    world, duration = _world_and_duration(args, bundle, cfg)
    traj = run_phase_controller(world, portrait, basis, weights, duration)
    cost_spec = CostSpec() if bundle.kind == "ball" else ZERO_COST
    out = _out_dir(args)
    save_trajectory_csv(out / "trajectory.csv", traj, cost_spec)
    _write_json(out / "manifest.json", build_manifest("run", args, cfg, inputs))
    log.info("wrote %s (%d rows)", out / "trajectory.csv", traj.t.size)
    if traj.failed:
        print("error: rollout failed (non-finite state)", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _eval_ball(args, bundle, cfg, portrait, inputs) -> dict:
    basis, weights = _policy_for(args, bundle, portrait.mode, inputs)
    world, duration = _world_and_duration(args, bundle, cfg)
    traj = run_phase_controller(world, portrait, basis, weights, duration)
    cost = traj.rollout_cost(CostSpec())
    onsets = push_onsets(traj.contact, traj.dt)
    _, demo_x, _ = bundle.demo()
    demo_range = float(demo_x[:, 1].max() - demo_x[:, 1].min())
    excursion = float(traj.y_target.max() - traj.y_target.min())
    return {
        "task": "ball",
        "duration": duration,
        "pushes": int(onsets.size),
        "longest_streak": int(longest_push_streak(onsets)),
        "rollout_cost": float(cost),
        "ball_excursion": excursion,
        "demo_excursion": demo_range,
        "excursion_ratio": excursion / demo_range,
        "failed": bool(traj.failed),
    }


def _eval_handover(args, bundle, cfg, portrait, inputs) -> dict:
    spec = bundle.demo_spec
    eval_cfg = _section(cfg, "eval")
    alpha = float(eval_cfg.get("alpha", math.radians(-65.0)))
    stiff = float(eval_cfg.get("coupling_k_stiff", 30.0))
    soft = float(eval_cfg.get("coupling_k_soft", 20.0))
    duration = spec.settle_time + spec.tail
    results = {}
    for name, k in (("stiff", stiff), ("soft", soft)):
        world = HandoverWorld(HandoverConfig(demo=spec, dt=spec.dt))
        basis = RbfBasis.uniform(10, portrait.mode)
        weights = PolicyWeights.constant(10, k, alpha)
        traj = run_phase_controller(world, portrait, basis, weights, duration)
        results[name] = settle_time(traj.t, traj.y_left)
    return {
        "task": "handover",
        "settle_target": spec.settle_time,
        "coupling_k_stiff": stiff,
        "coupling_k_soft": soft,
        "t95_stiff": results["stiff"],
        "t95_soft": results["soft"],
        "soft_is_later": bool(results["soft"] > results["stiff"]),
    }


def _eval_footstep(args, bundle, cfg, portrait, inputs) -> dict:
    spec = bundle.demo_spec
    schedule = _section(cfg, "run").get(
        "schedule", _section(cfg, "compare").get("schedule")
    )
    if schedule is None:
        raise ConfigError("footstep evaluation needs a lateral target schedule")
    schedule = np.asarray(schedule, dtype=float)
    traj = run_footstep_placement(portrait, schedule, spec=spec)
    errs = touchdown_errors(traj, planar_leg(), schedule, spec.gait_period)
    return {
        "task": "footstep",
        "targets": [float(v) for v in schedule],
        "mean_err": float(errs.mean()),
        "max_err": float(errs.max()),
        "touchdowns": int(errs.size),
    }


def cmd_eval(args) -> int:
    cfg = load_config(args.config)
    bundle = TaskBundle(cfg)
    seed = _effective_seed(args, cfg)
    inputs: dict = {}
    portrait = _portrait_for(args, bundle, seed, inputs)
    if bundle.kind == "ball":
        metrics = _eval_ball(args, bundle, cfg, portrait, inputs)
    elif bundle.kind == "handover":
        metrics = _eval_handover(args, bundle, cfg, portrait, inputs)
    else:
        metrics = _eval_footstep(args, bundle, cfg, portrait, inputs)
    out = _out_dir(args)
    manifest = build_manifest("eval", args, cfg, inputs)
    metrics["manifest"] = manifest
    _write_json(out / "eval.json", metrics)
    _write_json(out / "manifest.json", manifest)
    log.info("wrote %s", out / "eval.json")
    return EXIT_OK


def cmd_compare_dmp(args) -> int:
    from phaseprim.dmp import (
        DmpFootstepSetup,
        PpmpFootstepSetup,
        compare_footstep,
        fit_dmp,
        save_comparison_csv,
    )

    cfg = load_config(args.config)
    bundle = TaskBundle(cfg)
    if bundle.kind != "footstep":
        raise ConfigError("compare-dmp applies to the footstep task")
    seed = _effective_seed(args, cfg)
    inputs: dict = {}
    portrait = _portrait_for(args, bundle, seed, inputs)
    compare_cfg = _section(cfg, "compare")
    schedule = compare_cfg.get("schedule")
    if schedule is None:
        raise ConfigError("compare-dmp needs compare.schedule in the config")
    budgets = tuple(int(b) for b in compare_cfg.get("budgets", (0, 1, 3, 5, 10, 30)))
    q, _, dt = bundle.demo()
    dmp = fit_dmp(q, dt, n_basis=int(compare_cfg.get("n_basis", 10)))
    rows = compare_footstep(
        PpmpFootstepSetup(portrait=portrait, spec=bundle.demo_spec),
        DmpFootstepSetup(dmp=dmp, budgets=budgets, seed=seed),
        np.asarray(schedule, dtype=float),
    )
    out = _out_dir(args)
    save_comparison_csv(out / "comparison.csv", rows)
    _write_json(out / "manifest.json", build_manifest("compare-dmp", args, cfg, inputs))
    log.info("wrote %s (%d rows)", out / "comparison.csv", len(rows))
    return EXIT_OK


def cmd_serve(args) -> int:
    cfg = load_config(args.config)
    bundle = TaskBundle(cfg)
    seed = _effective_seed(args, cfg)
    inputs: dict = {}
    portrait = _portrait_for(args, bundle, seed, inputs)
    basis, weights = _policy_for(args, bundle, portrait.mode, inputs)
    serve_cfg = _section(cfg, "serve")
    port = args.port if args.port is not None else int(serve_cfg.get("port", 8700))

    from phaseprim.server import BridgeSettings, serve_forever

    world, _ = _world_and_duration(args, bundle, cfg)
    settings = BridgeSettings(
        rate_hz=float(serve_cfg.get("rate_hz", 30.0)),
        realtime=bool(serve_cfg.get("realtime", True)),
    )
    log.info("serving %s task on port %d", bundle.kind, port)
    serve_forever(world, portrait, basis, weights, settings, port=port)
    return EXIT_OK


_COMMANDS = {
    "demo-gen": cmd_demo_gen,
    "augment": cmd_augment,
    "fit": cmd_fit,
    "train": cmd_train,
    "run": cmd_run,
    "eval": cmd_eval,
    "compare-dmp": cmd_compare_dmp,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    level = os.environ.get(_LOG_ENV, "warning").upper()
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # anything past config checks is a runtime failure
        log.debug("runtime failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
