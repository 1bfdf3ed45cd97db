"""Interactive bridge: run a task world at a fixed rate over WebSocket JSON.

A human client plays the external agent: grabbing the target, dragging it,
and releasing it while the phase controller keeps reacting. The simulation
core (`BridgeSession`) is transport-free and fully deterministic given the
message timeline in sim ticks; the FastAPI layer only moves JSON in and
out. Slow clients drop frames rather than stalling the loop.
"""

from __future__ import annotations

import asyncio
import contextlib
import json
import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from phaseprim.coupling import PolicyWeights, RbfBasis
from phaseprim.portrait import PhasePortrait
from phaseprim.tasks.ball import BallWorld
from phaseprim.tasks.base import CostSpec, ZERO_COST
from phaseprim.tasks.controller import PhaseController

log = logging.getLogger("phaseprim.server")

SCHEMA_VERSION = 1

KIND_GRAB = "grab_target"
KIND_MOVE = "move_target"
KIND_RELEASE = "release_target"
KIND_SWITCH = "switch_task"
KIND_COUPLING = "set_coupling"
KIND_RESET = "reset"

_KINDS = (
    KIND_GRAB,
    KIND_MOVE,
    KIND_RELEASE,
    KIND_SWITCH,
    KIND_COUPLING,
    KIND_RESET,
)


@dataclass
class BridgeSettings:
    rate_hz: float = 30.0
    realtime: bool = True
    # workspace box for move_target: (lateral, progress) low/high corners
    bounds_low: tuple = (-2.0, -1.5)
    bounds_high: tuple = (2.0, 3.0)
    max_release_samples: int = 5

    def __post_init__(self):
        if self.rate_hz <= 0:
            raise ValueError("rate_hz must be positive")
        if not (
            self.bounds_low[0] < self.bounds_high[0]
            and self.bounds_low[1] < self.bounds_high[1]
        ):
            raise ValueError("workspace bounds must span a box")


def _state_frame(tick, t, ctl, obs, cost) -> dict:
    return {
        "v": SCHEMA_VERSION,
        "type": "state",
        "tick": tick,
        "t": t,
        "phi_t": ctl.phi_target,
        "phi_r": ctl.phi_robot,
        "K": ctl.coupling_k,
        "alpha": ctl.alpha,
        "target": [float(obs.target[0]), float(obs.target[1])],
        "hands": [float(obs.y_left), float(obs.y_right)],
        "q": [float(v) for v in ctl.q_cmd],
        "cost": cost,
    }


def _error_frame(tick, reason) -> dict:
    return {"v": SCHEMA_VERSION, "type": "error", "tick": tick, "reason": reason}


def _reject_frame(tick, reason) -> dict:
    return {"v": SCHEMA_VERSION, "type": "reject", "tick": tick, "reason": reason}


class BridgeSession:
    """One authoritative world + controller advanced tick by tick.

    ``apply`` consumes one control message and returns the immediate reply
    frames for the sender; ``tick`` advances the simulation and returns the
    broadcast state frame. Determinism: the state sequence depends only on
    the sequence of applied messages and their tick positions.
    """

    def __init__(
        self,
        world,
        portrait: PhasePortrait,
        basis: RbfBasis,
        weights: PolicyWeights,
        settings: BridgeSettings = None,
        task_name: str = "ball",
        cost_spec: Optional[CostSpec] = None,
    ):
        self.world = world
        self.settings = settings or BridgeSettings()
        self.task_name = task_name
        self.portrait = portrait
        self.basis = basis
        self.weights = weights
        if cost_spec is None:
            cost_spec = CostSpec() if isinstance(world, BallWorld) else ZERO_COST
        self.cost_spec = cost_spec
        self.tick_no = 0
        self._grabbed = False
        self._held: Optional[np.ndarray] = None
        self._moves: deque = deque(maxlen=self.settings.max_release_samples)
        self._recent_q: deque = deque(maxlen=3)
        self._reset_sim()

    def _reset_sim(self) -> None:
        self.controller = PhaseController(
            self.portrait, self.basis, self.weights, self.world.dt
        )
        self._obs = self.world.reset()
        self._grabbed = False
        self._held = None
        self._moves.clear()
        self._recent_q.clear()

    # ------------------------------------------------------------ messages

    def apply(self, msg) -> list:
        """Handle one control message; returns reply frames for the sender."""
        if not isinstance(msg, dict):
            return [_error_frame(self.tick_no, "message must be a JSON object")]
        kind = msg.get("kind")
        if kind not in _KINDS:
            return [_error_frame(self.tick_no, f"unknown kind {kind!r}")]
        payload = msg.get("payload", {})
        if not isinstance(payload, dict):
            return [_error_frame(self.tick_no, "payload must be an object")]
        handler = getattr(self, "_on_" + kind)
        return handler(payload)

    def _on_grab_target(self, payload) -> list:
        self._grabbed = True  # last grab wins; no arbitration
        self._moves.clear()
        if isinstance(self.world, BallWorld):
            self.world.grabbed = True
        return []

    def _parse_position(self, payload):
        pos = payload.get("position")
        if (
            not isinstance(pos, (list, tuple))
            or len(pos) != 2
            or not all(isinstance(v, (int, float)) and math.isfinite(v) for v in pos)
        ):
            return None, _error_frame(
                self.tick_no, "move_target needs position: [lateral, progress]"
            )
        lo, hi = self.settings.bounds_low, self.settings.bounds_high
        if not (lo[0] <= pos[0] <= hi[0] and lo[1] <= pos[1] <= hi[1]):
            return None, _reject_frame(
                self.tick_no,
                f"position {list(pos)} outside workspace "
                f"[{lo[0]}, {hi[0]}] x [{lo[1]}, {hi[1]}]",
            )
        return np.array([float(pos[0]), float(pos[1])]), None

    def _on_move_target(self, payload) -> list:
        if not self._grabbed:
            return [_reject_frame(self.tick_no, "no active grab")]
        pos, problem = self._parse_position(payload)
        if problem is not None:
            return [problem]
        self._held = pos
        self._moves.append((self.tick_no, pos.copy()))
        if isinstance(self.world, BallWorld):
            self.world.ball_x = float(pos[0])
            self.world.set_ball_progress(float(pos[1]))
            # echo the drag in the very next frame (string length clamps it)
            self._obs.target = np.array([self.world.ball_x, self.world.ball_y])
        return []

    def _release_velocity(self) -> float:
        """Progress velocity from the last few drag positions, least squares."""
        if len(self._moves) < 2:
            return 0.0
        dt = self.world.dt
        t = np.array([tick * dt for tick, _ in self._moves])
        y = np.array([pos[1] for _, pos in self._moves])
        if t[-1] == t[0]:
            return 0.0
        design = np.stack([t - t[0], np.ones_like(t)], axis=1)
        slope, _ = np.linalg.lstsq(design, y, rcond=None)[0]
        return float(slope)

    def _on_release_target(self, payload) -> list:
        if not self._grabbed:
            return [_reject_frame(self.tick_no, "no active grab")]
        velocity = self._release_velocity()
        self._grabbed = False
        if isinstance(self.world, BallWorld):
            self.world.grabbed = False
            if self._held is not None:
                self.world.set_ball_progress(float(self._held[1]), velocity)
        self._held = None
        self._moves.clear()
        return []

    def _on_set_coupling(self, payload) -> list:
        try:
            k = float(payload["K"])
            alpha = float(payload["alpha"])
        except (KeyError, TypeError, ValueError):
            return [_error_frame(self.tick_no, "set_coupling needs K and alpha")]
        if not (math.isfinite(k) and math.isfinite(alpha)) or k < 0:
            return [_reject_frame(self.tick_no, "K must be >= 0 and both finite")]
        self.controller.override = (k, alpha)
        return []

    def _on_switch_task(self, payload) -> list:
        name = payload.get("task")
        if name != self.task_name:
            return [
                _reject_frame(
                    self.tick_no,
                    f"only task {self.task_name!r} is loaded in this server",
                )
            ]
        self._reset_sim()
        return []

    def _on_reset(self, payload) -> list:
        self._reset_sim()
        return []

    # ---------------------------------------------------------------- tick

    def _instantaneous_cost(self, q_cmd, obs) -> float:
        self._recent_q.append(np.asarray(q_cmd, dtype=float))
        if len(self._recent_q) < 3:
            qdd_sq = 0.0
        else:
            a, b, c = self._recent_q
            qdd = c - 2.0 * b + a
            qdd_sq = float(qdd @ qdd)
        y_target = float(obs.target[self.portrait.progress_dim])
        return self.cost_spec.instantaneous(qdd_sq, y_target, obs.y_left, obs.y_right)

    def tick(self) -> dict:
        """Advance one simulation step and build the broadcast frame."""
        obs = self._obs
        if self._grabbed and self._held is not None and not isinstance(
            self.world, BallWorld
        ):
            # scripted worlds: the observed target follows the drag
            obs = WorldObsOverride(obs, self._held)
        ctl = self.controller.tick(obs)
        cost = self._instantaneous_cost(ctl.q_cmd, obs)
        frame = _state_frame(
            self.tick_no, self.tick_no * self.world.dt, ctl, obs, cost
        )
        self._obs = self.world.step(ctl.q_cmd)
        if self._obs.failed:
            log.warning("world failed at tick %d; resetting", self.tick_no)
            self._reset_sim()
            frame["type"] = "state"
        self.tick_no += 1
        return frame


class WorldObsOverride:
    """Observation proxy with the target replaced by the held position."""

    def __init__(self, obs, target):
        self._obs = obs
        self.target = target

    def __getattr__(self, name):
        return getattr(self._obs, name)


# ------------------------------------------------------------------ serving


class ClientOutbox:
    """Bounded frame buffer between the tick loop and one client socket.

    The loop only ever calls ``offer`` (non-blocking); when a client cannot
    keep up the oldest unsent frames are dropped rather than stalling the
    simulation or growing without bound.
    """

    def __init__(self, capacity: int = 16):
        if capacity < 1:
            raise ValueError("capacity must be at least 1")
        self._queue: asyncio.Queue = asyncio.Queue(maxsize=capacity)
        self.dropped = 0

    def offer(self, frame) -> bool:
        try:
            self._queue.put_nowait(frame)
            return True
        except asyncio.QueueFull:
            self.dropped += 1
            return False

    async def get(self):
        return await self._queue.get()


def build_app(session: BridgeSession):
    """FastAPI app with one authoritative loop and a /ws endpoint."""
    inbox: deque = deque()  # (client_id, parsed message)
    clients: dict = {}  # client_id -> ClientOutbox
    counter = {"next": 0}

    def send_to(client_id, frame):
        outbox = clients.get(client_id)
        if outbox is not None:
            outbox.offer(frame)

    async def loop():
        period = 1.0 / session.settings.rate_hz
        next_deadline = asyncio.get_event_loop().time() + period
        while True:
            while inbox:
                client_id, msg = inbox.popleft()
                for reply in session.apply(msg):
                    send_to(client_id, reply)
            frame = session.tick()
            for client_id in list(clients):
                send_to(client_id, frame)
            if session.settings.realtime:
                now = asyncio.get_event_loop().time()
                delay = max(0.0, next_deadline - now)
                next_deadline = max(next_deadline + period, now)
                await asyncio.sleep(delay)
            else:
                await asyncio.sleep(0)

    @contextlib.asynccontextmanager
    async def lifespan(app):
        task = asyncio.get_event_loop().create_task(loop())
        try:
            yield
        finally:
            task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await task

    app = FastAPI(lifespan=lifespan)
    app.state.session = session

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        client_id = counter["next"]
        counter["next"] += 1
        outbox = ClientOutbox()
        clients[client_id] = outbox

        async def pump():
            while True:
                frame = await outbox.get()
                await ws.send_text(json.dumps(frame))

        sender = asyncio.get_event_loop().create_task(pump())
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    send_to(
                        client_id,
                        _error_frame(session.tick_no, "frame is not valid JSON"),
                    )
                    continue
                inbox.append((client_id, msg))
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await sender
            clients.pop(client_id, None)

    return app


def serve_forever(world, portrait, basis, weights, settings=None, port=8700):
    import uvicorn

    session = BridgeSession(world, portrait, basis, weights, settings)
    app = build_app(session)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
