"""Bridge session semantics and the WebSocket transport around it."""

import json

import numpy as np
import pytest

from phaseprim.coupling import PolicyWeights, RbfBasis
from phaseprim.kinematics import augment, desk_dual_arm
from phaseprim.phases import wrap_angle
from phaseprim.portrait import MODE_CYCLIC, fit_portrait
from phaseprim.server import (
    SCHEMA_VERSION,
    BridgeSession,
    BridgeSettings,
    ClientOutbox,
    build_app,
)
from phaseprim.tasks.ball import BallConfig, BallWorld
from phaseprim.tasks.controller import run_phase_controller
from phaseprim.tasks.synth import BallDemoSpec, ball_demo


@pytest.fixture(scope="module")
def portrait():
    chain = desk_dual_arm()
    q, x, dt = ball_demo(BallDemoSpec(), chain)
    demos = augment(q, x, 6, 0.03, chain, seed=0, dt=dt)
    return fit_portrait(demos, mode=MODE_CYCLIC, progress_dim=1)


@pytest.fixture(scope="module")
def policy():
    basis = RbfBasis.uniform(10, MODE_CYCLIC)
    weights = PolicyWeights.constant(10, 30.0, np.deg2rad(60.0))
    return basis, weights


def make_session(portrait, policy, **settings_kwargs):
    basis, weights = policy
    world = BallWorld(BallConfig(lag=0.0))
    settings = BridgeSettings(**settings_kwargs)
    return BridgeSession(world, portrait, basis, weights, settings)


class TestSessionCore:
    def test_no_messages_matches_batch_run(self, portrait, policy):
        basis, weights = policy
        log = run_phase_controller(
            BallWorld(BallConfig(lag=0.0)), portrait, basis, weights, duration=2.0
        )
        session = make_session(portrait, policy)
        frames = [session.tick() for _ in range(log.n_steps)]
        assert np.array_equal([f["phi_r"] for f in frames], log.phi_robot)
        assert np.array_equal([f["phi_t"] for f in frames], log.phi_target)
        assert np.array_equal([f["q"] for f in frames], log.q_cmd)

    def test_frame_schema(self, portrait, policy):
        session = make_session(portrait, policy)
        frame = session.tick()
        assert set(frame) == {
            "v",
            "type",
            "tick",
            "t",
            "phi_t",
            "phi_r",
            "K",
            "alpha",
            "target",
            "hands",
            "q",
            "cost",
        }
        assert frame["v"] == SCHEMA_VERSION
        assert frame["type"] == "state"
        assert frame["tick"] == 0
        assert len(frame["target"]) == 2
        assert len(frame["hands"]) == 2
        json.dumps(frame)  # every field must be plain JSON

    def test_ticks_increase_across_reset(self, portrait, policy):
        session = make_session(portrait, policy)
        ticks = [session.tick()["tick"] for _ in range(5)]
        assert session.apply({"kind": "reset", "payload": {}}) == []
        ticks += [session.tick()["tick"] for _ in range(5)]
        assert ticks == list(range(10))

    def test_reset_restarts_the_scripted_run(self, portrait, policy):
        session = make_session(portrait, policy)
        first = [session.tick() for _ in range(40)]
        session.apply({"kind": "reset", "payload": {}})
        second = [session.tick() for _ in range(40)]
        assert [f["phi_r"] for f in first] == [f["phi_r"] for f in second]
        assert [f["q"] for f in first] == [f["q"] for f in second]

    def test_grab_freezes_target_and_phase_converges(self, portrait, policy):
        session = make_session(portrait, policy)
        for _ in range(20):
            session.tick()
        assert session.apply({"kind": "grab_target", "payload": {}}) == []
        frames = [session.tick() for _ in range(40)]
        ys = [f["target"][1] for f in frames]
        assert max(ys) == min(ys)  # held ball does not fall
        # target phase settles, robot phase reaches the fixed point phi_t+alpha
        tail = frames[-5:]
        phi_t = tail[-1]["phi_t"]
        assert all(abs(f["phi_t"] - phi_t) < 1e-9 for f in tail)
        gap = wrap_angle(tail[-1]["phi_r"] - (phi_t + tail[-1]["alpha"]))
        assert abs(gap) < 1e-3

    def test_move_echoes_in_the_next_frame(self, portrait, policy):
        session = make_session(portrait, policy)
        session.tick()
        session.apply({"kind": "grab_target", "payload": {}})
        reply = session.apply(
            {"kind": "move_target", "payload": {"position": [0.1, 1.2]}}
        )
        assert reply == []
        frame = session.tick()
        assert frame["target"][0] == pytest.approx(0.1)
        assert frame["target"][1] == pytest.approx(1.2)

    def test_move_without_grab_rejected(self, portrait, policy):
        session = make_session(portrait, policy)
        session.tick()
        (reply,) = session.apply(
            {"kind": "move_target", "payload": {"position": [0.0, 1.0]}}
        )
        assert reply["type"] == "reject"
        assert "grab" in reply["reason"]

    def test_move_out_of_bounds_rejected(self, portrait, policy):
        session = make_session(portrait, policy)
        session.apply({"kind": "grab_target", "payload": {}})
        (reply,) = session.apply(
            {"kind": "move_target", "payload": {"position": [99.0, 0.5]}}
        )
        assert reply["type"] == "reject"
        assert "workspace" in reply["reason"]
        # the session keeps running after a rejection
        assert session.tick()["type"] == "state"

    def test_release_velocity_is_least_squares_slope(self, portrait, policy):
        session = make_session(portrait, policy)
        session.apply({"kind": "grab_target", "payload": {}})
        dt = session.world.dt
        rate = 1.5  # m/s upward drag
        for k in range(6):
            y = 0.8 + rate * dt * k
            session.apply({"kind": "move_target", "payload": {"position": [0.0, y]}})
            session.tick()
        assert session.apply({"kind": "release_target", "payload": {}}) == []
        assert session.world.ball_y_dot == pytest.approx(rate, rel=1e-6)

    def test_release_without_grab_rejected(self, portrait, policy):
        session = make_session(portrait, policy)
        (reply,) = session.apply({"kind": "release_target", "payload": {}})
        assert reply["type"] == "reject"

    def test_release_after_single_move_has_zero_velocity(self, portrait, policy):
        session = make_session(portrait, policy)
        session.apply({"kind": "grab_target", "payload": {}})
        session.apply({"kind": "move_target", "payload": {"position": [0.0, 1.0]}})
        session.apply({"kind": "release_target", "payload": {}})
        assert session.world.ball_y_dot == 0.0

    def test_malformed_messages_error_and_session_continues(self, portrait, policy):
        session = make_session(portrait, policy)
        bad = [
            "not an object",
            {"kind": "warp_target"},
            {"kind": "move_target", "payload": "x"},
            {"kind": "move_target", "payload": {"position": [1.0]}},
            {"kind": "move_target", "payload": {"position": ["a", "b"]}},
            {"kind": "set_coupling", "payload": {}},
        ]
        session.apply({"kind": "grab_target", "payload": {}})
        for msg in bad:
            (reply,) = session.apply(msg)
            assert reply["type"] == "error"
            assert reply["v"] == SCHEMA_VERSION
        assert session.tick()["type"] == "state"

    def test_set_coupling_pins_and_validates(self, portrait, policy):
        session = make_session(portrait, policy)
        assert (
            session.apply(
                {"kind": "set_coupling", "payload": {"K": 12.0, "alpha": 0.5}}
            )
            == []
        )
        frame = session.tick()
        assert frame["K"] == 12.0
        assert frame["alpha"] == 0.5
        (reply,) = session.apply(
            {"kind": "set_coupling", "payload": {"K": -1.0, "alpha": 0.0}}
        )
        assert reply["type"] == "reject"
        (reply,) = session.apply(
            {"kind": "set_coupling", "payload": {"K": float("nan"), "alpha": 0.0}}
        )
        assert reply["type"] == "reject"
        # the pin survives until reset clears it
        session.apply({"kind": "reset", "payload": {}})
        frame = session.tick()
        assert frame["K"] == pytest.approx(30.0)

    def test_switch_task_same_name_resets_other_rejected(self, portrait, policy):
        session = make_session(portrait, policy)
        first = session.tick()
        assert session.apply({"kind": "switch_task", "payload": {"task": "ball"}}) == []
        again = session.tick()
        assert again["tick"] == first["tick"] + 1
        assert again["target"][1] == first["target"][1]  # restarted script
        (reply,) = session.apply(
            {"kind": "switch_task", "payload": {"task": "handover"}}
        )
        assert reply["type"] == "reject"
        assert "loaded" in reply["reason"]

    def test_last_grab_wins(self, portrait, policy):
        session = make_session(portrait, policy)
        session.apply({"kind": "grab_target", "payload": {}})
        session.apply({"kind": "move_target", "payload": {"position": [0.0, 1.0]}})
        # a second grab takes over and starts a fresh drag history
        session.apply({"kind": "grab_target", "payload": {}})
        session.apply({"kind": "move_target", "payload": {"position": [0.0, 2.0]}})
        session.apply({"kind": "release_target", "payload": {}})
        assert session.world.ball_y_dot == 0.0  # one sample, no slope

    def test_settings_validation(self):
        with pytest.raises(ValueError):
            BridgeSettings(rate_hz=0.0)
        with pytest.raises(ValueError):
            BridgeSettings(bounds_low=(1.0, 0.0), bounds_high=(-1.0, 1.0))


class TestWebSocket:
    def test_round_trip_and_malformed_json(self, portrait, policy):
        from fastapi.testclient import TestClient

        session = make_session(portrait, policy, rate_hz=200.0)
        app = build_app(session)
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws:
                frames = [json.loads(ws.receive_text()) for _ in range(5)]
                states = [f for f in frames if f["type"] == "state"]
                assert states, "no state frames received"
                ticks = [f["tick"] for f in states]
                assert ticks == sorted(ticks)
                assert all(f["v"] == SCHEMA_VERSION for f in frames)

                ws.send_text("this is not json")
                got_error = False
                for _ in range(50):
                    frame = json.loads(ws.receive_text())
                    if frame["type"] == "error":
                        got_error = True
                        break
                assert got_error

                ws.send_text(json.dumps({"kind": "grab_target", "payload": {}}))
                ws.send_text(
                    json.dumps(
                        {
                            "kind": "move_target",
                            "payload": {"position": [0.0, 1.7]},
                        }
                    )
                )
                echoed = False
                for _ in range(100):
                    frame = json.loads(ws.receive_text())
                    if frame["type"] == "state" and frame["target"][1] == pytest.approx(
                        1.7, abs=1e-6
                    ):
                        echoed = True
                        break
                assert echoed, "drag never showed up in the stream"

    def test_slow_client_frames_are_dropped_not_queued(self):
        outbox = ClientOutbox(capacity=4)
        accepted = [outbox.offer({"tick": i}) for i in range(10)]
        assert accepted == [True] * 4 + [False] * 6
        assert outbox.dropped == 6
        with pytest.raises(ValueError):
            ClientOutbox(capacity=0)

    def test_loop_keeps_ticking_while_client_sleeps(self, portrait, policy):
        import time

        from fastapi.testclient import TestClient

        session = make_session(portrait, policy, rate_hz=200.0)
        app = build_app(session)
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws:
                json.loads(ws.receive_text())
                time.sleep(0.5)  # the authoritative loop must not wait for us
                assert session.tick_no >= 80
                ticks = [json.loads(ws.receive_text())["tick"] for _ in range(10)]
                assert ticks == sorted(set(ticks))  # increasing, never repeated
