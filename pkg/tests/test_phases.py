import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phaseprim.phases import (
    MODE_CYCLIC,
    MODE_SINGLE_STROKE,
    OscillatorState,
    PlaneSignal,
    PlaneSpec,
    estimate_velocity,
    phase_from_plane,
    step_oscillator,
    wrap_angle,
)

PI = math.pi


class TestWrapAngle:
    def test_identity_inside_range(self):
        assert wrap_angle(0.3) == pytest.approx(0.3)
        assert wrap_angle(-3.0) == pytest.approx(-3.0)

    def test_upper_boundary_included(self):
        assert wrap_angle(PI) == pytest.approx(PI)

    def test_lower_boundary_maps_to_pi(self):
        assert wrap_angle(-PI) == pytest.approx(PI)

    def test_wraps_past_pi(self):
        assert wrap_angle(PI + 0.1) == pytest.approx(-PI + 0.1)
        assert wrap_angle(-PI - 0.1) == pytest.approx(PI - 0.1)

    @given(st.floats(-50.0, 50.0))
    def test_range_half_open(self, x):
        w = wrap_angle(x)
        assert -PI < w <= PI

    @given(st.floats(-50.0, 50.0))
    def test_idempotent(self, x):
        w = wrap_angle(x)
        assert wrap_angle(w) == pytest.approx(w, abs=1e-12)

    @given(st.floats(-6.0, 6.0), st.integers(-3, 3))
    def test_periodic(self, x, k):
        assert wrap_angle(x + 2 * PI * k) == pytest.approx(wrap_angle(x), abs=1e-9)


class TestPhaseFromPlane:
    def test_positive_position_zero_velocity(self):
        est = phase_from_plane(PlaneSignal(y=1.0, y_dot=0.0))
        assert est.angle == pytest.approx(0.0)
        assert not est.degenerate

    def test_negative_velocity_gives_quarter_turn(self):
        est = phase_from_plane(PlaneSignal(y=0.0, y_dot=-1.0))
        assert est.angle == pytest.approx(PI / 2)

    def test_negative_position_gives_pi_not_minus_pi(self):
        est = phase_from_plane(PlaneSignal(y=-1.0, y_dot=0.0))
        assert est.angle == pytest.approx(PI)

    def test_positive_velocity_sweeps_lower_half(self):
        est = phase_from_plane(PlaneSignal(y=0.0, y_dot=1.0))
        assert est.angle == pytest.approx(-PI / 2)

    def test_normalization_constants_apply(self):
        sig = PlaneSignal(y=3.0, y_dot=0.0, y_center=1.0, y_scale=2.0, y_dot_scale=5.0)
        est = phase_from_plane(sig)
        assert est.angle == pytest.approx(0.0)

    def test_degenerate_returns_previous_phase(self):
        sig = PlaneSignal(y=0.0, y_dot=0.0)
        est = phase_from_plane(sig, prev_phase=1.2)
        assert est.degenerate
        assert est.angle == pytest.approx(1.2)

    def test_degenerate_without_previous_returns_zero(self):
        est = phase_from_plane(PlaneSignal(y=0.0, y_dot=0.0))
        assert est.degenerate
        assert est.angle == 0.0

    def test_rejects_nonpositive_scale(self):
        with pytest.raises(ValueError):
            PlaneSignal(y=0.0, y_dot=0.0, y_scale=0.0)
        with pytest.raises(ValueError):
            PlaneSpec(y_dot_scale=-1.0)

    @given(
        st.floats(-10, 10),
        st.floats(-10, 10),
        st.floats(0.1, 10),
        st.floats(0.1, 10),
    )
    def test_output_in_wrapped_range(self, y, y_dot, s, sd):
        est = phase_from_plane(PlaneSignal(y=y, y_dot=y_dot, y_scale=s, y_dot_scale=sd))
        assert -PI < est.angle <= PI

    @given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.05, 4.0))
    def test_scale_invariance_of_joint_rescaling(self, y, y_dot, c):
        # Scaling both normalized components by the same factor keeps the angle.
        base = phase_from_plane(PlaneSignal(y=y, y_dot=y_dot))
        scaled = phase_from_plane(
            PlaneSignal(y=y, y_dot=y_dot, y_scale=c, y_dot_scale=c)
        )
        if not base.degenerate and not scaled.degenerate:
            assert scaled.angle == pytest.approx(base.angle, abs=1e-9)


class TestEstimateVelocity:
    def test_raw_difference_without_smoothing(self):
        v = estimate_velocity(1.0, 0.0, 0.5, y_dot_prev=99.0, smoothing=0.0)
        assert v == pytest.approx(2.0)

    def test_default_smoothing_blends_half(self):
        v = estimate_velocity(1.0, 0.0, 1.0, y_dot_prev=3.0)
        assert v == pytest.approx(0.5 * 3.0 + 0.5 * 1.0)

    def test_rejects_nonpositive_dt(self):
        with pytest.raises(ValueError):
            estimate_velocity(1.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            estimate_velocity(1.0, 0.0, -0.1)

    def test_rejects_bad_smoothing(self):
        with pytest.raises(ValueError):
            estimate_velocity(1.0, 0.0, 0.1, smoothing=1.0)

    def test_constant_signal_decays_estimate(self):
        v = 4.0
        for _ in range(60):
            v = estimate_velocity(2.0, 2.0, 0.1, y_dot_prev=v, smoothing=0.5)
        assert abs(v) < 1e-12


class TestStepOscillator:
    def test_zero_coupling_advances_by_omega(self):
        s = OscillatorState(phi_robot=0.2, omega=1.5)
        out = step_oscillator(s, phi_target=2.0, coupling_k=0.0, alpha=0.0, dt=0.1)
        assert out.phi_robot == pytest.approx(0.2 + 0.15)

    def test_at_fixed_point_phase_holds(self):
        s = OscillatorState(phi_robot=0.9)
        out = step_oscillator(s, phi_target=0.4, coupling_k=10.0, alpha=0.5, dt=0.01)
        assert out.phi_robot == pytest.approx(0.9)

    def test_converges_to_offset_fixed_point(self):
        # Independently integrated at dt=1e-6, phi(0.5 s) = -0.734463778498,
        # against the fixed point phi_target + alpha = -0.734464013796.
        k = 30.0
        alpha = -65.0 * PI / 180.0
        s = OscillatorState(phi_robot=0.0)
        dt = 1e-3
        for _ in range(500):
            s = step_oscillator(s, 0.4, k, alpha, dt)
        assert s.phi_robot == pytest.approx(-0.734464013796, abs=1e-3)

    def test_rejects_nan(self):
        s = OscillatorState(phi_robot=0.0)
        with pytest.raises(ValueError):
            step_oscillator(s, float("nan"), 1.0, 0.0, 0.1)

    def test_rejects_negative_coupling(self):
        s = OscillatorState(phi_robot=0.0)
        with pytest.raises(ValueError):
            step_oscillator(s, 0.0, -1.0, 0.0, 0.1)

    def test_rejects_nonpositive_dt(self):
        s = OscillatorState(phi_robot=0.0)
        with pytest.raises(ValueError):
            step_oscillator(s, 0.0, 1.0, 0.0, 0.0)

    def test_large_gain_step_warns(self):
        s = OscillatorState(phi_robot=0.0)
        with pytest.warns(RuntimeWarning):
            step_oscillator(s, 1.0, 40.0, 0.0, 0.1)

    def test_single_stroke_rejects_out_of_range_state(self):
        with pytest.raises(ValueError):
            OscillatorState(phi_robot=-0.1, mode=MODE_SINGLE_STROKE)
        with pytest.raises(ValueError):
            OscillatorState(phi_robot=PI + 0.1, mode=MODE_SINGLE_STROKE)

    def test_single_stroke_clamps_at_boundaries(self):
        lo = OscillatorState(phi_robot=0.01, mode=MODE_SINGLE_STROKE)
        out = step_oscillator(lo, phi_target=-2.0, coupling_k=20.0, alpha=0.0, dt=0.05)
        assert out.phi_robot == 0.0
        hi = OscillatorState(phi_robot=PI - 0.01, mode=MODE_SINGLE_STROKE)
        out = step_oscillator(hi, phi_target=PI, coupling_k=20.0, alpha=1.0, dt=0.05)
        assert out.phi_robot == PI

    @given(
        st.floats(-PI, PI),
        st.floats(-PI, PI),
        st.floats(0.0, 8.0),
        st.floats(-PI, PI),
        st.floats(1e-4, 0.05),
        st.floats(-2.0, 2.0),
    )
    def test_step_size_bounded(self, phi0, phi_t, k, alpha, dt, omega):
        s = OscillatorState(phi_robot=wrap_angle(phi0), omega=omega)
        out = step_oscillator(s, phi_t, k, alpha, dt)
        # Before wrapping the increment is at most (|omega| + K) dt.
        raw = s.phi_robot + dt * (
            omega + k * math.sin(phi_t - s.phi_robot + alpha)
        )
        assert abs(raw - s.phi_robot) <= (abs(omega) + k) * dt + 1e-12
        assert out.phi_robot == pytest.approx(wrap_angle(raw), abs=1e-12)

    @given(
        st.floats(-PI, PI),
        st.floats(-PI, PI),
        st.floats(0.5, 10.0),
        st.floats(5e-4, 0.02),
    )
    @settings(max_examples=60)
    def test_contraction_toward_fixed_point(self, phi0, phi_t, k, dt):
        # With zero offset the wrapped error to the target shrinks each step
        # while K*dt stays below 1.
        s = OscillatorState(phi_robot=wrap_angle(phi0))
        err0 = abs(wrap_angle(phi_t - s.phi_robot))
        if err0 < 1e-6 or err0 > PI - 1e-6:
            return
        out = step_oscillator(s, phi_t, k, 0.0, dt)
        err1 = abs(wrap_angle(phi_t - out.phi_robot))
        assert err1 <= err0 + 1e-12

    @given(
        st.floats(-PI, PI),
        st.floats(-PI, PI),
        st.floats(0.0, 15.0),
        st.floats(1e-4, 0.05),
    )
    @settings(max_examples=60)
    def test_euler_substep_consistency(self, phi0, phi_t, k, dt):
        # One step at dt stays within O(dt^2) of ten substeps at dt/10.
        coarse = step_oscillator(
            OscillatorState(phi_robot=wrap_angle(phi0)), phi_t, k, 0.0, dt
        )
        fine = OscillatorState(phi_robot=wrap_angle(phi0))
        for _ in range(10):
            fine = step_oscillator(fine, phi_t, k, 0.0, dt / 10.0)
        diff = abs(wrap_angle(coarse.phi_robot - fine.phi_robot))
        assert diff <= 10.0 * max(k, 1.0) * dt * dt + 1e-12
