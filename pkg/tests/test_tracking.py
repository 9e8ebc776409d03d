import math

import numpy as np
import pytest

from uavtrack.frames import Frame
from uavtrack.geometry import EmptyCloudError
from uavtrack.tracking import (
    EkfState,
    Measurement,
    TrackerConfig,
    TrackStatus,
    UavState,
    cv_step,
    cv_transition,
    ekf_jacobian,
    ekf_predict,
    ekf_transition,
    ekf_update,
    kf_predict,
    kf_update,
    make_initial_ekf,
    make_initial_state,
    track,
    uav_from_ekf,
    white_accel_noise,
)


def point_frame(k, t_end, xyz, dt_frame=0.02):
    """Synthetic frame holding the given points (noise-free oracle input)."""
    pts = np.atleast_2d(np.asarray(xyz, dtype=float))
    return Frame(
        k=k,
        integration_count=2,
        t_start=t_end - dt_frame,
        t_end=t_end,
        xyz=pts,
        t=np.full(len(pts), t_end),
    )


def frames_along(positions, dt_frame=0.02):
    return [
        point_frame(k, (k + 1) * dt_frame, pos, dt_frame)
        for k, pos in enumerate(positions)
    ]


def matmul_oracle(A, B):
    """Independent triple-loop matrix product."""
    n, m = len(A), len(B[0])
    out = [[0.0] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            out[i][j] = math.fsum(A[i][k] * B[k][j] for k in range(len(B)))
    return np.array(out)


def min_eig(P):
    return np.linalg.eigvalsh(P).min()


# ---------------------------------------------------------------- KF predict


def test_predict_zero_velocity_keeps_position():
    state = make_initial_state((1.0, 2.0, 3.0), 0.0, 0.05)
    pred = kf_predict(state, 0.5, 2.0)
    assert np.array_equal(pred.x, state.x)
    assert np.array_equal(pred.v, np.zeros(3))


def test_predict_advances_by_velocity_times_dt():
    # 2-scan integration at 100 Hz: dt = 0.02
    state = UavState(x=np.zeros(3), v=np.array([1.0, 0.0, 0.0]), P=np.eye(6), t=0.0)
    pred = kf_predict(state, 0.02, 2.0)
    assert np.allclose(pred.x, [0.02, 0.0, 0.0], atol=1e-15)
    assert np.array_equal(pred.v, [1.0, 0.0, 0.0])
    assert pred.t == pytest.approx(0.02)


def test_predict_covariance_matches_hand_product():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(6, 6))
    P = A @ A.T + 0.5 * np.eye(6)
    state = UavState(x=np.zeros(3), v=np.ones(3), P=P, t=0.0)
    dt, sa = 0.07, 1.3
    pred = kf_predict(state, dt, sa)
    F = cv_transition(dt)
    want = matmul_oracle(matmul_oracle(F, P), F.T) + white_accel_noise(dt, sa)
    assert np.allclose(pred.P, 0.5 * (want + want.T), atol=1e-12)


# ---------------------------------------------------------------- KF update


def test_update_perfect_measurement_limit():
    state = make_initial_state((0.0, 0.0, 0.0), 0.0, 0.1)
    pred = kf_predict(state, 0.02, 2.0)
    z = np.array([0.3, -0.1, 0.2])
    post = kf_update(pred, Measurement(z, pred.t, 5), sigma_meas=1e-9)
    assert np.allclose(post.x, z, atol=1e-6)


def test_update_uninformative_measurement_limit():
    state = UavState(
        x=np.array([1.0, 2.0, 3.0]),
        v=np.array([0.5, 0.0, -0.5]),
        P=np.eye(6),
        t=0.0,
    )
    post = kf_update(state, Measurement(np.array([50.0, 50.0, 50.0]), 0.0, 1), 1e9)
    assert np.allclose(post.x, state.x, rtol=1e-6)
    assert np.allclose(post.v, state.v, rtol=1e-6, atol=1e-9)


def test_update_scalar_closed_form_gain():
    # one-axis configuration: prior variance 1, measurement variance 1
    P = np.diag([1.0, 1e-12, 1e-12, 1e-12, 1e-12, 1e-12])
    state = UavState(x=np.zeros(3), v=np.zeros(3), P=P, t=0.0)
    post = kf_update(state, Measurement(np.array([2.0, 0.0, 0.0]), 0.0, 1), 1.0)
    # closed form: K = P/(P+R) = 0.5, posterior mean halfway, variance halved
    assert post.x[0] == pytest.approx(1.0, abs=1e-12)
    assert post.P[0, 0] == pytest.approx(0.5, abs=1e-12)


def test_update_is_convex_combination_per_axis():
    rng = np.random.default_rng(8)
    state = make_initial_state(rng.normal(size=3), 0.0, 0.05)
    for _ in range(300):
        state = kf_predict(state, 0.02, 2.0)
        z = state.x + rng.normal(scale=0.2, size=3)
        post = kf_update(state, Measurement(z, state.t, 3), 0.05)
        lo = np.minimum(state.x, z) - 1e-12
        hi = np.maximum(state.x, z) + 1e-12
        assert ((post.x >= lo) & (post.x <= hi)).all()
        state = post


def test_covariance_stays_symmetric_psd():
    rng = np.random.default_rng(3)
    state = make_initial_state((0, 0, 0), 0.0, 0.05)
    ekf = make_initial_ekf((0, 0, 0), 0.0, 0.05)
    for _ in range(1000):
        dt = float(rng.uniform(0.01, 0.6))
        state = kf_predict(state, dt, 2.0)
        ekf = ekf_predict(ekf, dt, 2.0)
        z = state.x + rng.normal(scale=0.5, size=3)
        state = kf_update(state, Measurement(z, state.t, 2), 0.05)
        ekf = ekf_update(ekf, Measurement(z, ekf.t, 2), 0.05)
        for P in (state.P, ekf.P):
            assert np.abs(P - P.T).max() < 1e-10
            assert min_eig(P) >= -1e-9


# ---------------------------------------------------------------- EKF


def test_ekf_zero_speed_is_fixed_point():
    ekf = make_initial_ekf((4.0, -1.0, 0.5), 0.0, 0.05)
    pred = ekf_predict(ekf, 0.1, 2.0)
    assert np.array_equal(pred.x, ekf.x)


def test_ekf_jacobian_matches_finite_differences():
    rng = np.random.default_rng(17)
    step = 1e-6
    for _ in range(100):
        vec = np.array(
            [
                *rng.uniform(-20, 20, size=3),
                rng.uniform(0.0, 5.0),
                rng.uniform(-math.pi, math.pi),
                rng.uniform(-1.5, 1.5),
            ]
        )
        dt = float(rng.uniform(0.02, 0.5))
        J = ekf_jacobian(vec, dt)
        num = np.zeros((6, 6))
        for j in range(6):
            dv = np.zeros(6)
            dv[j] = step
            num[:, j] = (ekf_transition(vec + dv, dt) - ekf_transition(vec - dv, dt)) / (
                2 * step
            )
        assert np.abs(J - num).max() < 1e-5


def test_ekf_matches_kf_on_straight_line():
    # both models are exact for unaccelerated motion; compare positions
    positions = [(2.0 + 1.0 * 0.02 * (k + 1), 0.0, 0.0) for k in range(40)]
    frames = frames_along(positions)
    kf_run = track(frames, (2.0, 0.0, 0.0), TrackerConfig(method="kf"))
    ekf_run = track(frames, (2.0, 0.0, 0.0), TrackerConfig(method="ekf"))
    assert kf_run.lost_frame is None and ekf_run.lost_frame is None
    for k in range(5, 40):
        diff = np.linalg.norm(kf_run.states[k].x - ekf_run.states[k].x)
        assert diff < 1e-3


def test_ekf_gimbal_degenerate_holds_heading():
    state = EkfState(
        x=np.zeros(3),
        speed=1.0,
        heading=0.7,
        pitch=0.5 * math.pi,
        P=np.eye(6),
        t=0.0,
    )
    post = ekf_update(state, Measurement(np.array([0.1, 0.2, 0.3]), 0.0, 1), 0.05)
    assert post.gimbal_degenerate
    assert post.heading == pytest.approx(0.7)


# ---------------------------------------------------------------- CV


def test_cv_static_target_exact():
    target = np.array([5.0, 0.0, 0.0])
    frames = frames_along([target] * 20)
    state = make_initial_state(target, 0.0, 0.05)
    cfg = TrackerConfig(method="cv")
    for frame in frames:
        state = cv_step(state, frame, cfg)
        assert np.array_equal(state.x, target)


def test_cv_velocity_exact_after_second_frame():
    v_true = np.array([1.0, -0.5, 0.25])
    positions = [(k + 1) * 0.02 * v_true for k in range(10)]
    frames = frames_along(positions)
    state = make_initial_state((0.0, 0.0, 0.0), 0.0, 0.05)
    cfg = TrackerConfig(method="cv")
    states = []
    for frame in frames:
        state = cv_step(state, frame, cfg)
        states.append(state)
    for s in states[1:]:
        assert np.allclose(s.v, v_true, atol=1e-9)


def test_cv_raises_when_no_points_in_radius():
    frame = point_frame(0, 0.02, [(100.0, 0.0, 0.0)])
    state = make_initial_state((0.0, 0.0, 0.0), 0.0, 0.05)
    with pytest.raises(EmptyCloudError):
        cv_step(state, frame, TrackerConfig(method="cv"))


def test_cv_noisier_than_kf_under_measurement_noise():
    # Monte Carlo: tracking-by-detection inherits the raw measurement variance,
    # the filter averages it down.
    cv_err, kf_err = [], []
    v_true = np.array([1.0, 0.0, 0.0])
    for seed in range(20):
        rng = np.random.default_rng(100 + seed)
        truth = [(k + 1) * 0.02 * v_true for k in range(200)]
        noisy = [p + rng.normal(scale=0.02, size=3) for p in truth]
        frames = frames_along(noisy)
        cfg_kf = TrackerConfig(method="kf", sigma_meas=0.02, sigma_accel=1.0)
        cfg_cv = TrackerConfig(method="cv", sigma_meas=0.02, sigma_accel=1.0)
        run_kf = track(frames, (0, 0, 0), cfg_kf)
        run_cv = track(frames, (0, 0, 0), cfg_cv)
        assert run_kf.lost_frame is None and run_cv.lost_frame is None
        for k in range(50, 200):  # skip transient
            kf_err.append(run_kf.states[k].x - truth[k])
            cv_err.append(run_cv.states[k].x - truth[k])
    assert np.var(np.linalg.norm(cv_err, axis=1)) + np.mean(
        np.linalg.norm(cv_err, axis=1)
    ) ** 2 >= np.var(np.linalg.norm(kf_err, axis=1)) + np.mean(
        np.linalg.norm(kf_err, axis=1)
    ) ** 2


# ---------------------------------------------------------------- track loop


def test_track_stationary_target_is_fixed_point():
    target = np.array([5.0, 0.0, 0.0])
    frames = frames_along([target] * 50)
    for method in ("kf", "ekf", "cv"):
        run = track(frames, target, TrackerConfig(method=method))
        assert run.lost_frame is None
        assert len(run.states) == 50
        for s in run.states:
            assert np.linalg.norm(s.x - target) < 1e-9


def test_track_teleport_coasts_then_loses():
    positions = [np.array([1.0, 0.0, 0.0])] * 10 + [np.array([50.0, 0.0, 0.0])] * 10
    frames = frames_along(positions)
    cfg = TrackerConfig(method="kf", max_coast=3)
    run = track(frames, (1.0, 0.0, 0.0), cfg)
    assert run.statuses[:10] == [TrackStatus.TRACKING] * 10
    assert run.statuses[10:13] == [TrackStatus.COASTING] * 3
    assert run.statuses[13] == TrackStatus.LOST
    assert run.lost_frame == 13
    assert len(run.states) == 14  # nothing processed after loss


def test_track_immediate_loss_when_x0_far_from_points():
    frames = frames_along([np.array([5.0, 0.0, 0.0])] * 5)
    run = track(frames, (0.0, 0.0, 0.0), TrackerConfig(method="kf"))
    assert run.lost_frame == 0
    assert run.statuses == [TrackStatus.LOST]


def test_track_is_deterministic():
    rng = np.random.default_rng(5)
    positions = [
        np.array([2.0 + 0.02 * k, 0.1, 0.0]) + rng.normal(scale=0.01, size=3)
        for k in range(100)
    ]
    frames = frames_along(positions)
    cfg = TrackerConfig(method="kf")
    a = track(frames, positions[0], cfg)
    b = track(frames, positions[0], cfg)
    for sa, sb in zip(a.states, b.states):
        assert np.array_equal(sa.x, sb.x)
        assert np.array_equal(sa.v, sb.v)
        assert np.array_equal(sa.P, sb.P)


def test_track_supports_count_points_used():
    target = np.array([3.0, 0.0, 0.0])
    cluster = target + 0.05 * np.array([(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0)])
    frames = frames_along([cluster] * 5)
    run = track(frames, target, TrackerConfig(method="kf"))
    assert run.supports == [4] * 5


def test_config_validation():
    with pytest.raises(ValueError):
        TrackerConfig(method="imm")
    with pytest.raises(ValueError):
        TrackerConfig(search_radius=0.0)
    with pytest.raises(ValueError):
        Measurement(np.zeros(3), 0.0, 0)
