"""Single-target trackers over integrated LiDAR frames.

Per frame, every method predicts the target position with a constant
velocity motion model, extracts the points within a search radius of the
prediction (k-d tree radius query over the whole frame), and takes their
centroid as the measurement. The methods differ in how the measurement is
folded back in:

  kf   linear Kalman filter on [position, velocity]
  ekf  extended Kalman filter on [position, speed, heading, pitch]
  cv   tracking by detection: the centroid becomes the new position,
       velocity is the finite difference, no covariance

When the search region is empty the track coasts on prediction alone for
up to `max_coast` consecutive frames before it is declared lost. Loss is a
status, not an exception.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .frames import Frame
from .geometry import EmptyCloudError, as_point, build_kdtree, centroid

# Heading/pitch process noise scales like lateral acceleration over speed;
# the floor keeps it finite through hover.
_MIN_TURN_SPEED = 0.5


class TrackStatus(Enum):
    TRACKING = "tracking"
    COASTING = "coasting"
    LOST = "lost"


@dataclass(frozen=True)
class TrackerConfig:
    search_radius: float = 0.5  # meters around the predicted position
    sigma_accel: float = 2.0  # process noise, white acceleration density m/s^2
    sigma_meas: float = 0.05  # centroid measurement noise std, meters
    max_coast: int = 5  # frames of pure prediction before the track is lost
    method: str = "kf"  # kf | ekf | cv
    scale_meas_by_support: bool = False  # shrink sigma_meas with point count

    def __post_init__(self):
        if self.search_radius <= 0 or self.sigma_accel <= 0 or self.sigma_meas <= 0:
            raise ValueError("search_radius, sigma_accel, sigma_meas must be positive")
        if self.max_coast < 0:
            raise ValueError("max_coast must be >= 0")
        if self.method not in ("kf", "ekf", "cv"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass
class Measurement:
    z: np.ndarray  # (3,) centroid of the extracted points
    t: float
    support: int  # number of points averaged

    def __post_init__(self):
        if self.support < 1:
            raise ValueError("a measurement needs at least one point")


@dataclass
class UavState:
    """Position/velocity estimate with 6x6 covariance (pos block first)."""

    x: np.ndarray  # (3,) meters
    v: np.ndarray  # (3,) m/s
    P: np.ndarray  # (6, 6)
    t: float


@dataclass
class EkfState:
    """Polar-velocity estimate: position, speed along heading/pitch."""

    x: np.ndarray  # (3,) meters
    speed: float  # m/s, >= 0
    heading: float  # rad, (-pi, pi]
    pitch: float  # rad, [-pi/2, pi/2]
    P: np.ndarray  # (6, 6) over (x, y, z, speed, heading, pitch)
    t: float
    gimbal_degenerate: bool = False


def _symmetrize(P: np.ndarray) -> np.ndarray:
    return 0.5 * (P + P.T)


def cv_transition(dt: float) -> np.ndarray:
    """Constant velocity transition over [position, velocity]."""
    F = np.eye(6)
    F[0, 3] = F[1, 4] = F[2, 5] = dt
    return F


def white_accel_noise(dt: float, sigma_accel: float) -> np.ndarray:
    """Discrete white-noise-acceleration process covariance, per-axis blocks."""
    s2 = sigma_accel * sigma_accel
    q_pp = 0.25 * dt**4 * s2
    q_pv = 0.5 * dt**3 * s2
    q_vv = dt**2 * s2
    Q = np.zeros((6, 6))
    for i in range(3):
        Q[i, i] = q_pp
        Q[i, i + 3] = Q[i + 3, i] = q_pv
        Q[i + 3, i + 3] = q_vv
    return Q


def make_initial_state(x0, t: float, sigma_meas: float) -> UavState:
    """Known initial position, zero velocity, diagonal prior."""
    P = np.diag([sigma_meas**2] * 3 + [1.0] * 3)
    return UavState(x=as_point(x0), v=np.zeros(3), P=P, t=float(t))


def kf_predict(state: UavState, dt: float, sigma_accel: float) -> UavState:
    """Constant velocity prediction: x += v dt, v unchanged, P = F P F' + Q."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    F = cv_transition(dt)
    P = _symmetrize(F @ state.P @ F.T + white_accel_noise(dt, sigma_accel))
    return UavState(x=state.x + state.v * dt, v=state.v.copy(), P=P, t=state.t + dt)


def kf_update(state: UavState, meas: Measurement, sigma_meas: float) -> UavState:
    """Linear Kalman update with position-only measurement, Joseph form."""
    H = np.zeros((3, 6))
    H[:, :3] = np.eye(3)
    R = sigma_meas**2 * np.eye(3)
    S = state.P[:3, :3] + R
    K = np.linalg.solve(S.T, (state.P @ H.T).T).T  # P H' S^-1
    innovation = meas.z - state.x
    full = np.concatenate([state.x, state.v]) + K @ innovation
    A = np.eye(6) - K @ H
    P = _symmetrize(A @ state.P @ A.T + K @ R @ K.T)
    return UavState(x=full[:3], v=full[3:], P=P, t=state.t)


# ------------------------------------------------------------------ EKF


def make_initial_ekf(x0, t: float, sigma_meas: float) -> EkfState:
    P = np.diag([sigma_meas**2] * 3 + [1.0] * 3)
    return EkfState(x=as_point(x0), speed=0.0, heading=0.0, pitch=0.0, P=P, t=float(t))


def ekf_transition(vec: np.ndarray, dt: float) -> np.ndarray:
    """Mean transition over (x, y, z, speed, heading, pitch)."""
    x, y, z, speed, heading, pitch = vec
    ch, sh = math.cos(heading), math.sin(heading)
    cp, sp = math.cos(pitch), math.sin(pitch)
    return np.array(
        [
            x + speed * cp * ch * dt,
            y + speed * cp * sh * dt,
            z + speed * sp * dt,
            speed,
            heading,
            pitch,
        ]
    )


def ekf_jacobian(vec: np.ndarray, dt: float) -> np.ndarray:
    """Analytic Jacobian of ekf_transition at vec."""
    _, _, _, speed, heading, pitch = vec
    ch, sh = math.cos(heading), math.sin(heading)
    cp, sp = math.cos(pitch), math.sin(pitch)
    J = np.eye(6)
    J[0, 3] = cp * ch * dt
    J[0, 4] = -speed * cp * sh * dt
    J[0, 5] = -speed * sp * ch * dt
    J[1, 3] = cp * sh * dt
    J[1, 4] = speed * cp * ch * dt
    J[1, 5] = -speed * sp * sh * dt
    J[2, 3] = sp * dt
    J[2, 5] = speed * cp * dt
    return J


def _ekf_process_noise(dt: float, sigma_accel: float, speed: float) -> np.ndarray:
    s2 = sigma_accel * sigma_accel
    q_pos = 0.25 * dt**4 * s2
    q_speed = dt**2 * s2
    q_ang = (dt * sigma_accel / max(abs(speed), _MIN_TURN_SPEED)) ** 2
    return np.diag([q_pos, q_pos, q_pos, q_speed, q_ang, q_ang])


def _ekf_vec(state: EkfState) -> np.ndarray:
    return np.array([*state.x, state.speed, state.heading, state.pitch])


def _wrap_heading(angle: float) -> float:
    wrapped = math.remainder(angle, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


def ekf_predict(state: EkfState, dt: float, sigma_accel: float) -> EkfState:
    if dt <= 0:
        raise ValueError("dt must be positive")
    vec = _ekf_vec(state)
    new = ekf_transition(vec, dt)
    J = ekf_jacobian(vec, dt)
    P = _symmetrize(J @ state.P @ J.T + _ekf_process_noise(dt, sigma_accel, state.speed))
    return EkfState(
        x=new[:3],
        speed=float(new[3]),
        heading=float(new[4]),
        pitch=float(new[5]),
        P=P,
        t=state.t + dt,
        gimbal_degenerate=state.gimbal_degenerate,
    )


def ekf_update(state: EkfState, meas: Measurement, sigma_meas: float) -> EkfState:
    """Position measurement update; heading is held when pitch is gimbal-degenerate."""
    H = np.zeros((3, 6))
    H[:, :3] = np.eye(3)
    R = sigma_meas**2 * np.eye(3)
    S = state.P[:3, :3] + R
    K = np.linalg.solve(S.T, (state.P @ H.T).T).T
    degenerate = math.cos(state.pitch) < 1e-6
    if degenerate:
        K[4, :] = 0.0  # heading unobservable near the poles
    vec = _ekf_vec(state) + K @ (meas.z - state.x)
    A = np.eye(6) - K @ H
    P = _symmetrize(A @ state.P @ A.T + K @ R @ K.T)
    return EkfState(
        x=vec[:3],
        speed=max(float(vec[3]), 0.0),
        heading=_wrap_heading(float(vec[4])),
        pitch=float(np.clip(vec[5], -0.5 * math.pi, 0.5 * math.pi)),
        P=P,
        t=state.t,
        gimbal_degenerate=degenerate,
    )


def uav_from_ekf(state: EkfState) -> UavState:
    """Project the polar-velocity estimate onto [position, velocity]."""
    ch, sh = math.cos(state.heading), math.sin(state.heading)
    cp, sp = math.cos(state.pitch), math.sin(state.pitch)
    v = state.speed * np.array([cp * ch, cp * sh, sp])
    J = np.eye(6)
    J[3:, 3:] = np.array(
        [
            [cp * ch, -state.speed * cp * sh, -state.speed * sp * ch],
            [cp * sh, state.speed * cp * ch, -state.speed * sp * sh],
            [sp, 0.0, state.speed * cp],
        ]
    )
    return UavState(x=state.x.copy(), v=v, P=_symmetrize(J @ state.P @ J.T), t=state.t)


# ------------------------------------------------------------------ CV


def _cv_advance(prev: UavState, z: np.ndarray, dt: float) -> UavState:
    v = (z - prev.x) / dt
    return UavState(x=z, v=v, P=np.zeros((6, 6)), t=prev.t + dt)


def cv_step(prev: UavState, frame: Frame, cfg: TrackerConfig) -> UavState:
    """Tracking by detection: predict, extract, and snap to the centroid.

    Raises EmptyCloudError when no frame point falls inside the search
    radius; callers coast on prediction in that case.
    """
    dt = frame.timestamp - prev.t
    if dt <= 0:
        raise ValueError("frame does not advance time")
    predicted = prev.x + prev.v * dt
    tree = build_kdtree(frame.xyz)
    idx = tree.query_radius(predicted, cfg.search_radius)
    z = centroid(frame.xyz[idx])  # raises EmptyCloudError on empty extraction
    return _cv_advance(prev, z, dt)


# ------------------------------------------------------------------ track loop


@dataclass
class TrackResult:
    """One state/status per processed frame; processing stops at loss."""

    states: list
    statuses: list
    supports: list
    lost_frame: int | None = None

    def estimates(self) -> tuple[np.ndarray, np.ndarray]:
        """(timestamps, positions) of usable estimates (lost frame excluded)."""
        keep = [
            (s.t, s.x)
            for s, status in zip(self.states, self.statuses)
            if status is not TrackStatus.LOST
        ]
        if not keep:
            return np.empty(0), np.empty((0, 3))
        ts, xs = zip(*keep)
        return np.array(ts), np.array(xs)

    def velocities(self) -> np.ndarray:
        return np.array([s.v for s in self.states]) if self.states else np.empty((0, 3))


def track(frames, x0, cfg: TrackerConfig) -> TrackResult:
    """Run one tracker over a frame sequence from a known initial position.

    Per frame: predict with the motion model, radius-search the frame around
    the prediction, average the extracted points, update. An empty first
    frame loses the track immediately (the initial position must be near the
    target); later empty frames coast up to cfg.max_coast times.
    """
    frames = list(frames)
    result = TrackResult(states=[], statuses=[], supports=[])
    if not frames:
        return result

    x0 = as_point(x0)
    t0 = frames[0].t_start
    state = make_initial_state(x0, t0, cfg.sigma_meas)
    ekf = make_initial_ekf(x0, t0, cfg.sigma_meas) if cfg.method == "ekf" else None
    coast = 0

    for i, frame in enumerate(frames):
        dt = frame.timestamp - state.t
        if cfg.method == "ekf":
            ekf = ekf_predict(ekf, dt, cfg.sigma_accel)
            predicted = uav_from_ekf(ekf)
        else:
            predicted = kf_predict(state, dt, cfg.sigma_accel)

        tree = build_kdtree(frame.xyz)
        idx = tree.query_radius(predicted.x, cfg.search_radius)

        if len(idx) == 0:
            coast += 1
            state = predicted
            if i == 0 or coast > cfg.max_coast:
                result.states.append(state)
                result.statuses.append(TrackStatus.LOST)
                result.supports.append(0)
                result.lost_frame = i
                break
            result.states.append(state)
            result.statuses.append(TrackStatus.COASTING)
            result.supports.append(0)
            continue

        points = frame.xyz[idx]
        assert (
            np.linalg.norm(points - predicted.x, axis=1) <= cfg.search_radius + 1e-9
        ).all(), "extracted point outside the search radius"
        z = centroid(points)
        support = len(idx)
        sigma = cfg.sigma_meas / math.sqrt(support) if cfg.scale_meas_by_support else cfg.sigma_meas
        meas = Measurement(z=z, t=frame.timestamp, support=support)

        if cfg.method == "kf":
            state = kf_update(predicted, meas, sigma)
        elif cfg.method == "ekf":
            ekf = ekf_update(ekf, meas, sigma)
            state = uav_from_ekf(ekf)
        else:  # cv: snap to the detection
            state = _cv_advance(state, z, dt)

        coast = 0
        result.states.append(state)
        result.statuses.append(TrackStatus.TRACKING)
        result.supports.append(support)

    return result
