"""Synthetic solid-state LiDAR scans of a moving spherical target.

The sensor sits at the origin looking down +x. Beam directions follow a
two-arm rosette (sum of two counter-phased circular sweeps with an
irrational-ish frequency ratio) mapped onto the rectangular field of view,
so the sampled directions never repeat from scan to scan and angular
coverage grows with the number of accumulated scans.

Everything is a pure function of (models, trajectory, scan_id, seed):
identical inputs reproduce scans bit for bit, and scans may be generated
in parallel because each one derives its own RNG stream from seed ^ scan_id.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import as_cloud, as_point

# Rosette arms: equal amplitudes summing to 1, so the pattern fills the whole
# unit disc of the normalized FoV rectangle and crosses the FoV center once
# per beat (targets near the boresight are sampled every scan). 7.919
# approximates an irrational frequency ratio; the slow arm advances 0.6 rev
# per 10 ms scan, so consecutive scans are phase-shifted, not retraces.
_ARM1_AMP = 0.5
_ARM2_AMP = 0.5
_ARM1_HZ = 60.0
_ARM2_HZ = _ARM1_HZ * 7.919


class TimeDomainError(ValueError):
    """A scan interval falls outside the trajectory's time domain."""


@dataclass(frozen=True)
class SensorModel:
    """Solid-state LiDAR envelope: 81.7 x 25.1 degree FoV, 100 Hz scans."""

    fov_az: float = 40.85  # half-width, degrees
    fov_el: float = 12.55  # half-height, degrees
    base_rate: float = 100.0  # scans per second
    points_per_scan: int = 2400
    range_noise_sigma: float = 0.01  # meters, 1-sigma along the beam
    max_range: float = 120.0  # meters

    def __post_init__(self):
        if self.fov_az <= 0 or self.fov_el <= 0:
            raise ValueError("FoV half-angles must be positive")
        if self.base_rate <= 0:
            raise ValueError("base_rate must be positive")
        if self.points_per_scan < 0:
            raise ValueError("points_per_scan must be >= 0")
        if self.range_noise_sigma < 0 or self.max_range <= 0:
            raise ValueError("range_noise_sigma must be >= 0 and max_range > 0")

    @property
    def scan_period(self) -> float:
        return 1.0 / self.base_rate


@dataclass(frozen=True)
class TargetModel:
    """Tracked object as a bounding sphere with optional per-ray dropout."""

    radius: float = 0.3  # meters
    reflectivity_dropout: float = 0.0  # probability a hit returns nothing

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("target radius must be positive")
        if not 0.0 <= self.reflectivity_dropout < 1.0:
            raise ValueError("reflectivity_dropout must be in [0, 1)")


class Trajectory:
    """Piecewise-linear path through waypoints at per-segment speeds.

    Waypoint times are derived from segment lengths and speeds, starting at
    t_start. position() clamps to the endpoints, so it is continuous and
    total; callers that care about the time domain check [t_start, t_end].
    A single-waypoint trajectory is a static target with t_end = inf.
    """

    def __init__(self, waypoints, speeds, t_start: float = 0.0):
        self.waypoints = as_cloud(waypoints)
        if len(self.waypoints) == 0:
            raise ValueError("trajectory needs at least one waypoint")
        self.speeds = np.asarray(speeds, dtype=float).reshape(-1)
        if len(self.speeds) != len(self.waypoints) - 1:
            raise ValueError(
                f"expected {len(self.waypoints) - 1} segment speeds, got {len(self.speeds)}"
            )
        if len(self.speeds) and not (self.speeds > 0).all():
            raise ValueError("segment speeds must be positive")
        seg = np.linalg.norm(np.diff(self.waypoints, axis=0), axis=1)
        if len(seg) and not (seg > 0).all():
            raise ValueError("consecutive waypoints must be distinct")
        self.times = float(t_start) + np.concatenate([[0.0], np.cumsum(seg / self.speeds)])

    @classmethod
    def line(cls, start, end, speed: float, t_start: float = 0.0) -> "Trajectory":
        return cls([as_point(start), as_point(end)], [speed], t_start)

    @classmethod
    def static(cls, point, t_start: float = 0.0) -> "Trajectory":
        return cls([as_point(point)], [], t_start)

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1]) if len(self.times) > 1 else math.inf

    def position(self, t) -> np.ndarray:
        """Position at time(s) t: (3,) for a scalar, (k, 3) for an array."""
        ts = np.asarray(t, dtype=float)
        out = np.stack(
            [np.interp(ts, self.times, self.waypoints[:, k]) for k in range(3)],
            axis=-1,
        )
        return out

    def covers(self, t0: float, t1: float, tol: float = 1e-9) -> bool:
        return t0 >= self.t_start - tol and t1 <= self.t_end + tol


@dataclass
class Scan:
    """One sensor sweep: points with per-point acquisition times."""

    scan_id: int
    t_start: float
    t_end: float
    xyz: np.ndarray = field(repr=False)  # (n, 3)
    t: np.ndarray = field(repr=False)  # (n,)

    @property
    def n_points(self) -> int:
        return len(self.xyz)

    def validate(self, sensor: SensorModel, tol: float = 1e-9):
        """Check span, timestamp, and FoV invariants; raise ValueError on violation."""
        if abs((self.t_end - self.t_start) - sensor.scan_period) > tol:
            raise ValueError(f"scan {self.scan_id}: span != 1/base_rate")
        if self.n_points == 0:
            return
        if not np.isfinite(self.xyz).all() or not np.isfinite(self.t).all():
            raise ValueError(f"scan {self.scan_id}: non-finite data")
        if (self.t < self.t_start - tol).any() or (self.t > self.t_end + tol).any():
            raise ValueError(f"scan {self.scan_id}: point time outside scan interval")
        az, el = direction_angles(self.xyz)
        if (np.abs(az) > sensor.fov_az + tol).any() or (np.abs(el) > sensor.fov_el + tol).any():
            raise ValueError(f"scan {self.scan_id}: point direction outside FoV")


def direction_angles(xyz) -> tuple[np.ndarray, np.ndarray]:
    """Azimuth/elevation in degrees of each point's viewing direction."""
    pts = np.asarray(xyz, dtype=float).reshape(-1, 3)
    rng = np.linalg.norm(pts, axis=1)
    az = np.degrees(np.arctan2(pts[:, 1], pts[:, 0]))
    el = np.degrees(np.arcsin(np.clip(pts[:, 2] / np.maximum(rng, 1e-300), -1.0, 1.0)))
    return az, el


def gen_pattern(sensor: SensorModel, t0: float) -> tuple[np.ndarray, np.ndarray]:
    """Beam directions and times for one scan starting at t0.

    Returns (dirs, ts): unit vectors (n, 3) inside the FoV rectangle and the
    per-beam times covering [t0, t0 + scan_period). The rosette phase is a
    function of absolute time, so scans at different t0 sample different
    directions.
    """
    n = sensor.points_per_scan
    ts = t0 + np.arange(n) * (sensor.scan_period / max(n, 1))
    w1 = 2.0 * math.pi * _ARM1_HZ
    w2 = 2.0 * math.pi * _ARM2_HZ
    u = _ARM1_AMP * np.cos(w1 * ts) + _ARM2_AMP * np.cos(w2 * ts)
    v = _ARM1_AMP * np.sin(w1 * ts) + _ARM2_AMP * np.sin(w2 * ts)
    az = np.radians(sensor.fov_az * np.clip(u, -1.0, 1.0))
    el = np.radians(sensor.fov_el * np.clip(v, -1.0, 1.0))
    dirs = np.stack(
        [np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)], axis=1
    )
    return dirs, ts


def simulate_scan(
    sensor: SensorModel,
    target: TargetModel,
    traj: Trajectory,
    scan_id: int,
    seed: int,
    clutter_rate: float = 0.0,
) -> Scan:
    """One scan of the target sphere: ray-sphere hits plus range noise.

    Each beam is intersected with the target's bounding sphere at the
    target position for that beam's time; a hit emits the near intersection
    displaced along the beam by Gaussian range noise, unless dropped out.
    `clutter_rate` adds a Poisson number of uniform in-FoV background points.
    """
    if scan_id < 0 or seed < 0:
        raise ValueError("scan_id and seed must be non-negative")
    t0 = scan_id * sensor.scan_period
    t1 = (scan_id + 1) * sensor.scan_period
    if not traj.covers(t0, t1):
        raise TimeDomainError(
            f"scan [{t0:.6f}, {t1:.6f}] outside trajectory domain "
            f"[{traj.t_start:.6f}, {traj.t_end:.6f}]"
        )
    rng = np.random.default_rng(seed ^ scan_id)
    dirs, ts = gen_pattern(sensor, t0)

    centers = traj.position(ts) if len(ts) else np.empty((0, 3))
    along = np.einsum("ij,ij->i", dirs, centers)  # beam-to-center projection
    disc = along**2 - (np.einsum("ij,ij->i", centers, centers) - target.radius**2)
    hit = disc >= 0.0
    dist = np.where(hit, along - np.sqrt(np.where(hit, disc, 0.0)), np.inf)
    hit &= (dist > 0.0) & (dist <= sensor.max_range)

    if target.reflectivity_dropout > 0.0:
        keep = rng.uniform(size=int(hit.sum())) >= target.reflectivity_dropout
        hit[np.flatnonzero(hit)[~keep]] = False

    d_hit = dist[hit]
    if sensor.range_noise_sigma > 0.0:
        d_hit = d_hit + rng.normal(0.0, sensor.range_noise_sigma, size=len(d_hit))
    xyz = dirs[hit] * d_hit[:, None]
    t_pts = ts[hit]

    if clutter_rate > 0.0:
        m = int(rng.poisson(clutter_rate))
        if m:
            caz = np.radians(rng.uniform(-sensor.fov_az, sensor.fov_az, size=m))
            cel = np.radians(rng.uniform(-sensor.fov_el, sensor.fov_el, size=m))
            cd = np.stack(
                [np.cos(cel) * np.cos(caz), np.cos(cel) * np.sin(caz), np.sin(cel)],
                axis=1,
            )
            cr = rng.uniform(1.0, sensor.max_range, size=m)
            xyz = np.concatenate([xyz, cd * cr[:, None]])
            t_pts = np.concatenate([t_pts, rng.uniform(t0, t1, size=m)])

    return Scan(scan_id=scan_id, t_start=t0, t_end=t1, xyz=xyz, t=t_pts)


def simulate_scans(
    sensor: SensorModel,
    target: TargetModel,
    traj: Trajectory,
    n_scans: int,
    seed: int,
    clutter_rate: float = 0.0,
) -> list[Scan]:
    """Scans 0..n_scans-1 of a run."""
    return [
        simulate_scan(sensor, target, traj, k, seed, clutter_rate)
        for k in range(n_scans)
    ]


def gen_ground_truth(
    traj: Trajectory,
    rate: float,
    duration: float | None = None,
    t_start: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Noise-free positions on a uniform time grid (the MOCAP surrogate).

    Samples t_start, t_start + 1/rate, ... through t_start + duration
    (inclusive). duration defaults to the trajectory's span and must be
    given explicitly for static (unbounded) trajectories.
    """
    if rate <= 0:
        raise ValueError("rate must be positive")
    if t_start is None:
        t_start = traj.t_start
    if duration is None:
        if not math.isfinite(traj.t_end):
            raise ValueError("static trajectory: pass an explicit duration")
        duration = traj.t_end - t_start
    if duration < 0:
        raise ValueError("duration must be >= 0")
    n = int(math.floor(duration * rate + 1e-9)) + 1
    ts = t_start + np.arange(n) / rate
    return ts, traj.position(ts)
