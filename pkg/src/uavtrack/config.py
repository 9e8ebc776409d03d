"""Run configuration and its INI-style config file.

Flat key = value pairs under [sensor], [target], [trajectory], [tracker]
and [run] section headers. Floats render via repr so that
parse(render(config)) == config exactly. Nothing is read from the
environment; every setting is explicit.
"""

import configparser
from dataclasses import dataclass

from .simulate import SensorModel, TargetModel, Trajectory
from .tracking import TrackerConfig


class ConfigError(ValueError):
    """Malformed configuration file content."""


@dataclass(frozen=True)
class RunConfig:
    sensor: SensorModel
    target: TargetModel
    waypoints: tuple  # ((x, y, z), ...) meters
    speeds: tuple  # per-segment m/s, len(waypoints) - 1
    duration: float | None  # seconds of simulation; None = full trajectory
    clutter_rate: float  # expected background points per scan
    methods: tuple  # subset of ("kf", "ekf", "cv")
    integration_counts: tuple  # scans per frame for kf/ekf runs
    seeds: tuple
    search_radius: float
    sigma_accel: float
    sigma_meas: float
    max_coast: int
    association_tol: float | None  # None = half the frame period
    workers: int
    out_dir: str

    def trajectory(self) -> Trajectory:
        return Trajectory(self.waypoints, self.speeds)

    def tracker(self, method: str) -> TrackerConfig:
        return TrackerConfig(
            search_radius=self.search_radius,
            sigma_accel=self.sigma_accel,
            sigma_meas=self.sigma_meas,
            max_coast=self.max_coast,
            method=method,
        )

    def sim_duration(self) -> float:
        traj = self.trajectory()
        if self.duration is not None:
            return self.duration
        return traj.t_end - traj.t_start


def default_config() -> RunConfig:
    # Path sweeps 2.7 m out to 22 m at 0.5-3 m/s with direction changes,
    # drifting toward the boresight at long range where the scan pattern
    # samples densely enough to keep returns on a small target.
    return RunConfig(
        sensor=SensorModel(),
        target=TargetModel(),
        waypoints=(
            (2.5, -1.0, 0.2),
            (6.0, 1.5, 0.4),
            (12.0, -1.0, 0.3),
            (20.0, 0.5, 0.3),
            (22.0, 0.0, 0.4),
        ),
        speeds=(1.0, 2.0, 3.0, 0.5),
        duration=None,
        clutter_rate=0.0,
        methods=("kf", "ekf", "cv"),
        integration_counts=(2, 5, 10, 20, 50),
        seeds=(0, 1, 2),
        search_radius=0.5,
        sigma_accel=2.0,
        sigma_meas=0.05,
        max_coast=5,
        association_tol=None,
        workers=1,
        out_dir="out",
    )


def _floats(text: str) -> tuple:
    items = [f.strip() for f in text.split(",") if f.strip()]
    return tuple(float(f) for f in items)


def _ints(text: str) -> tuple:
    items = [f.strip() for f in text.split(",") if f.strip()]
    return tuple(int(f) for f in items)


def _waypoints(text: str) -> tuple:
    points = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        triple = _floats(chunk)
        if len(triple) != 3:
            raise ConfigError(f"waypoint needs 3 coordinates: {chunk!r}")
        points.append(triple)
    return tuple(points)


_SCHEMA = {
    "sensor": ("fov_az", "fov_el", "base_rate", "points_per_scan", "range_noise_sigma", "max_range"),
    "target": ("radius", "reflectivity_dropout"),
    "trajectory": ("waypoints", "speeds", "duration"),
    "tracker": ("search_radius", "sigma_accel", "sigma_meas", "max_coast", "association_tol"),
    "run": ("methods", "integration_counts", "seeds", "clutter_rate", "workers", "out_dir"),
}


def render_config(cfg: RunConfig) -> str:
    lines = ["[sensor]"]
    s = cfg.sensor
    lines += [
        f"fov_az = {s.fov_az!r}",
        f"fov_el = {s.fov_el!r}",
        f"base_rate = {s.base_rate!r}",
        f"points_per_scan = {s.points_per_scan}",
        f"range_noise_sigma = {s.range_noise_sigma!r}",
        f"max_range = {s.max_range!r}",
        "",
        "[target]",
        f"radius = {cfg.target.radius!r}",
        f"reflectivity_dropout = {cfg.target.reflectivity_dropout!r}",
        "",
        "[trajectory]",
        "waypoints = " + "; ".join(",".join(repr(c) for c in w) for w in cfg.waypoints),
        "speeds = " + ", ".join(repr(v) for v in cfg.speeds),
    ]
    if cfg.duration is not None:
        lines.append(f"duration = {cfg.duration!r}")
    lines += [
        "",
        "[tracker]",
        f"search_radius = {cfg.search_radius!r}",
        f"sigma_accel = {cfg.sigma_accel!r}",
        f"sigma_meas = {cfg.sigma_meas!r}",
        f"max_coast = {cfg.max_coast}",
    ]
    if cfg.association_tol is not None:
        lines.append(f"association_tol = {cfg.association_tol!r}")
    lines += [
        "",
        "[run]",
        "methods = " + ", ".join(cfg.methods),
        "integration_counts = " + ", ".join(str(i) for i in cfg.integration_counts),
        "seeds = " + ", ".join(str(i) for i in cfg.seeds),
        f"clutter_rate = {cfg.clutter_rate!r}",
        f"workers = {cfg.workers}",
        f"out_dir = {cfg.out_dir}",
        "",
    ]
    return "\n".join(lines)


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")

    base = default_config()

    def get(section, key, cast, fallback):
        if not parser.has_option(section, key):
            return fallback
        raw = parser.get(section, key)
        try:
            return cast(raw)
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from None

    try:
        sensor = SensorModel(
            fov_az=get("sensor", "fov_az", float, base.sensor.fov_az),
            fov_el=get("sensor", "fov_el", float, base.sensor.fov_el),
            base_rate=get("sensor", "base_rate", float, base.sensor.base_rate),
            points_per_scan=get("sensor", "points_per_scan", int, base.sensor.points_per_scan),
            range_noise_sigma=get(
                "sensor", "range_noise_sigma", float, base.sensor.range_noise_sigma
            ),
            max_range=get("sensor", "max_range", float, base.sensor.max_range),
        )
        target = TargetModel(
            radius=get("target", "radius", float, base.target.radius),
            reflectivity_dropout=get(
                "target", "reflectivity_dropout", float, base.target.reflectivity_dropout
            ),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    return RunConfig(
        sensor=sensor,
        target=target,
        waypoints=get("trajectory", "waypoints", _waypoints, base.waypoints),
        speeds=get("trajectory", "speeds", _floats, base.speeds),
        duration=get("trajectory", "duration", float, None),
        clutter_rate=get("run", "clutter_rate", float, base.clutter_rate),
        methods=get(
            "run",
            "methods",
            lambda v: tuple(m.strip() for m in v.split(",") if m.strip()),
            base.methods,
        ),
        integration_counts=get("run", "integration_counts", _ints, base.integration_counts),
        seeds=get("run", "seeds", _ints, base.seeds),
        search_radius=get("tracker", "search_radius", float, base.search_radius),
        sigma_accel=get("tracker", "sigma_accel", float, base.sigma_accel),
        sigma_meas=get("tracker", "sigma_meas", float, base.sigma_meas),
        max_coast=get("tracker", "max_coast", int, base.max_coast),
        association_tol=get("tracker", "association_tol", float, None),
        workers=get("run", "workers", int, base.workers),
        out_dir=get("run", "out_dir", str, base.out_dir),
    )


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
