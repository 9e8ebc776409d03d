import numpy as np
import pytest

from uavtrack.frames import (
    DiscontiguousScansError,
    InvalidIntegrationError,
    frame_stream,
    integrate,
)
from uavtrack.simulate import Scan, SensorModel, TargetModel, Trajectory, simulate_scans


def make_scan(scan_id, n_points, base_rate=100.0, value=1.0):
    period = 1.0 / base_rate
    t0 = scan_id * period
    return Scan(
        scan_id=scan_id,
        t_start=t0,
        t_end=t0 + period,
        xyz=np.full((n_points, 3), value),
        t=np.linspace(t0, t0 + period, n_points, endpoint=False),
    )


def test_single_scan_frame_is_identity():
    scan = make_scan(0, 100)
    frame = integrate([scan])
    assert frame.n_points == 100
    assert np.array_equal(frame.xyz, scan.xyz)
    assert np.array_equal(frame.t, scan.t)
    assert frame.t_start == scan.t_start and frame.t_end == scan.t_end


def test_frame_rate_arithmetic():
    # 100 Hz base rate: 2 scans -> 50 Hz frames, 50 scans -> 2 Hz frames
    scans = [make_scan(i, 10) for i in range(100)]
    frames2 = list(frame_stream(scans, 2))
    assert len(frames2) == 50
    spacing = np.diff([f.t_end for f in frames2])
    assert np.allclose(spacing, 0.02, atol=1e-9)

    frames50 = list(frame_stream(scans, 50))
    assert len(frames50) == 2
    assert frames50[1].t_end - frames50[0].t_end == pytest.approx(0.5, abs=1e-9)


def test_integrate_concatenates_sized_scans():
    sizes = [100, 200, 300, 400, 500]
    scans = [make_scan(i, n) for i, n in enumerate(sizes)]
    frame = integrate(scans)
    assert frame.n_points == 1500
    assert frame.t_start == scans[0].t_start
    assert frame.t_end == scans[-1].t_end
    assert frame.integration_count == 5


def test_remainder_scans_are_dropped():
    scans = [make_scan(i, 5) for i in range(101)]
    frames = list(frame_stream(scans, 10))
    assert len(frames) == 10
    assert frames[-1].t_end == pytest.approx(1.0, abs=1e-9)


def test_point_conservation():
    rng = np.random.default_rng(5)
    scans = [make_scan(i, int(rng.integers(0, 50))) for i in range(60)]
    for count in (1, 2, 5, 10, 20):
        frames = list(frame_stream(scans, count))
        used = scans[: len(frames) * count]
        assert sum(f.n_points for f in frames) == sum(s.n_points for s in used)


def test_frame_timestamps_evenly_spaced():
    scans = [make_scan(i, 3) for i in range(200)]
    for count in (2, 5, 10, 20, 50):
        stamps = [f.t_end for f in frame_stream(scans, count)]
        assert np.allclose(np.diff(stamps), count / 100.0, atol=1e-9)
        assert all(a < b for a, b in zip(stamps, stamps[1:]))


def test_invalid_integration_count():
    scans = [make_scan(0, 1)]
    with pytest.raises(InvalidIntegrationError):
        list(frame_stream(scans, 0))
    with pytest.raises(InvalidIntegrationError):
        integrate([])


def test_discontiguous_scan_ids_rejected():
    with pytest.raises(DiscontiguousScansError):
        integrate([make_scan(0, 1), make_scan(2, 1)])


def test_time_gap_rejected():
    a = make_scan(0, 1)
    b = make_scan(1, 1)
    b.t_start += 0.001
    with pytest.raises(DiscontiguousScansError):
        integrate([a, b])


def test_integrated_frame_coverage_superset_of_any_scan():
    from uavtrack.simulate import direction_angles

    def cells(xyz):
        az, el = direction_angles(xyz)
        return set(zip(np.floor(az).astype(int), np.floor(el).astype(int)))

    sensor = SensorModel()
    target = TargetModel(radius=0.5)
    traj = Trajectory.static((4.0, 0.0, 0.0))
    scans = simulate_scans(sensor, target, traj, 50, seed=2)
    frame = integrate(scans)
    frame_cells = cells(frame.xyz)
    for scan in scans:
        if scan.n_points:
            assert cells(scan.xyz) <= frame_cells
