"""Plain-text file formats: scans, ground truth, trajectories, results.

All files are comma-separated with a header row. Coordinates and times are
written with 9 significant digits; result statistics in meters carry 4
decimal places. Parsers report malformed content with the offending path
and line number.
"""

from dataclasses import dataclass

import numpy as np

from .simulate import Scan
from .tracking import TrackResult, TrackStatus

SCAN_HEADER = "scan_id,t,x,y,z"
GROUND_TRUTH_HEADER = "t,x,y,z"
TRAJECTORY_HEADER = "t,x,y,z,vx,vy,vz,status"
RESULT_COLUMNS = (
    "method",
    "I",
    "seed",
    "n",
    "ape_median",
    "q1",
    "q3",
    "whisker_lo",
    "whisker_hi",
    "mean",
    "rmse",
    "frames_lost",
    "status",
)
PLOTDATA_HEADER = "label,method,I,whisker_lo,q1,ape_median,q3,whisker_hi"


class FileFormatError(ValueError):
    def __init__(self, path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = str(path)
        self.lineno = lineno


def _fmt(value: float) -> str:
    return f"{value:.9g}"


def _parse_floats(path, lineno, fields, expected: int):
    if len(fields) != expected:
        raise FileFormatError(path, lineno, f"expected {expected} fields, got {len(fields)}")
    try:
        return [float(f) for f in fields]
    except ValueError as exc:
        raise FileFormatError(path, lineno, str(exc)) from None


def _read_rows(path, header: str):
    with open(path, "r", encoding="ascii") as fh:
        first = fh.readline().rstrip("\n")
        if first != header:
            raise FileFormatError(path, 1, f"expected header {header!r}, got {first!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if line:
                yield lineno, line.split(",")


# ---------------------------------------------------------------- scans


def write_scans(path, scans) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(SCAN_HEADER + "\n")
        for scan in scans:
            for (x, y, z), t in zip(scan.xyz, scan.t):
                fh.write(f"{scan.scan_id},{_fmt(t)},{_fmt(x)},{_fmt(y)},{_fmt(z)}\n")


def read_scans(path, base_rate: float, n_scans: int | None = None) -> list[Scan]:
    """Rebuild the scan list; ids without rows become empty scans.

    The number of scans is max(row ids) + 1 unless n_scans says otherwise
    (trailing scans with zero returns leave no trace in the file).
    """
    by_id: dict[int, list] = {}
    max_id = -1
    for lineno, fields in _read_rows(path, SCAN_HEADER):
        if len(fields) != 5:
            raise FileFormatError(path, lineno, f"expected 5 fields, got {len(fields)}")
        try:
            scan_id = int(fields[0])
        except ValueError:
            raise FileFormatError(path, lineno, f"bad scan_id {fields[0]!r}") from None
        t, x, y, z = _parse_floats(path, lineno, fields[1:], 4)
        by_id.setdefault(scan_id, []).append((t, x, y, z))
        max_id = max(max_id, scan_id)

    total = (max_id + 1) if n_scans is None else n_scans
    period = 1.0 / base_rate
    scans = []
    for k in range(total):
        rows = by_id.get(k, [])
        arr = np.array(rows, dtype=float).reshape(-1, 4)
        scans.append(
            Scan(
                scan_id=k,
                t_start=k * period,
                t_end=(k + 1) * period,
                xyz=arr[:, 1:],
                t=arr[:, 0],
            )
        )
    return scans


# ---------------------------------------------------------------- ground truth


def write_ground_truth(path, t, xyz) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(GROUND_TRUTH_HEADER + "\n")
        for ti, (x, y, z) in zip(t, xyz):
            fh.write(f"{_fmt(ti)},{_fmt(x)},{_fmt(y)},{_fmt(z)}\n")


def read_ground_truth(path) -> tuple[np.ndarray, np.ndarray]:
    rows = [_parse_floats(path, lineno, fields, 4) for lineno, fields in _read_rows(path, GROUND_TRUTH_HEADER)]
    arr = np.array(rows, dtype=float).reshape(-1, 4)
    return arr[:, 0], arr[:, 1:]


# ---------------------------------------------------------------- trajectories


def write_trajectory(path, result: TrackResult) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(TRAJECTORY_HEADER + "\n")
        for state, status in zip(result.states, result.statuses):
            coords = ",".join(_fmt(v) for v in (*state.x, *state.v))
            fh.write(f"{_fmt(state.t)},{coords},{status.value}\n")


def read_trajectory(path):
    """(t, positions, velocities, statuses) from a trajectory file."""
    ts, xs, vs, statuses = [], [], [], []
    for lineno, fields in _read_rows(path, TRAJECTORY_HEADER):
        if len(fields) != 8:
            raise FileFormatError(path, lineno, f"expected 8 fields, got {len(fields)}")
        values = _parse_floats(path, lineno, fields[:7], 7)
        try:
            status = TrackStatus(fields[7])
        except ValueError:
            raise FileFormatError(path, lineno, f"bad status {fields[7]!r}") from None
        ts.append(values[0])
        xs.append(values[1:4])
        vs.append(values[4:7])
        statuses.append(status)
    return (
        np.array(ts),
        np.array(xs).reshape(-1, 3),
        np.array(vs).reshape(-1, 3),
        statuses,
    )


# ---------------------------------------------------------------- results


@dataclass
class ResultRow:
    """One (method, integration, seed) tracking run, or a seed aggregate."""

    method: str
    integration: int
    seed: str  # seed number, or "agg" for the across-seed aggregate
    n: int
    ape_median: float
    q1: float
    q3: float
    whisker_lo: float
    whisker_hi: float
    mean: float
    rmse: float
    frames_lost: int
    status: str  # ok | lost | failed:<reason>

    def sort_key(self):
        rank = {"kf": 0, "ekf": 1, "cv": 2}.get(self.method, 99)
        seed_rank = (1, 0) if self.seed == "agg" else (0, int(self.seed))
        return (rank, self.integration, *seed_rank)

    @property
    def label(self) -> str:
        return "CV" if self.method == "cv" else f"I{self.integration}_{self.method.upper()}"


def write_results(path, rows) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(",".join(RESULT_COLUMNS) + "\n")
        for r in rows:
            stats = ",".join(
                f"{v:.4f}"
                for v in (r.ape_median, r.q1, r.q3, r.whisker_lo, r.whisker_hi, r.mean, r.rmse)
            )
            fh.write(
                f"{r.method},{r.integration},{r.seed},{r.n},{stats},{r.frames_lost},{r.status}\n"
            )


def read_results(path) -> list[ResultRow]:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().rstrip("\n")
        columns = header.split(",") if header else []
        missing = [c for c in RESULT_COLUMNS if c not in columns]
        if missing:
            raise FileFormatError(path, 1, f"missing columns: {', '.join(missing)}")
        index = {c: columns.index(c) for c in RESULT_COLUMNS}
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != len(columns):
                raise FileFormatError(
                    path, lineno, f"expected {len(columns)} fields, got {len(fields)}"
                )
            get = lambda c: fields[index[c]]
            try:
                rows.append(
                    ResultRow(
                        method=get("method"),
                        integration=int(get("I")),
                        seed=get("seed"),
                        n=int(get("n")),
                        ape_median=float(get("ape_median")),
                        q1=float(get("q1")),
                        q3=float(get("q3")),
                        whisker_lo=float(get("whisker_lo")),
                        whisker_hi=float(get("whisker_hi")),
                        mean=float(get("mean")),
                        rmse=float(get("rmse")),
                        frames_lost=int(get("frames_lost")),
                        status=get("status"),
                    )
                )
            except ValueError as exc:
                raise FileFormatError(path, lineno, str(exc)) from None
    return rows


def write_plotdata(path, rows) -> None:
    """Box fields per aggregated run, in canonical plotting order."""
    ordered = sorted(rows, key=ResultRow.sort_key)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(PLOTDATA_HEADER + "\n")
        for r in ordered:
            box = ",".join(
                f"{v:.4f}" for v in (r.whisker_lo, r.q1, r.ape_median, r.q3, r.whisker_hi)
            )
            fh.write(f"{r.label},{r.method},{r.integration},{box}\n")


# ---------------------------------------------------------------- debug dumps


def write_frames(path, frames) -> None:
    """Scan-format dump with a leading frame index column (debug aid)."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("frame_k," + GROUND_TRUTH_HEADER + "\n")
        for frame in frames:
            for (x, y, z), t in zip(frame.xyz, frame.t):
                fh.write(f"{frame.k},{_fmt(t)},{_fmt(x)},{_fmt(y)},{_fmt(z)}\n")
