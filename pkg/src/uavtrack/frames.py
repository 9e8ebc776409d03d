"""Accumulation of consecutive scans into integrated frames.

Integrating `count` scans trades update rate for point density: at a
100 Hz base rate, 2-scan frames arrive at 50 Hz and 50-scan frames at
2 Hz. Windows never overlap and a trailing remainder shorter than one
window is dropped.
"""

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .simulate import Scan


class DiscontiguousScansError(ValueError):
    """Scans to integrate are not consecutive in id and time."""


class InvalidIntegrationError(ValueError):
    """Integration count outside the valid range."""


@dataclass
class Frame:
    """Points of `integration_count` consecutive scans, concatenated."""

    k: int  # frame index
    integration_count: int
    t_start: float
    t_end: float
    xyz: np.ndarray = field(repr=False)  # (n, 3)
    t: np.ndarray = field(repr=False)  # (n,)

    @property
    def n_points(self) -> int:
        return len(self.xyz)

    @property
    def timestamp(self) -> float:
        # A frame is stamped at the end of its last scan: the centroid
        # measurement correlates most with the latest target position.
        return self.t_end


def integrate(scans: Sequence[Scan], k: int | None = None) -> Frame:
    """Merge consecutive scans into one frame."""
    if not scans:
        raise InvalidIntegrationError("cannot integrate zero scans")
    ids = [s.scan_id for s in scans]
    for a, b in zip(ids, ids[1:]):
        if b != a + 1:
            raise DiscontiguousScansError(f"scan ids not consecutive: {a} -> {b}")
    for a, b in zip(scans, scans[1:]):
        if abs(b.t_start - a.t_end) > 1e-9:
            raise DiscontiguousScansError(
                f"time gap between scans {a.scan_id} and {b.scan_id}"
            )
    count = len(scans)
    return Frame(
        k=ids[0] // count if k is None else k,
        integration_count=count,
        t_start=scans[0].t_start,
        t_end=scans[-1].t_end,
        xyz=np.concatenate([s.xyz for s in scans]),
        t=np.concatenate([s.t for s in scans]),
    )


def frame_stream(scans: Iterable[Scan], count: int) -> Iterator[Frame]:
    """Non-overlapping frames of `count` scans each; the remainder is dropped."""
    if count < 1:
        raise InvalidIntegrationError(f"integration count must be >= 1, got {count}")
    window: list[Scan] = []
    k = 0
    for scan in scans:
        window.append(scan)
        if len(window) == count:
            yield integrate(window, k=k)
            window = []
            k += 1
