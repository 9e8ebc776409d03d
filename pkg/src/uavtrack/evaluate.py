"""Trajectory evaluation: time association, rigid alignment, APE statistics.

Estimates are matched to ground truth by nearest timestamp, both
trajectories are brought into a common frame with a closed-form rigid
(rotation + translation, no scale) least-squares fit, and the per-pair
euclidean errors are summarized with box-plot statistics.
"""

from dataclasses import dataclass

import numpy as np

from .geometry import as_cloud


class EmptyOverlapError(ValueError):
    """No estimate timestamp matched any ground-truth timestamp."""


@dataclass
class AlignedPairs:
    """Time-matched estimate/ground-truth positions."""

    t: np.ndarray  # (m,)
    est: np.ndarray  # (m, 3)
    gt: np.ndarray  # (m, 3)
    n_dropped: int = 0

    def __len__(self) -> int:
        return len(self.t)


@dataclass
class Se3Transform:
    """Rigid transform p -> R p + t. `degenerate` marks a translation-only fit."""

    rotation: np.ndarray  # (3, 3)
    translation: np.ndarray  # (3,)
    degenerate: bool = False

    @classmethod
    def identity(cls) -> "Se3Transform":
        return cls(rotation=np.eye(3), translation=np.zeros(3))

    def apply(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return pts @ self.rotation.T + self.translation


@dataclass
class ApeReport:
    """Box-plot summary of absolute position errors, all in meters."""

    n: int
    median: float
    q1: float
    q3: float
    whisker_lo: float
    whisker_hi: float
    mean: float
    rmse: float
    alignment_degenerate: bool = False


def associate(est_t, est_xyz, gt_t, gt_xyz, tol: float) -> AlignedPairs:
    """Match each estimate to the nearest-in-time ground-truth sample.

    Estimates with no ground-truth stamp within `tol` seconds are dropped
    and counted. Both inputs must be sorted by time.
    """
    est_t = np.asarray(est_t, dtype=float)
    gt_t = np.asarray(gt_t, dtype=float)
    est_xyz = as_cloud(est_xyz)
    gt_xyz = as_cloud(gt_xyz)
    if len(est_t) == 0 or len(gt_t) == 0:
        raise EmptyOverlapError("empty trajectory")

    pos = np.searchsorted(gt_t, est_t)
    left = np.clip(pos - 1, 0, len(gt_t) - 1)
    right = np.clip(pos, 0, len(gt_t) - 1)
    pick = np.where(
        np.abs(gt_t[left] - est_t) <= np.abs(gt_t[right] - est_t), left, right
    )
    close = np.abs(gt_t[pick] - est_t) <= tol
    if not close.any():
        raise EmptyOverlapError("estimate and ground-truth time ranges do not overlap")
    return AlignedPairs(
        t=est_t[close],
        est=est_xyz[close],
        gt=gt_xyz[pick[close]],
        n_dropped=int((~close).sum()),
    )


def umeyama_align(est, gt) -> Se3Transform:
    """Least-squares rigid transform T with T(est) closest to gt.

    Closed-form via SVD of the cross-covariance, with the usual sign
    correction on the smallest singular value so the result is a proper
    rotation. Collinear (or < 3) pairs cannot pin down a rotation; those
    fall back to a translation-only fit flagged as degenerate.
    """
    est = as_cloud(est)
    gt = as_cloud(gt)
    if est.shape != gt.shape or len(est) == 0:
        raise ValueError("need equally sized, non-empty point sets")
    mu_e = est.mean(axis=0)
    mu_g = gt.mean(axis=0)
    cross = (gt - mu_g).T @ (est - mu_e) / len(est)
    U, S, Vt = np.linalg.svd(cross)

    if len(est) < 3 or S[1] <= 1e-12 * max(S[0], 1e-300):
        return Se3Transform(
            rotation=np.eye(3), translation=mu_g - mu_e, degenerate=True
        )

    D = np.eye(3)
    if np.linalg.det(U) * np.linalg.det(Vt) < 0:
        D[2, 2] = -1.0
    R = U @ D @ Vt
    return Se3Transform(rotation=R, translation=mu_g - R @ mu_e)


def tukey_whiskers(values: np.ndarray, q1: float, q3: float) -> tuple[float, float]:
    """Farthest data points within 1.5 IQR of the box, clamped to the box."""
    iqr = q3 - q1
    in_lo = values[values >= q1 - 1.5 * iqr]
    in_hi = values[values <= q3 + 1.5 * iqr]
    lo = float(in_lo.min()) if len(in_lo) and in_lo.min() < q1 else float(q1)
    hi = float(in_hi.max()) if len(in_hi) and in_hi.max() > q3 else float(q3)
    return lo, hi


def ape_stats(pairs: AlignedPairs, transform: Se3Transform | None = None) -> ApeReport:
    """Box-plot statistics of per-pair errors ||T(est) - gt||."""
    if len(pairs) < 1:
        raise ValueError("need at least one pair")
    if transform is None:
        transform = Se3Transform.identity()
    err = np.linalg.norm(transform.apply(pairs.est) - pairs.gt, axis=1)
    q1, median, q3 = (float(v) for v in np.percentile(err, [25.0, 50.0, 75.0]))
    lo, hi = tukey_whiskers(err, q1, q3)
    return ApeReport(
        n=len(err),
        median=median,
        q1=q1,
        q3=q3,
        whisker_lo=lo,
        whisker_hi=hi,
        mean=float(err.mean()),
        rmse=float(np.sqrt(np.mean(err**2))),
        alignment_degenerate=transform.degenerate,
    )


def evaluate_ape(est_t, est_xyz, gt_t, gt_xyz, tol: float) -> ApeReport:
    """Associate, align, and summarize in one call."""
    pairs = associate(est_t, est_xyz, gt_t, gt_xyz, tol)
    transform = umeyama_align(pairs.est, pairs.gt)
    return ape_stats(pairs, transform)
