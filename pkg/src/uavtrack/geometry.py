"""Geometric core: point validation, k-d tree radius search, centroid.

Point clouds are plain (n, 3) float64 arrays; single points are (3,) arrays.
The k-d tree is immutable after construction and safe for concurrent
read-only queries.
"""

import numpy as np

LEAF_SIZE = 16


class EmptyCloudError(ValueError):
    """An operation that needs at least one point received none."""


def as_point(p) -> np.ndarray:
    """Coerce to a finite (3,) float64 point."""
    arr = np.asarray(p, dtype=np.float64).reshape(3)
    if not np.isfinite(arr).all():
        raise ValueError(f"point has non-finite components: {arr}")
    return arr


def as_cloud(points) -> np.ndarray:
    """Coerce to a finite (n, 3) float64 cloud; n may be zero."""
    arr = np.asarray(points, dtype=np.float64)
    if arr.size == 0:
        return arr.reshape(0, 3)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"expected (n, 3) cloud, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("cloud has non-finite components")
    return arr


class _Node:
    __slots__ = ("axis", "threshold", "left", "right", "indices")

    def __init__(self, axis=-1, threshold=0.0, left=None, right=None, indices=None):
        self.axis = axis
        self.threshold = threshold
        self.left = left
        self.right = right
        self.indices = indices  # leaf only


class KdTree:
    """Binary spatial index over a fixed point set.

    Splits on the widest-spread axis at the median (ties broken by the
    smallest axis index), with leaf buckets of up to LEAF_SIZE points, so the
    structure is deterministic for a given input order. Degenerate clouds
    (zero spread on every axis) collapse into a single leaf.
    """

    def __init__(self, points):
        self.points = as_cloud(points)
        self.points.setflags(write=False)
        n = len(self.points)
        self._root = self._build(np.arange(n, dtype=np.intp)) if n else None

    def __len__(self) -> int:
        return len(self.points)

    def _build(self, idx: np.ndarray) -> _Node:
        if len(idx) <= LEAF_SIZE:
            return _Node(indices=idx)
        sub = self.points[idx]
        spans = sub.max(axis=0) - sub.min(axis=0)
        axis = int(np.argmax(spans))  # argmax returns the first max: smallest axis wins ties
        if spans[axis] == 0.0:
            return _Node(indices=idx)  # all points identical: don't recurse
        mid = len(idx) // 2
        order = idx[np.argpartition(np.ascontiguousarray(sub[:, axis]), mid)]
        return _Node(
            axis=axis,
            threshold=float(self.points[order[mid], axis]),
            left=self._build(order[:mid]),
            right=self._build(order[mid:]),
        )

    def query_radius(self, center, radius: float) -> np.ndarray:
        """Indices of all points within `radius` of `center` (boundary included)."""
        c = as_point(center)
        if not (np.isfinite(radius) and radius >= 0.0):
            raise ValueError(f"radius must be finite and >= 0, got {radius}")
        if self._root is None:
            return np.empty(0, dtype=np.intp)
        r2 = radius * radius
        hits = []
        stack = [self._root]
        while stack:
            node = stack.pop()
            if node.indices is not None:
                d2 = ((self.points[node.indices] - c) ** 2).sum(axis=1)
                sel = node.indices[d2 <= r2]
                if len(sel):
                    hits.append(sel)
                continue
            # left holds coords <= threshold, right holds coords >= threshold
            if c[node.axis] - radius <= node.threshold:
                stack.append(node.left)
            if c[node.axis] + radius >= node.threshold:
                stack.append(node.right)
        if not hits:
            return np.empty(0, dtype=np.intp)
        return np.sort(np.concatenate(hits))


def build_kdtree(points) -> KdTree:
    """Build an index over `points`; an empty input yields an empty tree."""
    return KdTree(points)


def radius_search(tree: KdTree, center, radius: float) -> np.ndarray:
    """All indexed points with euclidean distance <= radius from center, as (m, 3)."""
    return tree.points[tree.query_radius(center, radius)]


def centroid(points) -> np.ndarray:
    """Component-wise mean of a non-empty cloud."""
    cloud = as_cloud(points)
    if len(cloud) == 0:
        raise EmptyCloudError("centroid of an empty point set")
    return cloud.mean(axis=0)
