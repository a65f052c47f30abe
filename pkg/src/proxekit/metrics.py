"""Geometric evaluation: Chamfer distance, localized Chamfer (l-GD), grid IoU."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .superquadric import SuperquadricParams, implicit_value
from .voxel import OccupancyGrid


class EmptyComplementError(ValueError):
    pass


def _cloud(points, name: str) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        raise ValueError(f"point cloud {name} is empty")
    return pts


def _nearest_sq_brute(queries: np.ndarray, refs: np.ndarray, chunk: int = 1024) -> np.ndarray:
    out = np.empty(len(queries))
    for start in range(0, len(queries), chunk):
        q = queries[start : start + chunk]
        d2 = ((q[:, None, :] - refs[None, :, :]) ** 2).sum(-1)
        out[start : start + chunk] = d2.min(axis=1)
    return out


def _nearest_sq_tree(queries: np.ndarray, refs: np.ndarray) -> np.ndarray:
    _, idx = cKDTree(refs).query(queries)
    # recompute with the brute-force formula so both paths agree to the last bit
    return ((queries - refs[idx]) ** 2).sum(-1)


def chamfer(a, b, accelerate: bool = True) -> float:
    """Symmetric Chamfer distance: mean squared nearest distance A->B plus B->A."""
    a = _cloud(a, "A")
    b = _cloud(b, "B")
    nearest = _nearest_sq_tree if accelerate else _nearest_sq_brute
    return float(nearest(a, b).mean() + nearest(b, a).mean())


@dataclass(frozen=True)
class EditRegion:
    """Union of primitive supports, each grown by ``slack`` on the implicit value."""

    primitives: tuple[SuperquadricParams, ...] = ()
    slack: float = 0.1

    def __post_init__(self):
        if self.slack < 0.0:
            raise ValueError(f"slack must be >= 0, got {self.slack}")
        object.__setattr__(self, "primitives", tuple(self.primitives))

    def contains(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        hit = np.zeros(len(pts), dtype=bool)
        for q in self.primitives:
            hit |= np.asarray(implicit_value(q, pts)) <= 1.0 + self.slack
        return hit


def l_gd(a, b, region: EditRegion, accelerate: bool = True) -> float:
    """Chamfer distance over the points of both clouds lying outside ``region``."""
    a = np.asarray(a, dtype=float).reshape(-1, 3)
    b = np.asarray(b, dtype=float).reshape(-1, 3)
    a_out = a[~region.contains(a)]
    b_out = b[~region.contains(b)]
    if len(a_out) == 0 or len(b_out) == 0:
        raise EmptyComplementError("empty complement")
    return chamfer(a_out, b_out, accelerate)


def grid_iou(a: OccupancyGrid, b: OccupancyGrid) -> float:
    if a.resolution != b.resolution:
        raise ValueError(f"grid resolutions differ: {a.resolution} vs {b.resolution}")
    union = np.count_nonzero(a.cells | b.cells)
    if union == 0:
        return 1.0
    return np.count_nonzero(a.cells & b.cells) / union
