"""Piecewise-affine warping of the original shape by edited primitives."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .proxy import PrimitiveDiff
from .superquadric import SuperquadricParams, implicit_value, pose_inverse, pose_matrix, transform_points
from .voxel import OccupancyGrid, cell_centers, point_to_index

DEFAULT_SLACK = 0.1


def relative_transform(q_orig: SuperquadricParams, q_edit: SuperquadricParams) -> np.ndarray:
    """``pose(q_edit) @ pose(q_orig)^-1``: carries the original primitive onto the edited one."""
    return pose_matrix(q_edit) @ pose_inverse(q_orig)


@dataclass(frozen=True)
class WarpEntry:
    id: int
    m_rel: np.ndarray
    support: SuperquadricParams
    target: SuperquadricParams

    @property
    def m_rel_inv(self) -> np.ndarray:
        return pose_matrix(self.support) @ pose_inverse(self.target)


@dataclass(frozen=True)
class WarpField:
    entries: tuple[WarpEntry, ...] = ()
    slack: float = DEFAULT_SLACK

    def __post_init__(self):
        if self.slack < 0.0:
            raise ValueError(f"slack must be >= 0, got {self.slack}")

    def __len__(self) -> int:
        return len(self.entries)


def build_warp_field(diff: PrimitiveDiff, slack: float = DEFAULT_SLACK) -> WarpField:
    """One entry per edited primitive pair, in diff order."""
    entries = tuple(
        WarpEntry(orig.id, relative_transform(orig.params, edit.params), orig.params, edit.params)
        for orig, edit in diff.edited
    )
    return WarpField(entries, slack)


def claim_owners(params: list[SuperquadricParams], points: np.ndarray, slack: float) -> np.ndarray:
    """Index of the claiming entry per point (smallest implicit value within slack), -1 if none."""
    if not params:
        return np.full(len(points), -1)
    values = np.stack([np.asarray(implicit_value(q, points), dtype=float) for q in params], axis=1)
    owner = np.argmin(values, axis=1)
    best = values[np.arange(len(points)), owner]
    return np.where(best <= 1.0 + slack, owner, -1)


def warp_points(points, field: WarpField) -> np.ndarray:
    """Move each point by the transform of the original primitive that contains it.

    Points outside every support (beyond the slack) are returned untouched.
    """
    pts = np.array(points, dtype=float, copy=True)
    if not field.entries or len(pts) == 0:
        return pts
    owner = claim_owners([e.support for e in field.entries], pts, field.slack)
    for i, entry in enumerate(field.entries):
        sel = owner == i
        if sel.any():
            pts[sel] = transform_points(entry.m_rel, pts[sel])
    return pts


def warp_grid(grid_orig: OccupancyGrid, field: WarpField) -> OccupancyGrid:
    """Grid analogue of :func:`warp_points` using inverse lookup.

    A cell claimed by an edited primitive (at its edited pose) takes the
    original occupancy at the nearest cell to its pre-edit location; the rest
    copy the original grid.
    """
    if not field.entries:
        return OccupancyGrid(grid_orig.cells)
    n = grid_orig.resolution
    centers = cell_centers(n).reshape(-1, 3)
    owner = claim_owners([e.target for e in field.entries], centers, field.slack)
    src = grid_orig.cells.reshape(-1)
    out = src.copy()
    for i, entry in enumerate(field.entries):
        sel = np.flatnonzero(owner == i)
        if not len(sel):
            continue
        idx = point_to_index(transform_points(entry.m_rel_inv, centers[sel]), n)
        ok = np.all((idx >= 0) & (idx < n), axis=1)
        vals = np.zeros(len(sel), dtype=bool)
        vals[ok] = grid_orig.cells[tuple(idx[ok].T)]
        out[sel] = vals
    return OccupancyGrid(out.reshape(n, n, n))
