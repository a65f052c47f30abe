"""Occupancy grids over the normalized cube [-0.5, 0.5]^3.

Cell ``(i, j, k)`` has its center at ``-0.5 + (idx + 0.5) / N`` per axis and
arrays are indexed ``cells[i, j, k]`` with ``i`` along x.  On disk (and in any
linear order) x varies fastest.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from skimage import measure

from .proxy import PrimitiveDiff, Proxy
from .superquadric import implicit_value

BOUNDS_MIN = -0.5
BOUNDS_MAX = 0.5
MIN_RESOLUTION = 8
MAX_RESOLUTION = 256


def check_resolution(n: int) -> int:
    if not isinstance(n, (int, np.integer)) or not MIN_RESOLUTION <= n <= MAX_RESOLUTION:
        raise ValueError(f"grid resolution must be an integer in [{MIN_RESOLUTION}, {MAX_RESOLUTION}], got {n!r}")
    return int(n)


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    cells: np.ndarray

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=bool)
        if cells.ndim != 3 or len(set(cells.shape)) != 1:
            raise ValueError(f"occupancy grid must be a cube, got shape {cells.shape}")
        check_resolution(cells.shape[0])
        cells = cells.copy()
        cells.flags.writeable = False
        object.__setattr__(self, "cells", cells)

    @classmethod
    def empty(cls, n: int) -> "OccupancyGrid":
        return cls(np.zeros((n, n, n), dtype=bool))

    @property
    def resolution(self) -> int:
        return self.cells.shape[0]

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.cells))

    def __eq__(self, other) -> bool:
        if not isinstance(other, OccupancyGrid):
            return NotImplemented
        return np.array_equal(self.cells, other.cells)

    def __or__(self, other: "OccupancyGrid") -> "OccupancyGrid":
        return OccupancyGrid(self.cells | other.cells)

    def __and__(self, other: "OccupancyGrid") -> "OccupancyGrid":
        return OccupancyGrid(self.cells & other.cells)

    def __sub__(self, other: "OccupancyGrid") -> "OccupancyGrid":
        return OccupancyGrid(self.cells & ~other.cells)

    def __invert__(self) -> "OccupancyGrid":
        return OccupancyGrid(~self.cells)

    def to_linear(self) -> np.ndarray:
        """Flat x-fastest view of the cells."""
        return self.cells.ravel(order="F")

    @classmethod
    def from_linear(cls, flat, n: int) -> "OccupancyGrid":
        return cls(np.asarray(flat, dtype=bool).reshape((n, n, n), order="F"))


def cell_centers_1d(n: int) -> np.ndarray:
    return BOUNDS_MIN + (np.arange(n) + 0.5) / n


def cell_centers(n: int) -> np.ndarray:
    """All cell centers, shape ``(n, n, n, 3)``, indexed like the cells."""
    c = cell_centers_1d(n)
    return np.stack(np.meshgrid(c, c, c, indexing="ij"), axis=-1)


def point_to_index(points, n: int) -> np.ndarray:
    """Nearest cell index per point (may fall outside ``[0, n)``)."""
    pts = np.asarray(points, dtype=float)
    return np.rint((pts - BOUNDS_MIN) * n - 0.5).astype(np.int64)


def grid_points(grid: OccupancyGrid) -> np.ndarray:
    """Centers of the occupied cells, ``(m, 3)``."""
    idx = np.argwhere(grid.cells)
    return BOUNDS_MIN + (idx + 0.5) / grid.resolution


def voxelize_proxy(proxy: Proxy, ids=None, n: int = 64) -> OccupancyGrid:
    """Cells whose centers lie inside any selected primitive (all when ``ids`` is None)."""
    n = check_resolution(n)
    if ids is None:
        selected = list(proxy.primitives)
    else:
        wanted = list(ids)
        missing = [i for i in wanted if i not in proxy]
        if missing:
            raise KeyError(f"unknown primitive ids {missing}")
        selected = [p for p in proxy.primitives if p.id in set(wanted)]
    cells = np.zeros((n, n, n), dtype=bool)
    if not selected:
        return OccupancyGrid(cells)
    centers = cell_centers(n).reshape(-1, 3)
    flat = cells.reshape(-1)
    for prim in selected:
        flat |= implicit_value(prim.params, centers) <= 1.0
    return OccupancyGrid(cells)


# -- meshes ------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        f = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if len(f) and (f.min() < 0 or f.max() >= len(v)):
            raise ValueError("face index out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    @property
    def is_empty(self) -> bool:
        return len(self.faces) == 0

    def is_watertight(self) -> bool:
        """Every undirected edge is shared by exactly two faces."""
        if self.is_empty:
            return False
        edges = np.concatenate([self.faces[:, [0, 1]], self.faces[:, [1, 2]], self.faces[:, [2, 0]]])
        edges = np.sort(edges, axis=1)
        _, counts = np.unique(edges, axis=0, return_counts=True)
        return bool(np.all(counts == 2))

    def volume(self) -> float:
        """Signed volume from the divergence theorem (positive for outward faces)."""
        if self.is_empty:
            return 0.0
        a, b, c = (self.vertices[self.faces[:, k]] for k in range(3))
        return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)


def box_mesh(lo, hi) -> TriangleMesh:
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    corners = np.array([[(hi if (c >> k) & 1 else lo)[k] for k in range(3)] for c in range(8)])
    quads = [(0, 2, 3, 1), (4, 5, 7, 6), (0, 1, 5, 4), (2, 6, 7, 3), (0, 4, 6, 2), (1, 3, 7, 5)]
    faces = []
    for a, b, c, d in quads:
        faces += [(a, b, c), (a, c, d)]
    return TriangleMesh(corners, np.array(faces))


def icosphere(radius: float = 1.0, subdivisions: int = 3, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Geodesic sphere with vertices exactly on the sphere."""
    t = (1.0 + 5.0**0.5) / 2.0
    verts = [
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [np.array(v, dtype=float) / np.linalg.norm(v) for v in verts]
    for _ in range(subdivisions):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(i: int, j: int) -> int:
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    v = np.asarray(verts) * radius + np.asarray(center, dtype=float)
    return TriangleMesh(v, np.asarray(faces))


def sample_mesh_surface(mesh: TriangleMesh, n: int, seed: int = 0) -> np.ndarray:
    """Area-weighted uniform samples on the mesh triangles."""
    rng = np.random.default_rng(seed)
    a, b, c = (mesh.vertices[mesh.faces[:, k]] for k in range(3))
    area = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
    tri = rng.choice(len(area), size=n, p=area / area.sum())
    u, v = rng.random(n), rng.random(n)
    flip = u + v > 1.0
    u[flip], v[flip] = 1.0 - u[flip], 1.0 - v[flip]
    return a[tri] + u[:, None] * (b[tri] - a[tri]) + v[:, None] * (c[tri] - a[tri])


# rays are nudged off the cell-center lattice so they never graze an edge or vertex
_RAY_JITTER = np.array([1.2345678e-7, 2.7182818e-7])


def _ray_parity(mesh: TriangleMesh, n: int) -> np.ndarray:
    c = cell_centers_1d(n)
    ys = c + _RAY_JITTER[0]
    zs = c + _RAY_JITTER[1]
    # crossings[j][k] collects x positions where the +x ray through (y_j, z_k) hits the mesh
    hits_j, hits_k, hits_x = [], [], []
    tri = mesh.vertices[mesh.faces]
    for p0, p1, p2 in tri:
        y = np.array([p0[1], p1[1], p2[1]])
        z = np.array([p0[2], p1[2], p2[2]])
        j_lo, j_hi = np.searchsorted(ys, y.min()), np.searchsorted(ys, y.max(), side="right")
        k_lo, k_hi = np.searchsorted(zs, z.min()), np.searchsorted(zs, z.max(), side="right")
        if j_lo >= j_hi or k_lo >= k_hi:
            continue
        det = (y[1] - y[0]) * (z[2] - z[0]) - (y[2] - y[0]) * (z[1] - z[0])
        if det == 0.0:
            continue
        jj, kk = np.meshgrid(np.arange(j_lo, j_hi), np.arange(k_lo, k_hi), indexing="ij")
        py, pz = ys[jj] - y[0], zs[kk] - z[0]
        u = (py * (z[2] - z[0]) - pz * (y[2] - y[0])) / det
        v = ((y[1] - y[0]) * pz - (z[1] - z[0]) * py) / det
        hit = (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0)
        if not hit.any():
            continue
        x = p0[0] + u[hit] * (p1[0] - p0[0]) + v[hit] * (p2[0] - p0[0])
        hits_j.append(jj[hit])
        hits_k.append(kk[hit])
        hits_x.append(x)
    cells = np.zeros((n, n, n), dtype=bool)
    if not hits_x:
        return cells
    hj = np.concatenate(hits_j)
    hk = np.concatenate(hits_k)
    hx = np.concatenate(hits_x)
    # parity of crossings strictly left of each cell center
    first_cell = np.clip(np.searchsorted(c, hx, side="right"), 0, n)
    toggles = np.zeros((n + 1, n, n), dtype=np.int64)
    np.add.at(toggles, (first_cell, hj, hk), 1)
    parity = np.cumsum(toggles, axis=0)[:n] % 2
    return parity.astype(bool)


def _rasterize_surface(mesh: TriangleMesh, n: int) -> np.ndarray:
    cells = np.zeros((n, n, n), dtype=bool)
    step = 0.25 / n
    for p0, p1, p2 in mesh.vertices[mesh.faces]:
        longest = max(np.linalg.norm(p1 - p0), np.linalg.norm(p2 - p0), np.linalg.norm(p2 - p1))
        m = max(2, int(np.ceil(longest / step)) + 1)
        s = np.linspace(0.0, 1.0, m)
        u, v = np.meshgrid(s, s, indexing="ij")
        keep = u + v <= 1.0
        pts = p0 + u[keep, None] * (p1 - p0) + v[keep, None] * (p2 - p0)
        idx = point_to_index(pts, n)
        ok = np.all((idx >= 0) & (idx < n), axis=1)
        cells[tuple(idx[ok].T)] = True
    return cells


def voxelize_mesh(mesh: TriangleMesh, n: int = 64) -> OccupancyGrid:
    """Occupancy of a triangle mesh sampled at cell centers.

    Watertight meshes use +x ray parity.  Open meshes are rasterized and then
    flood-filled from the grid boundary (6-connected).
    """
    n = check_resolution(n)
    if mesh.is_empty:
        return OccupancyGrid.empty(n)
    if mesh.is_watertight():
        return OccupancyGrid(_ray_parity(mesh, n))
    shell = _rasterize_surface(mesh, n)
    return OccupancyGrid(ndimage.binary_fill_holes(shell))


def extract_mesh(grid: OccupancyGrid) -> TriangleMesh:
    """Marching cubes on the 0/1 occupancy at iso-level 0.5.

    The grid is zero-padded so the surface is closed; vertices land halfway
    between occupied and empty cell centers (linear edge interpolation).
    """
    if grid.count == 0:
        return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    n = grid.resolution
    field = np.pad(grid.cells.astype(np.float64), 1)
    verts, faces, _, _ = measure.marching_cubes(field, level=0.5, spacing=(1.0 / n,) * 3)
    verts = verts + (BOUNDS_MIN + 0.5 / n - 1.0 / n)
    mesh = TriangleMesh(verts, faces)
    if mesh.volume() < 0.0:
        mesh = TriangleMesh(verts, faces[:, ::-1])
    return mesh


# -- masks ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MaskSet:
    """Spatial masks for the unchanged, edited and new regions.

    ``touched`` is the union of every footprint the edit involves (edited
    primitives at both poses plus added and deleted primitives).  Cells outside
    all masks and outside ``touched`` are untouched empty space.
    """

    uc: OccupancyGrid
    ed: OccupancyGrid
    new: OccupancyGrid
    touched: OccupancyGrid | None = None

    def __post_init__(self):
        sizes = {self.uc.resolution, self.ed.resolution, self.new.resolution}
        if self.touched is not None:
            sizes.add(self.touched.resolution)
        if len(sizes) != 1:
            raise ValueError(f"masks must share one resolution, got {sorted(sizes)}")

    @property
    def resolution(self) -> int:
        return self.uc.resolution

    def is_disjoint(self) -> bool:
        uc, ed, new = self.uc.cells, self.ed.cells, self.new.cells
        return not ((uc & ed).any() or (uc & new).any() or (ed & new).any())


def dilate(grid: OccupancyGrid, radius: int) -> OccupancyGrid:
    """6-connected binary dilation, ``radius`` iterations."""
    if radius <= 0 or grid.count == 0:
        return grid
    return OccupancyGrid(ndimage.binary_dilation(grid.cells, iterations=radius))


def masks_from_diff(
    diff: PrimitiveDiff,
    grid_orig: OccupancyGrid,
    proxy_orig: Proxy,
    proxy_edit: Proxy,
    n: int | None = None,
    dilation: int = 0,
) -> MaskSet:
    """Derive the three region masks; overlaps resolve as new > ed > uc."""
    n = grid_orig.resolution if n is None else check_resolution(n)
    if grid_orig.resolution != n:
        raise ValueError(f"original grid has resolution {grid_orig.resolution}, expected {n}")
    ed = voxelize_proxy(proxy_edit, diff.edited_ids, n)
    new = voxelize_proxy(proxy_edit, diff.added_ids, n) | voxelize_proxy(proxy_orig, diff.deleted_ids, n)
    old_ed = voxelize_proxy(proxy_orig, diff.edited_ids, n)
    ed, new, old_ed = dilate(ed, dilation), dilate(new, dilation), dilate(old_ed, dilation)
    ed = ed - new
    touched = ed | new | old_ed
    uc = grid_orig - touched
    return MaskSet(uc, ed, new, touched)
