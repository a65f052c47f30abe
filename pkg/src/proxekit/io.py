"""File formats: point clouds, OBJ meshes, PXVG occupancy grids, PXLF latent trajectories."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .denoise import LatentGrid
from .voxel import OccupancyGrid, TriangleMesh, check_resolution


class FormatError(ValueError):
    pass


# -- points and meshes ---------------------------------------------------------------


def parse_obj(text: str) -> TriangleMesh:
    """Vertices and (triangulated) faces from OBJ text; other records are ignored."""
    verts = []
    faces = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        parts = line.split("#", 1)[0].split()
        if not parts:
            continue
        if parts[0] == "v":
            try:
                verts.append([float(x) for x in parts[1:4]])
            except ValueError:
                raise FormatError(f"line {line_no}: bad vertex {line.strip()!r}") from None
            if len(verts[-1]) != 3:
                raise FormatError(f"line {line_no}: vertex needs 3 coordinates")
        elif parts[0] == "f":
            idx = []
            for token in parts[1:]:
                try:
                    i = int(token.split("/")[0])
                except ValueError:
                    raise FormatError(f"line {line_no}: bad face index {token!r}") from None
                idx.append(i - 1 if i > 0 else len(verts) + i)
            if len(idx) < 3:
                raise FormatError(f"line {line_no}: face needs at least 3 vertices")
            for k in range(1, len(idx) - 1):
                faces.append((idx[0], idx[k], idx[k + 1]))
    try:
        return TriangleMesh(np.asarray(verts, dtype=float).reshape(-1, 3), np.asarray(faces, dtype=np.int64).reshape(-1, 3))
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def format_obj(mesh: TriangleMesh) -> str:
    lines = [f"v {x:.9g} {y:.9g} {z:.9g}" for x, y, z in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces]
    return "\n".join(lines) + "\n"


def read_mesh(path) -> TriangleMesh:
    return parse_obj(Path(path).read_text(encoding="utf-8"))


def write_mesh(path, mesh: TriangleMesh) -> None:
    Path(path).write_text(format_obj(mesh), encoding="utf-8")


def parse_points(text: str) -> np.ndarray:
    """Points from OBJ ``v`` records or from whitespace-separated XYZ lines."""
    is_obj = any(line.split()[:1] == ["v"] for line in text.splitlines())
    if is_obj:
        return parse_obj(text).vertices
    rows = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        parts = line.split("#", 1)[0].split()
        if not parts:
            continue
        if len(parts) < 3:
            raise FormatError(f"line {line_no}: expected 3 coordinates, got {len(parts)}")
        try:
            rows.append([float(x) for x in parts[:3]])
        except ValueError:
            raise FormatError(f"line {line_no}: bad coordinate in {line.strip()!r}") from None
    pts = np.asarray(rows, dtype=float).reshape(-1, 3)
    if not np.all(np.isfinite(pts)):
        raise FormatError("non-finite coordinate")
    return pts


def read_points(path) -> np.ndarray:
    return parse_points(Path(path).read_text(encoding="utf-8"))


def format_xyz(points) -> str:
    return "".join(f"{x:.9g} {y:.9g} {z:.9g}\n" for x, y, z in np.asarray(points, dtype=float))


# -- PXVG grids ----------------------------------------------------------------------


def _header(data: bytes, magic: str, count: int) -> tuple[list[int], bytes]:
    nl = data.find(b"\n")
    if nl < 0:
        raise FormatError(f"missing {magic} header line")
    parts = data[:nl].decode("ascii", errors="replace").split()
    if len(parts) != count or parts[0] != magic or parts[1] != "1":
        raise FormatError(f"bad header {data[:nl]!r}, expected '{magic} 1 ...'")
    try:
        return [int(p) for p in parts[2:]], data[nl + 1 :]
    except ValueError:
        raise FormatError(f"bad header {data[:nl]!r}") from None


def grid_to_bytes(grid: OccupancyGrid) -> bytes:
    n = grid.resolution
    return f"PXVG 1 {n}\n".encode("ascii") + grid.to_linear().astype(np.uint8).tobytes()


def grid_from_bytes(data: bytes) -> OccupancyGrid:
    (n,), body = _header(data, "PXVG", 3)
    check_resolution(n)
    if len(body) != n**3:
        raise FormatError(f"expected {n**3} cell bytes, got {len(body)}")
    flat = np.frombuffer(body, dtype=np.uint8)
    if np.any(flat > 1):
        raise FormatError("cell bytes must be 0 or 1")
    return OccupancyGrid.from_linear(flat, n)


def write_grid(path, grid: OccupancyGrid) -> None:
    Path(path).write_bytes(grid_to_bytes(grid))


def read_grid(path) -> OccupancyGrid:
    return grid_from_bytes(Path(path).read_bytes())


# -- PXLF latent trajectories ------------------------------------------------------------


def trajectory_to_bytes(traj: list[LatentGrid]) -> bytes:
    """Header ``PXLF 1 N T`` then ``T+1`` blocks of x-fastest little-endian float32.

    float32 is lossy for lattice latents; reload is for inspection, not for
    resuming an exact run.
    """
    if not traj:
        raise ValueError("empty trajectory")
    n = traj[0].resolution
    out = [f"PXLF 1 {n} {len(traj) - 1}\n".encode("ascii")]
    for z in traj:
        out.append(z.values.ravel(order="F").astype("<f4").tobytes())
    return b"".join(out)


def trajectory_from_bytes(data: bytes) -> list[LatentGrid]:
    (n, t_max), body = _header(data, "PXLF", 4)
    check_resolution(n)
    block = 4 * n**3
    if len(body) != block * (t_max + 1):
        raise FormatError(f"expected {t_max + 1} blocks of {block} bytes, got {len(body)} bytes")
    traj = []
    for t in range(t_max + 1):
        flat = np.frombuffer(body[t * block : (t + 1) * block], dtype="<f4").astype(np.float64)
        traj.append(LatentGrid(flat.reshape((n, n, n), order="F"), t))
    return traj


def write_trajectory(path, traj: list[LatentGrid]) -> None:
    Path(path).write_bytes(trajectory_to_bytes(traj))


def read_trajectory(path) -> list[LatentGrid]:
    return trajectory_from_bytes(Path(path).read_bytes())
