"""End-to-end proxy-guided structure editing over occupancy grids.

Stages: voxelize the original mesh, apply the edit script to the proxy,
classify primitives and derive masks, build the warped grid, invert the
original / warped / proxy latents, run the blended denoiser, then extract a
mesh and measure the result.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .denoise import (
    BlendSchedule,
    LatentGrid,
    blended_denoise,
    decode,
    encode,
    invert,
    reference_denoiser,
    transfer_features,
)
from .editscript import EditScript, apply_script
from .metrics import EditRegion, EmptyComplementError, chamfer, grid_iou, l_gd
from .proxy import PrimitiveDiff, Proxy, diff_proxies, save_proxy
from .superquadric import implicit_value
from .voxel import (
    MaskSet,
    OccupancyGrid,
    TriangleMesh,
    cell_centers,
    check_resolution,
    extract_mesh,
    grid_points,
    masks_from_diff,
    voxelize_mesh,
    voxelize_proxy,
)
from .warp import WarpField, build_warp_field, warp_grid

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    resolution: int = 64
    T: int = 25
    init_offset: int = 12
    warp_offset: int = 16
    uc_offset: int = 20
    slack: float = 0.1
    tol: float = 1e-6
    seed: int = 0
    fill_iters: int = 32
    dilation: int = 0
    background: str = "orig"

    def __post_init__(self):
        check_resolution(self.resolution)
        self.schedule  # validates the offsets
        if self.slack < 0:
            raise ValueError(f"slack must be >= 0, got {self.slack}")
        if self.tol < 0:
            raise ValueError(f"tol must be >= 0, got {self.tol}")
        if self.fill_iters < 0:
            raise ValueError(f"fill_iters must be >= 0, got {self.fill_iters}")
        if self.dilation < 0:
            raise ValueError(f"dilation must be >= 0, got {self.dilation}")
        if self.background not in ("orig", "free"):
            raise ValueError(f"background must be 'orig' or 'free', got {self.background!r}")

    @property
    def schedule(self) -> BlendSchedule:
        return BlendSchedule.from_offsets(self.T, self.init_offset, self.warp_offset, self.uc_offset)


@dataclass
class PipelineResult:
    config: PipelineConfig
    proxy_edit: Proxy
    diff: PrimitiveDiff
    grid_orig: OccupancyGrid
    masks: MaskSet
    field: WarpField
    grid_warp: OccupancyGrid
    grid_proxy: OccupancyGrid
    trajectories: dict[str, list[LatentGrid]]
    latent: LatentGrid
    grid_out: OccupancyGrid
    mesh_out: TriangleMesh
    features: np.ndarray
    metrics: dict = field(default_factory=dict)


def edit_region(diff: PrimitiveDiff, slack: float) -> EditRegion:
    """Everything the edit touches: edited primitives at both poses, added and deleted ones."""
    prims = [p.params for pair in diff.edited for p in pair]
    prims += [p.params for p in diff.added]
    prims += [p.params for p in diff.deleted]
    return EditRegion(tuple(prims), slack)


def primitive_colors(proxy: Proxy, grid: OccupancyGrid) -> np.ndarray:
    """RGB per occupied cell from the closest primitive (smallest implicit value), NaN elsewhere."""
    n = grid.resolution
    feats = np.full((n, n, n, 3), np.nan)
    if not len(proxy) or grid.count == 0:
        return feats
    centers = cell_centers(n)[grid.cells]
    values = np.stack([np.asarray(implicit_value(p.params, centers)) for p in proxy.primitives], axis=1)
    colors = np.asarray([p.color for p in proxy.primitives], dtype=float) / 255.0
    feats[grid.cells] = colors[np.argmin(values, axis=1)]
    return feats


def measure(grid_out: OccupancyGrid, grid_orig: OccupancyGrid, region: EditRegion) -> dict:
    out_pts = grid_points(grid_out)
    orig_pts = grid_points(grid_orig)
    report = {"iou": grid_iou(grid_out, grid_orig), "chamfer": None, "l_gd": None}
    if len(out_pts) and len(orig_pts):
        report["chamfer"] = chamfer(out_pts, orig_pts)
        try:
            report["l_gd"] = l_gd(out_pts, orig_pts, region)
        except EmptyComplementError:
            log.warning("l-GD undefined: every point lies inside the edit region")
    return report


def run_structure(
    grid_orig: OccupancyGrid,
    proxy_orig: Proxy,
    proxy_edit: Proxy,
    config: PipelineConfig = PipelineConfig(),
) -> PipelineResult:
    """Everything downstream of the edited proxy; pure function of its inputs."""
    n = config.resolution
    if grid_orig.resolution != n:
        raise ValueError(f"original grid has resolution {grid_orig.resolution}, config expects {n}")
    schedule = config.schedule
    diff = diff_proxies(proxy_orig, proxy_edit, config.tol)
    masks = masks_from_diff(diff, grid_orig, proxy_orig, proxy_edit, n, config.dilation)
    field = build_warp_field(diff, config.slack)
    grid_warp = warp_grid(grid_orig, field)
    grid_proxy = voxelize_proxy(proxy_edit, None, n) if len(proxy_edit) else OccupancyGrid.empty(n)

    denoiser = reference_denoiser(encode(grid_proxy), schedule.T, config.seed)
    trajectories = {
        "orig": invert(encode(grid_orig), denoiser, schedule.t_init),
        "warp": invert(encode(grid_warp), denoiser, schedule.t_init),
        "proxy": invert(encode(grid_proxy), denoiser, schedule.t_init),
    }
    latent = blended_denoise(
        trajectories["proxy"],
        trajectories["orig"],
        trajectories["warp"],
        masks,
        schedule,
        denoiser,
        background=config.background,
    )
    grid_out = decode(latent)
    mesh_out = extract_mesh(grid_out)
    features = transfer_features(
        primitive_colors(proxy_orig, grid_orig), masks, field, config.fill_iters, target=grid_out
    )
    result = PipelineResult(
        config, proxy_edit, diff, grid_orig, masks, field, grid_warp, grid_proxy,
        trajectories, latent, grid_out, mesh_out, features,
    )
    result.metrics = measure(grid_out, grid_orig, edit_region(diff, config.slack))
    return result


def run_pipeline(
    mesh: TriangleMesh,
    proxy_orig: Proxy,
    script: EditScript,
    config: PipelineConfig = PipelineConfig(),
) -> PipelineResult:
    grid_orig = voxelize_mesh(mesh, config.resolution)
    proxy_edit = apply_script(script, proxy_orig)
    return run_structure(grid_orig, proxy_orig, proxy_edit, config)


STAGE_FILES = {
    "proxy_edit": "edited.json",
    "grid_orig": "orig.pxvg",
    "mask_uc": "mask_uc.pxvg",
    "mask_ed": "mask_ed.pxvg",
    "mask_new": "mask_new.pxvg",
    "grid_warp": "warped.pxvg",
    "grid_out": "denoised.pxvg",
    "mesh_out": "output.obj",
    "features": "features.npy",
    "metrics": "metrics.json",
}


def _sig6(x):
    return None if x is None else float(f"{x:.6g}")


def save_result(result: PipelineResult, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {key: out / name for key, name in STAGE_FILES.items()}
    paths["proxy_edit"].write_bytes(save_proxy(result.proxy_edit))
    io.write_grid(paths["grid_orig"], result.grid_orig)
    io.write_grid(paths["mask_uc"], result.masks.uc)
    io.write_grid(paths["mask_ed"], result.masks.ed)
    io.write_grid(paths["mask_new"], result.masks.new)
    io.write_grid(paths["grid_warp"], result.grid_warp)
    io.write_grid(paths["grid_out"], result.grid_out)
    io.write_mesh(paths["mesh_out"], result.mesh_out)
    np.save(paths["features"], result.features)
    report = {
        "metrics": {k: _sig6(v) for k, v in result.metrics.items()},
        "classification": {
            "unchanged": sorted(result.diff.unchanged),
            "edited": result.diff.edited_ids,
            "added": result.diff.added_ids,
            "deleted": result.diff.deleted_ids,
        },
        "config": asdict(result.config),
    }
    paths["metrics"].write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    for name, traj in result.trajectories.items():
        path = out / f"latent_{name}.pxlf"
        io.write_trajectory(path, traj)
        paths[f"latent_{name}"] = path
    return paths
