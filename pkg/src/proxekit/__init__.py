"""Superquadric proxy abstraction and proxy-guided editing of voxel shapes."""

from .denoise import (
    BlendSchedule,
    LatentGrid,
    ReferenceDenoiser,
    blended_denoise,
    decode,
    encode,
    invert,
    reference_denoiser,
    transfer_features,
)
from .editscript import EditCommand, EditScript, apply_script, format_script, parse_script
from .fitting import decompose, fit_single, fit_superquadric, moments_init
from .metrics import EditRegion, chamfer, grid_iou, l_gd
from .pipeline import PipelineConfig, run_pipeline, run_structure
from .proxy import Primitive, PrimitiveDiff, Proxy, diff_proxies, load_proxy, save_proxy
from .superquadric import (
    SuperquadricParams,
    implicit_value,
    inside,
    pose_matrix,
    radial_distance,
    sample_surface,
)
from .voxel import MaskSet, OccupancyGrid, TriangleMesh, extract_mesh, masks_from_diff, voxelize_mesh, voxelize_proxy
from .warp import WarpField, build_warp_field, relative_transform, warp_grid, warp_points

__version__ = "0.1.0"
