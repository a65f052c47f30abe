"""Command-line front end.

Exit codes: 0 success, 2 input or usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .editscript import ScriptError, apply_script, parse_script
from .fitting import DecompositionError, decompose
from .metrics import EditRegion, EmptyComplementError, chamfer, grid_iou, l_gd
from .pipeline import PipelineConfig, run_pipeline, save_result
from .proxy import DuplicateIdError, ProxyFormatError, load_proxy, save_proxy
from .voxel import extract_mesh, grid_points, voxelize_mesh, voxelize_proxy

EXIT_INPUT = 2
EXIT_NUMERIC = 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.code = code


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}") from None


def _read_proxy(path: str):
    try:
        return load_proxy(_read_text(path))
    except (ProxyFormatError, DuplicateIdError) as exc:
        raise CliError(f"{path}: {exc}") from None


def _read_points_or_grid(path: str) -> tuple[np.ndarray, object]:
    if path.endswith(".pxvg"):
        try:
            grid = io.read_grid(path)
        except OSError as exc:
            raise CliError(f"cannot read {path}: {exc.strerror or exc}") from None
        except ValueError as exc:
            raise CliError(f"{path}: {exc}") from None
        return grid_points(grid), grid
    try:
        return io.parse_points(_read_text(path)), None
    except io.FormatError as exc:
        raise CliError(f"{path}: {exc}") from None


def _fmt(x) -> str:
    return "nan" if x is None else f"{x:.6g}"


def cmd_fit(args) -> None:
    try:
        pts = io.parse_points(_read_text(args.points))
    except io.FormatError as exc:
        raise CliError(f"{args.points}: {exc}") from None
    try:
        proxy = decompose(pts, args.k, args.seed, args.category)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    except (DecompositionError, np.linalg.LinAlgError, FloatingPointError) as exc:
        raise CliError(str(exc), EXIT_NUMERIC) from None
    Path(args.output).write_bytes(save_proxy(proxy))
    print(f"wrote {len(proxy)} primitives to {args.output}")


def cmd_edit(args) -> None:
    proxy = _read_proxy(args.proxy)
    try:
        edited = apply_script(parse_script(_read_text(args.script)), proxy)
    except ScriptError as exc:
        raise CliError(f"{args.script}: {exc}") from None
    Path(args.output).write_bytes(save_proxy(edited))
    print(f"wrote {len(edited)} primitives to {args.output}")


def cmd_pipeline(args) -> None:
    stage = "config"
    try:
        config = PipelineConfig(
            resolution=args.resolution,
            T=args.steps,
            init_offset=args.init_offset,
            warp_offset=args.warp_offset,
            uc_offset=args.uc_offset,
            slack=args.slack,
            tol=args.tol,
            seed=args.seed,
            fill_iters=args.fill_iters,
            dilation=args.dilation,
            background=args.background,
        )
        stage = "load"
        try:
            mesh = io.parse_obj(_read_text(args.mesh))
        except io.FormatError as exc:
            raise CliError(f"{args.mesh}: {exc}") from None
        proxy = _read_proxy(args.proxy)
        script = parse_script(_read_text(args.script))
        stage = "run"
        result = run_pipeline(mesh, proxy, script, config)
        stage = "write"
        save_result(result, args.output)
    except CliError as exc:
        raise CliError(f"{stage}: {exc}", exc.code) from None
    except ScriptError as exc:
        raise CliError(f"{stage}: {args.script}: {exc}") from None
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        raise CliError(f"{stage}: {exc}", EXIT_NUMERIC) from None
    except (ValueError, KeyError) as exc:
        raise CliError(f"{stage}: {exc}") from None
    m = result.metrics
    print(f"chamfer {_fmt(m['chamfer'])}  l_gd {_fmt(m['l_gd'])}  iou {_fmt(m['iou'])}")


def cmd_metrics(args) -> None:
    a, grid_a = _read_points_or_grid(args.a)
    b, grid_b = _read_points_or_grid(args.b)
    if len(a) == 0 or len(b) == 0:
        raise CliError("point clouds must be non-empty")
    print(f"chamfer {_fmt(chamfer(a, b))}")
    if args.region:
        proxy = _read_proxy(args.region)
        ids = set(args.ids) if args.ids else set(proxy.ids)
        region = EditRegion(tuple(p.params for p in proxy.primitives if p.id in ids), args.slack)
        try:
            print(f"l_gd {_fmt(l_gd(a, b, region))}")
        except EmptyComplementError as exc:
            raise CliError(str(exc)) from None
    if grid_a is not None and grid_b is not None:
        try:
            print(f"iou {_fmt(grid_iou(grid_a, grid_b))}")
        except ValueError as exc:
            raise CliError(str(exc)) from None


def cmd_voxelize(args) -> None:
    try:
        if args.input.endswith(".json"):
            grid = voxelize_proxy(_read_proxy(args.input), None, args.resolution)
        else:
            grid = voxelize_mesh(io.parse_obj(_read_text(args.input)), args.resolution)
    except (io.FormatError, ValueError) as exc:
        raise CliError(f"{args.input}: {exc}") from None
    io.write_grid(args.output, grid)
    print(f"wrote {grid.count} occupied cells to {args.output}")


def cmd_mesh(args) -> None:
    try:
        grid = io.read_grid(args.grid)
    except OSError as exc:
        raise CliError(f"cannot read {args.grid}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise CliError(f"{args.grid}: {exc}") from None
    mesh = extract_mesh(grid)
    io.write_mesh(args.output, mesh)
    print(f"wrote {len(mesh.faces)} faces to {args.output}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="proxekit", description="Superquadric proxy editing over occupancy grids.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="decompose a point cloud into a proxy")
    p.add_argument("points", help="OBJ (vertices) or XYZ text file")
    p.add_argument("--k", type=_positive_int, required=True, help="number of primitives")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--category", default="object")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("edit", help="apply an edit script to a proxy")
    p.add_argument("proxy")
    p.add_argument("script")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_edit)

    d = PipelineConfig()
    p = sub.add_parser("pipeline", help="run the full structure-editing pipeline")
    p.add_argument("mesh", help="original shape as OBJ, inside [-0.5, 0.5]^3")
    p.add_argument("proxy")
    p.add_argument("script")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("-n", "--resolution", type=int, default=d.resolution)
    p.add_argument("--steps", type=int, default=d.T, help="total timesteps T")
    p.add_argument("--init-offset", type=int, default=d.init_offset)
    p.add_argument("--warp-offset", type=int, default=d.warp_offset)
    p.add_argument("--uc-offset", type=int, default=d.uc_offset)
    p.add_argument("--slack", type=float, default=d.slack)
    p.add_argument("--tol", type=float, default=d.tol)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--fill-iters", type=int, default=d.fill_iters)
    p.add_argument("--dilation", type=int, default=d.dilation)
    p.add_argument("--background", choices=("orig", "free"), default=d.background)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("metrics", help="Chamfer / l-GD / IoU between two shapes")
    p.add_argument("a", help="points (OBJ/XYZ) or grid (.pxvg)")
    p.add_argument("b")
    p.add_argument("--region", help="proxy whose primitives define the edit region")
    p.add_argument("--ids", type=int, nargs="*", help="restrict the region to these primitive ids")
    p.add_argument("--slack", type=float, default=0.1)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("voxelize", help="voxelize a mesh (OBJ) or proxy (JSON)")
    p.add_argument("input")
    p.add_argument("-n", "--resolution", type=int, default=64)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_voxelize)

    p = sub.add_parser("mesh", help="extract a mesh from a grid")
    p.add_argument("grid")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_mesh)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except CliError as exc:
        print(f"proxekit {args.command}: error: {exc}", file=sys.stderr)
        return exc.code
    return 0


if __name__ == "__main__":
    sys.exit(main())
