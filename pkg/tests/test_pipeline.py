import json

import numpy as np
import pytest

from proxekit import io
from proxekit.editscript import parse_script
from proxekit.fitting import decompose
from proxekit.pipeline import STAGE_FILES, PipelineConfig, run_pipeline, run_structure, save_result
from proxekit.proxy import load_proxy
from proxekit.voxel import TriangleMesh, icosphere, sample_mesh_surface, voxelize_proxy


def merge(*meshes):
    verts, faces, offset = [], [], 0
    for m in meshes:
        verts.append(m.vertices)
        faces.append(m.faces + offset)
        offset += len(m.vertices)
    return TriangleMesh(np.vstack(verts), np.vstack(faces))


def two_sphere_mesh():
    return merge(icosphere(0.12, 3, (0, -0.25, 0)), icosphere(0.12, 3, (0, 0.25, 0)))


@pytest.fixture(scope="module")
def two_sphere_case():
    mesh = two_sphere_mesh()
    proxy = decompose(sample_mesh_surface(mesh, 4000, seed=0), 2, seed=0)
    low = min(proxy.primitives, key=lambda p: p.params.translation[1]).id
    return mesh, proxy, low


def test_config_validation():
    with pytest.raises(ValueError):
        PipelineConfig(resolution=4)
    with pytest.raises(ValueError):
        PipelineConfig(warp_offset=12)
    with pytest.raises(ValueError):
        PipelineConfig(slack=-1)
    with pytest.raises(ValueError):
        PipelineConfig(background="x")
    assert PipelineConfig().schedule.t_init == 13


def test_resolution_mismatch(two_sphere_case):
    mesh, proxy, _ = two_sphere_case
    grid = voxelize_proxy(proxy, None, 16)
    with pytest.raises(ValueError):
        run_structure(grid, proxy, proxy, PipelineConfig(resolution=32))


def test_identity_pipeline(two_sphere_case):
    mesh, proxy, _ = two_sphere_case
    res = run_pipeline(mesh, proxy, parse_script(""), PipelineConfig(resolution=32))
    assert res.grid_out == res.grid_orig
    assert res.metrics["iou"] == 1.0 and res.metrics["chamfer"] == 0.0


def test_translation_pipeline(two_sphere_case):
    mesh, proxy, low = two_sphere_case
    res = run_pipeline(mesh, proxy, parse_script(f"translate #{low} by 0.2 0 0"), PipelineConfig(resolution=32))
    assert res.diff.edited_ids == [low]
    uc = res.masks.uc.cells
    assert np.array_equal(res.grid_out.cells[uc], res.grid_orig.cells[uc])
    assert res.metrics["l_gd"] < 1e-3
    # features are defined exactly on the output shape
    defined = ~np.isnan(res.features).any(axis=-1)
    assert not (defined & ~res.grid_out.cells).any()


def test_stage_files_reload_and_rerun(two_sphere_case, tmp_path):
    mesh, proxy, low = two_sphere_case
    config = PipelineConfig(resolution=32)
    res = run_pipeline(mesh, proxy, parse_script(f"scale #{low} by 1.3 1 1"), config)
    paths = save_result(res, tmp_path)
    for key, name in STAGE_FILES.items():
        assert paths[key] == tmp_path / name and paths[key].exists()
    for name in ("orig", "warp", "proxy"):
        assert (tmp_path / f"latent_{name}.pxlf").exists()

    edited = load_proxy(paths["proxy_edit"].read_text())
    grid_orig = io.read_grid(paths["grid_orig"])
    again = run_structure(grid_orig, proxy, edited, config)
    assert again.grid_out == io.read_grid(paths["grid_out"])
    assert again.masks.uc == io.read_grid(paths["mask_uc"])
    assert again.masks.ed == io.read_grid(paths["mask_ed"])
    assert again.masks.new == io.read_grid(paths["mask_new"])
    assert again.grid_warp == io.read_grid(paths["grid_warp"])
    np.testing.assert_array_equal(again.features, np.load(paths["features"]))

    report = json.loads(paths["metrics"].read_text())
    assert report["classification"]["edited"] == [low]
    assert set(report["metrics"]) == {"iou", "chamfer", "l_gd"}
    assert report["metrics"]["iou"] == float(f"{again.metrics['iou']:.6g}")
    traj = io.read_trajectory(tmp_path / "latent_orig.pxlf")
    assert len(traj) == config.schedule.t_init + 1


def test_pipeline_deterministic(two_sphere_case):
    mesh, proxy, low = two_sphere_case
    script = parse_script(f"rotate #{low} by 0 0 0.5\nadd #9 scale 0.1 0.1 0.1 shape 1 1 at 0.25 0 0 rot 0 0 0")
    a = run_pipeline(mesh, proxy, script, PipelineConfig(resolution=24))
    b = run_pipeline(mesh, proxy, script, PipelineConfig(resolution=24))
    assert a.grid_out == b.grid_out and a.latent == b.latent
    np.testing.assert_array_equal(a.features, b.features)
