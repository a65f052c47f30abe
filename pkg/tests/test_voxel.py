import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from proxekit.proxy import Primitive, Proxy, diff_proxies
from proxekit.superquadric import SuperquadricParams, inside
from proxekit.voxel import (
    MaskSet,
    OccupancyGrid,
    TriangleMesh,
    box_mesh,
    cell_centers,
    check_resolution,
    dilate,
    extract_mesh,
    grid_points,
    icosphere,
    masks_from_diff,
    voxelize_mesh,
    voxelize_proxy,
)

from conftest import random_params

SPHERE_COUNT = 4 / 3 * math.pi * 0.4**3 * 64**3  # ~70,300 cells


def sphere_proxy(r=0.4, center=(0, 0, 0), pid=0):
    return Proxy((Primitive(pid, SuperquadricParams((r, r, r), translation=center)),))


def brute_voxelize(params_list, n):
    """Per-cell predicate loop, independent of the vectorised path."""
    c = cell_centers(n).reshape(-1, 3)
    out = np.zeros(len(c), dtype=bool)
    for q in params_list:
        out |= np.array([inside(q, p) for p in c])
    return out.reshape(n, n, n)


def test_resolution_bounds():
    assert check_resolution(8) == 8 and check_resolution(256) == 256
    for bad in (7, 257, 16.5, "16"):
        with pytest.raises(ValueError):
            check_resolution(bad)


def test_cell_center_convention():
    c = cell_centers(8)
    np.testing.assert_allclose(c[0, 0, 0], -0.5 + 0.5 / 8)
    np.testing.assert_allclose(c[7, 0, 3], (0.5 - 0.5 / 8, -0.5 + 0.5 / 8, -0.5 + 3.5 / 8))


def test_linear_order_is_x_fastest():
    cells = np.zeros((8, 8, 8), dtype=bool)
    cells[1, 0, 0] = True
    cells[0, 2, 0] = True
    flat = OccupancyGrid(cells).to_linear()
    assert list(np.flatnonzero(flat)) == [1, 16]
    assert OccupancyGrid.from_linear(flat, 8) == OccupancyGrid(cells)


def test_grid_is_immutable():
    g = OccupancyGrid.empty(8)
    with pytest.raises(ValueError):
        g.cells[0, 0, 0] = True


def test_sphere_volume_oracle():
    g = voxelize_proxy(sphere_proxy(), None, 64)
    assert abs(g.count - SPHERE_COUNT) / SPHERE_COUNT < 0.02


def test_voxelize_matches_brute_force_small():
    q = SuperquadricParams((0.3, 0.2, 0.25), (0.5, 1.4), (0.05, -0.1, 0.0), (0.3, -0.2, 1.0))
    proxy = Proxy((Primitive(0, q),))
    np.testing.assert_array_equal(voxelize_proxy(proxy, None, 12).cells, brute_voxelize([q], 12))


def test_empty_id_subset():
    assert voxelize_proxy(sphere_proxy(), [], 16).count == 0
    with pytest.raises(KeyError):
        voxelize_proxy(sphere_proxy(), [3], 16)


def test_union_law():
    rng = np.random.default_rng(1)
    prims = tuple(Primitive(i, random_params(rng)) for i in range(4))
    proxy = Proxy(prims)
    whole = voxelize_proxy(proxy, None, 24)
    union = OccupancyGrid.empty(24)
    for p in prims:
        union = union | voxelize_proxy(proxy, [p.id], 24)
    assert whole == union


def test_resolution_monotone():
    proxy = Proxy((Primitive(0, SuperquadricParams((0.35, 0.2, 0.3), (0.7, 1.2), rotation=(0.3, 0.2, 0.1))),))
    f32 = voxelize_proxy(proxy, None, 32).count / 32**3
    f64 = voxelize_proxy(proxy, None, 64).count / 64**3
    assert abs(f64 - f32) / f64 < 0.05


def test_icosphere_volume_oracle():
    g = voxelize_mesh(icosphere(0.4, 3), 64)
    assert abs(g.count - SPHERE_COUNT) / SPHERE_COUNT < 0.03


def test_box_mesh_volume_oracle():
    g = voxelize_mesh(box_mesh((-0.25,) * 3, (0.25,) * 3), 64)
    shell = 34**3 - 32**3
    assert abs(g.count - 32**3) <= shell


def test_empty_mesh():
    g = voxelize_mesh(TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64)), 16)
    assert g.count == 0


def test_open_mesh_fallback_fills_interior():
    # a hole smaller than one cell is sealed by the rasterized shell
    closed = icosphere(0.35, 3)
    opened = TriangleMesh(closed.vertices, closed.faces[:-1])
    assert not opened.is_watertight()
    g = voxelize_mesh(opened, 16)
    reference = voxelize_mesh(closed, 16)
    assert g.cells[8, 8, 8]
    assert not g.cells[0, 0, 0]
    assert not (reference.cells & ~g.cells).any()


def test_extract_mesh_sphere_radii():
    n = 64
    mesh = extract_mesh(voxelize_proxy(sphere_proxy(), None, n))
    assert mesh.is_watertight()
    r = np.linalg.norm(mesh.vertices, axis=1)
    assert r.min() >= 0.4 - 2 / n and r.max() <= 0.4 + 2 / n


def test_extract_mesh_single_voxel():
    n = 16
    cells = np.zeros((n, n, n), dtype=bool)
    cells[5, 6, 7] = True
    mesh = extract_mesh(OccupancyGrid(cells))
    assert mesh.is_watertight()
    assert 0 < mesh.volume() <= (1.5 / n) ** 3 * 8


def test_extract_mesh_empty():
    assert extract_mesh(OccupancyGrid.empty(8)).is_empty


def test_extract_then_voxelize_round_trip():
    g = voxelize_proxy(sphere_proxy(0.3), None, 32)
    back = voxelize_mesh(extract_mesh(g), 32)
    assert back == g


def test_grid_points_are_cell_centers():
    cells = np.zeros((8, 8, 8), dtype=bool)
    cells[0, 1, 2] = True
    np.testing.assert_allclose(grid_points(OccupancyGrid(cells)), [[-0.5 + 0.5 / 8, -0.5 + 1.5 / 8, -0.5 + 2.5 / 8]])


def test_dilate():
    cells = np.zeros((8, 8, 8), dtype=bool)
    cells[4, 4, 4] = True
    assert dilate(OccupancyGrid(cells), 1).count == 7
    assert dilate(OccupancyGrid(cells), 0).count == 1


# -- masks -------------------------------------------------------------------------


def two_part_proxy():
    return Proxy(
        (
            Primitive(0, SuperquadricParams((0.15, 0.15, 0.15), translation=(-0.2, 0, 0))),
            Primitive(1, SuperquadricParams((0.1, 0.2, 0.1), translation=(0.2, 0, 0))),
        )
    )


def test_identity_masks():
    p = two_part_proxy()
    g = voxelize_proxy(p, None, 16)
    m = masks_from_diff(diff_proxies(p, p), g, p, p)
    assert m.uc == g and m.ed.count == 0 and m.new.count == 0


def test_deleted_primitive_goes_to_new():
    p = two_part_proxy()
    edit = Proxy(p.primitives[:1])
    g = voxelize_proxy(p, None, 16)
    m = masks_from_diff(diff_proxies(p, edit), g, p, edit)
    assert m.new == voxelize_proxy(p, [1], 16)
    assert m.ed.count == 0


def test_translated_primitive_masks_brute_force():
    n = 16
    p = two_part_proxy()
    q0 = p.get(0).params
    q0_new = q0.replace(translation=(-0.2, 0.25, 0))
    edit = Proxy((Primitive(0, q0_new), p.get(1)))
    g = voxelize_proxy(p, None, n)
    m = masks_from_diff(diff_proxies(p, edit), g, p, edit)
    new_pose = brute_voxelize([q0_new], n)
    old_pose = brute_voxelize([q0], n)
    np.testing.assert_array_equal(m.ed.cells, new_pose)
    np.testing.assert_array_equal(m.uc.cells, g.cells & ~new_pose & ~old_pose)
    assert m.new.count == 0
    assert m.is_disjoint()


def test_mask_priority_new_over_ed():
    p = two_part_proxy()
    added = Primitive(5, p.get(1).params)  # overlaps primitive 1 exactly
    q1 = p.get(1).params
    edit = Proxy((p.get(0), Primitive(1, q1.replace(scale=(0.12, 0.2, 0.1))), added))
    g = voxelize_proxy(p, None, 16)
    m = masks_from_diff(diff_proxies(p, edit), g, p, edit)
    assert m.is_disjoint()
    assert (m.new.cells & voxelize_proxy(edit, [1], 16).cells).any()
    assert not (m.ed.cells & m.new.cells).any()


def test_maskset_rejects_mixed_resolution():
    with pytest.raises(ValueError):
        MaskSet(OccupancyGrid.empty(8), OccupancyGrid.empty(8), OccupancyGrid.empty(16))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_masks_disjoint_random(seed):
    rng = np.random.default_rng(seed)
    orig = Proxy(tuple(Primitive(i, random_params(rng)) for i in range(3)))
    prims = [orig.get(0), Primitive(1, random_params(rng)), Primitive(7, random_params(rng))]
    edit = Proxy(tuple(prims))
    g = voxelize_proxy(orig, None, 16)
    m = masks_from_diff(diff_proxies(orig, edit), g, orig, edit)
    assert m.is_disjoint()
    assert not (m.uc.cells & ~g.cells).any()
