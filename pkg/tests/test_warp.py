import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from proxekit.proxy import Primitive, Proxy, diff_proxies
from proxekit.superquadric import SuperquadricParams, implicit_value, pose_matrix
from proxekit.voxel import OccupancyGrid, cell_centers, voxelize_proxy
from proxekit.warp import (
    WarpEntry,
    WarpField,
    build_warp_field,
    claim_owners,
    relative_transform,
    warp_grid,
    warp_points,
)

from conftest import random_params


def translated(q, d):
    return q.replace(translation=tuple(np.add(q.translation, d)))


def field_for(pairs, slack=0.1):
    orig = Proxy(tuple(Primitive(i, a) for i, (a, _) in enumerate(pairs)))
    edit = Proxy(tuple(Primitive(i, b) for i, (_, b) in enumerate(pairs)))
    return build_warp_field(diff_proxies(orig, edit), slack)


def test_relative_identity():
    q = SuperquadricParams((0.3, 0.2, 0.1), (0.5, 1.5), (0.1, 0.2, 0.3), (1.0, -0.5, 2.0))
    np.testing.assert_allclose(relative_transform(q, q), np.eye(4), atol=1e-9)


def test_relative_translation():
    q = SuperquadricParams((0.3, 0.2, 0.1), rotation=(0.4, 0.1, -0.3))
    m = relative_transform(q, translated(q, (0, 0.2, 0)))
    expected = np.eye(4)
    expected[1, 3] = 0.2
    np.testing.assert_allclose(m, expected, atol=1e-12)


def test_relative_scale():
    m = relative_transform(SuperquadricParams((1, 1, 1)), SuperquadricParams((1, 1, 2)))
    np.testing.assert_allclose(m @ [0, 0, 1, 1], [0, 0, 2, 1], atol=1e-12)


def test_relative_maps_poses():
    rng = np.random.default_rng(3)
    a, b = random_params(rng), random_params(rng)
    np.testing.assert_allclose(relative_transform(a, b) @ pose_matrix(a), pose_matrix(b), atol=1e-10)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_relative_composition(seed):
    rng = np.random.default_rng(seed)
    q0, q1, q2 = (random_params(rng) for _ in range(3))
    lhs = relative_transform(q0, q2)
    rhs = relative_transform(q1, q2) @ relative_transform(q0, q1)
    np.testing.assert_allclose(lhs, rhs, atol=1e-8)


def test_build_field_entries_in_diff_order():
    rng = np.random.default_rng(4)
    pairs = [(random_params(rng), random_params(rng)) for _ in range(3)]
    field = field_for(pairs)
    assert [e.id for e in field.entries] == [0, 1, 2]
    for e, (a, b) in zip(field.entries, pairs):
        np.testing.assert_allclose(e.m_rel, relative_transform(a, b))
    p = Proxy((Primitive(0, pairs[0][0]),))
    assert len(build_warp_field(diff_proxies(p, p))) == 0


def test_field_rejects_negative_slack():
    with pytest.raises(ValueError):
        WarpField((), -0.1)


def test_empty_field_points():
    pts = np.random.default_rng(0).uniform(-0.5, 0.5, (50, 3))
    np.testing.assert_array_equal(warp_points(pts, WarpField()), pts)


def test_translation_moves_points_exactly():
    q = SuperquadricParams((0.2, 0.2, 0.2))
    field = field_for([(q, translated(q, (0.1, -0.05, 0.0)))])
    pts = np.random.default_rng(1).uniform(-0.1, 0.1, (100, 3))
    np.testing.assert_allclose(warp_points(pts, field), pts + [0.1, -0.05, 0.0], atol=1e-15)


def test_overlap_tie_break():
    a = SuperquadricParams((0.3, 0.3, 0.3), translation=(-0.1, 0, 0))
    b = SuperquadricParams((0.3, 0.3, 0.3), translation=(0.1, 0, 0))
    field = field_for([(a, translated(a, (0, 1, 0))), (b, translated(b, (0, -1, 0)))])
    p = np.array([[0.05, 0.0, 0.0]])
    va, vb = implicit_value(a, p)[0], implicit_value(b, p)[0]
    assert va <= 1.1 and vb <= 1.1 and vb < va
    np.testing.assert_allclose(warp_points(p, field), [[0.05, -1.0, 0.0]])


def test_claim_owners_slack():
    q = SuperquadricParams((0.2, 0.2, 0.2))
    pts = np.array([[0.0, 0, 0], [0.205, 0, 0], [0.3, 0, 0]])
    assert list(claim_owners([q], pts, 0.1)) == [0, 0, -1]
    assert list(claim_owners([q], pts, 0.0)) == [0, -1, -1]
    assert list(claim_owners([], pts, 0.1)) == [-1, -1, -1]


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_support_locality(seed):
    rng = np.random.default_rng(seed)
    a = random_params(rng)
    field = field_for([(a, random_params(rng))])
    pts = rng.uniform(-0.6, 0.6, (200, 3))
    out = warp_points(pts, field)
    outside = implicit_value(a, pts) > 1 + field.slack
    assert np.array_equal(out[outside], pts[outside])


def test_empty_field_grid():
    g = voxelize_proxy(Proxy((Primitive(0, SuperquadricParams((0.2, 0.3, 0.1))),)), None, 16)
    assert warp_grid(g, WarpField()) == g


def test_grid_whole_cell_translation():
    n = 16
    q = SuperquadricParams((0.12, 0.12, 0.12), translation=(-0.1, 0, 0))
    shift = 3
    q_new = translated(q, (shift / n, 0, 0))
    g = voxelize_proxy(Proxy((Primitive(0, q),)), None, n)
    field = field_for([(q, q_new)])
    out = warp_grid(g, field)
    claimed = implicit_value(q_new, cell_centers(n)) <= 1 + field.slack
    rolled = np.roll(g.cells, shift, axis=0)
    np.testing.assert_array_equal(out.cells[claimed], rolled[claimed])
    np.testing.assert_array_equal(out.cells[~claimed], g.cells[~claimed])


def test_grid_out_of_bounds_lookup_is_empty():
    n = 16
    g = OccupancyGrid(np.ones((n, n, n), dtype=bool))
    # support centred outside the cube: every claimed cell looks up outside the grid
    src = SuperquadricParams((0.1, 0.1, 0.1), translation=(0.9, 0.0, 0.0))
    dst = translated(src, (-0.9, 0, 0))
    out = warp_grid(g, WarpField((WarpEntry(0, relative_transform(src, dst), src, dst),)))
    claimed = implicit_value(dst, cell_centers(n)) <= 1.1
    assert claimed.any()
    assert not out.cells[claimed].any()
    assert out.cells[~claimed].all()


def test_grid_scale_two_multiplies_count_by_eight():
    n = 64
    q = SuperquadricParams((0.1, 0.1, 0.1))
    q_big = q.replace(scale=(0.2, 0.2, 0.2))
    g = voxelize_proxy(Proxy((Primitive(0, q),)), None, n)
    out = warp_grid(g, field_for([(q, q_big)], slack=0.0))
    assert 7.0 < out.count / g.count < 9.0

