"""
Occupancy grids, region masks and mesh extraction
=================================================

Voxelize a mesh and a proxy, derive the unchanged / edited / new masks for an
edit, and turn a grid back into a triangle mesh.
"""

import numpy as np

from proxekit.proxy import Primitive, Proxy, diff_proxies
from proxekit.superquadric import SuperquadricParams
from proxekit.voxel import extract_mesh, icosphere, masks_from_diff, voxelize_mesh, voxelize_proxy

n = 64
sphere = voxelize_mesh(icosphere(0.4, subdivisions=3), n)
print("sphere cells:", sphere.count, "analytic:", round(4 / 3 * np.pi * 0.4**3 * n**3))

mesh = extract_mesh(sphere)
radii = np.linalg.norm(mesh.vertices, axis=1)
print("mesh watertight:", mesh.is_watertight(), "radius range:", radii.min().round(4), radii.max().round(4))

# Masks for moving one of two parts.
left = Primitive(0, SuperquadricParams((0.12, 0.12, 0.12), translation=(-0.2, 0, 0)))
right = Primitive(1, SuperquadricParams((0.12, 0.12, 0.12), translation=(0.2, 0, 0)))
orig = Proxy((left, right))
edit = Proxy((left, Primitive(1, right.params.replace(translation=(0.2, 0.2, 0)))))
grid = voxelize_proxy(orig, None, n)
masks = masks_from_diff(diff_proxies(orig, edit), grid, orig, edit)
print("uc", masks.uc.count, "ed", masks.ed.count, "new", masks.new.count, "disjoint", masks.is_disjoint())
