"""
Warping the original shape with edited primitives
=================================================

Each edited primitive carries the geometry it covers along with it.  Cells
outside every edited primitive keep their original occupancy.
"""

import numpy as np

from proxekit.proxy import Primitive, Proxy, diff_proxies
from proxekit.superquadric import SuperquadricParams
from proxekit.voxel import voxelize_proxy
from proxekit.warp import build_warp_field, relative_transform, warp_grid, warp_points

q = SuperquadricParams((0.1, 0.1, 0.1), translation=(-0.1, 0, 0))
bigger = q.replace(scale=(0.2, 0.1, 0.1), translation=(0.05, 0, 0))
print("relative transform:\n", np.round(relative_transform(q, bigger), 3))

orig = Proxy((Primitive(0, q),))
edit = Proxy((Primitive(0, bigger),))
field = build_warp_field(diff_proxies(orig, edit), slack=0.1)

pts = np.array([[-0.1, 0.0, 0.0], [-0.15, 0.05, 0.0], [0.4, 0.4, 0.4]])
print("warped points:\n", warp_points(pts, field))

n = 32
before = voxelize_proxy(orig, None, n)
after = warp_grid(before, field)
print("cells before", before.count, "after", after.count)
