"""
Superquadric primitives
=======================

Evaluate the inside-outside function, move a primitive around with its pose
matrix and sample points on its surface.
"""

import numpy as np

from proxekit.superquadric import (
    SuperquadricParams,
    implicit_value,
    inside,
    pose_inverse,
    pose_matrix,
    radial_distance,
    sample_surface,
    transform_points,
)

# A primitive is 11 numbers: three half-extents, two shape exponents, a
# translation and intrinsic X-Y-Z Euler angles.  Small exponents give boxes,
# 1 gives an ellipsoid, values near 2 give pinched octahedra.
box = SuperquadricParams(scale=(0.3, 0.2, 0.1), shape=(0.1, 0.1))
blob = SuperquadricParams(scale=(0.2, 0.2, 0.2), shape=(1.0, 1.0), translation=(0.1, 0.0, 0.0), rotation=(0.0, 0.0, np.pi / 4))

# Values below 1 are inside, 1 is the surface, above 1 is outside.
probe = np.array([[0.0, 0.0, 0.0], [0.29, 0.19, 0.09], [0.4, 0.0, 0.0]])
print("box values:", np.round(implicit_value(box, probe), 4))
print("inside box:", inside(box, probe))

# The pose matrix carries canonical coordinates to world space.
m = pose_matrix(blob)
print("pose:\n", np.round(m, 3))
print("round trip:", np.allclose(pose_inverse(blob) @ m, np.eye(4)))

# Surface samples land exactly on the level set.
surface = sample_surface(blob, 500)
print("max |F - 1| on samples:", np.abs(implicit_value(blob, surface) - 1).max())

# Radial distance approximates the Euclidean gap to the surface.
outside = transform_points(m, [[1.5, 0.0, 0.0]])
print("radial distance of a point 0.1 outside:", radial_distance(blob, outside))
