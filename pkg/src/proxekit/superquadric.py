"""Superquadric geometry kernel.

A primitive is described by 11 numbers: per-axis scale ``a``, shape exponents
``eps``, a translation and intrinsic X-Y-Z Euler angles (radians).  Its pose
matrix is ``T @ R @ S`` and maps the canonical (unit-scale) frame to world.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SHAPE_MIN = 0.1
SHAPE_MAX = 1.9


def wrap_angle(angle: float) -> float:
    """Map an angle to the half-open interval (-pi, pi]."""
    wrapped = math.pi - math.fmod(math.pi - angle, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    elif wrapped > math.pi:
        wrapped -= 2.0 * math.pi
    return wrapped


def _triple(values, name: str) -> tuple[float, float, float]:
    out = tuple(float(v) for v in values)
    if len(out) != 3:
        raise ValueError(f"{name} must have 3 components, got {len(out)}")
    if not all(math.isfinite(v) for v in out):
        raise ValueError(f"{name} must be finite, got {out}")
    return out  # type: ignore[return-value]


@dataclass(frozen=True)
class SuperquadricParams:
    """One superquadric primitive.

    Scale must be strictly positive; shape exponents are clamped into
    ``[0.1, 1.9]`` and rotation angles wrapped into ``(-pi, pi]``.
    """

    scale: tuple[float, float, float] = (1.0, 1.0, 1.0)
    shape: tuple[float, float] = (1.0, 1.0)
    translation: tuple[float, float, float] = (0.0, 0.0, 0.0)
    rotation: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        scale = _triple(self.scale, "scale")
        if min(scale) <= 0.0:
            raise ValueError(f"scale components must be > 0, got {scale}")
        shape = tuple(float(e) for e in self.shape)
        if len(shape) != 2 or not all(math.isfinite(e) for e in shape):
            raise ValueError(f"shape must be 2 finite reals, got {self.shape}")
        shape = tuple(min(max(e, SHAPE_MIN), SHAPE_MAX) for e in shape)
        translation = _triple(self.translation, "translation")
        rotation = tuple(wrap_angle(r) for r in _triple(self.rotation, "rotation"))
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "translation", translation)
        object.__setattr__(self, "rotation", rotation)

    @classmethod
    def from_vector(cls, theta) -> "SuperquadricParams":
        """Build from the flat layout ``(a1,a2,a3, e1,e2, tx,ty,tz, rx,ry,rz)``."""
        theta = [float(v) for v in theta]
        if len(theta) != 11:
            raise ValueError(f"expected 11 parameters, got {len(theta)}")
        return cls(tuple(theta[0:3]), tuple(theta[3:5]), tuple(theta[5:8]), tuple(theta[8:11]))

    def to_vector(self) -> np.ndarray:
        return np.array(self.scale + self.shape + self.translation + self.rotation, dtype=float)

    def replace(self, **changes) -> "SuperquadricParams":
        fields = {
            "scale": self.scale,
            "shape": self.shape,
            "translation": self.translation,
            "rotation": self.rotation,
        }
        fields.update(changes)
        return SuperquadricParams(**fields)

    @property
    def center(self) -> np.ndarray:
        return np.asarray(self.translation, dtype=float)


def euler_to_matrix(angles) -> np.ndarray:
    """Rotation matrix for intrinsic X-Y-Z Euler angles, ``Rx @ Ry @ Rz``."""
    rx, ry, rz = angles
    cx, sx = math.cos(rx), math.sin(rx)
    cy, sy = math.cos(ry), math.sin(ry)
    cz, sz = math.cos(rz), math.sin(rz)
    rot_x = np.array([[1.0, 0.0, 0.0], [0.0, cx, -sx], [0.0, sx, cx]])
    rot_y = np.array([[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]])
    rot_z = np.array([[cz, -sz, 0.0], [sz, cz, 0.0], [0.0, 0.0, 1.0]])
    return rot_x @ rot_y @ rot_z


def matrix_to_euler(rot: np.ndarray) -> tuple[float, float, float]:
    """Inverse of :func:`euler_to_matrix`; ``ry`` lands in ``[-pi/2, pi/2]``."""
    rot = np.asarray(rot, dtype=float)
    sy = float(np.clip(rot[0, 2], -1.0, 1.0))
    ry = math.asin(sy)
    if abs(sy) < 1.0 - 1e-12:
        rx = math.atan2(-rot[1, 2], rot[2, 2])
        rz = math.atan2(-rot[0, 1], rot[0, 0])
    else:
        # gimbal lock: only rx +/- rz is determined, put it all in rx
        rz = 0.0
        rx = math.atan2(rot[2, 1], rot[1, 1])
    return (wrap_angle(rx), wrap_angle(ry), wrap_angle(rz))


def rotation_matrix(q: SuperquadricParams) -> np.ndarray:
    return euler_to_matrix(q.rotation)


def pose_matrix(q: SuperquadricParams) -> np.ndarray:
    """Local-to-world 4x4 transform ``T @ R @ S`` (row-major, last row 0,0,0,1)."""
    m = np.eye(4)
    m[:3, :3] = rotation_matrix(q) * np.asarray(q.scale)[None, :]
    m[:3, 3] = q.translation
    return m


def pose_inverse(q: SuperquadricParams) -> np.ndarray:
    """World-to-local transform ``S^-1 @ R^T @ T^-1`` built without a generic solve."""
    rot_t = rotation_matrix(q).T
    inv_scale = 1.0 / np.asarray(q.scale)
    m = np.eye(4)
    m[:3, :3] = inv_scale[:, None] * rot_t
    m[:3, 3] = -m[:3, :3] @ np.asarray(q.translation)
    return m


def transform_points(matrix: np.ndarray, points) -> np.ndarray:
    """Apply a 4x4 affine transform to one point ``(3,)`` or a batch ``(n, 3)``."""
    pts = np.asarray(points, dtype=float)
    return pts @ matrix[:3, :3].T + matrix[:3, 3]


def world_to_canonical(q: SuperquadricParams, points) -> np.ndarray:
    """Coordinates of ``points`` in the primitive frame with scale divided out."""
    pts = np.asarray(points, dtype=float)
    local = (pts - np.asarray(q.translation)) @ rotation_matrix(q)
    return local / np.asarray(q.scale)


def _abs_pow(x: np.ndarray, k: float) -> np.ndarray:
    # |0|^k := 0 for k > 0, which numpy already honours for positive k
    return np.power(np.abs(x), k)


def canonical_value(shape, p_hat) -> np.ndarray | float:
    """Left-hand side of the superquadric equation in the unit-scale frame."""
    e1, e2 = shape
    p = np.asarray(p_hat, dtype=float)
    with np.errstate(over="ignore"):
        xy = _abs_pow(p[..., 0], 2.0 / e2) + _abs_pow(p[..., 1], 2.0 / e2)
        value = _abs_pow(xy, e2 / e1) + _abs_pow(p[..., 2], 2.0 / e1)
    if value.ndim == 0:
        return float(value)
    return value


def implicit_value(q: SuperquadricParams, points) -> np.ndarray | float:
    """Inside-outside function: < 1 inside, 1 on the surface, > 1 outside."""
    return canonical_value(q.shape, world_to_canonical(q, points))


def inside(q: SuperquadricParams, points) -> np.ndarray | bool:
    """Surface points count as inside."""
    return implicit_value(q, points) <= 1.0


def _signed_pow(x: np.ndarray, k: float) -> np.ndarray:
    return np.sign(x) * np.power(np.abs(x), k)


def canonical_surface(shape, eta: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """Parametric surface points for unit scale at angles ``(eta, omega)``."""
    e1, e2 = shape
    ce = _signed_pow(np.cos(eta), e1)
    return np.stack(
        [
            ce * _signed_pow(np.cos(omega), e2),
            ce * _signed_pow(np.sin(omega), e2),
            _signed_pow(np.sin(eta), e1),
        ],
        axis=-1,
    )


def sample_surface(q: SuperquadricParams, n: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """Return ``n`` world points on the surface of ``q``.

    Without ``rng`` the angles follow a Fibonacci lattice (deterministic and
    spread over every octant); with ``rng`` they are drawn uniformly.
    """
    if n < 8:
        raise ValueError(f"need at least 8 samples, got {n}")
    if rng is None:
        i = np.arange(n, dtype=float)
        eta = np.arcsin(1.0 - 2.0 * (i + 0.5) / n)
        golden = math.pi * (3.0 - math.sqrt(5.0))
        omega = np.mod(i * golden + math.pi, 2.0 * math.pi) - math.pi
    else:
        eta = np.arcsin(rng.uniform(-1.0, 1.0, n))
        omega = rng.uniform(-math.pi, math.pi, n)
    local = canonical_surface(q.shape, eta, omega) * np.asarray(q.scale)
    return local @ rotation_matrix(q).T + np.asarray(q.translation)


def radial_distance(q: SuperquadricParams, points) -> np.ndarray | float:
    """Distance from a point to the surface measured along the ray from the center.

    Returns ``|r0| * |1 - F**(-eps1/2)|``; points at the center give 0.
    """
    pts = np.asarray(points, dtype=float)
    r0 = np.linalg.norm(pts - np.asarray(q.translation), axis=-1)
    value = np.asarray(implicit_value(q, pts), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        dist = r0 * np.abs(1.0 - np.power(value, -q.shape[0] / 2.0))
    dist = np.where(r0 > 0.0, dist, 0.0)
    if dist.ndim == 0:
        return float(dist)
    return dist
