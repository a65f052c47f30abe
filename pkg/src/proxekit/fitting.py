"""Classical superquadric fitting and decomposition of point clouds.

Single primitives are fitted with a bounded Levenberg-Marquardt loop on the
size-weighted inside-outside residual ``sqrt(a1 a2 a3) * (F**eps1 - 1)``.
Shapes with several parts go through seeded k-means followed by alternating
point assignment and per-primitive refits.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple

import numpy as np

from .proxy import Primitive, Proxy, palette_color
from .superquadric import (
    SHAPE_MAX,
    SHAPE_MIN,
    SuperquadricParams,
    canonical_value,
    euler_to_matrix,
    matrix_to_euler,
    radial_distance,
)

log = logging.getLogger(__name__)

MIN_SCALE = 1e-6
MIN_STD = 1e-3
MAX_LM_ITERATIONS = 200
MAX_EM_ROUNDS = 20


class DecompositionError(RuntimeError):
    pass


class FitResult(NamedTuple):
    params: SuperquadricParams
    residual: float
    iterations: int
    converged: bool


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"points must have shape (n, 3), got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points contain non-finite coordinates")
    return pts


def moments_init(points) -> SuperquadricParams:
    """Ellipsoid guess from the first two moments of the cloud.

    The principal axis with the largest variance becomes the local z axis and
    each scale is 1.5 standard deviations along its axis.
    """
    pts = _as_points(points)
    if len(pts) < 10:
        raise ValueError(f"moments_init needs at least 10 points, got {len(pts)}")
    center = pts.mean(axis=0)
    cov = np.cov((pts - center).T, bias=True)
    evals, evecs = np.linalg.eigh(cov)  # ascending, so column 2 is the major axis
    if np.linalg.det(evecs) < 0:
        evecs[:, 0] = -evecs[:, 0]
    std = np.sqrt(np.clip(evals, 0.0, None))
    std = np.maximum(std, MIN_STD)
    return SuperquadricParams(
        scale=tuple(1.5 * std),
        shape=(1.0, 1.0),
        translation=tuple(center),
        rotation=matrix_to_euler(evecs),
    )


def _residuals(theta: np.ndarray, pts: np.ndarray) -> np.ndarray:
    a = theta[0:3]
    e1, e2 = theta[3], theta[4]
    p_hat = ((pts - theta[5:8]) @ euler_to_matrix(theta[8:11])) / a
    f = canonical_value((e1, e2), p_hat)
    with np.errstate(over="ignore"):
        return np.sqrt(a[0] * a[1] * a[2]) * (np.power(f, e1) - 1.0)


def _project(theta: np.ndarray) -> np.ndarray:
    out = theta.copy()
    out[0:3] = np.maximum(out[0:3], MIN_SCALE)
    out[3:5] = np.clip(out[3:5], SHAPE_MIN, SHAPE_MAX)
    out[8:11] = (out[8:11] + np.pi) % (2.0 * np.pi) - np.pi
    return out


def _jacobian(theta: np.ndarray, pts: np.ndarray) -> np.ndarray:
    # central differences, h = 1e-6 * max(1, |theta_j|)
    jac = np.empty((len(pts), len(theta)))
    for j in range(len(theta)):
        h = 1e-6 * max(1.0, abs(theta[j]))
        up = theta.copy()
        down = theta.copy()
        up[j] += h
        down[j] -= h
        if j < 3:
            down[j] = max(down[j], 0.5 * theta[j])
        jac[:, j] = (_residuals(up, pts) - _residuals(down, pts)) / (up[j] - down[j])
    return jac


def fit_objective(params: SuperquadricParams, points) -> float:
    """Sum of squared size-weighted residuals of ``points`` against ``params``."""
    r = _residuals(params.to_vector(), _as_points(points))
    return float(r @ r)


def fit_single(
    points,
    init: SuperquadricParams,
    max_iterations: int = MAX_LM_ITERATIONS,
    ftol: float = 1e-8,
    xtol: float = 1e-10,
) -> FitResult:
    """Refine ``init`` against ``points`` with Levenberg-Marquardt.

    Uphill steps are rejected, so the returned residual never exceeds the
    residual of ``init``.  If damping blows up before any step is accepted the
    initial parameters come back with ``converged=False``.
    """
    pts = _as_points(points)
    if len(pts) < 11:
        raise ValueError(f"fit_single needs at least 11 points, got {len(pts)}")
    theta = _project(init.to_vector())
    r = _residuals(theta, pts)
    cost = float(r @ r)
    if not np.isfinite(cost):
        return FitResult(init, cost, 0, False)
    lam = 1e-3
    converged = False
    iteration = 0
    for iteration in range(1, max_iterations + 1):
        if cost == 0.0:
            converged = True
            break
        jac = _jacobian(theta, pts)
        jtj = jac.T @ jac
        grad = jac.T @ r
        diag = np.diag(jtj).copy()
        diag[diag <= 0.0] = 1.0
        accepted = False
        while lam < 1e16:
            try:
                step = np.linalg.solve(jtj + lam * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            cand = _project(theta + step)
            r_new = _residuals(cand, pts)
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new < cost:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            # damping overflow: nothing downhill from here
            converged = iteration > 1
            break
        actual_step = np.linalg.norm(cand - theta)
        rel_drop = (cost - cost_new) / cost
        theta, r, cost = cand, r_new, cost_new
        lam = max(lam / 10.0, 1e-12)
        if rel_drop < ftol or actual_step < xtol:
            converged = True
            break
    return FitResult(SuperquadricParams.from_vector(theta), cost, iteration, converged)


def _axis_permutations(init: SuperquadricParams) -> list[SuperquadricParams]:
    """The init plus the two cyclic relabelings of its axes (same ellipsoid)."""
    rot = euler_to_matrix(init.rotation)
    out = [init]
    a = np.asarray(init.scale)
    for shift in (1, 2):
        perm = np.roll(np.arange(3), shift)
        out.append(init.replace(scale=tuple(a[perm]), rotation=matrix_to_euler(rot[:, perm])))
    return out


def fit_superquadric(points, init: SuperquadricParams | None = None) -> FitResult:
    """Fit one primitive, trying each axis labelling of the moments guess.

    The shape exponents act on specific local axes, so the best labelling is
    not known in advance; the lowest-residual fit wins.
    """
    pts = _as_points(points)
    start = moments_init(pts) if init is None else init
    best = None
    for cand in _axis_permutations(start):
        res = fit_single(pts, cand)
        if best is None or res.residual < best.residual:
            best = res
    return best


def kmeans(points: np.ndarray, k: int, seed: int, iterations: int = 100) -> np.ndarray:
    """Seeded Lloyd's k-means with k-means++ seeding; returns labels."""
    rng = np.random.default_rng(seed)
    n = len(points)
    centers = [points[rng.integers(n)]]
    for _ in range(1, k):
        d2 = np.min(((points[:, None, :] - np.asarray(centers)[None]) ** 2).sum(-1), axis=1)
        total = d2.sum()
        if total <= 0.0:
            centers.append(points[rng.integers(n)])
        else:
            centers.append(points[rng.choice(n, p=d2 / total)])
    centers = np.asarray(centers)
    labels = np.full(n, -1)
    for _ in range(iterations):
        d2 = ((points[:, None, :] - centers[None]) ** 2).sum(-1)
        new_labels = np.argmin(d2, axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            members = points[labels == j]
            if len(members):
                centers[j] = members.mean(axis=0)
    return labels


def _max_workers() -> int:
    try:
        return max(1, int(os.environ.get("PROXEKIT_THREADS", "1")))
    except ValueError:
        return 1


def decompose(points, k: int, seed: int = 0, category: str = "object") -> Proxy:
    """Decompose a surface point cloud into at most ``k`` superquadrics.

    Output ids run ``0..K'-1`` with palette colours; clusters that end up with
    fewer than 11 points are dropped.  Deterministic for fixed inputs.
    """
    pts = _as_points(points)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(pts) < 50 * k:
        raise ValueError(f"need at least {50 * k} points for k={k}, got {len(pts)}")

    labels = kmeans(pts, k, seed)
    params: list[SuperquadricParams | None] = [None] * k

    def refit(j: int, warm: bool) -> SuperquadricParams | None:
        members = pts[labels == j]
        if len(members) < 11:
            return None
        if warm and params[j] is not None:
            return fit_single(members, params[j]).params
        return fit_superquadric(members).params

    with ThreadPoolExecutor(max_workers=_max_workers()) as pool:
        params = list(pool.map(lambda j: refit(j, False), range(k)))
        for round_no in range(MAX_EM_ROUNDS):
            alive = [j for j in range(k) if params[j] is not None]
            if not alive:
                break
            dist = np.stack([radial_distance(params[j], pts) for j in alive], axis=1)
            new_labels = np.asarray(alive)[np.argmin(dist, axis=1)]
            changed = np.count_nonzero(new_labels != labels)
            labels = new_labels
            params = list(pool.map(lambda j: refit(j, True), range(k)))
            log.debug("EM round %d: %d assignments changed", round_no, changed)
            if changed < 0.01 * len(pts):
                break

    kept = [q for q in params if q is not None]
    if not kept:
        raise DecompositionError("decomposition failed")
    prims = tuple(Primitive(i, q, palette_color(i)) for i, q in enumerate(kept))
    return Proxy(prims, category)
