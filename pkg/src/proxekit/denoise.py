"""Latent grids, an exactly invertible reference flow, and mask-blended denoising.

Timesteps count noise: ``t = 0`` is clean data and ``t = T`` is noise.  One
backward (inversion) step goes ``t -> t + 1``; one forward (denoising) step
goes ``t + 1 -> t``.

Latent values live on a fixed-point lattice with spacing ``2**-40``.  Sums of
lattice values with magnitude below ``2**12`` are exact in float64, so a
forward step undoes a backward step bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np
from scipy import ndimage

from .voxel import MaskSet, OccupancyGrid, check_resolution, point_to_index, cell_centers
from .warp import WarpField, claim_owners
from .superquadric import transform_points

LATENT_QUANTUM = 2.0**-40
LATENT_LIMIT = 2.0**12


def quantize(values) -> np.ndarray:
    """Round onto the latent lattice."""
    return np.rint(np.asarray(values, dtype=np.float64) / LATENT_QUANTUM) * LATENT_QUANTUM


@dataclass(frozen=True, eq=False)
class LatentGrid:
    values: np.ndarray
    t: int = 0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 3 or len(set(v.shape)) != 1:
            raise ValueError(f"latent grid must be a cube, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("latent values must be finite")
        if np.abs(v).max(initial=0.0) >= LATENT_LIMIT:
            raise ValueError(f"latent magnitude must stay below {LATENT_LIMIT}")
        if self.t < 0:
            raise ValueError(f"timestep must be >= 0, got {self.t}")
        v = quantize(v)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def resolution(self) -> int:
        return self.values.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, LatentGrid):
            return NotImplemented
        return self.t == other.t and np.array_equal(self.values, other.values)


def encode(grid: OccupancyGrid) -> LatentGrid:
    """Occupied cells become +1, empty cells -1, at ``t = 0``."""
    return LatentGrid(np.where(grid.cells, 1.0, -1.0), 0)


def decode(z: LatentGrid) -> OccupancyGrid:
    if z.t != 0:
        raise ValueError("cannot decode noisy latent")
    return OccupancyGrid(z.values > 0.0)


class Denoiser(Protocol):
    """Velocity model over latent grids.

    ``step_forward`` maps ``z_{t+1}`` to ``z_t``; ``step_backward`` maps
    ``z_t`` to ``z_{t+1}``.
    """

    num_steps: int

    def velocity(self, z: np.ndarray, t: int) -> np.ndarray: ...

    def step_forward(self, z: LatentGrid) -> LatentGrid: ...

    def step_backward(self, z: LatentGrid) -> LatentGrid: ...


class EulerDenoiser:
    """Euler integration of a velocity field on the latent lattice.

    Subclasses provide :meth:`velocity`; it must already be lattice-valued and
    independent of ``z`` for the two step directions to invert each other
    exactly.
    """

    num_steps: int = 25

    def velocity(self, z: np.ndarray, t: int) -> np.ndarray:
        raise NotImplementedError

    def step_backward(self, z: LatentGrid) -> LatentGrid:
        if z.t >= self.num_steps:
            raise ValueError(f"cannot invert past t={self.num_steps}")
        return LatentGrid(z.values + self.velocity(z.values, z.t + 1), z.t + 1)

    def step_forward(self, z: LatentGrid) -> LatentGrid:
        if z.t <= 0:
            raise ValueError("latent is already at t=0")
        return LatentGrid(z.values - self.velocity(z.values, z.t), z.t - 1)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        x = x + np.uint64(0x9E3779B97F4A7C15)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return x ^ (x >> np.uint64(31))


def hash_noise(n: int, seed: int = 0) -> np.ndarray:
    """Deterministic per-cell noise in ``[-1, 1]`` keyed on the x-fastest linear index."""
    check_resolution(n)
    idx = np.arange(n**3, dtype=np.uint64)
    with np.errstate(over="ignore"):
        key = idx ^ (np.uint64(seed) * np.uint64(0xD1B54A32D192ED03))
    bits = _splitmix64(key) >> np.uint64(11)  # 53 random bits
    unit = bits.astype(np.float64) / float(2**53)
    return quantize(2.0 * unit - 1.0).reshape((n, n, n), order="F")


def box_smooth(values: np.ndarray) -> np.ndarray:
    """3x3x3 mean with cells outside the grid treated as empty (-1)."""
    return ndimage.uniform_filter(values, size=3, mode="constant", cval=-1.0)


class ReferenceDenoiser(EulerDenoiser):
    """Straight-line flow from the smoothed condition ``x0`` to fixed noise.

    ``z_t = (1 - t/T) x0 + (t/T) eta`` with constant velocity ``(eta - x0)/T``.
    """

    def __init__(self, condition: LatentGrid, num_steps: int = 25, seed: int = 0):
        if condition.t != 0:
            raise ValueError("condition must be a clean latent (t=0)")
        if num_steps < 1:
            raise ValueError(f"num_steps must be >= 1, got {num_steps}")
        self.num_steps = num_steps
        self.x0 = box_smooth(condition.values)
        self.noise = hash_noise(condition.resolution, seed)
        self._v = quantize((self.noise - self.x0) / num_steps)

    def velocity(self, z: np.ndarray, t: int) -> np.ndarray:
        return self._v


def reference_denoiser(condition: LatentGrid, num_steps: int = 25, seed: int = 0) -> ReferenceDenoiser:
    return ReferenceDenoiser(condition, num_steps, seed)


def invert(z0: LatentGrid, denoiser: Denoiser, t_stop: int) -> list[LatentGrid]:
    """Backward-integrate ``z0`` and keep every intermediate latent ``t = 0..t_stop``."""
    if z0.t != 0:
        raise ValueError("inversion starts from a clean latent (t=0)")
    if not 0 <= t_stop <= denoiser.num_steps:
        raise ValueError(f"t_stop must lie in [0, {denoiser.num_steps}], got {t_stop}")
    traj = [z0]
    for _ in range(t_stop):
        traj.append(denoiser.step_backward(traj[-1]))
    return traj


def denoise(z: LatentGrid, denoiser: Denoiser, t_stop: int = 0) -> LatentGrid:
    while z.t > t_stop:
        z = denoiser.step_forward(z)
    return z


@dataclass(frozen=True)
class BlendSchedule:
    """Injection windows: ``0 <= t_uc < t_warp < t_init <= T``."""

    T: int = 25
    t_init: int = 13
    t_warp: int = 9
    t_uc: int = 5

    def __post_init__(self):
        if not 0 <= self.t_uc < self.t_warp < self.t_init <= self.T:
            raise ValueError(
                "schedule must satisfy 0 <= t_uc < t_warp < t_init <= T, got "
                f"t_uc={self.t_uc}, t_warp={self.t_warp}, t_init={self.t_init}, T={self.T}"
            )

    @classmethod
    def from_offsets(cls, T: int = 25, init: int = 12, warp: int = 16, uc: int = 20) -> "BlendSchedule":
        """Schedule given as offsets below ``T`` (defaults reproduce 13 / 9 / 5 for T=25)."""
        return cls(T, T - init, T - warp, T - uc)


BlendCallback = Callable[[int, np.ndarray], None]


def blended_denoise(
    z_proxy_traj: list[LatentGrid],
    z_orig_traj: list[LatentGrid],
    z_warp_traj: list[LatentGrid],
    masks: MaskSet,
    schedule: BlendSchedule,
    denoiser: Denoiser,
    background: str = "orig",
    callback: BlendCallback | None = None,
) -> LatentGrid:
    """Denoise from the inverted proxy while pinning masked regions to reference latents.

    Each iteration takes one denoiser step and then overwrites the unchanged
    region with the original trajectory (while ``t > t_uc``) and the edited
    region with the warped trajectory (while ``t > t_warp``).  New regions are
    never overwritten.  The starting latent at ``t_init`` gets the same
    composite.

    ``background`` decides cells outside all three masks and outside every
    edit footprint: ``"orig"`` treats them like the unchanged region,
    ``"free"`` lets them evolve from the proxy.  ``callback(t, values)`` sees
    the latent after each injection.
    """
    t_init = schedule.t_init
    if denoiser.num_steps != schedule.T:
        raise ValueError(f"denoiser has {denoiser.num_steps} steps, schedule expects T={schedule.T}")
    for name, traj in (("proxy", z_proxy_traj), ("orig", z_orig_traj), ("warp", z_warp_traj)):
        if len(traj) <= t_init:
            raise ValueError(f"{name} trajectory reaches t={len(traj) - 1}, need t_init={t_init}")
        if traj[0].resolution != masks.resolution:
            raise ValueError(f"{name} trajectory resolution {traj[0].resolution} != mask resolution {masks.resolution}")
    if background not in ("orig", "free"):
        raise ValueError(f"background must be 'orig' or 'free', got {background!r}")

    keep = masks.uc.cells.copy()
    if background == "orig":
        claimed = masks.uc.cells | masks.ed.cells | masks.new.cells
        if masks.touched is not None:
            claimed = claimed | masks.touched.cells
        keep |= ~claimed
    ed = masks.ed.cells

    def inject(values: np.ndarray, t: int) -> np.ndarray:
        values = values.copy()
        if t > schedule.t_uc:
            values[keep] = z_orig_traj[t].values[keep]
        if t > schedule.t_warp:
            values[ed] = z_warp_traj[t].values[ed]
        return values

    z = LatentGrid(inject(z_proxy_traj[t_init].values, t_init), t_init)
    if callback is not None:
        callback(t_init, z.values)
    while z.t > 0:
        z = denoiser.step_forward(z)
        z = LatentGrid(inject(z.values, z.t), z.t)
        if callback is not None:
            callback(z.t, z.values)
    return z


# -- appearance ----------------------------------------------------------------------


def _fill(features: np.ndarray, known: np.ndarray, region: np.ndarray, iterations: int) -> tuple[np.ndarray, np.ndarray]:
    """Grow ``known`` into ``region`` one 6-neighbour ring per iteration.

    Each newly reached cell takes the mean of its already-known neighbours.
    """
    feats = features.copy()
    known = known.copy()
    n = known.shape[0]
    for _ in range(iterations):
        todo = region & ~known
        if not todo.any():
            break
        total = np.zeros(feats.shape)
        count = np.zeros(known.shape)
        src = np.where(known[..., None], feats, 0.0)
        for axis in range(3):
            for shift in (1, -1):
                rolled_known = np.roll(known, shift, axis=axis)
                rolled = np.roll(src, shift, axis=axis)
                # np.roll wraps around; drop the wrapped slab
                edge = [slice(None)] * 3
                edge[axis] = 0 if shift == 1 else n - 1
                rolled_known[tuple(edge)] = False
                rolled[tuple(edge)] = 0.0
                total += rolled
                count += rolled_known
        reach = todo & (count > 0)
        if not reach.any():
            break
        feats[reach] = total[reach] / count[reach][:, None]
        known = known | reach
    return feats, known


def transfer_features(
    feat_orig: np.ndarray,
    masks: MaskSet,
    field: WarpField,
    fill_iters: int = 32,
    target: OccupancyGrid | None = None,
) -> np.ndarray:
    """Carry per-voxel RGB features from the original shape to the edited one.

    ``feat_orig`` has shape ``(N, N, N, 3)`` with NaN where the original has
    no feature.  Unchanged cells copy their feature; edited cells read the
    feature at the nearest cell to their pre-edit location; new cells and
    edited cells without a source are filled from their neighbours.  Output
    cells outside ``target`` (default: union of the masks) are NaN.
    """
    feat_orig = np.asarray(feat_orig, dtype=float)
    n = masks.resolution
    if feat_orig.shape != (n, n, n, 3):
        raise ValueError(f"features must have shape {(n, n, n, 3)}, got {feat_orig.shape}")
    valid = ~np.isnan(feat_orig).any(axis=-1)
    region = masks.uc.cells | masks.ed.cells | masks.new.cells
    if target is not None:
        region = target.cells.copy()

    out = np.full(feat_orig.shape, np.nan)
    known = np.zeros((n, n, n), dtype=bool)

    uc = masks.uc.cells & valid & region
    out[uc] = feat_orig[uc]
    known |= uc

    ed = masks.ed.cells & region
    if ed.any() and field.entries:
        cells = np.argwhere(ed)
        centers = cell_centers(n)[ed]
        owner = claim_owners([e.target for e in field.entries], centers, field.slack)
        for i, entry in enumerate(field.entries):
            sel = owner == i
            if not sel.any():
                continue
            src = point_to_index(transform_points(entry.m_rel_inv, centers[sel]), n)
            dst = cells[sel]
            ok = np.all((src >= 0) & (src < n), axis=1)
            src, dst = src[ok], dst[ok]
            has = valid[tuple(src.T)]
            src, dst = src[has], dst[has]
            out[tuple(dst.T)] = feat_orig[tuple(src.T)]
            known[tuple(dst.T)] = True

    filled, known = _fill(np.nan_to_num(out), known, region, fill_iters)
    result = np.full(feat_orig.shape, np.nan)
    result[known] = filled[known]
    return result
