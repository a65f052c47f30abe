"""
Blended denoising with the reference flow
=========================================

Invert latents, then denoise from the proxy while pinning the unchanged
region to the original trajectory and the edited region to the warped one.
"""

import numpy as np

from proxekit.denoise import BlendSchedule, blended_denoise, decode, denoise, encode, invert, reference_denoiser
from proxekit.proxy import Primitive, Proxy, diff_proxies
from proxekit.superquadric import SuperquadricParams
from proxekit.voxel import masks_from_diff, voxelize_proxy
from proxekit.warp import build_warp_field, warp_grid

n = 32
orig = Proxy(
    (
        Primitive(0, SuperquadricParams((0.12, 0.12, 0.12), translation=(0, -0.2, 0))),
        Primitive(1, SuperquadricParams((0.12, 0.12, 0.12), translation=(0, 0.2, 0))),
    )
)
edit = Proxy((Primitive(0, orig.get(0).params.replace(translation=(0.15, -0.2, 0))), orig.get(1)))
grid = voxelize_proxy(orig, None, n)
diff = diff_proxies(orig, edit)
masks = masks_from_diff(diff, grid, orig, edit)
warped = warp_grid(grid, build_warp_field(diff))

# The denoiser is conditioned on the edited proxy.  Its steps are exact
# inverses, so inverting and denoising returns the input bit for bit.
d = reference_denoiser(encode(voxelize_proxy(edit, None, n)))
schedule = BlendSchedule()  # T=25, t_init=13, t_warp=9, t_uc=5
traj_orig = invert(encode(grid), d, schedule.t_init)
assert denoise(traj_orig[-1], d) == traj_orig[0]
traj_warp = invert(encode(warped), d, schedule.t_init)
traj_proxy = invert(encode(voxelize_proxy(edit, None, n)), d, schedule.t_init)


def watch(t, values):
    uc = masks.uc.cells
    print(f"t={t:2d}  uc pinned: {np.array_equal(values[uc], traj_orig[t].values[uc]) if t > schedule.t_uc else '-'}")


out = decode(blended_denoise(traj_proxy, traj_orig, traj_warp, masks, schedule, d, callback=watch))
print("output cells:", out.count, "original:", grid.count)
