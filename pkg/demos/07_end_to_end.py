"""
End to end: fit, edit, regenerate, measure
==========================================

Run the whole pipeline on a two-sphere mesh and save every stage to disk.
The same run is available from the shell as ``proxekit pipeline``.
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from proxekit.editscript import parse_script
from proxekit.fitting import decompose
from proxekit.pipeline import PipelineConfig, run_pipeline, save_result
from proxekit.voxel import TriangleMesh, icosphere, sample_mesh_surface

a = icosphere(0.12, 3, center=(0, -0.25, 0))
b = icosphere(0.12, 3, center=(0, 0.25, 0))
mesh = TriangleMesh(np.vstack([a.vertices, b.vertices]), np.vstack([a.faces, b.faces + len(a.vertices)]))

proxy = decompose(sample_mesh_surface(mesh, 4000, seed=0), k=2, seed=0)
low = min(proxy.primitives, key=lambda p: p.params.translation[1]).id

result = run_pipeline(mesh, proxy, parse_script(f"translate #{low} by 0.2 0 0"), PipelineConfig())
print("metrics:", result.metrics)

# Colours follow the moved part; newly exposed cells are filled from neighbours.
colored = ~np.isnan(result.features).any(axis=-1)
print("coloured cells:", colored.sum(), "output cells:", result.grid_out.count)

out_dir = Path(tempfile.mkdtemp(prefix="proxekit-"))
paths = save_result(result, out_dir)
print("wrote", ", ".join(sorted(p.name for p in paths.values())))
print(json.loads(paths["metrics"].read_text())["classification"])
