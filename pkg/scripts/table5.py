"""Unstructured meshes: Poisson P1-P2 on the hexagon, Maxwell Nd1-Nd2 on the cube.

Generates the meshes first (see make_meshes.py) unless they already exist.
"""
import subprocess
import sys
from pathlib import Path

from _common import run_all

MESHES = Path("meshes")
if not (MESHES / "cube_L3.msh").exists():
    subprocess.run([sys.executable, str(Path(__file__).with_name("make_meshes.py")), "--out", str(MESHES)],
                   check=True)
hexf = ",".join(str(MESHES / f"hexagon_L{i}.msh") for i in range(1, 7))
cube = ",".join(str(MESHES / f"cube_L{i}.msh") for i in range(1, 4))
jobs = [(f"table5_poisson_{s}.csv", ["table", "--case", "poisson_gmsh", "--pair", "P1P2", "--smoother", s,
                                     "--m", "0,1,2,3", "--levels", "1..6", "--mesh-files", hexf])
        for s in ("jcg", "block_jacobi_pcg")]
jobs += [(f"table5_maxwell_{s}.csv", ["table", "--case", "maxwell_gmsh", "--pair", "Nd1Nd2", "--smoother", s,
                                      "--m", "0,1,2,3", "--levels", "1..3", "--mesh-files", cube])
         for s in ("block_jacobi_pcg", "hx_pcg")]
sys.exit(run_all(jobs))
