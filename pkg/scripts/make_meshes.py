"""Write unstructured .msh (4.1) meshes for the poisson_gmsh and maxwell_gmsh cases.

Usage: python scripts/make_meshes.py [--out meshes] [--seed 0]
Produces hexagon_L{1..6}.msh (h = 2^-L) and cube_L{1..4}.msh.
"""
import argparse
from pathlib import Path

from smoothsc.mesh import jittered_delaunay, mesh_stats, write_msh


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="meshes")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--hex-levels", type=int, default=6)
    ap.add_argument("--cube-levels", type=int, default=4)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [("hexagon", "hexagon", args.hex_levels), ("unit_cube", "cube", args.cube_levels)]
    for domain, stem, top in jobs:
        for level in range(1, top + 1):
            mesh = jittered_delaunay(domain, 2.0 ** -level, seed=args.seed + level)
            path = out / f"{stem}_L{level}.msh"
            path.write_text(write_msh(mesh))
            st = mesh_stats(mesh)
            print(f"{path}: {st.num_vertices} vertices, {st.num_cells} cells, h_max={st.h_max:.4f}")


if __name__ == "__main__":
    main()
