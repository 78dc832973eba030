"""CG smoothing for P1-P2 and P2-P3 on the hexagon (order of convergence in h)."""
import sys

from _common import run_all

jobs = [(f"fig2_{p}.csv", ["table", "--case", "poisson_hex", "--pair", p, "--smoother", "cg",
                           "--m", "0,1,2,3", "--levels", lv])
        for p, lv in (("P1P2", "2..7"), ("P2P3", "2..6"))]
sys.exit(run_all(jobs))
