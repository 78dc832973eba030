"""Poisson on the hexagon, P1-P2, damped Jacobi / GS / CG smoothing."""
import sys

from _common import run_all

LEVELS = sys.argv[1] if len(sys.argv) > 1 else "2..7"
jobs = [(f"table1_{s}.csv", ["table", "--case", "poisson_hex", "--pair", "P1P2", "--smoother", s,
                             "--m", "0,1,2,3", "--levels", LEVELS])
        for s in ("jacobi", "gs", "cg")]
sys.exit(run_all(jobs))
