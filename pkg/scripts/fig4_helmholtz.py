"""Helmholtz with Robin data, 4-step Jacobi-GMRES smoothing, kappa = pi and 10 pi."""
import sys

from _common import run_all

jobs = [(f"fig4_{p}_{k}.csv", ["table", "--case", "helmholtz_square", "--pair", p, "--kappa", k,
                               "--smoother", "jacobi_gmres", "--m", "0,4", "--levels", "2..8"])
        for p in ("P1P2", "P2P3") for k in ("pi", "10pi")]
sys.exit(run_all(jobs))
