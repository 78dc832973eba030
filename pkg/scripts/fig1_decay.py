"""Energy-error decay of fixed-point and PCG smoothing on the three-line square, P1-P2."""
import sys

from _common import run_all

jobs = [(f"fig1_{method}.csv", ["decay", "--case", "poisson_square_threeline", "--pair", "P1P2",
                                "--smoother", "sgs", "--method", method, "--level", "5", "--K", "20"])
        for method in ("fixed_point", "pcg")]
sys.exit(run_all(jobs))
