"""Maxwell on the unit cube, Nd1-Nd2: block GS, block-Jacobi PCG and HX PCG (h down to 1/8)."""
import sys

from _common import run_all

jobs = [("table2_block_gs.csv", ["table", "--case", "maxwell_cube", "--pair", "Nd1Nd2",
                                 "--smoother", "block_gs", "--m", "0,1,2,3", "--levels", "1..3"]),
        ("table2_block_jacobi_pcg.csv", ["table", "--case", "maxwell_cube", "--pair", "Nd1Nd2",
                                         "--smoother", "block_jacobi_pcg", "--m", "1,2,3", "--levels", "1..3"]),
        ("table2_hx_pcg.csv", ["table", "--case", "maxwell_cube", "--pair", "Nd1Nd2",
                               "--smoother", "hx_pcg", "--m", "1,2,3", "--levels", "1..3"])]
sys.exit(run_all(jobs))
