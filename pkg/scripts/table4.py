"""Biharmonic CIP on the unit square: P2-P3 (gamma 10) and P3-P4 (gamma 17)."""
import sys

from _common import run_all

jobs = [("table4_p3p4_block_jacobi_pcg.csv", ["table", "--case", "biharmonic_square", "--pair", "P3P4",
                                              "--smoother", "block_jacobi_pcg", "--m", "0,1,2,3,4",
                                              "--levels", "1..5"]),
        ("table4_p3p4_jcg.csv", ["table", "--case", "biharmonic_square", "--pair", "P3P4",
                                 "--smoother", "jcg", "--m", "4,8,12,16", "--levels", "1..5"]),
        ("table4_p2p3_jcg.csv", ["table", "--case", "biharmonic_square", "--pair", "P2P3",
                                 "--smoother", "jcg", "--m", "0,1,2,3,4", "--levels", "1..6"])]
sys.exit(run_all(jobs))
