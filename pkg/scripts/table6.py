"""Adaptive P1 and P2 on the L-shaped domain, CG smoothing m = 4, theta = 0.5, 40 iterations."""
import sys

from smoothsc.cli import main as cli

status = 0
for pair in ("P1P2", "P2P3"):
    status |= cli(["adapt", "--pair", pair, "--smoother", "cg", "--m", "4", "--iters", "40",
                   "--out", f"results/table6_{pair}.csv"])
sys.exit(status)
