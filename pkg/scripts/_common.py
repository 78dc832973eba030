"""Shared helper: run a list of CLI invocations, writing CSVs under an output dir."""
import sys
from pathlib import Path

from smoothsc.cli import main as cli


def run_all(jobs, outdir="results"):
    """jobs: iterable of (csv name, argv list without --out)."""
    Path(outdir).mkdir(parents=True, exist_ok=True)
    status = 0
    for name, argv in jobs:
        out = str(Path(outdir) / name)
        print(f"== {name}: smoothsc {' '.join(argv)}", file=sys.stderr)
        status |= cli([*argv, "--out", out])
        print(Path(out).read_text())
    return status
