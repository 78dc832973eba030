"""Smoothing-based superconvergent postprocessing for finite element solutions.

A degree-k solution u_h is embedded in the degree-(k+1) space on the same
mesh and improved by a few smoothing steps (Jacobi, Gauss-Seidel, patch
smoothers, PCG, GMRES) on the enriched system.
"""
from .harness import ConvergenceTable, ExperimentConfig, compute_orders, run_experiment
from .mesh import Mesh, generate_structured
from .postprocess import PostprocessConfig, epsilon_fixed, epsilon_pcg, f_factor, smooth_postprocess
from .smoothers import SmootherSpec

__all__ = [
    "ConvergenceTable", "ExperimentConfig", "Mesh", "PostprocessConfig", "SmootherSpec",
    "compute_orders", "epsilon_fixed", "epsilon_pcg", "f_factor", "generate_structured",
    "run_experiment", "smooth_postprocess",
]
