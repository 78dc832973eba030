"""Experiment cases, per-level systems, convergence tables and CSV output."""
from __future__ import annotations

import configparser
import io
import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from . import problems
from .assembly import FormSpec, assemble_matrix, assemble_rhs, error_norm, lagrange_h1_matrix
from .femspace import SpaceSpec, build_dofmap, prolongation
from .linalg import exact_solve
from .mesh import generate_structured, read_msh
from .postprocess import PostprocessConfig, smooth_postprocess
from .smoothers import SmootherSpec, build_hx, build_patches, make_smoother

CASES = ("poisson_hex", "poisson_square_threeline", "dg_poisson", "maxwell_cube",
         "biharmonic_square", "helmholtz_square", "poisson_gmsh", "maxwell_gmsh", "adaptive_lshape")

# smoother aliases used by the tables: name -> (smoother kind, default method, default omega)
SMOOTHER_ALIASES = {
    "jacobi": ("jacobi", "fixed_point", 2 / 3),
    "gs": ("gs_forward", "fixed_point", 1.0),
    "sgs": ("gs_symmetric", "fixed_point", 1.0),
    "cg": ("identity", "pcg", 1.0),
    "jcg": ("jacobi", "pcg", 1.0),
    "block_gs": ("block_gs_symmetric", "fixed_point", 1.0),
    "block_jacobi_pcg": ("block_jacobi", "pcg", 1.0),
    "hx_pcg": ("hx", "pcg", 1.0),
    "jacobi_gmres": ("jacobi", "gmres", 1.0),
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CaseInfo:
    domain: str
    family: str
    dim: int
    form: str
    norm: str
    field: str = "real"
    dirichlet: bool = True


CASE_INFO = {
    "poisson_hex": CaseInfo("hexagon", "lagrange", 2, "poisson_h1", "h1_semi"),
    "poisson_square_threeline": CaseInfo("unit_square_threeline", "lagrange", 2, "poisson_h1", "h1_semi"),
    "dg_poisson": CaseInfo("unit_square_threeline", "dg", 2, "dg_poisson", "broken_1h", dirichlet=False),
    "maxwell_cube": CaseInfo("unit_cube", "nedelec1", 3, "hcurl", "hcurl", dirichlet=False),
    "biharmonic_square": CaseInfo("unit_square_threeline", "lagrange", 2, "cip_biharmonic", "cip_2h"),
    "helmholtz_square": CaseInfo("unit_square_threeline", "lagrange", 2, "helmholtz_robin", "h1_kappa",
                                 field="complex", dirichlet=False),
    "poisson_gmsh": CaseInfo("hexagon", "lagrange", 2, "poisson_h1", "h1_semi"),
    "maxwell_gmsh": CaseInfo("unit_cube", "nedelec1", 3, "hcurl", "hcurl", dirichlet=False),
    "adaptive_lshape": CaseInfo("l_shape", "lagrange", 2, "poisson_h1", "h1_semi"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    case: str
    k: int = 1  # degree of V; the enriched space has degree k + 1
    smoother: str = "cg"
    method: Optional[str] = None  # defaults from the smoother alias
    m: tuple = (1, 2, 3)
    levels: tuple = (2, 3, 4, 5)
    gamma: Optional[float] = None
    kappa: float = math.pi
    omega: Optional[float] = None
    theta: float = 0.5
    max_iters: int = 40
    mesh_files: tuple = ()
    norm: Optional[str] = None
    seed: int = 0

    def __post_init__(self):
        if self.case not in CASES:
            raise ConfigError(f"unknown case {self.case!r}; expected one of {CASES}")
        if self.k < 1:
            raise ConfigError("degree k must be at least 1")
        if self.case.endswith("_gmsh") and not self.mesh_files:
            raise ConfigError(f"case {self.case} needs mesh files, one per level")
        if any(int(v) < 0 for v in self.m):
            raise ConfigError("m values must be nonnegative")

    @property
    def smoother_spec(self) -> SmootherSpec:
        kind, _, omega = SMOOTHER_ALIASES.get(self.smoother, (self.smoother, None, 1.0))
        return SmootherSpec(kind, self.omega if self.omega is not None else omega)

    @property
    def resolved_method(self) -> str:
        if self.method is not None:
            return self.method
        alias = SMOOTHER_ALIASES.get(self.smoother)
        return alias[1] if alias else "fixed_point"

    @property
    def resolved_gamma(self) -> float:
        if self.gamma is not None:
            return self.gamma
        return 17.0 if (self.case == "biharmonic_square" and self.k >= 3) else 10.0


def exact_for(cfg: ExperimentConfig):
    return {
        "poisson_hex": problems.HEXAGON,
        "poisson_gmsh": problems.HEXAGON,
        "poisson_square_threeline": problems.SQUARE,
        "dg_poisson": problems.SQUARE,
        "maxwell_cube": problems.MAXWELL,
        "maxwell_gmsh": problems.MAXWELL,
        "biharmonic_square": problems.BIHARMONIC,
        "helmholtz_square": problems.helmholtz_plane_wave(cfg.kappa),
        "adaptive_lshape": problems.LSHAPE,
    }[cfg.case]


def spaces_for(cfg: ExperimentConfig) -> tuple[SpaceSpec, SpaceSpec]:
    info = CASE_INFO[cfg.case]
    coarse = SpaceSpec(info.family, cfg.k, info.dim, info.field, info.dirichlet)
    return coarse, coarse.with_degree(cfg.k + 1)


def form_for(cfg: ExperimentConfig) -> FormSpec:
    return FormSpec(CASE_INFO[cfg.case].form, gamma=cfg.resolved_gamma, kappa=cfg.kappa)


def mesh_for(cfg: ExperimentConfig, level_index: int, level: int):
    if cfg.case.endswith("_gmsh"):
        with open(cfg.mesh_files[level_index]) as fh:
            return read_msh(fh.read())
    return generate_structured(CASE_INFO[cfg.case].domain, level)


@dataclass
class LevelSystem:
    """Discrete V and enriched systems on one mesh, with u_h solved."""

    cfg: ExperimentConfig
    mesh: object
    dm: object
    dm_t: object
    A: sp.csr_matrix
    b: np.ndarray
    A_t: sp.csr_matrix
    f_t: np.ndarray
    iota: sp.csr_matrix
    u_h: np.ndarray
    exact: object
    _u_t: Optional[np.ndarray] = None

    @property
    def norm_kwargs(self) -> dict:
        cfg = self.cfg
        norm = cfg.norm or CASE_INFO[cfg.case].norm
        kw = {"norm": norm}
        if norm in ("broken_1h", "cip_2h"):
            kw["gamma"] = cfg.resolved_gamma
        if norm == "h1_kappa":
            kw["kappa"] = cfg.kappa
        return kw

    def error(self, x_t: np.ndarray) -> float:
        """Error of an enriched-space vector (reduced numbering)."""
        return error_norm(self.dm_t, self.dm_t.expand(x_t), self.exact, **self.norm_kwargs)

    def error_coarse(self) -> float:
        return error_norm(self.dm, self.dm.expand(self.u_h), self.exact, **self.norm_kwargs)

    @property
    def u_t(self) -> np.ndarray:
        """Enriched discrete solution (diagnostics only)."""
        if self._u_t is None:
            self._u_t = exact_solve(self.A_t, self.f_t)
        return self._u_t

    def smoother(self, spec: SmootherSpec):
        patches = build_patches(self.mesh, self.dm_t) if spec.is_block else None
        hx = None
        if spec.kind == "hx":
            lag = build_dofmap(self.mesh, SpaceSpec("lagrange", self.dm_t.spec.degree, 3, dirichlet=False))
            _, hx = build_hx(self.dm_t, lag, self.A_t, lagrange_h1_matrix(lag))
        return make_smoother(spec, self.A_t, patches=patches, hx=hx)


def build_level(cfg: ExperimentConfig, mesh) -> LevelSystem:
    cs, fs = spaces_for(cfg)
    form = form_for(cfg)
    exact = exact_for(cfg)
    dm = build_dofmap(mesh, cs)
    dm_t = build_dofmap(mesh, fs)
    A_t = assemble_matrix(form, dm_t)
    f_t = assemble_rhs(form, exact, dm_t)
    iota = sp.csr_matrix(prolongation(dm, dm_t))[dm_t.free][:, dm.free]
    # the coarse load is the restriction of the enriched one, so f~ restricted to V is f exactly
    b = iota.T @ f_t
    A = assemble_matrix(form, dm)
    u_h = exact_solve(A, b)
    return LevelSystem(cfg, mesh, dm, dm_t, A, b, A_t, f_t, iota, u_h, exact)


# -- orders and tables -------------------------------------------------------

def compute_orders(errors: Sequence[float], scales: Sequence[float]):
    """Per-step orders and the least-squares slope over the last min(4, n) levels."""
    e = np.asarray(errors, dtype=float)
    s = np.asarray(scales, dtype=float)
    if e.size < 2 or e.size != s.size:
        raise ValueError("need at least two matching errors and scales")
    if np.any(~(e > 0)) or np.any(~(s > 0)):
        raise ValueError("errors and scales must be positive")
    per_step = np.log(e[:-1] / e[1:]) / np.log(s[:-1] / s[1:])
    n = min(4, e.size)
    slope = np.polyfit(np.log(s[-n:]), np.log(e[-n:]), 1)[0]
    return per_step, float(slope)


def _fit_or_nan(col, scales):
    ok = np.isfinite(col) & (col > 0)
    if ok.sum() < 2:
        return np.array([]), float("nan")
    return compute_orders(col[ok], np.asarray(scales)[ok])


@dataclass
class ConvergenceTable:
    case: str
    smoother: str
    method: str
    m: tuple
    scales: list = field(default_factory=list)
    errors: list = field(default_factory=list)  # one list per level, aligned with m
    failures: dict = field(default_factory=dict)
    timings: list = field(default_factory=list)
    scale_kind: str = "h"

    def column(self, m) -> np.ndarray:
        j = list(self.m).index(m)
        return np.array([row[j] for row in self.errors])

    def orders(self, m):
        return _fit_or_nan(self.column(m), self.scales)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(",".join(["h_or_ndof"] + [f"m{v}" for v in self.m]) + "\n")
        for s, row in zip(self.scales, self.errors):
            out.write(",".join([f"{s:.6g}"] + [f"{v:.6g}" for v in row]) + "\n")
        fits = [self.orders(v)[1] for v in self.m]
        out.write(",".join(["order"] + [f"{v:.6g}" for v in fits]) + "\n")
        return out.getvalue()


def run_experiment(cfg: ExperimentConfig, log=None) -> ConvergenceTable:
    spec = cfg.smoother_spec
    method = cfg.resolved_method
    if method == "gmres" and cfg.case != "helmholtz_square":
        raise ConfigError("gmres smoothing is reserved for the Helmholtz case")
    table = ConvergenceTable(cfg.case, cfg.smoother, method, tuple(cfg.m))
    for i, level in enumerate(cfg.levels):
        t0 = time.perf_counter()
        h = 2.0 ** (-level)
        try:
            mesh = mesh_for(cfg, i, level)
            if cfg.case.endswith("_gmsh"):
                h = float(np.max(np.linalg.norm(
                    mesh.vertices[mesh.edges[:, 0]] - mesh.vertices[mesh.edges[:, 1]], axis=1)))
            sysl = build_level(cfg, mesh)
            S = sysl.smoother(spec) if any(v > 0 for v in cfg.m) else None
            row = []
            for mv in cfg.m:
                if mv == 0:
                    row.append(sysl.error_coarse())
                    continue
                x = smooth_postprocess(sysl.u_h, PostprocessConfig(method, int(mv)), sysl.A_t, sysl.f_t,
                                       sysl.iota, S)
                row.append(sysl.error(x))
        except Exception as exc:  # a failing level is recorded, the run continues
            table.failures[level] = f"{type(exc).__name__}: {exc}"
            row = [float("nan")] * len(cfg.m)
        table.scales.append(h)
        table.errors.append(row)
        table.timings.append(time.perf_counter() - t0)
        if log:
            log(f"level {level}: " + " ".join(f"{v:.4e}" for v in row) + f" ({table.timings[-1]:.1f}s)")
    return table


# -- config files ------------------------------------------------------------

def parse_levels(text: str) -> tuple:
    text = text.strip()
    if ".." in text:
        a, b = text.split("..")
        return tuple(range(int(a), int(b) + 1))
    return tuple(int(v) for v in text.split(",") if v.strip())


def parse_list(text: str, cast=int) -> tuple:
    return tuple(cast(v) for v in text.split(",") if v.strip())


def parse_pair(text: str) -> int:
    """'P1P2' or 'Nd1Nd2' -> 1."""
    import re

    mt = re.fullmatch(r"(?:P|Nd|DG)(\d)(?:P|Nd|DG)(\d)", text.strip(), flags=re.IGNORECASE)
    if not mt or int(mt.group(2)) != int(mt.group(1)) + 1:
        raise ConfigError(f"bad degree pair {text!r}; expected e.g. P1P2 or Nd1Nd2")
    return int(mt.group(1))


_KEYS = {"pair", "k", "smoother", "method", "m", "levels", "gamma", "kappa", "omega", "theta",
         "max_iters", "mesh_files", "norm", "seed", "out"}


def load_configs(text: str) -> list[tuple[ExperimentConfig, Optional[str]]]:
    """Parse an INI-style file; each section names a case (``[poisson_hex]`` or
    ``[poisson_hex.gs]`` for several runs of one case)."""
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    out = []
    for sec in cp.sections():
        case = sec.split(".")[0]
        kv = dict(cp[sec])
        unknown = set(kv) - _KEYS
        if unknown:
            raise ConfigError(f"[{sec}] unknown keys: {sorted(unknown)}")
        args = {"case": case}
        if "pair" in kv:
            args["k"] = parse_pair(kv["pair"])
        if "k" in kv:
            args["k"] = int(kv["k"])
        for key in ("smoother", "method", "norm"):
            if key in kv:
                args[key] = kv[key]
        if "m" in kv:
            args["m"] = parse_list(kv["m"])
        if "levels" in kv:
            args["levels"] = parse_levels(kv["levels"])
        for key in ("gamma", "kappa", "omega", "theta"):
            if key in kv:
                args[key] = _parse_float(kv[key])
        for key in ("max_iters", "seed"):
            if key in kv:
                args[key] = int(kv[key])
        if "mesh_files" in kv:
            args["mesh_files"] = tuple(v.strip() for v in kv["mesh_files"].split(",") if v.strip())
        out.append((ExperimentConfig(**args), kv.get("out")))
    return out


def _parse_float(text: str) -> float:
    """Floats, optionally written as multiples of pi (``10pi``, ``pi``)."""
    t = text.strip().lower().replace("*", "")
    if t.endswith("pi"):
        coef = t[:-2]
        return (float(coef) if coef else 1.0) * math.pi
    return float(t)


def with_levels(cfg: ExperimentConfig, levels) -> ExperimentConfig:
    return replace(cfg, levels=tuple(levels))
