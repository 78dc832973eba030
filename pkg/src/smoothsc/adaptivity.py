"""Adaptive loop driven by the smoothing estimator eta_h = |R_m u_h - u_h|_1."""
from __future__ import annotations

import io
from dataclasses import dataclass, replace

import numpy as np

from .harness import SMOOTHER_ALIASES, ExperimentConfig, build_level, compute_orders
from .mesh import bisect, generate_structured
from .postprocess import PostprocessConfig, smooth_postprocess
from .quadrature import make_quadrature


class AdaptivityError(ValueError):
    pass


def cell_h1_sq(dm, coeffs_full: np.ndarray) -> np.ndarray:
    """Per-cell squared H^1 seminorm of a finite element function."""
    mesh, el = dm.mesh, dm.element
    q = make_quadrature(mesh.dim, 2 * el.degree)
    G = el.grads(q.points)  # (nq, nb, d)
    c = coeffs_full[dm.cell_dofs]
    g = np.einsum("cb,qbj->cqj", c, G)
    g = np.einsum("cji,cqj->cqi", mesh.inv_jacobians, g)
    return np.abs(mesh.det) * np.einsum("q,cqi->c", q.weights, np.abs(g) ** 2)


def estimate(dm_t, diff_full: np.ndarray):
    """eta_h and per-cell eta_T for the enriched-space difference R_m u_h - iota u_h."""
    eta_t = np.sqrt(cell_h1_sq(dm_t, diff_full))
    return float(np.sqrt(np.sum(eta_t**2))), eta_t


def dorfler_mark(indicators, theta: float) -> np.ndarray:
    """Smallest set whose squared indicators reach theta^2 of the total.

    Cells are taken by decreasing indicator, ties by ascending index.
    """
    if not 0 < theta <= 1:
        raise AdaptivityError("theta must lie in (0, 1]")
    eta2 = np.asarray(indicators, dtype=float) ** 2
    total = eta2.sum()
    if total == 0:
        return np.zeros(0, dtype=np.int64)
    order = np.lexsort((np.arange(eta2.size), -eta2))
    csum = np.cumsum(eta2[order])
    # guard against round-off at theta = 1
    n = int(np.searchsorted(csum, theta**2 * total * (1 - 1e-14)) + 1)
    marked = order[:min(n, eta2.size)]
    if theta == 1:
        marked = marked[eta2[marked] > 0]
    return np.sort(marked)


@dataclass
class AdaptiveRecord:
    iteration: int
    ndof: int
    eta: float
    err_u: float
    err_rm: float

    @property
    def effectivity(self) -> float:
        return self.eta / self.err_u if self.err_u > 0 else float("nan")


def adapt_loop(cfg: ExperimentConfig, max_iters: int | None = None, m: int = 4, initial_level: int = 0,
               log=None) -> list[AdaptiveRecord]:
    """Solve, smooth, estimate, mark and bisect; one record per iteration."""
    if cfg.case != "adaptive_lshape" and cfg.case not in ("poisson_square_threeline", "poisson_hex"):
        raise AdaptivityError("adaptivity is provided for 2D Poisson cases")
    from .harness import CASE_INFO

    iters = max_iters if max_iters is not None else cfg.max_iters
    mesh = generate_structured(CASE_INFO[cfg.case].domain, initial_level)
    spec = cfg.smoother_spec
    method = cfg.resolved_method
    records = []
    for it in range(1, iters + 1):
        sysl = build_level(cfg, mesh)
        S = sysl.smoother(spec)
        r = smooth_postprocess(sysl.u_h, PostprocessConfig(method, m), sysl.A_t, sysl.f_t, sysl.iota, S)
        diff = sysl.dm_t.expand(r - sysl.iota @ sysl.u_h)
        eta, eta_t = estimate(sysl.dm_t, diff)
        rec = AdaptiveRecord(it, sysl.dm.nfree, eta, sysl.error_coarse(), sysl.error(r))
        records.append(rec)
        if log:
            log(f"iter {it}: ndof={rec.ndof} eta={eta:.4e} err_u={rec.err_u:.4e} "
                f"err_Rm={rec.err_rm:.4e} eff={rec.effectivity:.4f}")
        if it < iters:
            mesh = bisect(mesh, dorfler_mark(eta_t, cfg.theta))
    return records


def records_to_csv(records) -> str:
    out = io.StringIO()
    out.write("iter,ndof,eta,err_u,err_Rm,effectivity\n")
    for r in records:
        out.write(f"{r.iteration},{r.ndof},{r.eta:.6g},{r.err_u:.6g},{r.err_rm:.6g},{r.effectivity:.6g}\n")
    return out.getvalue()


def tail_orders(records, last: int = 20) -> dict:
    """Least-squares rates against ndof^{-1/2} over the last ``last`` iterations."""
    tail = [r for r in records[-last:] if r.ndof > 0]
    scale = np.array([r.ndof for r in tail], dtype=float) ** -0.5

    def fit(vals):
        v = np.array(vals)
        ok = v > 0
        if ok.sum() < 2 or np.unique(scale[ok]).size < 2:
            return float("nan")
        return float(np.polyfit(np.log(scale[ok]), np.log(v[ok]), 1)[0])

    return {"eta": fit([r.eta for r in tail]), "err_u": fit([r.err_u for r in tail]),
            "err_Rm": fit([r.err_rm for r in tail])}
