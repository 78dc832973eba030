"""Command line interface: ``python -m smoothsc <command> ...``.

Commands
--------
run       run every section of a config file
table     one convergence table (errors per level and m, order row)
decay     energy-error decay curve of the smoothing iteration
adapt     adaptive loop on the L-shaped domain
spectrum  lambda_max(S A) estimate for a smoother
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .harness import (SMOOTHER_ALIASES, ConfigError, ExperimentConfig, build_level, load_configs,
                      mesh_for, parse_levels, parse_list, parse_pair, run_experiment)
from .linalg import lambda_max, write_matrix_market


def _float(text):
    from .harness import _parse_float

    return _parse_float(text)


def _common(p, m_default="1,2,3", levels_default="2..5"):
    p.add_argument("--case", default="poisson_hex")
    p.add_argument("--pair", default="P1P2", help="degree pair, e.g. P1P2, P2P3, Nd1Nd2")
    p.add_argument("--smoother", default="cg",
                   help=f"smoother kind or alias ({', '.join(SMOOTHER_ALIASES)})")
    p.add_argument("--method", choices=("fixed_point", "fp", "pcg", "gmres"))
    p.add_argument("--m", default=m_default, help="comma-separated step counts")
    p.add_argument("--levels", default=levels_default, help="a..b or comma list")
    p.add_argument("--gamma", type=_float)
    p.add_argument("--kappa", type=_float, default=math.pi, help="wave number, e.g. 10pi")
    p.add_argument("--omega", type=float)
    p.add_argument("--norm", help="override the case's error norm")
    p.add_argument("--mesh-files", default="", help="comma-separated .msh files, one per level")
    p.add_argument("--out", help="CSV output path (default: stdout)")


def _parser():
    ap = argparse.ArgumentParser(prog="smoothsc", description="Smoothing-based superconvergence experiments.")
    ap.add_argument("--seed", type=int, default=0, help="seed for randomized diagnostics")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run all sections of a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", default=".")

    p = sub.add_parser("table", help="convergence table for one case and smoother")
    _common(p)
    p.add_argument("--dump-matrix", metavar="DIR", help="write V and enriched matrices (Matrix Market)")

    p = sub.add_parser("decay", help="energy-error decay of the smoothing iteration")
    _common(p)
    p.set_defaults(case="poisson_square_threeline", smoother="gs")
    p.add_argument("--level", type=int, default=5)
    p.add_argument("--K", type=int, default=20, help="number of steps")

    p = sub.add_parser("adapt", help="adaptive loop on the L-shaped domain")
    p.add_argument("--pair", default="P1P2")
    p.add_argument("--smoother", default="cg")
    p.add_argument("--method", choices=("fixed_point", "fp", "pcg"))
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--iters", type=int, default=40)
    p.add_argument("--initial-level", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("spectrum", help="power-iteration estimate of lambda_max(S A)")
    _common(p)
    p.add_argument("--level", type=int, default=3)
    p.add_argument("--iters", type=int, default=200)
    return ap


def _method(text):
    return {"fp": "fixed_point"}.get(text, text)


def _cfg_from(args, levels=None) -> ExperimentConfig:
    return ExperimentConfig(
        case=args.case, k=parse_pair(args.pair), smoother=args.smoother, method=_method(args.method),
        m=parse_list(args.m), levels=levels if levels is not None else parse_levels(args.levels),
        gamma=args.gamma, kappa=args.kappa, omega=args.omega, norm=args.norm,
        mesh_files=tuple(v for v in args.mesh_files.split(",") if v), seed=args.seed)


def _emit(text: str, out):
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _log(msg):
    print(msg, file=sys.stderr)


def _cmd_table(args) -> int:
    cfg = _cfg_from(args)
    if args.dump_matrix:
        _dump(cfg, Path(args.dump_matrix))
    table = run_experiment(cfg, log=_log)
    _emit(table.to_csv(), args.out)
    for level, msg in table.failures.items():
        _log(f"level {level} failed: {msg}")
    return 1 if table.failures else 0


def _dump(cfg, outdir: Path):
    outdir.mkdir(parents=True, exist_ok=True)
    for i, level in enumerate(cfg.levels):
        s = build_level(cfg, mesh_for(cfg, i, level))
        write_matrix_market(outdir / f"{cfg.case}_L{level}_V.mtx", s.A)
        write_matrix_market(outdir / f"{cfg.case}_L{level}_Vt.mtx", s.A_t)


def _cmd_run(args) -> int:
    path = Path(args.config)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    status = 0
    for cfg, out in load_configs(path.read_text()):
        if cfg.case == "adaptive_lshape":
            from .adaptivity import adapt_loop, records_to_csv

            text = records_to_csv(adapt_loop(cfg, m=max(cfg.m), log=_log))
        else:
            table = run_experiment(cfg, log=_log)
            text = table.to_csv()
            status |= bool(table.failures)
        _emit(text, str(Path(args.out_dir) / out) if out else None)
    return status


def _cmd_decay(args) -> int:
    from .postprocess import smoothing_decay

    cfg = _cfg_from(args, levels=(args.level,))
    s = build_level(cfg, mesh_for(cfg, 0, args.level))
    S = s.smoother(cfg.smoother_spec)
    curve = smoothing_decay(s.A_t, s.f_t, s.iota @ s.u_h, S, cfg.resolved_method, args.K, s.u_t)
    lines = ["k,ratio"] + [f"{k},{v:.6g}" for k, v in enumerate(curve)]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_adapt(args) -> int:
    from .adaptivity import adapt_loop, records_to_csv, tail_orders

    cfg = ExperimentConfig("adaptive_lshape", k=parse_pair(args.pair), smoother=args.smoother,
                           method=_method(args.method), theta=args.theta, m=(args.m,), seed=args.seed)
    records = adapt_loop(cfg, args.iters, m=args.m, initial_level=args.initial_level, log=_log)
    _emit(records_to_csv(records), args.out)
    if len(records) >= 3:
        orders = tail_orders(records)
        _log("tail orders (ndof^-1/2): " + ", ".join(f"{k}={v:.3f}" for k, v in orders.items()))
    return 0


def _cmd_spectrum(args) -> int:
    cfg = _cfg_from(args, levels=(args.level,))
    s = build_level(cfg, mesh_for(cfg, 0, args.level))
    S = s.smoother(cfg.smoother_spec)
    lam = lambda_max(S, s.A_t, iters=args.iters, seed=args.seed)
    print(f"lambda_max(S A) = {lam:.10f}  (smoother {cfg.smoother_spec.kind}, "
          f"case {cfg.case}, level {args.level}, n = {s.A_t.shape[0]})")
    return 0


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    np.random.seed(args.seed)
    handlers = {"run": _cmd_run, "table": _cmd_table, "decay": _cmd_decay, "adapt": _cmd_adapt,
                "spectrum": _cmd_spectrum}
    try:
        return handlers[args.command](args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # report, do not dump a traceback at the user
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
