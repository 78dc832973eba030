import math

import numpy as np
import pytest

from smoothsc.cli import main
from smoothsc.harness import (ConfigError, ExperimentConfig, compute_orders, load_configs, parse_levels,
                              parse_list, parse_pair, run_experiment)
from smoothsc.mesh import jittered_delaunay, write_msh


def test_compute_orders_examples():
    per, fit = compute_orders([4, 1], [1, 0.5])
    assert per[0] == pytest.approx(2.0) and fit == pytest.approx(2.0)
    assert compute_orders([1, 1, 1], [1, 0.5, 0.25])[1] == pytest.approx(0.0)
    rng = np.random.default_rng(0)
    h = 2.0 ** -np.arange(2, 8)
    e = h**2 * (1 + 0.01 * rng.uniform(-1, 1, h.size))
    assert compute_orders(e, h)[1] == pytest.approx(2.0, abs=0.05)
    with pytest.raises(ValueError):
        compute_orders([1, 0], [1, 0.5])


def test_parsers():
    assert parse_levels("2..5") == (2, 3, 4, 5)
    assert parse_levels("1,3") == (1, 3)
    assert parse_list("0,1, 2") == (0, 1, 2)
    assert parse_pair("P2P3") == 2 and parse_pair("Nd1Nd2") == 1
    with pytest.raises(ConfigError):
        parse_pair("P1P3")


def test_config_grammar():
    text = """
[helmholtz_square.big]
pair = P1P2
smoother = jacobi_gmres
kappa = 10pi
m = 0,4
levels = 2..3
out = h.csv
"""
    ((cfg, out),) = load_configs(text)
    assert cfg.case == "helmholtz_square" and cfg.kappa == pytest.approx(10 * math.pi)
    assert cfg.m == (0, 4) and cfg.levels == (2, 3) and out == "h.csv"
    assert cfg.resolved_method == "gmres"
    with pytest.raises(ConfigError):
        load_configs("[poisson_hex]\ncolour = red\n")
    with pytest.raises(ConfigError):
        load_configs("not an ini file")


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig("poisson_moon")
    with pytest.raises(ConfigError):
        ExperimentConfig("poisson_gmsh")  # needs mesh files


def test_gmres_reserved_for_helmholtz():
    with pytest.raises(ConfigError):
        run_experiment(ExperimentConfig("poisson_hex", smoother="jacobi_gmres", m=(1,), levels=(1,)))


def test_failed_level_recorded(tmp_path):
    bad = tmp_path / "bad.msh"
    bad.write_text("garbage\n")
    good = tmp_path / "good.msh"
    good.write_text(write_msh(jittered_delaunay("hexagon", 0.25, 0)))
    cfg = ExperimentConfig("poisson_gmsh", smoother="cg", m=(0, 1), levels=(1, 2),
                           mesh_files=(str(bad), str(good)))
    t = run_experiment(cfg)
    assert 1 in t.failures and np.all(np.isnan(t.errors[0]))
    assert np.all(np.isfinite(t.errors[1]))


def test_cli_table_smoke(capsys):
    rc = main(["table", "--case", "poisson_hex", "--pair", "P1P2", "--smoother", "cg", "--m", "1,2,3",
               "--levels", "2..5"])
    out = capsys.readouterr().out.strip().splitlines()
    assert rc == 0
    assert out[0] == "h_or_ndof,m1,m2,m3"
    assert len(out) == 6 and out[-1].startswith("order,")
    assert out[1].split(",")[0] == "0.25"


def test_cli_reproducible_csv(tmp_path):
    args = ["table", "--case", "poisson_square_threeline", "--pair", "P1P2", "--smoother", "sgs", "--m", "0,2",
            "--levels", "2..4"]
    main([*args, "--out", str(tmp_path / "a.csv")])
    main([*args, "--out", str(tmp_path / "b.csv")])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_cli_run_config(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[dg_poisson]\npair = DG1DG2\nsmoother = block_jacobi_pcg\nm = 0,2\nlevels = 2..3\nout = dg.csv\n")
    assert main(["run", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "dg.csv").read_text().startswith("h_or_ndof,m0,m2")


def test_cli_errors(capsys):
    assert main(["run", "--config", "missing.toml"]) == 2
    assert main(["--bogus"]) == 2
    assert main(["table", "--pair", "P1P5"]) == 2


def test_cli_spectrum(capsys):
    assert main(["spectrum", "--case", "poisson_square_threeline", "--smoother", "gs_symmetric", "--level", "4"]) == 0
    out = capsys.readouterr().out
    lam = float(out.split("=")[1].split()[0])
    assert 0.5 < lam <= 1 + 1e-8


def test_cli_decay_and_adapt(tmp_path):
    assert main(["decay", "--level", "3", "--K", "5", "--out", str(tmp_path / "d.csv")]) == 0
    lines = (tmp_path / "d.csv").read_text().splitlines()
    assert lines[0] == "k,ratio" and lines[1] == "0,1" and len(lines) == 7
    assert main(["adapt", "--iters", "3", "--out", str(tmp_path / "a.csv")]) == 0
    assert len((tmp_path / "a.csv").read_text().splitlines()) == 4


def test_cli_dump_matrix(tmp_path):
    rc = main(["table", "--case", "poisson_hex", "--m", "0", "--levels", "1", "--dump-matrix", str(tmp_path),
               "--out", str(tmp_path / "t.csv")])
    assert rc == 0
    assert (tmp_path / "poisson_hex_L1_V.mtx").exists() and (tmp_path / "poisson_hex_L1_Vt.mtx").exists()
