import math

import numpy as np
import pytest

from sectorlab import cli
from sectorlab.analysis import Verdict, read_report
from sectorlab.config import DEFAULTS, ConfigError, RunConfig, eval_number, parse_overrides, read_meta
from sectorlab.discretization import read_field
from sectorlab.spectral import read_spectrum_csv


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_eval_number():
    assert eval_number("pi/2") == math.pi / 2
    assert eval_number("2*pi/3") == 2 * math.pi / 3
    assert eval_number("-1e-3") == -1e-3
    assert eval_number("2**3") == 8.0
    assert eval_number("inf") == math.inf
    for bad in ("__import__('os')", "pi/0", "2 +", "True", "[1]"):
        with pytest.raises(ConfigError):
            eval_number(bad)


def test_config_parsing_and_validation():
    cfg = RunConfig.from_text("# comment\ndomain.beta = pi/3  # trailing\ngrid.n_r = 16\n")
    assert cfg["domain.beta"] == math.pi / 3
    assert cfg["grid.n_r"] == 16 and cfg["grid.n_theta"] == 64
    assert cfg["output.plots"] is True
    assert cfg["split.alpha"] is None
    assert RunConfig.from_text(cfg.to_text()) == cfg
    with pytest.raises(ConfigError, match="unknown key"):
        RunConfig.from_text("grid.nr = 3\n")
    with pytest.raises(ConfigError, match=":1:"):
        RunConfig.from_text("no equals sign\n")
    with pytest.raises(ConfigError):
        RunConfig.from_text("grid.n_r = 2.5\n")
    with pytest.raises(ConfigError):
        RunConfig.from_text("problem.kind = quartic\n")
    with pytest.raises(ConfigError):
        RunConfig.from_text("output.plots = maybe\n")
    with pytest.raises(ConfigError):
        parse_overrides(["grid.n_r"])
    assert parse_overrides(["grid.n_r = 8"]) == {"grid.n_r": "8"}


def test_every_default_is_valid():
    cfg = RunConfig.build()
    for key in DEFAULTS:
        cfg[key]


def test_bessel_and_critical_angle(capsys, tmp_path):
    assert run("bessel", "--nu", 0, "--nu", 2, "--k-max", 2, "--csv", tmp_path / "z.csv") == 0
    lines = (tmp_path / "z.csv").read_text().splitlines()
    assert lines[0] == "nu,k,zero" and len(lines) == 5
    assert float(lines[2].split(",")[2]) == pytest.approx(5.5201, abs=5e-4)
    assert run("critical-angle") == 0
    assert "beta_hat = 1.362" in capsys.readouterr().out
    assert run("critical-angle", "--target", "2") == cli.EXIT_INPUT


def test_spectrum_outputs(tmp_path):
    out = tmp_path / "spec"
    assert run("spectrum", "--grid", 24, "--out", out, "--set", "solver.eig_m=3") == 0
    lam, res = read_spectrum_csv(out / "spectrum.csv")
    assert lam.size == 3 and np.all(res <= 1e-7)
    assert read_field(out / "eigenvector_1.field").grid.n_r == 24
    morse = (out / "morse.txt").read_text()
    assert "morse.index=0" in morse and "modes=(0,1) (1,1) (0,2)" in morse
    cat = (out / "catalog.csv").read_text().splitlines()
    assert cat[0].startswith("rank,n,k,exact") and len(cat) == 4
    assert cli.verify_manifest(out) == []


def test_solve_classify_rescale_pipeline(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("domain.beta = pi\ngrid.n_r = 20\ngrid.n_theta = 21\nproblem.alpha = 4\n")
    sol = tmp_path / "solve"
    assert run("solve", "--config", cfg, "--out", sol) == 0
    meta = read_meta(sol / "solution.meta")
    assert meta["problem.alpha"] == "4.0" and meta["morse.index"] == "1"
    assert (sol / "candidates.csv").read_text().startswith("start,energy")
    assert (sol / "solution.svg").read_text().startswith("<svg")

    cls = tmp_path / "classify"
    assert run("classify", sol / "solution.field", "--out", cls, "--set", "analysis.n_alpha=5") == 0
    rep = read_report(cls / "classification.txt")
    assert rep.verdict in (Verdict.STRICTLY_MONOTONE, Verdict.INCONSISTENT)
    assert len((cls / "sweep.csv").read_text().splitlines()) == 6
    assert "problem.alpha = 4.0" in (cls / "config.txt").read_text()

    rs = tmp_path / "rescale"
    assert run("rescale", sol / "solution.field", "--out", rs, "--target-beta", "pi/2") == 0
    rmeta = read_meta(rs / "rescaled.meta")
    assert float(rmeta["problem.weight"]) == pytest.approx((4 + 2) * 2 - 2)
    assert run("rescale", sol / "solution.field", "--out", rs, "--set", "rescale.max_residual=1e-12") == cli.EXIT_TOL


def test_newton_solve_with_eigen_start(tmp_path):
    out = tmp_path / "n"
    code = run(
        "solve", "--grid", 16, "--out", out,
        "--set", "problem.kind=linear", "--set", "problem.lambda=1", "--set", "problem.g_outer=1",
        "--set", "solver.method=newton",
    )
    assert code == 0
    assert (out / "trace.csv").read_text().startswith("iteration,residual")


def test_failed_solve_writes_failure(tmp_path):
    out = tmp_path / "f"
    code = run("solve", "--grid", 16, "--beta", "pi", "--out", out,
               "--set", "solver.method=newton", "--set", "solver.newton_max_iter=1")
    assert code == cli.EXIT_TOL
    assert (out / "failure.txt").read_text().startswith("error=")


def test_classify_expectation_and_sidecar_precedence(tmp_path):
    sol = tmp_path / "s"
    assert run("solve", "--grid", 16, "--beta", "pi", "--out", sol) == 0
    field = sol / "solution.field"
    assert run("classify", field, "--out", tmp_path / "c1", "--expect", "ThetaConstant") == 0
    assert run("classify", field, "--out", tmp_path / "c2", "--expect", "Inconsistent") == cli.EXIT_TOL
    # the sidecar says alpha = 0; an override wins over it
    u, cfg = cli.load_solution(field, ({"problem.alpha": "7"}, {}))
    assert cfg["problem.alpha"] == 0.0
    u, cfg = cli.load_solution(field, ({}, {"problem.alpha": "7"}))
    assert cfg["problem.alpha"] == 7.0


def test_splitting_check(tmp_path):
    out = tmp_path / "split"
    assert run("splitting-check", "--grid", 21, "--beta", "pi", "--out", out, "--set", "problem.kind=linear",
               "--set", "problem.lambda=-5") == 0
    txt = (out / "split.txt").read_text()
    assert "holds=True" in txt


def test_bad_input_exit_codes(tmp_path, capsys):
    assert run("spectrum", "--set", "grid.nr=3", "--out", tmp_path / "x") == cli.EXIT_INPUT
    assert run("classify", tmp_path / "missing.field", "--out", tmp_path / "x") == cli.EXIT_INPUT
    bad = tmp_path / "bad.field"
    bad.write_text("SECTOR 3 3\n")
    assert run("classify", bad, "--out", tmp_path / "x") == cli.EXIT_INPUT
    assert run("splitting-check", "--grid", 12, "--set", "split.alpha=4", "--out", tmp_path / "x") == cli.EXIT_INPUT
    assert "error:" in capsys.readouterr().err


def test_manifest_detects_tampering(tmp_path):
    out = tmp_path / "m"
    assert run("spectrum", "--grid", 12, "--out", out, "--set", "output.eigenvectors=false") == 0
    names = cli.read_manifest(out / "manifest.txt")
    assert set(names) == {"config.txt", "spectrum.csv", "morse.txt", "catalog.csv"}
    with open(out / "spectrum.csv", "a") as fh:
        fh.write("\n")
    assert cli.verify_manifest(out) == ["spectrum.csv"]
    (out / "manifest.txt").write_text("nonsense\n")
    with pytest.raises(ValueError):
        cli.read_manifest(out / "manifest.txt")


def test_reruns_are_byte_identical(tmp_path):
    args = ["solve", "--grid", 16, "--beta", "pi", "--set", "problem.alpha=2"]
    assert run(*args, "--out", tmp_path / "a") == 0
    assert run(*args, "--out", tmp_path / "b") == 0
    assert (tmp_path / "a" / "manifest.txt").read_bytes() == (tmp_path / "b" / "manifest.txt").read_bytes()
