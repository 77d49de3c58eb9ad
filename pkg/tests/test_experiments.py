import json

import numpy as np
import pytest

import platelab as pl
from platelab import assembly, experiments
from platelab.cli import cli_main
from platelab.errors import ConfigError

BASE_CFG = """\
[domain]
kind = disk
radius = 1.0

[operator]
kind = bilaplacian

[grid]
h = 0.0625

[spectral]
m = 3
tol = 1e-8

[sweeps]
alphas = 0.25
eps = 0.25

[run]
seed = 42
"""


def _write_cfg(tmp_path, text=BASE_CFG, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_load_config_roundtrip(tmp_path):
    cfg = experiments.load_config(_write_cfg(tmp_path))
    assert cfg.domain_kind == "disk"
    assert cfg.domain_params == {"radius": 1.0}
    assert cfg.operator_kind == "bilaplacian"
    assert cfg.h == 0.0625
    assert cfg.m == 3
    assert cfg.alphas == (0.25,)
    assert cfg.eps_list == (0.25,)
    assert cfg.seed == 42
    assert cfg.n_sweep == (8, 16)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        experiments.load_config(str(tmp_path / "nope.cfg"))


def test_load_config_eps_too_small(tmp_path):
    with pytest.raises(ConfigError):
        experiments.load_config(_write_cfg(
            tmp_path, BASE_CFG.replace("eps = 0.25", "eps = 0.1")))


def test_load_config_eps_exceeds_inradius(tmp_path):
    with pytest.raises(ConfigError):
        experiments.load_config(_write_cfg(
            tmp_path, BASE_CFG.replace("eps = 0.25", "eps = 1.5")))


def test_load_config_alpha_out_of_range(tmp_path):
    with pytest.raises(ConfigError):
        experiments.load_config(_write_cfg(
            tmp_path, BASE_CFG.replace("alphas = 0.25", "alphas = 1.25")))


def test_load_config_unknown_domain(tmp_path):
    with pytest.raises(ConfigError):
        experiments.load_config(_write_cfg(
            tmp_path, BASE_CFG.replace("kind = disk", "kind = torus")))


def test_make_coeffs_kinds():
    assert experiments.make_coeffs("bilaplacian", {}).kind == "bilaplacian"
    c = experiments.make_coeffs("product", {"b00": 4.0, "b11": 1.0})
    assert pl.dual_metric(c, (0, 0), np.array([1.0, 0.0])) == pytest.approx(2.0)
    with pytest.raises(ConfigError):
        experiments.make_coeffs("mystery", {})


def test_fit_drift_exponent_exact_power_law():
    eps = np.array([0.05, 0.1, 0.2, 0.4])
    drift = 3.0 * eps**1.7
    floor = np.zeros_like(eps)
    assert experiments.fit_drift_exponent(eps, drift, floor) == pytest.approx(
        1.7, abs=1e-12)


def test_fit_drift_exponent_needs_two_points():
    eps = np.array([0.1, 0.2])
    drift = np.array([1e-12, 1e-12])
    floor = np.array([1.0, 1.0])
    assert np.isnan(experiments.fit_drift_exponent(eps, drift, floor))


def test_cutoff_rayleigh_identity_when_tau_is_one():
    # spectrum on a small concentric disk, cutoff band of the big disk:
    # tau = 1 at every interior node, so the bound is the eigenvalue itself
    outer = pl.disk(1.0)
    inner = pl.erode(outer, 0.6)
    grid, mask = pl.build_grid(inner, 1.0 / 32)
    dist = pl.euclidean_from_sdf(outer, grid, mask)
    Q0 = assembly.assemble_Q0(grid, mask)
    mass = assembly.assemble_weighted(grid, mask, None, "mass", 0.0, 1)
    spec = pl.lowest_eigenpairs(Q0, mass, m=3)
    cutoff = pl.build_cutoff(grid, dist, 0.15)
    bounds = experiments.cutoff_rayleigh_bound(spec, cutoff, Q0, mass, mask)
    assert np.allclose(bounds, spec.values, rtol=1e-10)


def test_erosion_study_rows_and_ball_law(disk32):
    report = experiments.run_erosion_study(
        disk32.domain, pl.bilaplacian(), disk32.h, 2, [0.125, 0.25],
        grid=disk32.grid, mask=disk32.mask, Q=disk32.Q0, mass=disk32.mass)
    assert len(report.rows) == 4
    for r in report.rows:
        assert r.drift > 0
        assert r.lam_tilde <= r.rayleigh_upper * (1 + 1e-10)
        assert np.isfinite(r.ball_law_error)
    assert set(report.fitted_exponent) == {1, 2}


def test_erosion_study_rejects_thin_eps(disk32):
    with pytest.raises(ConfigError):
        experiments.run_erosion_study(
            disk32.domain, pl.bilaplacian(), disk32.h, 1, [2.0 * disk32.h],
            grid=disk32.grid, mask=disk32.mask, Q=disk32.Q0, mass=disk32.mass)


def test_stability_csv_header_and_reproducibility(tmp_path, disk32):
    report = experiments.run_erosion_study(
        disk32.domain, pl.bilaplacian(), disk32.h, 1, [0.25],
        grid=disk32.grid, mask=disk32.mask, Q=disk32.Q0, mass=disk32.mass)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    report.to_csv(p1)
    report2 = experiments.run_erosion_study(
        disk32.domain, pl.bilaplacian(), disk32.h, 1, [0.25],
        grid=disk32.grid, mask=disk32.mask, Q=disk32.Q0, mass=disk32.mass)
    report2.to_csv(p2)
    b1, b2 = p1.read_bytes(), p2.read_bytes()
    assert b1 == b2
    header = b1.split(b"\n", 1)[0].decode()
    assert header == "n,eps,lambda,lambda_tilde,drift,rayleigh_upper,ball_law_error"


def test_cli_spectrum_success(tmp_path, capsys):
    cfg = _write_cfg(tmp_path)
    out = tmp_path / "out"
    code = cli_main(["spectrum", "--config", cfg, "--out", str(out)])
    assert code == 0
    lines = (out / "spectrum.csv").read_text().strip().split("\n")
    assert lines[0] == "index,value,residual"
    assert len(lines) == 4


def test_cli_config_error_exit_2(tmp_path, capsys):
    code = cli_main(["spectrum", "--config", str(tmp_path / "missing.cfg")])
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ConfigError"
    assert "missing.cfg" in err["message"]


def test_cli_unknown_subcommand_exit_2(tmp_path, capsys):
    code = cli_main(["frobnicate", "--config", "x"])
    assert code == 2
    assert json.loads(capsys.readouterr().err)["error"] == "ConfigError"


def test_cli_solver_failure_exit_3(tmp_path, capsys):
    # a grid far too coarse for the domain is a solver-stage failure
    tiny = BASE_CFG.replace("radius = 1.0", "radius = 0.05") \
                   .replace("eps = 0.25", "eps =")
    code = cli_main(["spectrum", "--config", _write_cfg(tmp_path, tiny)])
    assert code == 3
    assert json.loads(capsys.readouterr().err)["error"] == "GridTooCoarse"


def test_cli_decay_guards_blowup_alphas(tmp_path, capsys):
    cfg_text = BASE_CFG.replace("alphas = 0.25", "alphas = 0.6")
    cfg = _write_cfg(tmp_path, cfg_text)
    out = tmp_path / "out"
    code = cli_main(["decay", "--config", cfg, "--out", str(out)])
    assert code == 2
    assert json.loads(capsys.readouterr().err)["error"] == "ConfigError"
    code = cli_main(["decay", "--config", cfg, "--out", str(out),
                     "--allow-blowup"])
    assert code == 0
    lines = (out / "decay.csv").read_text().strip().split("\n")
    assert lines[0] == "alpha,n_reg,lhs,rhs,c_hat,flag"
    assert all(l.endswith("BLOWUP") for l in lines[1:])


def test_cli_erode_outputs(tmp_path):
    cfg = _write_cfg(tmp_path, BASE_CFG.replace("m = 3", "m = 1"))
    out = tmp_path / "out"
    code = cli_main(["erode", "--config", cfg, "--out", str(out)])
    assert code == 0
    payload = json.loads((out / "stability.json").read_text())
    assert "fitted_exponent" in payload and "hess_deps_bound" in payload
    lines = (out / "stability.csv").read_text().strip().split("\n")
    assert lines[0] == experiments.STABILITY_HEADER
    assert len(lines) == 2
