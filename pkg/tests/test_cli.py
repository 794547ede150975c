import csv
import json
import shutil

import numpy as np
import pytest

from kgmtorus.cli import (
    REPORT_COLUMNS,
    ConfigError,
    ExperimentConfig,
    apply_setting,
    cached_profile,
    main,
    read_config,
    run_experiment,
)
from kgmtorus.grid import load_field


@pytest.fixture(scope="module")
def profile_dir(tmp_path_factory):
    """Output dir holding the cached ground state, shot once for the module."""
    d = tmp_path_factory.mktemp("profile")
    cfg = ExperimentConfig(output_dir=d)
    cached_profile(cfg, cfg.params(0.5))
    return d


def fresh_out(tmp_path, profile_dir, name="out"):
    out = tmp_path / name
    shutil.copytree(profile_dir, out)
    return out


def tiny_config(out, **kw):
    cfg = ExperimentConfig(grid_n=16, eps_list=[0.7], seeds=[(0.0, 0.0, 0.0)], output_dir=out)
    cfg = apply_setting(cfg, "max_iters", "60")
    for k, v in kw.items():
        setattr(cfg, k, v)
    return cfg


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_empty_seed_list(tmp_path, profile_dir):
    out = fresh_out(tmp_path, profile_dir)
    assert run_experiment(tiny_config(out, seeds=[])) == 0
    assert (out / "report.csv").read_text() == ",".join(REPORT_COLUMNS) + "\n"


def test_single_row_report(tmp_path, profile_dir):
    out = fresh_out(tmp_path, profile_dir)
    assert run_experiment(tiny_config(out, emit_fields=True)) == 0
    rows = read_rows(out / "report.csv")
    assert len(rows) == 1
    assert tuple(rows[0].keys()) == REPORT_COLUMNS
    for col in REPORT_COLUMNS:
        assert rows[0][col] not in ("", "nan"), col
    summary = json.loads((out / "summary.json").read_text())
    assert summary["eps"] == [0.7]
    assert summary["m_inf"] > 0
    u, grid, eps = load_field(out / "field_eps0_seed0.kgmf", expected_n=16)
    assert eps == 0.7 and grid.n == 16
    assert float(rows[0]["peak_value"]) == u.max()


def test_rerun_is_byte_identical(tmp_path, profile_dir):
    reports = []
    for name in ("a", "b"):
        out = fresh_out(tmp_path, profile_dir, name)
        cfg = tiny_config(out, seeds=[(0.0, 0.0, 0.0), (1.5, 2.0, 0.5)], eps_list=[0.7, 0.6])
        run_experiment(cfg)
        reports.append((out / "report.csv").read_bytes())
    assert reports[0] == reports[1]


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text(
        "# sweep\n"
        "system = sm\n"
        "p = 5   # subcritical\n"
        "omega = 0.8\n"
        "eps_list = 0.4, 0.2\n"
        "grid_n = 32\n"
        "seeds = 0,0,0; 1,2,3\n"
        "max_iters = 7\n"
        "emit_fields = yes\n"
    )
    cfg = read_config(path)
    assert cfg.system == "SM" and cfg.p == 5.0 and cfg.eps_list == [0.4, 0.2]
    assert cfg.seed_points() == [(0.0, 0.0, 0.0), (1.0, 2.0, 3.0)]
    assert cfg.solver.max_iters == 7 and cfg.emit_fields
    cfg.validate()
    apply_setting(cfg, "seed_lattice", "2")
    assert len(cfg.seed_points()) == 8


@pytest.mark.parametrize("text", ["bogus = 1", "p = four", "seeds = 1,2", "just words"])
def test_config_errors(tmp_path, text):
    path = tmp_path / "bad.cfg"
    path.write_text(text + "\n")
    with pytest.raises(ConfigError):
        read_config(path)


@pytest.mark.parametrize("kw", [
    {"eps_list": [0.2, 0.4]},
    {"eps_list": [1.0]},
    {"eps_list": []},
    {"seed_lattice": 0, "seeds": None},
    {"grid_n": 15},
    {"omega": 3.0},
])
def test_validation_exit_code(tmp_path, kw):
    cfg = tiny_config(tmp_path / "o", **kw)
    assert run_experiment(cfg) == 2
    assert not (tmp_path / "o" / "report.csv").exists()


def test_failed_seed_gives_nonzero_exit(tmp_path, profile_dir):
    out = fresh_out(tmp_path, profile_dir)
    cfg = tiny_config(out, seeds=[(float("nan"), 0.0, 0.0), (0.0, 0.0, 0.0)])
    assert run_experiment(cfg) == 1
    rows = read_rows(out / "report.csv")
    assert [r["status"] for r in rows][0] == "Failed"
    assert len(rows) == 2


def test_main_run_and_profile(tmp_path, profile_dir, capsys):
    out = fresh_out(tmp_path, profile_dir)
    code = main(["run", "--grid-n", "16", "--eps-list", "0.7", "--seeds", "0,0,0",
                 "--max-iters", "5", "--out", str(out)])
    assert code == 0
    assert len(read_rows(out / "report.csv")) == 1
    prof = tmp_path / "u.txt"
    assert main(["profile", "--c0", "1", "--p", "4", "--out", str(prof)]) == 0
    assert "m_inf" in capsys.readouterr().out
    assert prof.read_text().startswith("# c0 = 1.0")
    assert main(["run", "--eps-list", "x", "--out", str(out)]) == 2
