import json
import os

import numpy as np
import pytest

from glopt.cli import main as cli_main
from glopt.harness import (CSV_COLUMNS, ExperimentConfig, cli_compare,
                           cli_lower_bound, cli_run, parse_config, parse_seeds,
                           run_cell)

CONFIG_TEXT = """
# comment lines are ignored
problem = exp_inf{d=1}
optimizers = adamw_exp, sgd_const
seeds = 0..2
eps = 0.1
schedule = two_stage
c_hat = 2
k_override = 50
"""


def test_parse_seeds():
    assert parse_seeds("0..4") == [0, 1, 2, 3, 4]
    assert parse_seeds("1,5,9") == [1, 5, 9]


def test_parse_config():
    cfg = parse_config(CONFIG_TEXT)
    assert cfg.problem == "exp_inf{d=1}"
    assert cfg.optimizers == ["adamw_exp", "sgd_const"]
    assert cfg.seeds == [0, 1, 2]
    assert cfg.k_override == 50


def test_parse_config_errors():
    with pytest.raises(ValueError, match="line 2"):
        parse_config("problem = x\nbad line\n")
    with pytest.raises(ValueError, match="problem"):
        parse_config("optimizer = sgd_const\n")
    with pytest.raises(ValueError, match="eps > 0"):
        parse_config("problem = exp_inf\noptimizer = sgd_const\neps = 0\n")


def test_run_writes_csvs_and_manifest(tmp_path):
    cfg = parse_config(CONFIG_TEXT)
    cfg.out = str(tmp_path / "runs")
    paths = cli_run(cfg)
    assert len(paths) == 6  # 2 optimizers x 3 seeds
    for p in paths:
        with open(p) as fh:
            header = fh.readline().strip()
        assert header == ",".join(CSV_COLUMNS)
    manifest = (tmp_path / "runs" / "manifest.txt").read_text()
    assert "problem = exp_inf{d=1}" in manifest
    assert "derived[" in manifest
    # every derived constant block parses as JSON
    for line in manifest.splitlines():
        if line.startswith("derived["):
            json.loads(line.split(" = ", 1)[1])


def test_rerun_is_byte_identical(tmp_path):
    cfg = parse_config(CONFIG_TEXT)
    cfg.out = str(tmp_path / "a")
    first = {os.path.basename(p): open(p, "rb").read() for p in cli_run(cfg)}
    m1 = (tmp_path / "a" / "manifest.txt").read_bytes()
    second = {os.path.basename(p): open(p, "rb").read() for p in cli_run(cfg)}
    assert first == second
    assert m1 == (tmp_path / "a" / "manifest.txt").read_bytes()


def test_parallel_matches_serial(tmp_path):
    cfg = parse_config(CONFIG_TEXT)
    cfg.k_override = 30
    cfg.out = str(tmp_path / "serial")
    serial = {os.path.basename(p): open(p, "rb").read() for p in cli_run(cfg)}
    cfg.out = str(tmp_path / "par")
    cfg.parallel = 3
    parallel = {os.path.basename(p): open(p, "rb").read() for p in cli_run(cfg)}
    assert serial == parallel


def test_rows_strictly_increasing_in_k(tmp_path):
    cfg = parse_config(CONFIG_TEXT)
    cfg.out = str(tmp_path / "runs")
    for p in cli_run(cfg):
        ks = [int(line.split(",")[2]) for line in open(p).read().splitlines()[1:]]
        assert ks == sorted(set(ks))


def test_invalid_eps_leaves_no_partial_files(tmp_path):
    out = tmp_path / "never"
    rc = cli_main(["run", "--problem", "exp_inf{d=1}", "--opt", "sgd_const",
                   "--eps", "0", "--out", str(out)])
    assert rc == 2
    assert not out.exists()


def test_cli_run_and_determinism_via_main(tmp_path):
    args = ["run", "--problem", "exp_inf{d=1}", "--opt", "adamw_exp",
            "--seeds", "0..1", "--eps", "0.2", "--c-hat", "2", "--k", "40"]
    assert cli_main(args + ["--out", str(tmp_path / "x")]) == 0
    snapshot = {n: (tmp_path / "x" / n).read_bytes() for n in os.listdir(tmp_path / "x")}
    assert cli_main(args + ["--out", str(tmp_path / "x")]) == 0
    for name, before in snapshot.items():
        assert (tmp_path / "x" / name).read_bytes() == before


def test_run_cell_conversion_ids():
    cfg = ExperimentConfig(problem="exp_inf{d=1}", optimizers=["conv:avg:solo_scalar"],
                           seeds=[0], k_override=25, eps=0.2)
    run_id, csv_text, derived = run_cell(cfg.to_dict(), "conv:avg:solo_scalar", 0)
    assert "conv_avg_solo_scalar" in run_id
    assert len(csv_text.splitlines()) == 26
    assert derived["schedule"]["kind"] == "avg"


def test_cli_compare_single_row():
    cfg = ExperimentConfig(problem="exp_inf{d=1}", optimizers=["adamw_exp"],
                           seeds=[0, 1], eps=0.2, c_hat=2.0, k_override=400)
    rows = cli_compare(cfg)
    assert len(rows) == 1
    opt, hit, K, final = rows[0]
    assert opt == "adamw_exp" and hit is not None and final < 0.5


def test_cli_lower_bound_report():
    report = cli_lower_bound("sgd_I", R=1.0, G0=1.0, G1=8.0, eps=0.1,
                             K_max=3000, eta=0.5)
    sgd = report["methods"]["sgd_const"]
    adamw = report["methods"]["adamw_exp_two_stage"]
    assert sgd["hit_k"] is None  # trapped above the oscillation floor
    assert sgd["min_gap"] >= (1.0 / 8.0) * (np.exp(2.0) - 1.0) * (1 - 1e-9)
    assert adamw["hit_k"] is not None and adamw["hit_k"] <= report["adamw_K"]


def test_cli_verify_subcommand(tmp_path):
    out = tmp_path / "report.json"
    rc = cli_main(["verify", "--out", str(out), "--pairs", "300",
                   "--trials", "30", "--streams", "10"])
    assert rc == 0
    payload = json.loads(out.read_text())
    assert all(item["passed"] for item in payload)


def test_cli_sweep(tmp_path):
    rc = cli_main(["sweep", "--problem", "exp_inf{d=1}", "--opt", "sgd_const",
                   "--eps", "0.2", "--k", "20", "--out", str(tmp_path),
                   "--param", "eps", "--values", "0.2,0.4"])
    assert rc == 0
    assert (tmp_path / "eps=0.2" / "manifest.txt").exists()
    assert (tmp_path / "eps=0.4" / "manifest.txt").exists()


def test_env_var_overrides_out(tmp_path, monkeypatch):
    monkeypatch.setenv("GLOPT_OUT", str(tmp_path / "env_out"))
    cfg = ExperimentConfig(problem="exp_inf{d=1}", optimizers=["sgd_const"],
                           seeds=[0], eps=0.2, k_override=10)
    paths = cli_run(cfg)
    assert all(str(tmp_path / "env_out") in p for p in paths)
