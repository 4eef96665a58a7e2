import math
from pathlib import Path

import pytest

from basis_approx import config
from basis_approx.experiments_cli import ExperimentConfig, main
from basis_approx.errors import ConfigError
from basis_approx.greedy import greedy_bound_sq
from basis_approx.persist import read_csv, read_manifest

RANDOM_SMALL = 'family = "gaussian"\ngrid_size = 50\nn_steps = 5\n'
GREEDY_SMALL = "grid_size = 100\nn_steps = 5\n"
BLOWUP_SMALL = "grid_size = 100\nn_steps = 10\nsnapshot_steps = [5]\n"


def csv_bytes(directory):
    root = Path(directory)
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*.csv"))}


def run_random(tmp_path, write_toml, name, *extra):
    out = tmp_path / name
    cfg = write_toml(RANDOM_SMALL)
    assert main(["random", "--config", cfg, "--out", str(out), "--trials", "3", *extra]) == 0
    return out


def test_random_smoke(tmp_path, write_toml):
    out = run_random(tmp_path, write_toml, "run")
    for name in ("trials/trial_0000.csv", "trials/trial_0002.csv", "summary.csv", "manifest.json", "convergence.svg"):
        assert (out / name).exists()
    trace = read_csv(out / "trials/trial_0000.csv")
    assert list(trace.columns) == ["step", "raw_sq", "normalized", "bound_sq", "alpha", "cond"]
    assert len(trace) == 6
    assert trace["bound_sq"].isna().all()
    manifest = read_manifest(out / "manifest.json")
    assert manifest["seeds"] == [0, 1, 2]
    assert manifest["failures"] == []
    assert manifest["params"]["n_steps"] == 5


def test_parallel_and_serial_runs_match(tmp_path, write_toml):
    serial = run_random(tmp_path, write_toml, "serial", "--workers", "1")
    parallel = run_random(tmp_path, write_toml, "parallel", "--workers", "2")
    assert csv_bytes(serial) == csv_bytes(parallel)


def test_replay_reproduces_csvs(tmp_path, write_toml):
    out = run_random(tmp_path, write_toml, "run", "--seed", "41")
    again = tmp_path / "again"
    assert main(["replay", str(out / "manifest.json"), "--out", str(again)]) == 0
    assert csv_bytes(out) == csv_bytes(again)


@pytest.mark.parametrize("flag", [["--seed", "3"], ["--trials", "2"], ["--config", "x.toml"]])
def test_replay_rejects_run_settings(tmp_path, write_toml, flag):
    out = run_random(tmp_path, write_toml, "run")
    with pytest.raises(SystemExit) as exc:
        main(["replay", str(out / "manifest.json"), *flag])
    assert exc.value.code == 2
    assert not (out / "replay").exists()


def test_verify_random_run(tmp_path, write_toml, capsys):
    out = run_random(tmp_path, write_toml, "run")
    assert main(["verify", str(out)]) == 0
    report = capsys.readouterr().out
    assert "=== VERIFY RANDOM ===" in report
    assert "FAIL" not in report


def test_verify_detects_tampered_summary(tmp_path, write_toml):
    out = run_random(tmp_path, write_toml, "run")
    summary = out / "summary.csv"
    summary.write_text(summary.read_text(encoding="utf-8") + "9,9\n", encoding="utf-8")
    assert main(["verify", str(out)]) == 1


def test_greedy_run_and_verify(tmp_path, write_toml):
    out = tmp_path / "greedy"
    assert main(["greedy", "--config", write_toml(GREEDY_SMALL), "--out", str(out), "--trials", "2"]) == 0
    trace = read_csv(out / "trials/trial_0001.csv")
    assert trace["alpha"].iloc[0] == 0.0
    e0 = trace["raw_sq"].iloc[0]
    for step, raw in zip(trace["step"], trace["raw_sq"]):
        assert raw <= greedy_bound_sq(int(step), e0, config.M_DPRIME) + 1e-10
    assert main(["verify", str(out)]) == 0


def test_const_blowup_outputs(tmp_path, write_toml):
    out = tmp_path / "blowup"
    assert main(["const-blowup", "--config", write_toml(BLOWUP_SMALL), "--out", str(out), "--trials", "2"]) == 0
    snap = read_csv(out / "snapshots/trial_0000.csv")
    assert list(snap.columns) == ["x", "N=5"]
    assert len(snap) == 100
    signs = read_csv(out / "sign_changes.csv")
    assert signs["step"].tolist() == [5, 5]
    assert (out / "snapshots.svg").exists()
    assert main(["verify", str(out)]) == 0


def test_bounds_single_query(tmp_path, write_toml):
    out = tmp_path / "bounds"
    cfg = write_toml("n = [1000]\neps = [0.1]\ntheta = [0.1]\n")
    assert main(["bounds", "--config", cfg, "--out", str(out)]) == 0
    row = read_csv(out / "bounds.csv").iloc[0]
    assert row["conservative"] == pytest.approx(3.954, abs=1e-3)
    assert row["refined"] == pytest.approx(5.540, abs=1e-3)
    assert row["n_eval"] == 3
    assert main(["verify", str(out)]) == 0


def test_bounds_empty_grid(tmp_path, write_toml):
    out = tmp_path / "bounds"
    cfg = write_toml("n = []\neps = [0.1]\ntheta = [0.1]\n")
    assert main(["bounds", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "bounds.csv").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 1
    assert lines[0].startswith("n,eps,theta,conservative,refined")


def test_chains_table(tmp_path, write_toml):
    out = tmp_path / "chains"
    assert main(["chains", "--config", write_toml("n = [100]\n"), "--out", str(out), "--trials", "5"]) == 0
    lengths = read_csv(out / "chains.csv")
    assert len(lengths) == 5
    assert lengths["valid"].all()
    summary = read_csv(out / "summary.csv")
    assert summary["n"].tolist() == [100]
    assert summary["conservative"].iloc[0] == pytest.approx(
        math.exp(math.sin(0.037 * math.pi / 2) ** 2 * 25) * math.sqrt(math.log(1 / 0.9)), rel=1e-12
    )
    assert main(["verify", str(out)]) == 0


def test_angles_histogram(tmp_path, write_toml):
    out = tmp_path / "angles"
    assert main(["angles", "--config", write_toml("n = 2\ncount = 1000\nbins = 20\n"), "--out", str(out)]) == 0
    table = read_csv(out / "angles.csv")
    assert int(table["count"].sum()) == 1000
    assert len(table) == 20
    assert main(["verify", str(out)]) == 0


def test_flags_override_file(tmp_path, write_toml):
    out = tmp_path / "run"
    cfg = write_toml(RANDOM_SMALL + "trials = 4\nseed = 9\n")
    assert main(["random", "--config", cfg, "--out", str(out), "--trials", "1"]) == 0
    assert read_manifest(out / "manifest.json")["seeds"] == [9]


def test_unknown_key_exits_2(tmp_path, write_toml, capsys):
    cfg = write_toml("colour = 1\n")
    assert main(["random", "--config", cfg, "--out", str(tmp_path / "x")]) == 2
    assert "unknown keys" in capsys.readouterr().err


def test_invalid_value_exits_2(tmp_path, write_toml):
    cfg = write_toml('selection_rule = "best"\n')
    assert main(["greedy", "--config", cfg, "--out", str(tmp_path / "x")]) == 2


def test_unwritable_output_exits_1(tmp_path, write_toml):
    blocker = tmp_path / "file"
    blocker.write_text("x", encoding="utf-8")
    assert main(["random", "--config", write_toml(RANDOM_SMALL), "--out", str(blocker / "sub")]) == 1


def test_experiment_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(command="greedy", trials=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(command="chains", params={"tol": 2.0})
    with pytest.raises(ConfigError):
        ExperimentConfig(command="plot")
    cfg = ExperimentConfig(command="bounds", params={"n": [10]}, base_seed=3, trials=2)
    again = ExperimentConfig.from_manifest(cfg.to_manifest(), output_dir="elsewhere")
    assert again.params == cfg.params and again.seeds == [3, 4]
