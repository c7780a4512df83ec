import json
import math

import pytest

from evlg.cli import main
from evlg.experiment import ShotTable

BASE_CONFIG = {
    "seed": 321,
    "shots_per_arm": 1500,
    "wait_grid_us": [5.0, 120.0],
    "coherence": {"shape": "exponential", "tau_us": 130.0},
    "imperfections": {"prep_error": 0.0, "readout_error": 0.0, "t1_us": None},
    "estimators": {"n_bootstrap": 150, "n_monte_carlo": 150},
}


def write_config(tmp_path, overrides=None, drop=None, name="cfg.json"):
    cfg = json.loads(json.dumps(BASE_CONFIG))
    cfg.update(overrides or {})
    for key in drop or []:
        cfg.pop(key, None)
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def run(*argv):
    return main([str(a) for a in argv])


class TestConfigValidation:
    def test_missing_seed_exits_2_without_outputs(self, tmp_path):
        cfg = write_config(tmp_path, drop=["seed"])
        out = tmp_path / "out"
        assert run("lg-sweep", "--config", cfg, "--out-dir", out) == 2
        assert not out.exists()

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = write_config(tmp_path, overrides={"shotz": 5})
        assert run("lg-sweep", "--config", cfg, "--out-dir", tmp_path / "o") == 2
        assert "shotz" in capsys.readouterr().err

    def test_unknown_nested_key_rejected(self, tmp_path, capsys):
        cfg = write_config(tmp_path, overrides={"coherence": {"shape": "exponential", "tau": 1}})
        assert run("lg-sweep", "--config", cfg, "--out-dir", tmp_path / "o") == 2
        assert "coherence.tau" in capsys.readouterr().err

    def test_malformed_json_exits_2(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert run("lg-sweep", "--config", path, "--out-dir", tmp_path / "o") == 2

    def test_missing_file_exits_3(self, tmp_path):
        assert run("lg-sweep", "--config", tmp_path / "nope.json", "--out-dir", tmp_path / "o") == 3

    def test_bad_grid_rejected(self, tmp_path, capsys):
        cfg = write_config(tmp_path, overrides={"wait_grid_us": [5.0, 5.0]})
        assert run("lg-sweep", "--config", cfg, "--out-dir", tmp_path / "o") == 2
        assert "wait_grid_us" in capsys.readouterr().err

    def test_dichotomic_rejects_wrong_theta(self, tmp_path):
        cfg = write_config(tmp_path, overrides={"pulse": {"theta_rad": 1.0}})
        assert run("dichotomic", "--config", cfg, "--out-dir", tmp_path / "o") == 2


@pytest.fixture(scope="module")
def sweep(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("sweep")
    cfg = write_config(tmp)
    out = tmp / "out"
    assert run("lg-sweep", "--config", cfg, "--out-dir", out) == 0
    return tmp, cfg, out


class TestLgSweep:
    def test_outputs_exist(self, sweep):
        _, _, out = sweep
        for name in ("raw.csv", "summary.csv", "manifest.json"):
            assert (out / name).exists()

    def test_summary_values(self, sweep):
        _, _, out = sweep
        lines = (out / "summary.csv").read_text().splitlines()
        assert lines[0] == (
            "wait_us,K,sigma_bootstrap,sigma_mc,C,W,significance,"
            "K_theory_low,K_theory_high"
        )
        assert len(lines) == 3
        row = dict(zip(lines[0].split(","), (float(x) for x in lines[1].split(","))))
        expect_k = 1.0 + math.exp(-5.0 / 130.0)
        assert abs(row["K"] - expect_k) <= 5 * row["sigma_bootstrap"]
        assert abs(row["W"] - abs(row["K"] - 1.0)) < 1e-7  # both printed at 9 sig digits
        assert row["K_theory_low"] == pytest.approx(1.0 + math.exp(-5.0 / 75.0), rel=1e-8)
        assert row["K_theory_high"] == pytest.approx(1.0 + math.exp(-5.0 / 200.0), rel=1e-8)
        assert row["significance"] > 10.0

    def test_raw_table_loads(self, sweep):
        _, _, out = sweep
        table = ShotTable.read_csv(out / "raw.csv")
        assert len(table) == 3 * 1500 * 2

    def test_manifest_echoes_config(self, sweep):
        _, _, out = sweep
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "lg-sweep"
        assert manifest["seed"] == 321
        assert manifest["config"]["shots_per_arm"] == 1500
        assert len(manifest["results"]) == 2
        arms = manifest["results"][0]["arms"]
        assert set(arms) == {"without_q2", "intercept_up", "intercept_down"}
        assert arms["without_q2"]["removed"] == 0

    def test_verify_passes(self, sweep):
        _, _, out = sweep
        assert run("verify", "--out-dir", out) == 0

    def test_verify_detects_tampering(self, sweep, tmp_path):
        import shutil

        _, _, out = sweep
        copy = tmp_path / "tampered"
        shutil.copytree(out, copy)
        summary = (copy / "summary.csv").read_text()
        (copy / "summary.csv").write_text(summary.replace("1.9", "1.8", 1))
        assert run("verify", "--out-dir", copy) == 4

    def test_replay_byte_identical(self, sweep, tmp_path):
        tmp, cfg, out = sweep
        out2 = tmp_path / "replay"
        assert run("lg-sweep", "--config", cfg, "--out-dir", out2) == 0
        for name in ("raw.csv", "summary.csv", "manifest.json"):
            assert (out / name).read_bytes() == (out2 / name).read_bytes(), name

    def test_threads_do_not_change_outputs(self, sweep, tmp_path):
        tmp, cfg, out = sweep
        out2 = tmp_path / "threaded"
        assert run("lg-sweep", "--config", cfg, "--out-dir", out2, "--threads", 8) == 0
        assert (out / "raw.csv").read_bytes() == (out2 / "raw.csv").read_bytes()
        assert (out / "summary.csv").read_bytes() == (out2 / "summary.csv").read_bytes()

    def test_overrides_take_effect(self, sweep, tmp_path):
        tmp, cfg, _ = sweep
        out2 = tmp_path / "override"
        assert run(
            "lg-sweep", "--config", cfg, "--out-dir", out2, "--seed", 999, "--shots", 500
        ) == 0
        manifest = json.loads((out2 / "manifest.json").read_text())
        assert manifest["seed"] == 999
        assert manifest["config"]["shots_per_arm"] == 500
        table = ShotTable.read_csv(out2 / "raw.csv")
        assert len(table) == 3 * 500 * 2


class TestGaussianShape:
    def test_sweep_with_gaussian_decay(self, tmp_path):
        cfg = write_config(
            tmp_path,
            overrides={
                "wait_grid_us": [65.0],
                "shots_per_arm": 20000,
                "coherence": {"shape": "gaussian", "tau_us": 130.0},
            },
        )
        out = tmp_path / "out"
        assert run("lg-sweep", "--config", cfg, "--out-dir", out) == 0
        lines = (out / "summary.csv").read_text().splitlines()
        row = dict(zip(lines[0].split(","), (float(x) for x in lines[1].split(","))))
        want = 1.0 + math.exp(-((65.0 / 130.0) ** 2))
        assert abs(row["K"] - want) <= 5 * row["sigma_bootstrap"]
        assert row["K_theory_low"] == pytest.approx(1.0 + math.exp(-((65.0 / 75.0) ** 2)), rel=1e-8)
        assert run("verify", "--out-dir", out) == 0


class TestDichotomic:
    def test_run_and_verify(self, tmp_path):
        cfg = write_config(
            tmp_path,
            overrides={"wait_grid_us": [0.0], "shots_per_arm": 20000},
        )
        out = tmp_path / "out"
        assert run("dichotomic", "--config", cfg, "--out-dir", out) == 0
        lines = (out / "summary.csv").read_text().splitlines()
        assert lines[0].startswith("wait_us,q2q1,sigma_q2q1,q3q2")
        row = dict(zip(lines[0].split(","), (float(x) for x in lines[1].split(","))))
        assert abs(row["q2q1"] - 0.5) <= 5 * row["sigma_q2q1"]
        assert abs(row["q3q2"] - 0.5) <= 5 * row["sigma_q3q2"]
        assert abs(row["q3q1"] + 0.5) <= 5 * row["sigma_q3q1"]
        assert abs(row["K"] - 1.5) <= 5 * row["sigma_bootstrap"]
        assert run("verify", "--out-dir", out) == 0

    def test_seeded_rerun_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path, overrides={"wait_grid_us": [0.0], "shots_per_arm": 800})
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert run("dichotomic", "--config", cfg, "--out-dir", out1) == 0
        assert run("dichotomic", "--config", cfg, "--out-dir", out2) == 0
        for name in ("raw.csv", "summary.csv", "manifest.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


class TestBombtest:
    def test_table_matches_closed_forms(self, tmp_path, capsys):
        assert run(
            "bombtest", "--shots", 50000, "--out-dir", tmp_path, "--seed", 5
        ) == 0
        captured = capsys.readouterr().out
        lines = [l for l in captured.splitlines() if "," in l]
        assert lines[0] == "metric,closed_form,monte_carlo,mc_sigma,shots"
        rows = {l.split(",")[0]: l.split(",") for l in lines[1:]}
        assert float(rows["single_trial_power"][1]) == 0.25
        assert float(rows["repeated_rescue"][1]) == pytest.approx(1 / 3, abs=1e-9)
        assert float(rows["zeno_success"][1]) == pytest.approx(0.605429, abs=1e-6)
        for name, row in rows.items():
            closed, mc, sig = float(row[1]), float(row[2]), float(row[3])
            assert abs(mc - closed) <= max(5 * sig, 1e-9), name
        assert (tmp_path / "bombtest.csv").read_text().splitlines()[0] == lines[0]

    def test_bad_flags_exit_2(self, tmp_path):
        assert run("bombtest", "--split-ratio", 1.5) == 2
        assert run("bombtest", "--contrast", -0.1) == 2
        assert run("bombtest", "--rounds", 0) == 2
        assert run("bombtest", "--zeno-cycles", 0) == 2


class TestVerifyErrors:
    def test_missing_dir_exits_3(self, tmp_path):
        assert run("verify", "--out-dir", tmp_path / "missing") == 3

    def test_malformed_manifest_exits_2(self, tmp_path):
        (tmp_path / "manifest.json").write_text("{}")
        assert run("verify", "--out-dir", tmp_path) == 2
