import json
import subprocess
import sys

import numpy as np
import pytest

from pqselect.cli import main
from pqselect.features import load_csv


@pytest.fixture(scope="module")
def feature_csv(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    wav = root / "w.npz"
    data = root / "d.csv"
    assert main(["synth", "--per-class", "10", "--seed", "8", "--out", str(wav)]) == 0
    assert main(["featurize", "--in", str(wav), "--out", str(data)]) == 0
    return data


def test_featurize_produces_a_99_column_dataset(feature_csv):
    ds = load_csv(feature_csv)
    assert ds.X.shape == (140, 99) and np.all(np.isfinite(ds.X))


def test_noisy_subset_of_classes(tmp_path):
    out = tmp_path / "w.csv"
    assert main(["synth", "--classes", "v3,v9", "--per-class", "2", "--snr", "30",
                 "--seed", "1", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert [line.split(",")[:2] for line in lines] == [["v3", "30.0"]] * 2 + [["v9", "30.0"]] * 2


def test_coefficient_dump(tmp_path):
    wav, data, dump = tmp_path / "w.npz", tmp_path / "d.csv", tmp_path / "coef"
    main(["synth", "--classes", "1", "--per-class", "1", "--seed", "0", "--out", str(wav)])
    assert main(["featurize", "--in", str(wav), "--out", str(data), "--dump-coeffs", str(dump)]) == 0
    rows = (dump / "instance_00000_v1.csv").read_text().splitlines()
    assert [r.split(",")[0] for r in rows] == [f"d{j}" for j in range(1, 9)] + ["a8"]
    assert len(rows[0].split(",")) == 1 + 7500


@pytest.mark.parametrize("algo", ["2dupso", "ga", "aco", "bpso", "cbpso", "chbpso"])
def test_search_is_byte_identical_on_rerun(tmp_path, feature_csv, algo):
    outs = [tmp_path / f"{algo}_{i}.json" for i in range(2)]
    for out in outs:
        assert main(["search", "--algo", algo, "--seed", "3", "--data", str(feature_csv),
                     "--out", str(out), "--budget", "90", "--params", '{}']) == 0
    assert outs[0].read_bytes() == outs[1].read_bytes()
    rec = json.loads(outs[0].read_text())
    assert rec["fes_used"] == 90 and len(rec["best_mask"]) == 99


def test_search_with_naive_bayes_and_sffs(tmp_path, feature_csv):
    out = tmp_path / "s.json"
    assert main(["search", "--algo", "sffs", "--target", "2", "--seed", "0",
                 "--data", str(feature_csv), "--out", str(out), "--classifier", "nb"]) == 0
    assert json.loads(out.read_text())["xi"] == 2


def test_config_hash_tracks_the_inputs(tmp_path, feature_csv):
    def run(seed, budget):
        out = tmp_path / f"h{seed}_{budget}.json"
        main(["search", "--algo", "ga", "--seed", str(seed), "--data", str(feature_csv),
              "--out", str(out), "--budget", str(budget)])
        return json.loads(out.read_text())["config_hash"]

    assert run(1, 60) == run(1, 60) != run(2, 60) != run(1, 61)


def test_sffs_without_target_fails_cleanly(tmp_path, feature_csv, capsys):
    code = main(["search", "--algo", "sffs", "--seed", "0", "--data", str(feature_csv),
                 "--out", str(tmp_path / "x.json")])
    assert code == 1
    assert "needs --target" in capsys.readouterr().err


def test_missing_input_reports_an_error(tmp_path, capsys):
    assert main(["featurize", "--in", str(tmp_path / "nope.npz"), "--out", "x.csv"]) == 1
    assert "pqselect featurize: error" in capsys.readouterr().err


def test_bad_parameters_report_an_error(tmp_path, feature_csv):
    assert main(["search", "--algo", "ga", "--seed", "0", "--data", str(feature_csv),
                 "--out", str(tmp_path / "x.json"), "--params", '{"pc": 3}']) == 1


def test_usage_errors_exit_with_two():
    with pytest.raises(SystemExit) as exc:
        main(["search", "--algo", "ga"])
    assert exc.value.code == 2


def test_stage_commands_round_trip(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("dataset:\n  per_class: 10\nsearch:\n  runs: 2\n  budget: 40\n"
                   "  algorithms: [2D-UPSO, GA]\n  sffs: false\n"
                   "  params: {2D-UPSO: {ps: 10}, GA: {pop: 10}}\n")
    out = tmp_path / "out"
    assert main(["stage1", "--config", str(cfg), "--out", str(out)]) == 0
    assert main(["stage2", "--in", str(out), "--snr", "inf,25"]) == 0
    table = (out / "table_metrics.csv").read_bytes()
    assert main(["report", "--in", str(out)]) == 0
    assert (out / "table_metrics.csv").read_bytes() == table
    assert (out / "table_contrast.csv").exists()


def test_module_entry_point_reports_backend():
    res = subprocess.run([sys.executable, "-m", "pqselect", "--version"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert "kernels:" in res.stdout
