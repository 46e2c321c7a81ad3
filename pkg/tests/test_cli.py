import json

import pytest

from fcdsae.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture()
def small_csv(tmp_path, capsys):
    path = tmp_path / "data.csv"
    code, _, _ = run(capsys, "gen-data", "--n", "400", "--seed", "5",
                     "--out", str(path))
    assert code == 0
    return path


@pytest.fixture()
def trained_model(tmp_path, small_csv, capsys):
    model = tmp_path / "model.txt"
    code, _, _ = run(capsys, "train", "--data", str(small_csv),
                     "--epochs", "2", "--out-model", str(model))
    assert code == 0
    return model


class TestGenData:
    def test_writes_rows_and_distribution(self, tmp_path, capsys):
        out = tmp_path / "d.csv"
        code, stdout, _ = run(capsys, "gen-data", "--n", "100", "--seed", "1",
                              "--out", str(out))
        assert code == 0
        assert "class distribution" in stdout
        assert len(out.read_text().splitlines()) == 101

    def test_n_zero_usage_error(self, tmp_path, capsys):
        code, _, err = run(capsys, "gen-data", "--n", "0", "--seed", "1",
                           "--out", str(tmp_path / "d.csv"))
        assert code == 1

    def test_byte_identical(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run(capsys, "gen-data", "--n", "50", "--seed", "9", "--out", str(a))
        run(capsys, "gen-data", "--n", "50", "--seed", "9", "--out", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_unwritable_path(self, capsys):
        code, _, _ = run(capsys, "gen-data", "--n", "5", "--seed", "1",
                         "--out", "/nonexistent/dir/d.csv")
        assert code == 2


class TestTrain:
    def test_prints_metric_block(self, tmp_path, small_csv, capsys):
        model = tmp_path / "m.txt"
        report = tmp_path / "r.txt"
        code, stdout, _ = run(capsys, "train", "--data", str(small_csv),
                              "--epochs", "2", "--out-model", str(model),
                              "--out-report", str(report))
        assert code == 0
        assert "Accuracy" in stdout
        assert model.exists()
        assert "# reproducibility:" in report.read_text()

    def test_missing_data_file(self, tmp_path, capsys):
        code, _, _ = run(capsys, "train", "--data", str(tmp_path / "no.csv"),
                         "--out-model", str(tmp_path / "m.txt"))
        assert code == 2

    def test_zero_epochs_usage_error(self, tmp_path, small_csv, capsys):
        code, _, _ = run(capsys, "train", "--data", str(small_csv),
                         "--epochs", "0", "--out-model", str(tmp_path / "m.txt"))
        assert code == 1


class TestQuantize:
    def test_writes_qmodel(self, tmp_path, trained_model, capsys):
        out = tmp_path / "m.qtxt"
        code, stdout, _ = run(capsys, "quantize", "--model", str(trained_model),
                              "--format", "Q8.8", "--out", str(out))
        assert code == 0
        assert "saturated" in stdout
        assert out.read_text().startswith("FCDSAE-Q 1\nQ 16 8\n")

    def test_bad_format_string(self, tmp_path, trained_model, capsys):
        code, _, _ = run(capsys, "quantize", "--model", str(trained_model),
                         "--format", "Q0.16", "--out", str(tmp_path / "m.qtxt"))
        assert code == 1

    def test_round_trip_matches_memory(self, tmp_path, trained_model, capsys):
        from fcdsae import network, quantized
        from fcdsae.quantized import QFormat

        out = tmp_path / "m.qtxt"
        run(capsys, "quantize", "--model", str(trained_model),
            "--format", "Q8.8", "--out", str(out))
        params, std = network.load_model(trained_model)
        qm = quantized.quantize_model(params, std, QFormat(16, 8))
        loaded = quantized.load_qmodel(out)
        assert loaded.weights == qm.weights
        assert loaded.std_mean == qm.std_mean


class TestEval:
    def test_float_eval(self, tmp_path, small_csv, trained_model, capsys):
        code, stdout, _ = run(capsys, "eval", "--model", str(trained_model),
                              "--data", str(small_csv))
        assert code == 0
        assert "Accuracy" in stdout

    def test_quantized_eval(self, tmp_path, small_csv, trained_model, capsys):
        qpath = tmp_path / "m.qtxt"
        run(capsys, "quantize", "--model", str(trained_model),
            "--format", "Q8.8", "--out", str(qpath))
        code, stdout, _ = run(capsys, "eval", "--qmodel", str(qpath),
                              "--data", str(small_csv))
        assert code == 0
        assert "quantized accuracy" in stdout

    def test_bad_feature_count(self, tmp_path, trained_model, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("t,Power,HFR\n1,2,88\n")
        code, _, _ = run(capsys, "eval", "--model", str(trained_model),
                         "--data", str(bad))
        assert code == 2


class TestInfer:
    ROW = "1,24.2,222.4,363.8,83,68.5,165.5,0.44,145.6,28.6"

    @pytest.fixture()
    def qmodel(self, tmp_path, trained_model, capsys):
        qpath = tmp_path / "m.qtxt"
        run(capsys, "quantize", "--model", str(trained_model),
            "--format", "Q8.8", "--out", str(qpath))
        return qpath

    def test_table_row(self, qmodel, capsys):
        code, stdout, _ = run(capsys, "infer", "--qmodel", str(qmodel),
                              "--row", self.ROW)
        assert code == 0
        assert stdout.startswith("class: ")
        assert int(stdout.splitlines()[0].split()[1]) in (0, 1, 2)
        assert len(stdout.splitlines()[1].split()) == 5  # "output words:" + 3

    def test_wrong_arity(self, qmodel, capsys):
        code, _, _ = run(capsys, "infer", "--qmodel", str(qmodel),
                         "--row", "1,2,3")
        assert code == 1

    def test_deterministic(self, qmodel, capsys):
        _, out1, _ = run(capsys, "infer", "--qmodel", str(qmodel),
                         "--row", self.ROW)
        _, out2, _ = run(capsys, "infer", "--qmodel", str(qmodel),
                         "--row", self.ROW)
        assert out1 == out2


class TestConfigFile:
    def test_config_supplies_defaults(self, tmp_path, capsys):
        conf = tmp_path / "conf.json"
        conf.write_text(json.dumps({"n": 30, "seed": 3}))
        out = tmp_path / "d.csv"
        code, _, _ = run(capsys, "--config", str(conf), "gen-data",
                         "--out", str(out))
        assert code == 0
        assert len(out.read_text().splitlines()) == 31

    def test_explicit_flag_wins(self, tmp_path, capsys):
        conf = tmp_path / "conf.json"
        conf.write_text(json.dumps({"n": 30}))
        out = tmp_path / "d.csv"
        code, _, _ = run(capsys, "--config", str(conf), "gen-data",
                         "--n", "10", "--out", str(out))
        assert code == 0
        assert len(out.read_text().splitlines()) == 11

    def test_missing_config(self, tmp_path, capsys):
        code, _, _ = run(capsys, "--config", str(tmp_path / "no.json"),
                         "gen-data", "--n", "5", "--out", str(tmp_path / "d.csv"))
        assert code == 1
