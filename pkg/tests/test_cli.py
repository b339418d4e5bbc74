"""End-to-end tests of the command-line interface (exit codes and artifacts)."""

import csv

import numpy as np
import pytest
from scipy.special import expit

from deepcoda import load_params, predict_proba
from deepcoda.cli import (
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_USAGE,
    load_dataset,
    parse_train_config,
    read_dataset_csv,
    run,
)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def toy_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("toy")
    assert run(["simulate", "toy", "--n", "120", "--seed", "3", "--out", str(out)]) == EXIT_OK
    return out


@pytest.fixture(scope="module")
def trained_model(tmp_path_factory, toy_dir):
    out = tmp_path_factory.mktemp("model")
    config = out / "train.cfg"
    config.write_text(
        "n_bottlenecks = 2\nepochs = 300\nseed = 5\nlambda_s = 0.01  # headline penalty\n"
    )
    model_path = out / "model.txt"
    code = run(
        [
            "train",
            str(toy_dir / "relative.csv"),
            "--config",
            str(config),
            "--out",
            str(model_path),
        ]
    )
    assert code == EXIT_OK
    return model_path


class TestSimulate:
    def test_writes_thousand_sample_dataset(self, tmp_path):
        out = tmp_path / "sim"
        assert run(["simulate", "toy", "--n", "1000", "--seed", "0", "--out", str(out)]) == EXIT_OK
        for name in ("absolute.csv", "relative.csv"):
            rows = read_csv(out / name)
            assert len(rows) == 1001  # header + 1000 samples
            assert rows[0] == ["sample_id", "feature_1", "feature_2", "feature_3", "feature_4", "label"]

    def test_rerun_is_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run(["simulate", "cmyc", "--n", "60", "--seed", "9", "--out", str(out)]) == EXIT_OK
        assert (a / "relative.csv").read_bytes() == (b / "relative.csv").read_bytes()
        assert (a / "absolute.csv").read_bytes() == (b / "absolute.csv").read_bytes()

    def test_too_few_samples_exits_2(self, tmp_path):
        assert run(["simulate", "toy", "--n", "3", "--out", str(tmp_path / "x")]) == EXIT_USAGE

    def test_bad_kind_exits_2(self, tmp_path):
        with pytest.raises(SystemExit) as err:
            run(["simulate", "gamma", "--out", str(tmp_path / "x")])
        assert err.value.code == EXIT_USAGE


class TestTrain:
    def test_model_round_trips_through_predict(self, toy_dir, trained_model):
        params = load_params(trained_model)
        matrix, labels = load_dataset(toy_dir / "relative.csv")
        probs = predict_proba(params, matrix.values)
        assert probs.shape == (120,)
        assert np.all((probs > 0) & (probs < 1))

    def test_report_file_matches_config(self, trained_model):
        rows = read_csv(str(trained_model) + ".report.csv")
        assert rows[0] == ["record", "index", "value"]
        losses = [r for r in rows[1:] if r[0] == "loss"]
        residuals = [r for r in rows[1:] if r[0] == "constraint_residual"]
        assert len(losses) == 300
        assert len(residuals) == 2

    def test_rerun_is_byte_identical(self, tmp_path, toy_dir):
        config = tmp_path / "cfg"
        config.write_text("n_bottlenecks = 1\nepochs = 120\nseed = 2\n")
        outputs = []
        for name in ("m1", "m2"):
            model = tmp_path / name
            assert run(
                ["train", str(toy_dir / "relative.csv"), "--config", str(config), "--out", str(model)]
            ) == EXIT_OK
            outputs.append((model.read_bytes(), (tmp_path / f"{name}.report.csv").read_bytes()))
        assert outputs[0] == outputs[1]

    def test_missing_label_column_exits_2(self, tmp_path, toy_dir):
        rows = read_csv(toy_dir / "relative.csv")
        rows[0][-1] = "outcome"
        bad = tmp_path / "bad.csv"
        bad.write_text("\n".join(",".join(r) for r in rows) + "\n")
        assert run(["train", str(bad), "--out", str(tmp_path / "m")]) == EXIT_USAGE

    def test_unknown_config_key_exits_2(self, tmp_path, toy_dir):
        config = tmp_path / "cfg"
        config.write_text("momentum = 0.9\n")
        assert run(
            ["train", str(toy_dir / "relative.csv"), "--config", str(config), "--out", str(tmp_path / "m")]
        ) == EXIT_USAGE

    def test_divergence_exits_3(self, tmp_path, toy_dir):
        config = tmp_path / "cfg"
        config.write_text("learning_rate = 1e200\nepochs = 10\n")
        assert run(
            ["train", str(toy_dir / "relative.csv"), "--config", str(config), "--out", str(tmp_path / "m")]
        ) == EXIT_NUMERIC

    def test_missing_file_exits_2(self, tmp_path):
        assert run(["train", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "m")]) == EXIT_USAGE


class TestBenchmark:
    def test_single_method_row_count(self, tmp_path, toy_dir):
        out = tmp_path / "bench.csv"
        assert run(
            [
                "benchmark",
                str(toy_dir / "relative.csv"),
                "--methods",
                "lasso",
                "--splits",
                "3",
                "--out",
                str(out),
            ]
        ) == EXIT_OK
        rows = read_csv(out)
        assert rows[0] == ["dataset", "method", "split", "auc", "standardized_auc"]
        assert len(rows) == 4

    def test_rerun_is_byte_identical(self, tmp_path, toy_dir):
        files = []
        for name in ("b1.csv", "b2.csv"):
            out = tmp_path / name
            assert run(
                [
                    "benchmark",
                    str(toy_dir / "relative.csv"),
                    "--methods",
                    "deepcoda",
                    "--epochs",
                    "40",
                    "--splits",
                    "2",
                    "--seed",
                    "11",
                    "--out",
                    str(out),
                ]
            ) == EXIT_OK
            files.append(out.read_bytes())
        assert files[0] == files[1]

    def test_grid_produces_full_cross_product(self, tmp_path):
        data_dir = tmp_path / "data"
        assert run(["simulate", "toy", "--n", "200", "--seed", "1", "--out", str(data_dir)]) == EXIT_OK
        out = tmp_path / "grid.csv"
        assert run(
            [
                "benchmark",
                str(data_dir / "relative.csv"),
                "--grid",
                "--epochs",
                "5",
                "--out",
                str(out),
            ]
        ) == EXIT_OK
        rows = read_csv(out)
        assert len(rows) == 1 + 4 * 4 * 2 * 20  # header + 32 configs x 20 splits

    def test_unknown_method_exits_2(self, tmp_path, toy_dir):
        assert run(
            [
                "benchmark",
                str(toy_dir / "relative.csv"),
                "--methods",
                "xgboost",
                "--out",
                str(tmp_path / "b.csv"),
            ]
        ) == EXIT_USAGE


class TestExplain:
    def test_report_rows_and_identity(self, tmp_path, toy_dir, trained_model):
        out = tmp_path / "report"
        assert run(
            ["explain", str(trained_model), str(toy_dir / "relative.csv"), "--out", str(out)]
        ) == EXIT_OK
        rows = read_csv(out / "explanations.csv")
        header, data = rows[0], rows[1:]
        assert len(data) == 120
        n_b = sum(1 for c in header if c.startswith("prod_"))
        assert n_b == 2
        for row in data:
            parsed = dict(zip(header, row))
            products = [float(parsed[f"prod_{b + 1}"]) for b in range(n_b)]
            assert float(parsed["prob"]) == pytest.approx(
                float(expit(np.sum(products))), abs=1e-12
            )
        mem_rows = read_csv(out / "memberships.csv")[1:]
        assert {r[0] for r in mem_rows} == {"1", "2"}
        assert (out / "correlations.csv").exists()
        assert (out / "summary.txt").exists()

    def test_linear_model_exits_2(self, tmp_path, toy_dir):
        config = tmp_path / "cfg"
        config.write_text("head = linear\nepochs = 50\nn_bottlenecks = 1\n")
        model = tmp_path / "linear.txt"
        assert run(
            ["train", str(toy_dir / "relative.csv"), "--config", str(config), "--out", str(model)]
        ) == EXIT_OK
        assert run(
            ["explain", str(model), str(toy_dir / "relative.csv"), "--out", str(tmp_path / "r")]
        ) == EXIT_USAGE


class TestBaseline:
    def test_writes_coefficients(self, tmp_path, toy_dir, capsys):
        out = tmp_path / "coef.csv"
        assert run(
            ["baseline", str(toy_dir / "relative.csv"), "--out", str(out), "--seed", "0"]
        ) == EXIT_OK
        rows = read_csv(out)
        assert rows[0] == ["feature", "coefficient", "scaled_magnitude"]
        assert len(rows) == 1 + 4 + 1  # header + features + intercept
        assert rows[-1][0] == "(intercept)"
        assert "selected lambda" in capsys.readouterr().out


class TestDatasetIo:
    def test_rejects_negative_values(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("sample_id,f1,f2,label\ns0,1.0,-2.0,0\ns1,1.0,2.0,1\n")
        with pytest.raises(ValueError, match="negative"):
            read_dataset_csv(bad)

    def test_rejects_nan_values(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("sample_id,f1,f2,label\ns0,1.0,nan,0\ns1,1.0,2.0,1\n")
        with pytest.raises(ValueError, match="finite"):
            read_dataset_csv(bad)

    def test_rejects_bad_label(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("sample_id,f1,f2,label\ns0,1.0,2.0,2\n")
        with pytest.raises(ValueError, match="label"):
            read_dataset_csv(bad)

    def test_zero_replacement_on_ingest(self, tmp_path):
        data = tmp_path / "zeros.csv"
        data.write_text("sample_id,f1,f2,f3,label\ns0,0.0,2.0,2.0,0\ns1,1.0,2.0,3.0,1\n")
        matrix, labels = load_dataset(data, delta_fraction=0.5)
        assert np.all(matrix.values > 0)
        assert matrix.values[0, 0] == 1.0
        assert np.array_equal(labels, [0, 1])

    def test_relative_kind_detection(self, tmp_path):
        data = tmp_path / "rel.csv"
        data.write_text("sample_id,f1,f2,label\ns0,0.25,0.75,0\ns1,0.5,0.5,1\n")
        matrix, _ = load_dataset(data)
        assert matrix.kind == "relative"


class TestConfigParsing:
    def test_parses_values_and_comments(self):
        cfg = parse_train_config(
            "# full run\nn_bottlenecks = 3\nlambda_s = 0.1\nhead = linear\nseed = 7\n"
        )
        assert cfg.n_bottlenecks == 3
        assert cfg.lambda_s == 0.1
        assert cfg.head == "linear"
        assert cfg.seed == 7

    def test_rejects_duplicate_key(self):
        with pytest.raises(ValueError, match="duplicate"):
            parse_train_config("seed = 1\nseed = 2\n")

    def test_rejects_bad_value(self):
        with pytest.raises(ValueError, match="epochs"):
            parse_train_config("epochs = soon\n")
