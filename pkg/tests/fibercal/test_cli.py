import io
import json

import pandas
import pytest

from fibercal.cli import PREDICTION_COLUMNS, main
from fibercal.constants import (
    EXIT_CONFIGURATION_ERROR,
    EXIT_IDENTIFIABILITY_ERROR,
    EXIT_IO_ERROR,
    EXIT_OK,
)
from fibercal.dataio import load_model
from fibercal.schema import DATASET_COLUMNS
from fibercal.stream import process_line

SUMMARY_KEYS = (
    "samples",
    "mae_fx_n",
    "mae_fy_n",
    "mae_fz_n",
    "mae_depth_mm",
    "mae_diameter_mm",
)


def _summary(output):
    return dict(line.split(": ") for line in output.splitlines())


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Datasets and model of the reference noisy configuration"""
    path = tmp_path_factory.mktemp("cli")
    calibration, test = path / "calibration.csv", path / "test.csv"

    assert (
        main(["simulate", "--out", str(calibration), "--test-out", str(test)])
        == EXIT_OK
    )
    assert (
        main(
            [
                "calibrate",
                "--dataset",
                str(calibration),
                "--model",
                str(path / "model.json"),
            ]
        )
        == EXIT_OK
    )
    return path


def test_simulate(tmp_path, capsys):
    out, test_out = tmp_path / "cal.csv", tmp_path / "test.csv"

    code = main(["simulate", "--out", str(out), "--test-out", str(test_out)])

    assert code == EXIT_OK
    assert capsys.readouterr().out.splitlines() == [
        "calibration_samples: 1644",
        "test_samples: 1280",
    ]
    assert out.read_text().splitlines()[0] == ",".join(DATASET_COLUMNS)


def test_simulate_is_reproducible(tmp_path, workdir):
    out, test_out = tmp_path / "cal.csv", tmp_path / "test.csv"

    main(["simulate", "--out", str(out), "--test-out", str(test_out)])

    assert out.read_bytes() == (workdir / "calibration.csv").read_bytes()
    assert test_out.read_bytes() == (workdir / "test.csv").read_bytes()


def test_simulate_seed(tmp_path, workdir):
    out, test_out = tmp_path / "cal.csv", tmp_path / "test.csv"

    main(["simulate", "--out", str(out), "--test-out", str(test_out), "--seed", "9"])

    assert out.read_bytes() != (workdir / "calibration.csv").read_bytes()


def test_simulate_config(tmp_path, capsys):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"axis_aligned": True, "diameters": [5, 10]}))
    responses = tmp_path / "responses.csv"

    code = main(
        [
            "simulate",
            "--config",
            str(config),
            "--out",
            str(tmp_path / "cal.csv"),
            "--test-out",
            str(tmp_path / "test.csv"),
            "--responses-out",
            str(responses),
        ]
    )

    assert code == EXIT_OK
    assert _summary(capsys.readouterr().out) == {
        "calibration_samples": str(2 * 6 + 2 * 5 * 17),
        "test_samples": str(2 * 5 * 16),
    }
    df = pandas.read_csv(responses)
    assert len(df) == 2 * 3 * 9
    assert sorted(df["axis"].unique()) == ["fx", "fy", "fz"]


def test_calibrate(tmp_path, capsys, monkeypatch, workdir):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    first, second = tmp_path / "first.json", tmp_path / "second.json"
    dataset = str(workdir / "calibration.csv")

    assert main(["calibrate", "--dataset", dataset, "--model", str(first)]) == 0
    assert main(["calibrate", "--dataset", dataset, "--model", str(second)]) == 0

    output = capsys.readouterr().out.splitlines()
    assert [line.split(":")[0] for line in output[:3]] == [
        "residual_norm_indentation_gain",
        "residual_norm_indent_coupling",
        "residual_norm_force_gain",
    ]
    assert first.read_bytes() == second.read_bytes()
    assert load_model(first).meta.created_at.year == 2023


def test_calibrate_unexcited(tmp_path, workdir):
    code = main(
        [
            "calibrate",
            "--dataset",
            str(workdir / "test.csv"),
            "--model",
            str(tmp_path / "model.json"),
        ]
    )
    assert code == EXIT_IDENTIFIABILITY_ERROR


def test_evaluate(tmp_path, capsys, workdir):
    plots = tmp_path / "plots"
    residuals = tmp_path / "residuals.csv"

    code = main(
        [
            "evaluate",
            "--model",
            str(workdir / "model.json"),
            "--dataset",
            str(workdir / "test.csv"),
            "--residuals-out",
            str(residuals),
            "--plot-dir",
            str(plots),
        ]
    )

    assert code == EXIT_OK
    summary = _summary(capsys.readouterr().out)
    assert tuple(summary) == SUMMARY_KEYS
    assert summary["samples"] == "1280"
    assert float(summary["mae_fx_n"]) <= 0.25
    assert float(summary["mae_diameter_mm"]) <= 0.5
    assert len(pandas.read_csv(residuals)) == 1280
    assert len(pandas.read_csv(plots / "force_pairs.csv")) == 1280
    assert len(pandas.read_csv(plots / "indentation_pairs.csv")) == 1280
    assert len(pandas.read_csv(plots / "per_diameter.csv")) == 4


def test_evaluate_is_reproducible(capsys, workdir):
    argv = [
        "evaluate",
        "--model",
        str(workdir / "model.json"),
        "--dataset",
        str(workdir / "test.csv"),
    ]

    main(argv)
    first = capsys.readouterr().out
    main(argv)

    assert capsys.readouterr().out == first


def test_evaluate_output_is_stable(capsys, golden, workdir):
    code = main(
        [
            "evaluate",
            "--model",
            str(workdir / "model.json"),
            "--dataset",
            str(workdir / "test.csv"),
        ]
    )

    assert code == EXIT_OK
    golden("cli_evaluate_reference_noisy", {"stdout": capsys.readouterr().out})


def test_predict_matches_stream(tmp_path, workdir):
    out = tmp_path / "predicted.csv"

    code = main(
        [
            "predict",
            "--model",
            str(workdir / "model.json"),
            "--dataset",
            str(workdir / "test.csv"),
            "--out",
            str(out),
        ]
    )

    assert code == EXIT_OK
    df = pandas.read_csv(out, dtype=str, keep_default_na=False)
    assert list(df.columns) == [*DATASET_COLUMNS, *PREDICTION_COLUMNS]
    assert len(df) == 1280

    model = load_model(workdir / "model.json")
    pd_columns = list(DATASET_COLUMNS[1:8])
    for _, row in df.iloc[::97].iterrows():
        line = ",".join(row[column] for column in pd_columns)
        batch = ",".join(row[column] for column in PREDICTION_COLUMNS)
        assert process_line(line, model) == batch


def test_serve_stdio(monkeypatch, capsys, workdir):
    stdin = io.TextIOWrapper(io.BytesIO(b"0,0,0,0,0,0,0\n0,0\n0,0,0,0,0,0,\xff\n"))
    monkeypatch.setattr("sys.stdin", stdin)

    code = main(["serve", "--model", str(workdir / "model.json")])

    assert code == EXIT_OK
    output = capsys.readouterr().out.splitlines()
    assert len(output) == 3
    assert output[0].endswith(",unreliable_radius")
    assert output[1] == "ERR,expected 7 channels"
    assert output[2].startswith("ERR,invalid number")


@pytest.mark.parametrize(
    "command,code",
    [
        ("evaluate --model {missing} --dataset {test}", EXIT_IO_ERROR),
        ("predict --model {model} --dataset {missing} --out {out}", EXIT_IO_ERROR),
        ("evaluate --model {test} --dataset {test}", EXIT_CONFIGURATION_ERROR),
        ("evaluate --model {model} --dataset {model}", EXIT_CONFIGURATION_ERROR),
        (
            "simulate --config {model} --out {out} --test-out {out}",
            EXIT_CONFIGURATION_ERROR,
        ),
        ("calibrate --dataset {binary} --model {out}", EXIT_CONFIGURATION_ERROR),
        ("evaluate --model {binary} --dataset {test}", EXIT_CONFIGURATION_ERROR),
        (
            "simulate --config {binary} --out {out} --test-out {out}",
            EXIT_CONFIGURATION_ERROR,
        ),
    ],
)
def test_exit_codes(tmp_path, workdir, command, code):
    paths = {
        "missing": tmp_path / "missing",
        "binary": tmp_path / "binary",
        "model": workdir / "model.json",
        "test": workdir / "test.csv",
        "out": tmp_path / "out.csv",
    }
    paths["binary"].write_bytes(b"\xff\xfe\x00p\x00h\x00a\x00s\x00e\n")

    assert main([arg.format(**paths) for arg in command.split()]) == code


def test_version(capsys):
    with pytest.raises(SystemExit) as exc_info:
        main(["--version"])

    assert exc_info.value.code == 0
    assert capsys.readouterr().out.strip()


def test_calibrate_help_names_source_date_epoch(capsys):
    with pytest.raises(SystemExit) as exc_info:
        main(["calibrate", "--help"])

    assert exc_info.value.code == 0
    assert "SOURCE_DATE_EPOCH" in capsys.readouterr().out


@pytest.mark.parametrize(
    "extra_args,tolerance",
    [
        ([], 1e-6),
        (["--full-precision"], 1e-9),
    ],
)
def test_predict_noise_free(tmp_path, extra_args, tolerance):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"noise_sigma": 0.0, "gamma": 0.0, "kn": 0.06531}))
    calibration, test = tmp_path / "calibration.csv", tmp_path / "test.csv"
    model, out = tmp_path / "model.json", tmp_path / "predicted.csv"

    main(
        [
            "simulate",
            "--config",
            str(config),
            "--out",
            str(calibration),
            "--test-out",
            str(test),
        ]
    )
    main(["calibrate", "--dataset", str(calibration), "--model", str(model)])
    code = main(
        ["predict", "--model", str(model), "--dataset", str(test), "--out", str(out)]
        + extra_args
    )

    assert code == EXIT_OK
    df = pandas.read_csv(out)
    for truth, predicted in [
        (df["fx"], df["pred_fx"]),
        (df["fy"], df["pred_fy"]),
        (df["fz"], df["pred_fz"]),
        (df["depth_mm"], df["pred_depth_mm"]),
        (2.0 * df["radius_mm"], df["pred_diameter_mm"]),
    ]:
        assert (predicted - truth).abs().max() <= tolerance
