"""Command line interface ``fibercal``.

Every command returns a process exit code: ``0`` on success, ``2`` on schema, parse
or configuration errors, ``3`` if calibration data doesn't excite all factors and
``4`` on file system errors.

"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import pandas

from fibercal._version import VERSION
from fibercal.calibration import calibrate, evaluate, predict
from fibercal.constants import (
    DATASET_FLOAT_FORMAT,
    EXIT_CONFIGURATION_ERROR,
    EXIT_IDENTIFIABILITY_ERROR,
    EXIT_IO_ERROR,
    EXIT_OK,
    FORCE_AXES,
    GENERATED_FORCE_LIMIT_N,
)
from fibercal.dataio import (
    load_config,
    load_dataset,
    load_model,
    save_dataset,
    save_model,
)
from fibercal.errors import FibercalError, IdentifiabilityError
from fibercal.sensor import channel_response, generate_grid_dataset
from fibercal.models import Prediction
from fibercal.stream import format_flags, prediction_fields, serve_stdio, serve_tcp

#: Number of loads per axis of the channel response curves.
RESPONSE_POINTS = 9

#: Columns appended to the dataset by ``fibercal predict``.
PREDICTION_COLUMNS = (
    "pred_fx",
    "pred_fy",
    "pred_fz",
    "pred_depth_mm",
    "pred_diameter_mm",
    "flags",
)


def _write_csv(df: pandas.DataFrame, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=DATASET_FLOAT_FORMAT, lineterminator="\n")


def cmd_simulate(args: argparse.Namespace) -> int:
    """Simulate the calibration and test datasets"""
    sensor, grid = load_config(args.config, seed=args.seed).to_user_model()
    pair = generate_grid_dataset(sensor, grid)

    save_dataset(pair.calibration, args.out)
    save_dataset(pair.test, args.test_out)
    print(f"calibration_samples: {len(pair.calibration)}")
    print(f"test_samples: {len(pair.test)}")

    if args.responses_out is not None:
        limit = GENERATED_FORCE_LIMIT_N
        loads = {
            "fx": np.linspace(-limit, limit, RESPONSE_POINTS),
            "fy": np.linspace(-limit, limit, RESPONSE_POINTS),
            "fz": np.linspace(0.0, limit, RESPONSE_POINTS),
        }
        responses = pandas.concat(
            [
                channel_response(sensor, axis, diameter, loads[axis])
                for diameter in grid.diameters
                for axis in FORCE_AXES
            ],
            ignore_index=True,
        )
        _write_csv(responses, args.responses_out)

    return EXIT_OK


def cmd_calibrate(args: argparse.Namespace) -> int:
    """Fit a calibration model on a phased dataset"""
    model = calibrate(load_dataset(args.dataset))
    save_model(model, args.model)

    norms = model.meta.residual_norms
    print(f"residual_norm_indentation_gain: {norms.indentation_gain:.6e}")
    print(f"residual_norm_indent_coupling: {norms.indent_coupling:.6e}")
    print(f"residual_norm_force_gain: {norms.force_gain:.6e}")
    return EXIT_OK


def _full_precision_record(prediction: Prediction) -> list[float | str]:
    force, indentation = prediction.force, prediction.indentation
    return [
        force.fx,
        force.fy,
        force.fz,
        indentation.depth,
        indentation.diameter,
        format_flags(prediction.flags),
    ]


def cmd_predict(args: argparse.Namespace) -> int:
    """Append predicted forces and indentation states to a dataset

    Predictions are formatted like the answers of ``fibercal serve`` unless
    ``--full-precision`` is given.

    """
    model = load_model(args.model)
    samples = load_dataset(args.dataset)
    predictions = predict((sample.frame for sample in samples), model)

    to_record: Callable[[Prediction], Sequence[float | str]] = (
        _full_precision_record if args.full_precision else prediction_fields
    )
    df = samples.to_dataframe()
    predicted = pandas.DataFrame.from_records(
        [to_record(p) for p in predictions], columns=list(PREDICTION_COLUMNS)
    )
    _write_csv(pandas.concat([df, predicted], axis=1), args.out)
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    """Print the errors of a model on a labelled dataset"""
    report = evaluate(load_model(args.model), load_dataset(args.dataset))

    print(f"samples: {len(report.residuals)}")
    for key, value in report.summary().items():
        print(f"{key}: {value:.6f}")

    if args.residuals_out is not None:
        _write_csv(report.residuals_to_dataframe(), args.residuals_out)

    if args.plot_dir is not None:
        _write_csv(report.force_pairs_dataframe(), args.plot_dir / "force_pairs.csv")
        _write_csv(
            report.indentation_pairs_dataframe(),
            args.plot_dir / "indentation_pairs.csv",
        )
        _write_csv(
            report.per_diameter_to_dataframe(), args.plot_dir / "per_diameter.csv"
        )

    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    """Answer frames from stdin or a TCP port with predictions"""
    model = load_model(args.model)
    try:
        if args.port is None:
            serve_stdio(model)
        else:
            serve_tcp(model, args.port)
    except KeyboardInterrupt:
        logging.info("Interrupted, shutting down")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fibercal",
        description="Self-calibration of a 7-channel optical fiber tactile sensor",
    )
    parser.add_argument("--version", action="version", version=VERSION)
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="More log output"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    def add(
        name: str, handler: Callable[[argparse.Namespace], int], **kwargs: str
    ) -> argparse.ArgumentParser:
        sub = commands.add_parser(name, help=handler.__doc__, **kwargs)
        sub.set_defaults(handler=handler)
        return sub

    simulate = add("simulate", cmd_simulate)
    simulate.add_argument("--config", type=Path, help="Simulation config file")
    simulate.add_argument(
        "--out", type=Path, required=True, help="Calibration dataset to write"
    )
    simulate.add_argument(
        "--test-out", type=Path, required=True, help="Test dataset to write"
    )
    simulate.add_argument("--seed", type=int, help="Override the configured seed")
    simulate.add_argument(
        "--responses-out", type=Path, help="Channel response curves to write"
    )

    calibrate_ = add(
        "calibrate",
        cmd_calibrate,
        epilog="The model file records its creation time. Set SOURCE_DATE_EPOCH to "
        "get byte-identical model files from repeated runs.",
    )
    calibrate_.add_argument("--dataset", type=Path, required=True)
    calibrate_.add_argument(
        "--model", type=Path, required=True, help="Model file to write"
    )

    predict_ = add("predict", cmd_predict)
    predict_.add_argument("--model", type=Path, required=True)
    predict_.add_argument("--dataset", type=Path, required=True)
    predict_.add_argument(
        "--out", type=Path, required=True, help="Dataset with predictions to write"
    )
    predict_.add_argument(
        "--full-precision",
        action="store_true",
        help="Write predictions with 17 significant digits instead of 6 decimals",
    )

    evaluate_ = add("evaluate", cmd_evaluate)
    evaluate_.add_argument("--model", type=Path, required=True)
    evaluate_.add_argument("--dataset", type=Path, required=True)
    evaluate_.add_argument(
        "--residuals-out", type=Path, help="Per-sample residual table to write"
    )
    evaluate_.add_argument(
        "--plot-dir", type=Path, help="Directory for real vs. predicted tables"
    )

    serve = add("serve", cmd_serve)
    serve.add_argument("--model", type=Path, required=True)
    serve.add_argument("--port", type=int, help="TCP port, stdin/stdout if omitted")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )

    try:
        return int(args.handler(args))
    except IdentifiabilityError as e:
        logging.error("%s", e)
        return EXIT_IDENTIFIABILITY_ERROR
    except FibercalError as e:
        logging.error("%s", e)
        return EXIT_CONFIGURATION_ERROR
    except OSError as e:
        logging.error("%s", e)
        return EXIT_IO_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
