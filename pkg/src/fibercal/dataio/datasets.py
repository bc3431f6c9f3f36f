import logging
import re
from pathlib import Path
from typing import Iterable, Optional

import pandas

from fibercal.constants import CHANNEL_NAMES, DATASET_FLOAT_FORMAT
from fibercal.errors import ParseError, SchemaError, ShapeError
from fibercal.models import (
    ForceVector,
    IndentationState,
    IntensityFrame,
    Phase,
    Sample,
    Samples,
    samples_from,
)
from fibercal.schema import validate_dataset_columns
from fibercal.validators import warn_out_of_range

_PD_COLUMNS = tuple(name.lower() for name in CHANNEL_NAMES)
_FORCE_COLUMNS = ("fx", "fy", "fz")
_INDENTATION_COLUMNS = ("depth_mm", "radius_mm")

# pandas reports the physical line, e.g. "Expected 13 fields in line 5, saw 14"
_PANDAS_LINE_PATTERN = re.compile(r"line (\d+)")


def _parse_float(value: object, column: str, line: int) -> float:
    if not isinstance(value, str) or not value.strip():
        raise ParseError(f"missing value in column {column}", line=line)
    try:
        return float(value)
    except ValueError as e:
        raise ParseError(
            f"invalid number {value!r} in column {column}", line=line
        ) from e


def _parse_optional(
    row: dict[str, object], columns: tuple[str, ...], line: int
) -> Optional[tuple[float, ...]]:
    """Values of ``columns``, or ``None`` if all of them are empty"""
    cells = [row.get(column, "") for column in columns]
    if all(isinstance(cell, str) and not cell.strip() for cell in cells):
        return None
    return tuple(
        _parse_float(cell, column, line) for cell, column in zip(cells, columns)
    )


def _parse_row(row: dict[str, object], line: int) -> Sample:
    phase = row["phase"]
    try:
        phase = Phase(phase)
    except ValueError as e:
        raise ParseError(f"unknown phase {phase!r}", line=line) from e

    pd = tuple(_parse_float(row[column], column, line) for column in _PD_COLUMNS)
    force = _parse_optional(row, _FORCE_COLUMNS, line)
    indentation = _parse_optional(row, _INDENTATION_COLUMNS, line)

    try:
        return Sample(
            frame=IntensityFrame(pd=pd),
            phase=phase,
            force=ForceVector(*force) if force is not None else None,
            indentation=(
                IndentationState(*indentation) if indentation is not None else None
            ),
        )
    except (ShapeError, SchemaError) as e:
        raise ParseError(str(e), line=line) from e


def load_dataset(path: str | Path) -> Samples:
    """Load a dataset from a CSV file.

    The file has a header row naming the columns ``phase`` and ``pd1`` to ``pd7``
    and, optionally, the ground truth columns ``fx``, ``fy``, ``fz``, ``depth_mm``
    and ``radius_mm``. Empty cells stand for absent ground truth. A file holding only
    the header is an empty dataset.

    :param path: Path of the CSV file

    :raises: :exc:`~fibercal.errors.SchemaError` on unknown or missing columns

    :raises: :exc:`~fibercal.errors.ParseError` on a malformed row, naming its line

    :returns: The samples in file order

    """
    try:
        df = pandas.read_csv(
            path,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=False,
            encoding="utf-8",
        )
    except pandas.errors.EmptyDataError as e:
        raise SchemaError(f"Dataset {path} has no header row") from e
    except UnicodeDecodeError as e:
        raise ParseError(f"Dataset {path} is not valid UTF-8: {e}") from e
    except pandas.errors.ParserError as e:
        match = _PANDAS_LINE_PATTERN.search(str(e))
        raise ParseError(
            f"malformed row in {path}",
            line=int(match.group(1)) if match else None,
        ) from e

    validate_dataset_columns(df.columns)

    samples = Samples(
        _parse_row(row, line)
        for line, row in enumerate(df.to_dict(orient="records"), start=2)
    )
    for index, sample in enumerate(samples):
        warn_out_of_range(index, sample)

    logging.debug("Loaded %d samples from %s", len(samples), path)
    return samples


def save_dataset(samples: Iterable[Sample], path: str | Path) -> None:
    """Write samples to a CSV file that :func:`load_dataset` reads back losslessly"""
    samples_from(samples).to_dataframe().to_csv(
        path,
        index=False,
        float_format=DATASET_FLOAT_FORMAT,
        lineterminator="\n",
        encoding="utf-8",
    )
