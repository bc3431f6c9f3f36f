from __future__ import annotations

import typing
from dataclasses import fields, is_dataclass
from types import UnionType
from typing import TYPE_CHECKING, Iterable, Sequence

import pandas

from fibercal.errors import SchemaError

if TYPE_CHECKING:  # pragma: no cover
    from _typeshed import DataclassInstance

#: Columns of a dataset file, in file order.
DATASET_COLUMNS = (
    "phase",
    "pd1",
    "pd2",
    "pd3",
    "pd4",
    "pd5",
    "pd6",
    "pd7",
    "fx",
    "fy",
    "fz",
    "depth_mm",
    "radius_mm",
)

#: Columns a dataset file must contain. Ground truth columns may be empty.
REQUIRED_DATASET_COLUMNS = DATASET_COLUMNS[:8]


def flat_dataclass_columns(
    dataclass_type: type[DataclassInstance],
    path_separator: str = ".",
    _parents: tuple[str, ...] = (),
) -> list[str]:
    """Column names of ``dataclass_type`` with nested dataclasses flattened.

    Each member of an optional or union typed field contributes its columns, so
    ``force: ForceVector | None`` yields ``force.fx``, ``force.fy`` and ``force.fz``.

    """
    hints = typing.get_type_hints(dataclass_type)
    columns: list[str] = []

    for field in fields(dataclass_type):
        path = (*_parents, field.name)
        hint = hints[field.name]
        if typing.get_origin(hint) in (UnionType, typing.Union):
            members = typing.get_args(hint)
        else:
            members = (hint,)

        for member in members:
            if isinstance(member, type) and is_dataclass(member):
                columns += flat_dataclass_columns(member, path_separator, path)
            elif member is not type(None):
                columns.append(path_separator.join(path))

    return list(dict.fromkeys(columns))


def dataframe_ensure_schema(
    df: pandas.DataFrame,
    dataclass_type: type[DataclassInstance],
    path_separator: str = ".",
    extra_columns: Sequence[str] = (),
) -> pandas.DataFrame:
    """Conform ``df`` to the flattened columns of ``dataclass_type``

    Columns follow the order of the dataclass fields, then ``extra_columns``. Missing
    columns are added as NaN and columns outside the schema are dropped.

    """
    columns = [
        *flat_dataclass_columns(dataclass_type, path_separator=path_separator),
        *extra_columns,
    ]
    return df.reindex(columns=columns)


def validate_dataset_columns(columns: Iterable[str]) -> list[str]:
    """Check the header of a dataset file.

    :raises: :exc:`~fibercal.errors.SchemaError` on unknown, duplicate or missing
        columns

    :returns: The columns, unchanged

    """
    columns = list(columns)

    unknown = [col for col in columns if col not in DATASET_COLUMNS]
    if unknown:
        raise SchemaError(f"Unknown dataset column(s): {', '.join(unknown)}")

    duplicated = sorted({col for col in columns if columns.count(col) > 1})
    if duplicated:
        raise SchemaError(f"Duplicate dataset column(s): {', '.join(duplicated)}")

    missing = [col for col in REQUIRED_DATASET_COLUMNS if col not in columns]
    if missing:
        raise SchemaError(f"Missing dataset column(s): {', '.join(missing)}")

    return columns
