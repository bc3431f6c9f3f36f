"""Calibration model file.

The model file is a JSON document validated by pydantic models that derive from
:class:`FileBaseModel` and convert into :ref:`user models <user_models>`. Matrices
are stored with their dimensions and row-major entries. Floats are written with the
shortest representation that parses back to the same value, so a model survives a
round trip bit for bit.

"""

import json
import logging
from abc import abstractmethod
from datetime import datetime
from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    NonNegativeInt,
    PositiveInt,
    ValidationError,
    model_validator,
)

from fibercal.constants import FORCE_UNIT, LENGTH_UNIT, MODEL_FORMAT_VERSION
from fibercal.errors import ModelVersionError, SchemaError, ShapeError
from fibercal.linalg import Matrix, as_matrix
from fibercal.models import CalibrationMetadata, CalibrationModel, ResidualNorms


class FileBaseModel(BaseModel):
    """Base class for the content of files read and written by fibercal

    Unknown fields and non-finite numbers are rejected.

    """

    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)

    @abstractmethod
    def to_user_model(self, *args: Any, **kwargs: Any) -> Any:
        """Convert to a model that will be returned to the user."""


class MatrixModel(FileBaseModel):
    rows: PositiveInt
    cols: PositiveInt
    data: list[float]

    @model_validator(mode="after")
    def _check_size(self) -> "MatrixModel":
        if len(self.data) != self.rows * self.cols:
            raise ValueError(
                f"{self.rows}x{self.cols} matrix needs {self.rows * self.cols}"
                f" entries, got {len(self.data)}"
            )
        return self

    @classmethod
    def from_user_model(cls, matrix: Matrix) -> "MatrixModel":
        rows, cols = matrix.shape
        return cls(rows=rows, cols=cols, data=matrix.ravel().tolist())

    def to_user_model(self) -> Matrix:
        """Convert into a read-only matrix"""
        return as_matrix(np.array(self.data).reshape(self.rows, self.cols))


class ResidualNormsModel(FileBaseModel):
    indentation_gain: float
    indent_coupling: float
    force_gain: float

    def to_user_model(self) -> ResidualNorms:
        """Convert into a :ref:`user model <user_models>`"""

        return ResidualNorms(
            indentation_gain=self.indentation_gain,
            indent_coupling=self.indent_coupling,
            force_gain=self.force_gain,
        )


class MetadataModel(FileBaseModel):
    indentation_samples: NonNegativeInt
    shear_samples: NonNegativeInt
    residual_norms: ResidualNormsModel
    created_at: datetime
    length_unit: Literal["mm"] = LENGTH_UNIT
    force_unit: Literal["N"] = FORCE_UNIT

    def to_user_model(self) -> CalibrationMetadata:
        """Convert into a :ref:`user model <user_models>`"""

        return CalibrationMetadata(
            indentation_samples=self.indentation_samples,
            shear_samples=self.shear_samples,
            residual_norms=self.residual_norms.to_user_model(),
            created_at=self.created_at,
            length_unit=self.length_unit,
            force_unit=self.force_unit,
        )


class ModelFile(FileBaseModel):
    format_version: Literal[1] = MODEL_FORMAT_VERSION
    r_gain: MatrixModel
    k_gain: MatrixModel
    c_gain: MatrixModel
    meta: MetadataModel

    @classmethod
    def from_user_model(cls, model: CalibrationModel) -> "ModelFile":
        meta = model.meta
        norms = meta.residual_norms
        return cls(
            r_gain=MatrixModel.from_user_model(model.r_gain),
            k_gain=MatrixModel.from_user_model(model.k_gain),
            c_gain=MatrixModel.from_user_model(model.c_gain),
            meta=MetadataModel(
                indentation_samples=meta.indentation_samples,
                shear_samples=meta.shear_samples,
                residual_norms=ResidualNormsModel(
                    indentation_gain=norms.indentation_gain,
                    indent_coupling=norms.indent_coupling,
                    force_gain=norms.force_gain,
                ),
                created_at=meta.created_at,
            ),
        )

    def to_user_model(self) -> CalibrationModel:
        """Convert into a :ref:`user model <user_models>`"""

        return CalibrationModel(
            r_gain=self.r_gain.to_user_model(),
            k_gain=self.k_gain.to_user_model(),
            c_gain=self.c_gain.to_user_model(),
            meta=self.meta.to_user_model(),
        )


def save_model(model: CalibrationModel, path: str | Path) -> None:
    """Write ``model`` to a model file"""
    content = ModelFile.from_user_model(model).model_dump_json(indent=2)
    Path(path).write_text(content + "\n", encoding="utf-8")


def load_model(path: str | Path) -> CalibrationModel:
    """Read a model file written by :func:`save_model`.

    :raises: :exc:`~fibercal.errors.ModelVersionError` if the file was written in
        another format version

    :raises: |schema-error|, e.g. missing or unknown fields and matrices of the
        wrong shape

    """
    try:
        content = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SchemaError(f"Model file {path} is not valid JSON: {e}") from e
    except UnicodeDecodeError as e:
        raise SchemaError(f"Model file {path} is not valid UTF-8: {e}") from e

    if not isinstance(content, dict):
        raise SchemaError(f"Model file {path} must contain a JSON object")
    if "format_version" not in content:
        raise SchemaError(f"Model file {path} has no format_version")

    version = content["format_version"]
    if isinstance(version, bool) or version != MODEL_FORMAT_VERSION:
        raise ModelVersionError(version, MODEL_FORMAT_VERSION)

    try:
        model = ModelFile.model_validate(content).to_user_model()
    except ValidationError as e:
        raise SchemaError(f"Invalid model file {path}: {e}") from e
    except ShapeError as e:
        raise SchemaError(f"Invalid model file {path}: {e}") from e

    logging.debug("Loaded model from %s", path)
    return model
