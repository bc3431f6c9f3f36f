from typing import Sequence


class FibercalError(Exception):
    """Base class for all errors raised by fibercal.

    In many situations this error will be raised with a concrete message describing the
    issue.

    """


class ShapeError(FibercalError):
    """Matrix or frame of the wrong shape

    Possible reasons:

    - Inner dimensions of a matrix product don't agree
    - An intensity frame doesn't have exactly 7 channels
    - A matrix contains NaN or infinite entries

    """


class IdentifiabilityError(FibercalError):
    """Calibration data doesn't excite all factors

    A least-squares fit or solve needs regressors (or a gain matrix) of full rank.
    Typical causes are calibration data recorded with a single indenter, at a single
    depth or without shear motion along one axis.

    :param message: Description of the problem
    :param rank: Numerical rank that was found
    :param expected_rank: Rank that is required
    :param factors: Names of the factors that are not excited

    """

    def __init__(
        self,
        message: str,
        *,
        rank: int,
        expected_rank: int,
        factors: Sequence[str] = (),
    ) -> None:
        super().__init__(message)
        self.rank = rank
        self.expected_rank = expected_rank
        self.factors = tuple(factors)


class ConfigurationError(FibercalError):
    """Invalid configuration

    Raised for unusable grid or sensor settings (e.g. a non-positive grid step or an
    empty list of diameters) and for calls that lack required inputs, such as
    evaluating a model on an empty dataset.

    """


class DeadChannelError(ConfigurationError):
    """A photodiode channel has no rest intensity

    The baseline intensity of a channel is not positive, so intensity changes cannot be
    normalized. Check the wiring of the photodiode and the LED of that fiber.

    :param channel: Name of the dead channel, e.g. ``PD4``

    """

    def __init__(self, channel: str) -> None:
        super().__init__(f"Channel {channel} has no positive rest intensity")
        self.channel = channel


class SchemaError(FibercalError):
    """File content doesn't follow the expected schema

    Raised for datasets with missing or unknown columns and for model or config
    files with missing or invalid fields.

    """


class ParseError(SchemaError):
    """A dataset row couldn't be parsed

    :param message: Description of the problem
    :param line: 1-based line number in the file (the header is line 1)

    """

    def __init__(self, message: str, *, line: int | None = None) -> None:
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ModelVersionError(SchemaError):
    """The model file was written in an unsupported format version

    :param found: Version stated in the file
    :param supported: Version this package reads and writes

    """

    def __init__(self, found: object, supported: int) -> None:
        super().__init__(
            f"Unsupported model file version {found!r}, expected {supported}"
        )
        self.found = found
        self.supported = supported
