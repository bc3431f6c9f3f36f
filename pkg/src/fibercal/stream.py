"""Line protocol of the streaming inference server.

Each input line holds the seven normalized intensity changes of one frame, separated
by commas. Each input line is answered by exactly one output line, in input order::

    fx,fy,fz,depth_mm,diameter_mm,flags

Numbers have a fixed number of decimals and several flags are joined with ``|``. A
line that cannot be processed is answered with ``ERR,<reason>`` and the stream
continues with the next line.

"""

import logging
import socketserver
import sys
from typing import BinaryIO, Iterable, Iterator, Optional, TextIO

from fibercal.calibration import recover_force
from fibercal.constants import (
    DEFAULT_SERVE_HOST,
    FLAGS_SEPARATOR,
    NUMBER_OF_CHANNELS,
    STREAM_DECIMALS,
    STREAM_ERROR_PREFIX,
)
from fibercal.errors import FibercalError, ParseError, ShapeError
from fibercal.models import CalibrationModel, IntensityFrame, Prediction


def parse_frame_line(line: str) -> IntensityFrame:
    """Parse one input line into a frame.

    :raises: :exc:`~fibercal.errors.ParseError` unless the line holds exactly seven
        finite numbers

    """
    fields = line.strip().split(",")
    if len(fields) != NUMBER_OF_CHANNELS:
        raise ParseError(f"expected {NUMBER_OF_CHANNELS} channels")

    try:
        values = tuple(float(field) for field in fields)
    except ValueError as e:
        raise ParseError(f"invalid number in {line.strip()!r}") from e

    try:
        return IntensityFrame(pd=values)
    except ShapeError as e:
        raise ParseError(str(e)) from e


def format_value(value: float) -> str:
    formatted = f"{value:.{STREAM_DECIMALS}f}"
    if formatted.startswith("-") and not formatted.strip("-0."):
        return formatted[1:]
    return formatted


def format_flags(flags: Iterable[str]) -> str:
    return FLAGS_SEPARATOR.join(sorted(flags))


def prediction_fields(prediction: Prediction) -> list[str]:
    """Formatted fields ``fx, fy, fz, depth_mm, diameter_mm, flags`` of a prediction"""
    force = prediction.force
    indentation = prediction.indentation
    return [
        *(
            format_value(v)
            for v in (
                force.fx,
                force.fy,
                force.fz,
                indentation.depth,
                indentation.diameter,
            )
        ),
        format_flags(prediction.flags),
    ]


def format_prediction(prediction: Prediction) -> str:
    """Render a prediction as an output line, without line break"""
    return ",".join(prediction_fields(prediction))


def format_error(error: Exception) -> str:
    reason = str(error).replace(",", ";").replace("\n", " ")
    return f"{STREAM_ERROR_PREFIX},{reason}"


def process_line(line: str, model: CalibrationModel) -> str:
    """Answer one input line, without line break"""
    try:
        return format_prediction(recover_force(parse_frame_line(line), model))
    except FibercalError as e:
        logging.debug("Rejected stream line %r: %s", line, e)
        return format_error(e)


def serve_lines(lines: Iterable[str], model: CalibrationModel) -> Iterator[str]:
    """Answer every line of ``lines`` in order"""
    for line in lines:
        yield process_line(line, model)


def decode_lines(lines: Iterable[str | bytes]) -> Iterator[str]:
    """Decode raw input lines, escaping bytes that are not valid UTF-8"""
    for line in lines:
        if isinstance(line, bytes):
            yield line.decode("utf-8", errors="backslashreplace")
        else:
            yield line


def serve_stdio(
    model: CalibrationModel,
    stdin: Optional[BinaryIO | TextIO] = None,
    stdout: Optional[TextIO] = None,
) -> None:
    """Answer lines from ``stdin`` on ``stdout`` until end of input

    ``stdin`` defaults to the binary buffer of :data:`sys.stdin`, so input that is not
    valid UTF-8 is answered line by line like any other malformed input.

    """
    stdin = stdin if stdin is not None else sys.stdin.buffer
    stdout = stdout if stdout is not None else sys.stdout
    for answer in serve_lines(decode_lines(stdin), model):
        stdout.write(answer + "\n")
        stdout.flush()


class FrameStreamHandler(socketserver.StreamRequestHandler):
    """Answers the lines of one client until it closes the connection"""

    server: "FrameStreamServer"

    def handle(self) -> None:
        logging.info("Client %s:%d connected", *self.client_address[:2])
        for line in decode_lines(self.rfile):
            answer = process_line(line, self.server.model)
            self.wfile.write((answer + "\n").encode("utf-8"))
        logging.info("Client %s:%d disconnected", *self.client_address[:2])


class FrameStreamServer(socketserver.TCPServer):
    """TCP server handling one client at a time

    Further clients wait in the listen backlog until the current one disconnects.

    :param server_address: ``(host, port)`` to bind to, port 0 picks a free port
    :param model: Model shared by all connections

    """

    allow_reuse_address = True

    def __init__(
        self, server_address: tuple[str, int], model: CalibrationModel
    ) -> None:
        self.model = model
        super().__init__(server_address, FrameStreamHandler)


def serve_tcp(
    model: CalibrationModel, port: int, host: str = DEFAULT_SERVE_HOST
) -> None:
    """Serve the line protocol on ``host:port`` until interrupted"""
    with FrameStreamServer((host, port), model) as server:
        logging.info("Serving on %s:%d", *server.server_address[:2])
        server.serve_forever()
