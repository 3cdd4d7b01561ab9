"""Telemetry CSV layout, writer and parser.

One row per control tick. Floats are written with ``repr`` so a parsed file
reproduces the in-memory rows bit for bit; booleans are 0/1; an absent VIO
pose is an empty cell. The last column carries ``|``-separated annotations:
simulation events as ``Kind@time``, phase changes as
``phase:From>To:guard`` and logic violations as ``violation:text``.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence, TextIO

from tubelaunch.errors import TelemetryParseError

TRUTH_COLUMNS = ("x", "y", "z", "vx", "vy", "vz", "qw", "qx", "qy", "qz", "wx", "wy", "wz")
SENSOR_COLUMNS = (
    "accel_x", "accel_y", "accel_z", "gyro_x", "gyro_y", "gyro_z",
    "baro_alt", "baro_valid", "range", "range_valid",
    "vio_x", "vio_y", "vio_z", "vio_yaw", "vio_var",
)
BOOL_COLUMNS = frozenset({"baro_valid", "range_valid"})
OPTIONAL_COLUMNS = frozenset({"vio_x", "vio_y", "vio_z", "vio_yaw"})
RUN_END = "RunEnd"


def columns(n_rotors: int) -> tuple[str, ...]:
    return ("time",) + TRUTH_COLUMNS + SENSOR_COLUMNS + ("phase",) + tuple(f"T{i + 1}" for i in range(n_rotors)) + ("events",)


def _cell(name: str, value) -> str:
    if name == "phase" or name == "events":
        return value
    if name in BOOL_COLUMNS:
        return "1" if value else "0"
    if value is None:
        return ""
    return repr(float(value))


def format_row(cols: Sequence[str], row: Sequence) -> list[str]:
    return [_cell(c, v) for c, v in zip(cols, row)]


class TelemetryWriter:
    """Streams rows to a CSV file, flushing each so a crash leaves a partial file."""

    def __init__(self, path, n_rotors: int):
        self.path = Path(path)
        self.cols = columns(n_rotors)
        self._fh: TextIO = open(self.path, "w", newline="")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(self.cols)
        self._fh.flush()

    def write(self, row: Sequence) -> None:
        self._w.writerow(format_row(self.cols, row))

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.flush()
            self._fh.close()

    def __enter__(self) -> "TelemetryWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def dumps(rows: Iterable[Sequence], n_rotors: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = columns(n_rotors)
    w.writerow(cols)
    for r in rows:
        w.writerow(format_row(cols, r))
    return buf.getvalue()


def _parse_cell(name: str, text: str, line: int):
    if name == "phase" or name == "events":
        return text
    if name in BOOL_COLUMNS:
        if text not in ("0", "1"):
            raise TelemetryParseError(f"column {name}: expected 0 or 1, got {text!r}", line)
        return text == "1"
    if text == "" and name in OPTIONAL_COLUMNS:
        return None
    try:
        return float(text)
    except ValueError:
        raise TelemetryParseError(f"column {name}: not a number: {text!r}", line) from None


def parse(text: str) -> tuple[tuple[str, ...], list[tuple]]:
    """Parse telemetry text into (columns, rows). Raises :class:`TelemetryParseError`."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise TelemetryParseError("empty file", 1) from None
    n_rot = sum(1 for h in header if h.startswith("T") and h[1:].isdigit())
    cols = columns(n_rot)
    if tuple(header) != cols:
        raise TelemetryParseError("unexpected header", 1)
    rows = []
    prev_t = -math.inf
    for line_no, fields in enumerate(reader, start=2):
        if len(fields) != len(cols):
            raise TelemetryParseError(f"expected {len(cols)} fields, got {len(fields)}", line_no)
        row = tuple(_parse_cell(c, f, line_no) for c, f in zip(cols, fields))
        if not row[0] >= prev_t:
            raise TelemetryParseError("time is not monotone", line_no)
        prev_t = row[0]
        rows.append(row)
    return cols, rows


def read(path) -> tuple[tuple[str, ...], list[tuple]]:
    return parse(Path(path).read_text())


def annotation_event(kind: str, time: float, index: Optional[int] = None) -> str:
    label = kind if index is None else f"{kind}({index})"
    return f"{label}@{time!r}"


def annotation_phase(source: str, target: str, guard: str) -> str:
    return f"phase:{source}>{target}:{guard}"


def annotation_violation(text: str) -> str:
    return f"violation:{text}"


def split_annotations(cell: str) -> list[str]:
    return [a for a in cell.split("|") if a] if cell else []
