"""CSV input and output shared by the command line.

Input files need a header row; fields are comma separated, numbers use a
decimal point regardless of locale, and blank lines are skipped. A
malformed row aborts the read with its line number.
"""
import csv
import io
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence, TextIO, Tuple, Union

from pydantic import ValidationError

from .curve_fit import PointSet
from .errors import CsvFormatError
from .exp_models import TimeSeries
from .geometry import Point2D

PathLike = Union[str, Path]
Row = Tuple[int, Dict[str, str]]


def read_rows(path: PathLike, required: Sequence[str]) -> List[Row]:
    """Return (line number, row) pairs; every column in ``required`` must be present."""
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise CsvFormatError(f"cannot read {path}: {e}") from e
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise CsvFormatError(f"{path} is not valid UTF-8 ({e.reason})",
                             line=data.count(b"\n", 0, e.start) + 1) from e

    rows: List[Row] = []
    header = None
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        for record in reader:
            line = reader.line_num
            if not record or all(not field.strip() for field in record):
                continue
            if header is None:
                header = [h.strip() for h in record]
                missing = [c for c in required if c not in header]
                if missing:
                    raise CsvFormatError(f"header lacks column(s) {', '.join(missing)}", line=line)
                continue
            if len(record) != len(header):
                raise CsvFormatError(f"expected {len(header)} fields, got {len(record)}", line=line)
            rows.append((line, {h: v.strip() for h, v in zip(header, record)}))
    except csv.Error as e:
        raise CsvFormatError(str(e), line=reader.line_num) from e
    if header is None:
        raise CsvFormatError(f"{path} has no header row")
    return rows


def parse_float(value: str, line: int, column: str) -> float:
    try:
        number = float(value)
    except ValueError as e:
        raise CsvFormatError(f"column {column!r}: {value!r} is not a number", line=line) from e
    if not math.isfinite(number):
        raise CsvFormatError(f"column {column!r}: {value!r} is not finite", line=line)
    return number


def read_points(path: PathLike) -> PointSet:
    rows = read_rows(path, ("x", "y"))
    if len(rows) < 2:
        raise CsvFormatError(f"{path} needs at least two points, found {len(rows)}")
    xs = [parse_float(row["x"], line, "x") for line, row in rows]
    ys = [parse_float(row["y"], line, "y") for line, row in rows]
    try:
        return PointSet.from_xy(xs, ys)
    except ValidationError as e:
        raise CsvFormatError(f"{path}: {e}") from e


def read_cells(path: PathLike) -> List[Tuple[str, Point2D]]:
    cells = []
    for line, row in read_rows(path, ("id", "x", "y")):
        point = Point2D(x=parse_float(row["x"], line, "x"), y=parse_float(row["y"], line, "y"))
        cells.append((row["id"], point))
    return cells


def read_series(path: PathLike) -> TimeSeries:
    rows = read_rows(path, ("t", "y"))
    pairs = [(parse_float(row["t"], line, "t"), parse_float(row["y"], line, "y")) for line, row in rows]
    if len(pairs) < 2:
        raise CsvFormatError(f"{path} needs at least two samples, found {len(pairs)}")
    try:
        return TimeSeries.from_pairs(pairs)
    except ValidationError as e:
        raise CsvFormatError(f"{path}: {e}") from e


def format_value(value: Any) -> str:
    """Floats use repr, the shortest text that parses back to the same double."""
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def write_rows(stream: TextIO, columns: Sequence[str], rows: Iterable[Mapping[str, Any]]):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row[c]) for c in columns])


def write_csv(path: PathLike, columns: Sequence[str], rows: Iterable[Mapping[str, Any]]):
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as f:
        write_rows(f, columns, rows)
