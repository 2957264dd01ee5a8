"""
MatrixFile: plain-text CSV, header "rows,cols", then one comma-separated
line per row.
"""
import csv
import io
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from core.exceptions import FormatError

# 17 significant digits round-trip float64 exactly
VALUE_FORMAT = ".17g"


def format_value(value: float) -> str:
    return format(float(value), VALUE_FORMAT)


def parse_float(text: str, line: int, path: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise FormatError(f"cannot parse {text.strip()!r} as a number", line=line, path=path)
    if not np.isfinite(value):
        raise FormatError(f"non-finite value {text.strip()!r}", line=line, path=path)
    return value


def dumps_matrix(M) -> str:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise FormatError(f"only 2-D matrices can be written, got shape {M.shape}")
    out = io.StringIO()
    out.write(f"{M.shape[0]},{M.shape[1]}\n")
    for row in M:
        out.write(",".join(format_value(v) for v in row) + "\n")
    return out.getvalue()


def parse_matrix(lines: Iterable[str], path: str = "<matrix>") -> np.ndarray:
    """Parse MatrixFile text, reporting 1-based line numbers on failure"""
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None:
        raise FormatError("empty file", line=1, path=path)
    try:
        rows, cols = (int(v) for v in header)
    except ValueError:
        raise FormatError(f"header must be 'rows,cols', got {','.join(header)!r}", line=1, path=path)
    if rows < 1 or cols < 1:
        raise FormatError(f"declared shape {rows}x{cols} is empty", line=1, path=path)

    M = np.empty((rows, cols), dtype=np.float64)
    count = 0
    for values in reader:
        if not values or all(not v.strip() for v in values):
            continue
        line = reader.line_num
        if count >= rows:
            raise FormatError(f"more than the declared {rows} rows", line=line, path=path)
        if len(values) != cols:
            raise FormatError(f"expected {cols} values, found {len(values)}", line=line, path=path)
        M[count] = [parse_float(v, line, path) for v in values]
        count += 1

    if count != rows:
        raise FormatError(f"declared {rows} rows, found {count}", line=reader.line_num, path=path)
    return M


def decode_text(content: bytes, path: str) -> str:
    """UTF-8 text of raw file content"""
    try:
        return content.decode("utf-8")
    except UnicodeDecodeError as e:
        raise FormatError(f"not valid UTF-8 text (byte {e.start})", path=path)


def read_text(path: Union[str, Path]) -> str:
    path = Path(path)
    try:
        content = path.read_bytes()
    except OSError as e:
        raise FormatError(f"cannot read file: {e.strerror}", path=str(path))
    return decode_text(content, str(path))


def save_matrix(path: Union[str, Path], M) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_matrix(M), encoding="utf-8")
    return path


def load_matrix(path: Union[str, Path]) -> np.ndarray:
    path = Path(path)
    return parse_matrix(read_text(path).splitlines(), path=str(path))
