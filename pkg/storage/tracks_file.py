"""
TracksFile: header "frames=F points=N", then one line per track with the
2F values x_1,y_1,...,x_F,y_F. Labels live in a companion file with one
integer per line.
"""
import re
from pathlib import Path
from typing import Optional, Union

import numpy as np

from core.datagen import TrajectorySet
from core.exceptions import FormatError
from storage.matrix_file import format_value, parse_float, read_text

HEADER_PATTERN = re.compile(r"^\s*frames\s*=\s*(\d+)\s+points\s*=\s*(\d+)\s*$")


def companion_labels_path(path: Union[str, Path]) -> Path:
    """tracks.txt -> tracks_labels.txt"""
    path = Path(path)
    return path.with_name(f"{path.stem}_labels{path.suffix or '.txt'}")


def is_tracks_text(first_line: str) -> bool:
    return first_line.lstrip().startswith("frames=")


def save_labels(path: Union[str, Path], labels) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{int(v)}\n" for v in np.asarray(labels).reshape(-1)), encoding="utf-8")
    return path


def load_labels(path: Union[str, Path]) -> np.ndarray:
    path = Path(path)
    lines = read_text(path).splitlines()

    labels = []
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            labels.append(int(line.strip()))
        except ValueError:
            raise FormatError(f"label {line.strip()!r} is not an integer", line=number, path=str(path))
    if not labels:
        raise FormatError("no labels", path=str(path))
    return np.asarray(labels, dtype=np.int64)


def save_tracks(path: Union[str, Path], ts: TrajectorySet, write_labels: bool = True) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"frames={ts.num_frames} points={ts.num_points}"]
    for track in ts.tracks:
        lines.append(",".join(format_value(v) for v in track.reshape(-1)))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    if write_labels and ts.labels is not None:
        save_labels(companion_labels_path(path), ts.labels)
    return path


def parse_tracks(lines, path: str = "<tracks>") -> np.ndarray:
    """N x F x 2 array from TracksFile lines"""
    lines = list(lines)
    if not lines:
        raise FormatError("empty file", line=1, path=path)
    match = HEADER_PATTERN.match(lines[0])
    if not match:
        raise FormatError(f"header must be 'frames=F points=N', got {lines[0].strip()!r}",
                          line=1, path=path)
    frames, points = int(match.group(1)), int(match.group(2))
    if frames < 1 or points < 1:
        raise FormatError(f"declared {frames} frames and {points} points", line=1, path=path)

    tracks = np.empty((points, frames, 2), dtype=np.float64)
    count = 0
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        if count >= points:
            raise FormatError(f"more than the declared {points} tracks", line=number, path=path)
        values = line.split(",")
        if len(values) != 2 * frames:
            raise FormatError(f"expected {2 * frames} values, found {len(values)}",
                              line=number, path=path)
        tracks[count] = np.array([parse_float(v, number, path) for v in values]).reshape(frames, 2)
        count += 1

    if count != points:
        raise FormatError(f"declared {points} tracks, found {count}", line=len(lines), path=path)
    return tracks


def load_tracks(path: Union[str, Path], labels_path: Optional[Union[str, Path]] = None) -> TrajectorySet:
    """Tracks in file order; labels attached when the companion file exists"""
    path = Path(path)
    tracks = parse_tracks(read_text(path).splitlines(), path=str(path))

    labels_path = Path(labels_path) if labels_path else companion_labels_path(path)
    labels = load_labels(labels_path) if labels_path.exists() else None
    if labels is not None and labels.size != tracks.shape[0]:
        raise FormatError(f"{labels.size} labels for {tracks.shape[0]} tracks", path=str(labels_path))

    return TrajectorySet(tracks=tracks, labels=labels)
