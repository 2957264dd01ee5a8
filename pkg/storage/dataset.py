"""
Benchmark dataset adapter.

    <dataset>/<sequence>/tracks.txt           TracksFile
    <dataset>/<sequence>/tracks_labels.txt    ground truth
    <dataset>/<sequence>/sequence.json        optional {"group": ...}

Raw upstream distributions are converted to this layout outside the
library.
"""
import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from config import pipeline_rules
from core.datagen import TrajectorySet, trajectory_matrix
from core.exceptions import FormatError, InputError
from storage.matrix_file import read_text
from storage.tracks_file import companion_labels_path, load_tracks, save_tracks
from utils.logger import logger

TRACKS_NAME = "tracks.txt"
META_NAME = "sequence.json"


@dataclass
class Sequence:
    name: str
    group: str
    tracks: TrajectorySet

    @property
    def matrix(self) -> np.ndarray:
        return trajectory_matrix(self.tracks)

    @property
    def truth(self) -> np.ndarray:
        return self.tracks.labels

    @property
    def num_motions(self) -> int:
        return int(np.unique(self.tracks.labels).size)


def read_group(directory: Path) -> str:
    meta_path = directory / META_NAME
    if not meta_path.exists():
        return "synthetic"
    try:
        meta = json.loads(read_text(meta_path))
    except json.JSONDecodeError as e:
        raise FormatError(f"invalid JSON: {e.msg}", line=e.lineno, path=str(meta_path))
    group = meta.get("group", "synthetic")
    if group not in pipeline_rules.SEQUENCE_GROUPS:
        raise FormatError(f"unknown group {group!r}", path=str(meta_path))
    return group


def discover_sequences(root: Union[str, Path]) -> List[Path]:
    """Sequence directories under root, sorted by name"""
    root = Path(root)
    if not root.is_dir():
        raise InputError(f"dataset directory not found: {root}")
    return sorted(p for p in root.iterdir() if p.is_dir() and (p / TRACKS_NAME).exists())


def load_sequence(directory: Union[str, Path]) -> Optional[Sequence]:
    """Load one sequence; None when it has no ground truth"""
    directory = Path(directory)
    tracks_path = directory / TRACKS_NAME
    if not companion_labels_path(tracks_path).exists():
        logger.warning(f"Sequence {directory.name} has no ground truth, skipped")
        return None
    return Sequence(
        name=directory.name,
        group=read_group(directory),
        tracks=load_tracks(tracks_path),
    )


def save_sequence(root: Union[str, Path], name: str, tracks: TrajectorySet,
                  group: str = "synthetic") -> Path:
    """Write a sequence in the adapter layout"""
    directory = Path(root) / name
    save_tracks(directory / TRACKS_NAME, tracks)
    (directory / META_NAME).write_text(json.dumps({"group": group}, sort_keys=True) + "\n",
                                       encoding="utf-8")
    return directory
