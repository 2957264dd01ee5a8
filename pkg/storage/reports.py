import json
from pathlib import Path
from typing import Dict, Union

import numpy as np


def _default(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def dumps_report(payload: Dict) -> str:
    """Deterministic JSON: sorted keys, fixed indentation"""
    return json.dumps(payload, sort_keys=True, indent=2, default=_default) + "\n"


def write_json_report(path: Union[str, Path], payload: Dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_report(payload), encoding="utf-8")
    return path
