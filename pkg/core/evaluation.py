from concurrent.futures import ThreadPoolExecutor
from itertools import permutations
from typing import Dict, List, Literal, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, ValidationError

from config import pipeline_rules
from core.exceptions import DimensionError, InputError, NlsError, ParameterError
from core.nls import LocalBasisSet, NlsConfig, nls_segment
from utils.logger import logger

SequenceGroup = Literal["checker", "traffic", "articulated", "synthetic"]


class SequenceResult(BaseModel):
    """Outcome of segmenting one sequence"""
    name: str
    group: SequenceGroup = "synthetic"
    num_motions: int = Field(..., ge=1)
    error_rate: float = Field(..., ge=0, le=1)
    rank: Optional[int] = None
    data_driven_index: Optional[int] = None
    threshold_index: Optional[int] = None
    eta: Optional[float] = None
    seed: Optional[int] = None

    def to_report(self) -> Dict:
        """Schema-stable report row"""
        return {
            "sequence": self.name,
            "group": self.group,
            "motions": self.num_motions,
            "error": self.error_rate,
            "r": self.rank,
            "T_d": self.data_driven_index,
            "threshold_index": self.threshold_index,
            "eta": self.eta,
            "seed": self.seed,
        }


def contingency_table(pred, truth) -> np.ndarray:
    """Counts of (predicted label, true label) pairs"""
    _, pred_idx = np.unique(pred, return_inverse=True)
    _, truth_idx = np.unique(truth, return_inverse=True)
    table = np.zeros((pred_idx.max() + 1, truth_idx.max() + 1), dtype=np.int64)
    np.add.at(table, (pred_idx, truth_idx), 1)
    return table


def misclassification_rate(pred, truth) -> float:
    """
    Fraction of misplaced points under the best one-to-one matching of
    predicted to true labels.

    Matching is exhaustive over permutations, so at most
    MAX_MATCHING_LABELS distinct labels are accepted on either side.
    """
    pred = np.asarray(pred).reshape(-1)
    truth = np.asarray(truth).reshape(-1)
    if pred.shape != truth.shape:
        raise DimensionError(f"{pred.size} predicted labels vs {truth.size} true labels")
    if pred.size == 0:
        raise InputError("cannot score an empty labeling")

    table = contingency_table(pred, truth)
    if max(table.shape) > pipeline_rules.MAX_MATCHING_LABELS:
        raise ParameterError(
            f"label matching supports at most {pipeline_rules.MAX_MATCHING_LABELS} labels"
        )
    if table.shape[0] > table.shape[1]:
        table = table.T

    rows = np.arange(table.shape[0])
    best = max(
        int(table[rows, list(cols)].sum())
        for cols in permutations(range(table.shape[1]), table.shape[0])
    )
    return 1.0 - best / pred.size


def chordal_affinity(bases: LocalBasisSet) -> np.ndarray:
    """Squared chordal distances sum(sin^2 theta) between all pairs of local subspaces"""
    if isinstance(bases, LocalBasisSet):
        vectors = bases.vectors
    else:
        shapes = {b.vectors.shape for b in bases}
        if len(shapes) != 1:
            raise DimensionError(f"local bases of mixed shapes cannot be compared: {sorted(shapes)}")
        vectors = np.stack([b.vectors for b in bases])

    cross = np.einsum("iak,jal->ijkl", vectors, vectors)
    cosines = np.clip(np.linalg.svd(cross, compute_uv=False), 0.0, 1.0)
    sines_sq = 1.0 - cosines ** 2
    affinity = sines_sq.sum(axis=2)
    return (affinity + affinity.T) / 2


def _percent(value: float) -> str:
    return f"{100 * value:.2f}%"


def _summary(errors: pd.Series) -> Dict:
    return {
        "count": int(errors.size),
        "average": _percent(errors.mean()),
        "median": _percent(errors.median()),
        "average_value": float(errors.mean()),
        "median_value": float(errors.median()),
    }


def aggregate(results: List[SequenceResult]) -> Dict:
    """
    Average and median error per group and overall, split by motion count.

    Report layout:
      {"overall": {...},
       "groups": {group: {...}},
       "motions": {"2": {"all": {...}, group: {...}}, "3": {...}}}
    """
    if not results:
        raise ParameterError("no results to aggregate")

    frame = pd.DataFrame([r.model_dump() for r in results]).sort_values("name", kind="stable")

    report = {
        "overall": _summary(frame["error_rate"]),
        "groups": {
            group: _summary(rows["error_rate"])
            for group, rows in frame.groupby("group", sort=True)
        },
        "motions": {},
    }
    for motions, rows in frame.groupby("num_motions", sort=True):
        entry = {"all": _summary(rows["error_rate"])}
        for group, group_rows in rows.groupby("group", sort=True):
            entry[group] = _summary(group_rows["error_rate"])
        report["motions"][str(int(motions))] = entry

    return report


def compare_with_reference(report: Dict) -> List[Dict]:
    """Observed vs published averages/medians for every row the report covers"""
    rows = []
    for (motions, group), target in pipeline_rules.REFERENCE_TARGETS.items():
        if motions is None:
            observed = report["overall"]
        else:
            observed = report["motions"].get(str(motions), {}).get(group)
        if observed is None:
            continue
        for stat in ("average", "median"):
            value = 100 * observed[f"{stat}_value"]
            rows.append({
                "motions": "all" if motions is None else motions,
                "group": group,
                "statistic": stat,
                "reference": target[stat],
                "observed": round(value, 2),
                "within_tolerance": abs(value - target[stat]) <= pipeline_rules.REFERENCE_TOLERANCE,
            })
    return rows


class SweepPoint(BaseModel):
    """Error of one rerun in a robustness sweep"""
    value: float
    error_rate: Optional[float] = None
    data_driven_index: Optional[int] = None
    threshold_index: Optional[int] = None
    failure: Optional[str] = None


def _run_sweep(W, truth, configs: List[NlsConfig], values: List[float],
               workers: int, skip_failures: bool) -> List[SweepPoint]:
    def run(item) -> SweepPoint:
        value, cfg = item
        try:
            labels, diagnostics = nls_segment(W, cfg)
        except NlsError as e:
            if not skip_failures:
                raise
            logger.error(f"Sweep run {value} failed: {str(e)}")
            return SweepPoint(value=value, failure=str(e))
        return SweepPoint(
            value=value,
            error_rate=misclassification_rate(labels, truth),
            data_driven_index=diagnostics.data_driven_index,
            threshold_index=diagnostics.threshold_index,
        )

    items = list(zip(values, configs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, items))
    return [run(item) for item in items]


def sweep_threshold(W, cfg: NlsConfig, factors, truth,
                    workers: int = 1, skip_failures: bool = False) -> List[SweepPoint]:
    """Rerun the pipeline with threshold index round(factor * T_d) for every factor"""
    factors = [float(f) for f in factors]
    if any(f <= 0 for f in factors):
        raise ParameterError("threshold factors must be positive")
    configs = [cfg.with_updates(threshold_factor=f) for f in factors]
    return _run_sweep(W, truth, configs, factors, workers, skip_failures)


def sweep_neighbors(W, cfg: NlsConfig, ks, truth,
                    workers: int = 1, skip_failures: bool = False) -> List[SweepPoint]:
    """Rerun the pipeline for every neighbor count"""
    ks = [int(k) for k in ks]
    try:
        configs = [cfg.with_updates(neighbors=k) for k in ks]
    except ValidationError as e:
        raise ParameterError(f"invalid neighbor count in sweep: {e.errors()[0]['msg']}")
    return _run_sweep(W, truth, configs, [float(k) for k in ks], workers, skip_failures)
