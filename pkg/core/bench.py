from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence as Seq, Union

from config import pipeline_rules
from config.settings import resolve_workers
from core.evaluation import (
    SequenceResult,
    aggregate,
    compare_with_reference,
    misclassification_rate,
    sweep_neighbors,
    sweep_threshold,
)
from core.exceptions import NlsError, ParameterError
from core.nls import NlsConfig, nls_segment
from storage.dataset import Sequence, discover_sequences, load_sequence
from utils.logger import logger


class BenchRunner:
    """Batch segmentation over a dataset directory"""

    def __init__(self, base_config: NlsConfig, rank: Union[str, int] = "motion",
                 workers: Optional[int] = None):
        """
        rank: "motion" (4 per motion: 8 / 12), "auto" (estimate) or an integer
        """
        if isinstance(rank, str) and rank not in ("motion", "auto"):
            raise ParameterError(f"rank must be 'motion', 'auto' or an integer, got {rank!r}")
        self.base_config = base_config
        self.rank = rank
        self.workers = resolve_workers(workers)

    def config_for(self, sequence: Sequence) -> NlsConfig:
        """Per-sequence configuration (cluster count and rank follow the motions)"""
        motions = sequence.num_motions
        if self.rank == "motion":
            rank = pipeline_rules.RANK_PER_MOTION * motions
        elif self.rank == "auto":
            rank = None
        else:
            rank = int(self.rank)
        return self.base_config.with_updates(num_clusters=motions, rank=rank)

    def load(self, dataset_dir: Union[str, Path], motions: str = "all",
             exclude: Iterable[str] = ()) -> List[Sequence]:
        """Sequences with ground truth, filtered by motion count and name"""
        excluded = set(exclude)
        sequences = []
        for directory in discover_sequences(dataset_dir):
            if directory.name in excluded:
                logger.info(f"Sequence {directory.name} excluded")
                continue
            sequence = load_sequence(directory)
            if sequence is None:
                continue
            if motions != "all" and sequence.num_motions != int(motions):
                continue
            sequences.append(sequence)

        logger.info(f"Loaded {len(sequences)} sequences from {dataset_dir}")
        return sequences

    def run_sequence(self, sequence: Sequence) -> SequenceResult:
        cfg = self.config_for(sequence)
        labels, diagnostics = nls_segment(sequence.matrix, cfg)
        error = misclassification_rate(labels, sequence.truth)
        logger.info(f"{sequence.name}: {100 * error:.2f}% error")
        return SequenceResult(
            name=sequence.name,
            group=sequence.group,
            num_motions=sequence.num_motions,
            error_rate=error,
            rank=diagnostics.rank,
            data_driven_index=diagnostics.data_driven_index,
            threshold_index=diagnostics.threshold_index,
            eta=diagnostics.eta,
            seed=cfg.seed,
        )

    def _safe_run(self, sequence: Sequence) -> Union[SequenceResult, str]:
        try:
            return self.run_sequence(sequence)
        except NlsError as e:
            logger.error(f"Error segmenting {sequence.name}: {str(e)}")
            return str(e)

    def run(self, sequences: List[Sequence]) -> Dict:
        """
        Segment every sequence.

        Returns:
            Dict with results (ordered by name), aggregate, reference, errors
        """
        sequences = sorted(sequences, key=lambda s: s.name)
        if self.workers > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                outcomes = list(pool.map(self._safe_run, sequences))
        else:
            outcomes = [self._safe_run(s) for s in sequences]

        results = [o for o in outcomes if isinstance(o, SequenceResult)]
        errors = [
            {"sequence": s.name, "error": o}
            for s, o in zip(sequences, outcomes) if not isinstance(o, SequenceResult)
        ]

        report = {
            "results": [r.to_report() for r in results],
            "errors": errors,
        }
        if results:
            report["aggregate"] = aggregate(results)
            report["reference"] = compare_with_reference(report["aggregate"])

        logger.info(f"Bench completed: {len(results)}/{len(sequences)} sequences")
        return report

    def sweep(self, sequences: List[Sequence], kind: str,
              values: Optional[Seq[float]] = None) -> Dict:
        """
        Threshold-factor or neighbor-count sweep over all sequences.

        Returns per value: per-sequence errors and their aggregate.
        """
        if kind == "threshold":
            values = list(values or pipeline_rules.THRESHOLD_FACTORS)
            if 1.0 not in values:
                values = [1.0] + values
        elif kind == "neighbors":
            values = list(values or pipeline_rules.NEIGHBOR_COUNTS)
        else:
            raise ParameterError(f"unknown sweep {kind!r}")

        rows: Dict[str, List[SequenceResult]] = {str(v): [] for v in values}
        for sequence in sorted(sequences, key=lambda s: s.name):
            cfg = self.config_for(sequence)
            runner = sweep_threshold if kind == "threshold" else sweep_neighbors
            try:
                points = runner(sequence.matrix, cfg, values, sequence.truth,
                                workers=self.workers, skip_failures=True)
            except NlsError as e:
                logger.error(f"Sweep {kind} failed for {sequence.name}: {str(e)}")
                continue
            for value, point in zip(values, points):
                if point.error_rate is None:
                    continue
                rows[str(value)].append(SequenceResult(
                    name=sequence.name,
                    group=sequence.group,
                    num_motions=sequence.num_motions,
                    error_rate=point.error_rate,
                    data_driven_index=point.data_driven_index,
                    threshold_index=point.threshold_index,
                    seed=cfg.seed,
                ))

        return {
            "sweep": kind,
            "values": {
                key: {
                    "results": [r.to_report() for r in results],
                    "aggregate": aggregate(results) if results else None,
                }
                for key, results in rows.items()
            },
        }
