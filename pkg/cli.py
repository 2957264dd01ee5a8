"""
Command line surface.

    python cli.py synth union|motion ... -o DIR
    python cli.py segment INPUT --dim 4 --clusters 2 --neighbors 3 --rank auto|R ...
    python cli.py eval --pred labels.txt --truth truth.txt
    python cli.py bench DATASET_DIR --motions 2|3|all --report out.json
    python cli.py serve

Exit codes: 0 success, 1 usage error, 2 data error, 3 degenerate input.
"""
import argparse
import json
import math
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from config import pipeline_rules
from config.settings import get_settings, resolve_workers
from core import datagen
from core.bench import BenchRunner
from core.evaluation import misclassification_rate
from core.exceptions import InputError, NlsError
from core.nls import NlsConfig, nls_segment
from storage.dataset import META_NAME, TRACKS_NAME
from storage.matrix_file import load_matrix, read_text, save_matrix
from storage.reports import write_json_report
from storage.tracks_file import is_tracks_text, load_labels, load_tracks, save_labels, save_tracks
from utils.logger import logger

EXIT_OK = 0
EXIT_USAGE = 1


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """argparse that reports usage problems with exit code 1"""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _rank(value: str):
    if value in ("auto", "motion"):
        return value
    try:
        rank = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"rank must be 'auto' or a positive integer, got {value!r}")
    if rank < 1:
        raise argparse.ArgumentTypeError(f"rank must be positive, got {rank}")
    return rank


def _add_pipeline_flags(parser: argparse.ArgumentParser) -> None:
    settings = get_settings()
    parser.add_argument("--dim", type=int, default=pipeline_rules.DEFAULT_SUBSPACE_DIM)
    parser.add_argument("--neighbors", type=int, default=pipeline_rules.DEFAULT_NEIGHBORS)
    parser.add_argument("--kappa", type=float, default=settings.RANK_KAPPA)
    parser.add_argument("--norm", type=float, default=pipeline_rules.DEFAULT_NORM_P)
    parser.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    parser.add_argument("--restarts", type=int, default=settings.KMEANS_RESTARTS)
    parser.add_argument("--max-iter", type=int, default=settings.KMEANS_MAX_ITER)
    parser.add_argument("--segment-rank", type=int, default=None,
                        help="truncation rank of the final SVD (default: number of clusters)")


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="nls", description="Nearness-to-local-subspace segmentation")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    # synth
    synth = commands.add_parser("synth", help="generate ground-truthed data")
    kinds = synth.add_subparsers(dest="kind", required=True, parser_class=ArgumentParser)

    union = kinds.add_parser("union", help="points on a union of random subspaces")
    union.add_argument("--ambient", type=int, default=30)
    union.add_argument("--dim", type=int, default=pipeline_rules.DEFAULT_SUBSPACE_DIM)
    union.add_argument("--subspaces", type=int, default=2)
    union.add_argument("--points", type=int, default=40, help="points per subspace")
    union.add_argument("--noise", type=float, default=0.0)
    union.add_argument("--min-angle", type=float, default=None, help="degrees")
    union.add_argument("--seed", type=int, default=0)
    union.add_argument("-o", "--output", required=True)

    motion = kinds.add_parser("motion", help="affine-camera trajectories of rigid objects")
    motion.add_argument("--frames", type=int, default=30)
    motion.add_argument("--objects", type=int, default=2)
    motion.add_argument("--points", type=int, default=40, help="points per object")
    motion.add_argument("--noise", type=float, default=0.0)
    motion.add_argument("--seed", type=int, default=0)
    motion.add_argument("-o", "--output", required=True)

    # segment
    segment = commands.add_parser("segment", help="segment a matrix or tracks file")
    segment.add_argument("input")
    segment.add_argument("--clusters", type=int, required=True)
    segment.add_argument("--rank", type=_rank, default="auto")
    segment.add_argument("--threshold-factor", type=float, default=1.0)
    segment.add_argument("--truth", default=None, help="ground-truth labels file")
    segment.add_argument("-o", "--output", required=True, help="labels file")
    segment.add_argument("--report", default=None)
    segment.add_argument("--timings", action="store_true", help="add wall-clock timings to the report")
    _add_pipeline_flags(segment)

    # eval
    evaluate = commands.add_parser("eval", help="misclassification rate of a labeling")
    evaluate.add_argument("--pred", required=True)
    evaluate.add_argument("--truth", required=True)

    # bench
    bench = commands.add_parser("bench", help="batch segmentation over a dataset directory")
    bench.add_argument("dataset")
    bench.add_argument("--motions", choices=["2", "3", "all"], default="all")
    bench.add_argument("--rank", type=_rank, default="motion")
    bench.add_argument("--exclude", action="append", default=[], metavar="SEQUENCE")
    bench.add_argument("--sweep-threshold", nargs="*", type=float, default=None, metavar="FACTOR")
    bench.add_argument("--sweep-k", nargs="*", type=int, default=None, metavar="K")
    bench.add_argument("--report", required=True)
    _add_pipeline_flags(bench)

    # serve
    serve = commands.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default=None)
    serve.add_argument("--port", type=int, default=None)

    return parser


def _pipeline_config(args, num_clusters: int, rank) -> NlsConfig:
    return NlsConfig(
        subspace_dim=args.dim,
        num_clusters=num_clusters,
        neighbors=args.neighbors,
        rank=None if rank in ("auto", "motion") else rank,
        kappa=args.kappa,
        norm_p=args.norm,
        seed=args.seed,
        kmeans_restarts=args.restarts,
        kmeans_max_iter=args.max_iter,
        threshold_factor=getattr(args, "threshold_factor", 1.0),
        segment_rank=args.segment_rank,
        workers=resolve_workers(),
    )


def run_synth(args) -> int:
    output = Path(args.output)
    if args.kind == "union":
        spec = datagen.UnionSpec(
            ambient_dim=args.ambient,
            subspace_dim=args.dim,
            num_subspaces=args.subspaces,
            points_per_subspace=args.points,
            noise_sigma=args.noise,
            min_principal_angle=None if args.min_angle is None else math.radians(args.min_angle),
            seed=args.seed,
        )
        W, labels = datagen.sample_union(spec)
        save_matrix(output / "matrix.csv", W)
        save_labels(output / "labels.txt", labels)
        logger.info(f"Wrote {W.shape[0]}x{W.shape[1]} matrix to {output}")
        return EXIT_OK

    ts = datagen.random_motion_scene(
        num_frames=args.frames,
        num_objects=args.objects,
        points_per_object=args.points,
        noise_sigma=args.noise,
        seed=args.seed,
    )
    save_tracks(output / TRACKS_NAME, ts)
    (output / META_NAME).write_text(json.dumps({"group": "synthetic"}) + "\n", encoding="utf-8")
    logger.info(f"Wrote {ts.num_points} tracks over {ts.num_frames} frames to {output}")
    return EXIT_OK


def load_input(path: Path):
    """Data matrix and optional truth from a MatrixFile or TracksFile"""
    if not path.is_file():
        raise InputError(f"input file not found: {path}")
    first = read_text(path).split("\n", 1)[0]
    if is_tracks_text(first):
        ts = load_tracks(path)
        return datagen.trajectory_matrix(ts), ts.labels
    return load_matrix(path), None


def run_segment(args) -> int:
    rank = pipeline_rules.RANK_PER_MOTION * args.clusters if args.rank == "motion" else args.rank
    cfg = _pipeline_config(args, args.clusters, rank)
    input_path = Path(args.input)
    W, truth = load_input(input_path)
    if args.truth:
        truth = load_labels(args.truth)

    labels, diagnostics = nls_segment(W, cfg)
    save_labels(args.output, labels)

    error = misclassification_rate(labels, truth) if truth is not None else None
    if error is not None:
        logger.info(f"Misclassification: {100 * error:.2f}%")

    if args.report:
        report = {
            "sequence": input_path.stem,
            "group": "synthetic",
            "motions": cfg.num_clusters,
            "error": error,
            "r": diagnostics.rank,
            "T_d": diagnostics.data_driven_index,
            "threshold_index": diagnostics.threshold_index,
            "eta": diagnostics.eta,
            "seed": cfg.seed,
        }
        if args.timings:
            report["timings"] = diagnostics.timings
        write_json_report(args.report, report)
    return EXIT_OK


def run_eval(args) -> int:
    pred = load_labels(args.pred)
    truth = load_labels(args.truth)
    error = misclassification_rate(pred, truth)
    print(f"misclassification: {error:.6f} ({100 * error:.2f}%)")
    return EXIT_OK


def run_bench(args) -> int:
    base = _pipeline_config(args, 1, args.rank)
    runner = BenchRunner(base, rank=args.rank)
    sequences = runner.load(args.dataset, motions=args.motions, exclude=args.exclude)

    report = runner.run(sequences)
    if args.sweep_threshold is not None:
        report["sweep_threshold"] = runner.sweep(sequences, "threshold", args.sweep_threshold or None)
    if args.sweep_k is not None:
        report["sweep_k"] = runner.sweep(sequences, "neighbors", args.sweep_k or None)

    write_json_report(args.report, report)
    if "aggregate" in report:
        overall = report["aggregate"]["overall"]
        print(f"{overall['count']} sequences: average {overall['average']}, median {overall['median']}")
    return EXIT_OK


def run_serve(args) -> int:
    import uvicorn

    settings = get_settings()
    uvicorn.run(
        "main:app",
        host=args.host or settings.HOST,
        port=args.port or settings.PORT,
        reload=False,
        log_level="info"
    )
    return EXIT_OK


COMMANDS = {
    "synth": run_synth,
    "segment": run_segment,
    "eval": run_eval,
    "bench": run_bench,
    "serve": run_serve,
}


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as e:
        logger.error(str(e))
        return EXIT_USAGE
    except ValidationError as e:
        details = "; ".join(f"{'.'.join(map(str, err['loc'])) or 'config'}: {err['msg']}"
                            for err in e.errors())
        logger.error(f"Invalid parameters: {details}")
        return EXIT_USAGE
    except NlsError as e:
        logger.error(f"{type(e).__name__}: {str(e)}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
