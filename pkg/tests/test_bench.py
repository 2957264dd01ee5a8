import pytest

from core.bench import BenchRunner
from core.datagen import random_motion_scene
from core.exceptions import ParameterError
from core.nls import NlsConfig
from storage.dataset import save_sequence


@pytest.fixture
def dataset_dir(tmp_path):
    save_sequence(tmp_path, "two_a", random_motion_scene(20, 2, 25, seed=1), group="checker")
    save_sequence(tmp_path, "two_b", random_motion_scene(20, 2, 25, seed=2), group="traffic")
    save_sequence(tmp_path, "three", random_motion_scene(20, 3, 25, seed=3), group="checker")
    return tmp_path


def test_load_filters(dataset_dir):
    runner = BenchRunner(NlsConfig(), workers=1)
    assert [s.name for s in runner.load(dataset_dir)] == ["three", "two_a", "two_b"]
    assert [s.name for s in runner.load(dataset_dir, motions="3")] == ["three"]
    assert [s.name for s in runner.load(dataset_dir, exclude=["two_b"])] == ["three", "two_a"]


def test_config_follows_motions(dataset_dir):
    runner = BenchRunner(NlsConfig(seed=5), workers=1)
    three = runner.load(dataset_dir, motions="3")[0]
    cfg = runner.config_for(three)
    assert (cfg.num_clusters, cfg.rank, cfg.seed) == (3, 12, 5)
    assert BenchRunner(NlsConfig(), rank="auto").config_for(three).rank is None
    assert BenchRunner(NlsConfig(), rank=10).config_for(three).rank == 10


def test_run(dataset_dir):
    runner = BenchRunner(NlsConfig(), workers=2)
    report = runner.run(runner.load(dataset_dir))
    assert [r["sequence"] for r in report["results"]] == ["three", "two_a", "two_b"]
    assert report["errors"] == []
    assert report["aggregate"]["overall"]["count"] == 3
    assert set(report["aggregate"]["motions"]) == {"2", "3"}
    assert all(0.0 <= r["error"] <= 1.0 for r in report["results"])
    assert any(row["group"] == "all" and row["motions"] == "all" for row in report["reference"])


def test_run_is_repeatable(dataset_dir):
    sequences = BenchRunner(NlsConfig()).load(dataset_dir)
    first = BenchRunner(NlsConfig(), workers=1).run(sequences)
    second = BenchRunner(NlsConfig(), workers=3).run(sequences)
    assert first == second


def test_failures_are_reported(dataset_dir):
    runner = BenchRunner(NlsConfig(), rank=2, workers=1)
    report = runner.run(runner.load(dataset_dir))
    assert report["results"] == []
    assert len(report["errors"]) == 3
    assert "aggregate" not in report


def test_threshold_sweep_includes_neutral_factor(dataset_dir):
    runner = BenchRunner(NlsConfig(), workers=1)
    sweep = runner.sweep(runner.load(dataset_dir, motions="2"), "threshold", [0.9, 1.1])
    assert list(sweep["values"]) == ["1.0", "0.9", "1.1"]
    assert sweep["values"]["1.0"]["aggregate"]["overall"]["count"] == 2
    baseline = {r["sequence"]: r for r in sweep["values"]["1.0"]["results"]}
    for row in sweep["values"]["1.1"]["results"]:
        assert row["T_d"] == baseline[row["sequence"]]["T_d"]
        assert row["threshold_index"] == round(1.1 * row["T_d"])
    for row in sweep["values"]["1.0"]["results"]:
        assert row["threshold_index"] == row["T_d"]


def test_neighbor_sweep(dataset_dir):
    runner = BenchRunner(NlsConfig(), workers=1)
    sweep = runner.sweep(runner.load(dataset_dir, motions="2"), "neighbors")
    assert list(sweep["values"]) == ["3", "4", "5"]


def test_invalid_rank_mode():
    with pytest.raises(ParameterError):
        BenchRunner(NlsConfig(), rank="median")


def test_unknown_sweep(dataset_dir):
    runner = BenchRunner(NlsConfig(), workers=1)
    with pytest.raises(ParameterError):
        runner.sweep(runner.load(dataset_dir), "noise")
