"""Tests for result writers, tables and exports."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import pytest

from app.core.scenario import load_scenario
from app.schemas.report import BenchRow, MetricsDocument
from app.schemas.scenario import ScenarioConfig
from app.services.exceptions import ConfigurationError, InvalidArgumentError
from app.services.harness import run_scenario, summarize
from app.services.reporting import (
    EXPORT_COLUMNS,
    TRAJECTORY_COLUMNS,
    export_result,
    format_bench_table,
    format_table,
    write_result,
)


@pytest.fixture()
def result_dir(tmp_path: Path, small_scenario: ScenarioConfig) -> Path:
    result = run_scenario(small_scenario)
    write_result(result, summarize([result]), tmp_path)
    return tmp_path


def test_write_result_creates_expected_files(result_dir: Path, small_scenario: ScenarioConfig) -> None:
    names = {path.name for path in result_dir.iterdir()}

    for trial in range(small_scenario.trials):
        assert {f"truth_{trial}.csv", f"est_{trial}.csv", f"graphs_{trial}.jsonl", f"network_{trial}.jsonl"} <= names
    assert {"metrics.json", "scenario.yaml"} <= names


def test_written_scenario_loads_back(result_dir: Path, small_scenario: ScenarioConfig) -> None:
    assert load_scenario(result_dir / "scenario.yaml") == small_scenario


def test_trajectory_csv_layout(result_dir: Path, small_scenario: ScenarioConfig) -> None:
    with (result_dir / "est_0.csv").open(newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle))

    assert tuple(rows[0]) == TRAJECTORY_COLUMNS
    assert len(rows) == 1 + (small_scenario.iterations + 1) * small_scenario.n_robots
    assert rows[1][:2] == ["0", "0"]


def test_metrics_document_round_trips(result_dir: Path, small_scenario: ScenarioConfig) -> None:
    metrics = MetricsDocument.model_validate_json((result_dir / "metrics.json").read_text(encoding="utf-8"))

    assert metrics.estimator == "graph"
    assert metrics.summary.trials == small_scenario.trials
    assert [t.trial for t in metrics.trials] == list(range(small_scenario.trials))
    assert len(metrics.trials[0].trajectory_digest) == 64
    assert metrics.scenario["n_robots"] == small_scenario.n_robots


def test_graph_log_records_observability(result_dir: Path) -> None:
    first = json.loads((result_dir / "graphs_0.jsonl").read_text(encoding="utf-8").splitlines()[0])

    assert first["t"] == 1
    assert set(first["observability"]) == {"spectral_rank", "threshold", "observable", "component_count"}
    assert "edges" in first["erpmg"]


def test_identical_runs_write_identical_csv(tmp_path: Path, small_scenario: ScenarioConfig) -> None:
    for name in ("a", "b"):
        result = run_scenario(small_scenario)
        write_result(result, summarize([result]), tmp_path / name)

    for csv_name in ("truth_0.csv", "est_0.csv", "est_1.csv"):
        assert (tmp_path / "a" / csv_name).read_bytes() == (tmp_path / "b" / csv_name).read_bytes()


def test_format_table_lists_metrics(small_scenario: ScenarioConfig) -> None:
    result = run_scenario(small_scenario)
    table = format_table(summarize([result], [result]))

    assert "RMSE [m]" in table
    assert "RMSE / diagonal" in table
    assert "RMSE ratio" in table


def test_format_bench_table_handles_missing_ratio() -> None:
    rows = [
        BenchRow(shadowing_sigma_db=2.0, rmse_mean=1.0, baseline_rmse_mean=2.0, rmse_ratio=0.5, solve_time_median_ms=3.0),
        BenchRow(shadowing_sigma_db=4.0, rmse_mean=1.0, baseline_rmse_mean=0.0, rmse_ratio=None, solve_time_median_ms=3.0),
    ]

    lines = format_bench_table(rows).splitlines()

    assert len(lines) == 3
    assert "0.500" in lines[1]
    assert lines[2].split()[3] == "-"


def test_export_csv_consolidates_trajectories(result_dir: Path, small_scenario: ScenarioConfig) -> None:
    path = export_result(result_dir, "csv")

    with path.open(newline="", encoding="utf-8") as handle:
        rows = list(csv.DictReader(handle))

    assert path == result_dir / "export.csv"
    assert tuple(rows[0]) == EXPORT_COLUMNS
    per_track = (small_scenario.iterations + 1) * small_scenario.n_robots
    assert len(rows) == 2 * small_scenario.trials * per_track
    assert {row["kind"] for row in rows} == {"truth", "est"}


def test_export_json_embeds_metrics(result_dir: Path, tmp_path: Path) -> None:
    target = tmp_path / "out.json"

    path = export_result(result_dir, "json", target)
    document = json.loads(path.read_text(encoding="utf-8"))

    assert path == target
    assert document["metrics"]["estimator"] == "graph"
    assert document["rows"]


def test_export_rejects_bad_inputs(tmp_path: Path) -> None:
    with pytest.raises(InvalidArgumentError):
        export_result(tmp_path, "xml")
    with pytest.raises(ConfigurationError):
        export_result(tmp_path / "missing", "csv")
    with pytest.raises(ConfigurationError):
        export_result(tmp_path, "csv")

    (tmp_path / "truth_0.csv").write_text("a,b\n1,2\n", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        export_result(tmp_path, "csv")


def test_export_rejects_files_that_are_not_trial_trajectories(result_dir: Path) -> None:
    (result_dir / "truth_old.csv").write_text("t,robot,x,y,phi\n0,0,1.0,2.0,0.0\n", encoding="utf-8")

    with pytest.raises(ConfigurationError, match="truth_old.csv"):
        export_result(result_dir, "csv")
