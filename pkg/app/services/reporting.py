"""Writers for simulation outputs and the human-readable summary table."""
from __future__ import annotations

import csv
import json
import logging
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from app.core.scenario import dump_scenario
from app.schemas.report import BenchRow, MetricsDocument, SummaryReport, TrialMetrics
from app.utils.hash import array_digest

from .exceptions import ConfigurationError, InvalidArgumentError
from .harness import SimResult, TrialResult
from .netsim import trace_records

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = ("t", "robot", "x", "y", "phi")
EXPORT_COLUMNS = ("trial", "kind", *TRAJECTORY_COLUMNS)


def _trajectory_rows(track: np.ndarray) -> list[list[str]]:
    rows = []
    for t, poses in enumerate(track):
        for robot, (x, y, phi) in enumerate(poses.tolist()):
            rows.append([str(t), str(robot), repr(x), repr(y), repr(phi)])
    return rows


def write_trajectory(path: Path, track: np.ndarray) -> None:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(TRAJECTORY_COLUMNS)
        writer.writerows(_trajectory_rows(track))


def _trial_metrics(trial: TrialResult) -> TrialMetrics:
    return TrialMetrics(
        trial=trial.trial,
        rmse=trial.rmse,
        rmse_per_robot=trial.rmse_per_robot.tolist(),
        solves=len(trial.solve_times),
        wall_time_s=trial.wall_time,
        cpu_utilisation=trial.cpu_utilisation,
        network_assumptions_passed=trial.assumptions.passed if trial.assumptions else None,
        trajectory_digest=array_digest(trial.truth, trial.estimates),
    )


def write_result(result: SimResult, summary: SummaryReport, out_dir: Path) -> list[Path]:
    """Write trajectories, per-iteration graph logs, network traces, `metrics.json` and the scenario."""

    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for trial in result.trials:
        truth_path = out_dir / f"truth_{trial.trial}.csv"
        est_path = out_dir / f"est_{trial.trial}.csv"
        write_trajectory(truth_path, trial.truth)
        write_trajectory(est_path, trial.estimates)
        written += [truth_path, est_path]

        if trial.graph_records:
            graphs_path = out_dir / f"graphs_{trial.trial}.jsonl"
            with graphs_path.open("w", encoding="utf-8") as handle:
                for record in trial.graph_records:
                    handle.write(json.dumps(record, separators=(",", ":")) + "\n")
            written.append(graphs_path)
        if trial.network is not None:
            network_path = out_dir / f"network_{trial.trial}.jsonl"
            with network_path.open("w", encoding="utf-8") as handle:
                for record in trace_records(trial.network):
                    handle.write(record.model_dump_json() + "\n")
            written.append(network_path)

    metrics = MetricsDocument(
        estimator=result.estimator,
        summary=summary,
        trials=[_trial_metrics(trial) for trial in result.trials],
        scenario=result.config.model_dump(mode="json"),
    )
    metrics_path = out_dir / "metrics.json"
    metrics_path.write_text(metrics.model_dump_json(indent=2), encoding="utf-8")
    written.append(metrics_path)
    scenario_path = out_dir / "scenario.yaml"
    scenario_path.write_text(dump_scenario(result.config), encoding="utf-8")
    written.append(scenario_path)
    logger.info("Wrote %s files to %s", len(written), out_dir)
    return written


def format_table(summary: SummaryReport) -> str:
    rows = [
        ("trials", f"{summary.trials}"),
        ("RMSE [m]", f"{summary.rmse_mean:.3f} ± {summary.rmse_std:.3f}"),
        ("RMSE / diagonal", f"{summary.rmse_over_diagonal:.4f}"),
        ("solve time [ms]", f"{summary.solve_time_mean_ms:.2f} ± {summary.solve_time_std_ms:.2f}"),
        ("median solve [ms]", f"{summary.solve_time_median_ms:.2f}"),
        ("solves", f"{summary.solves}"),
        ("observability failures", f"{100.0 * summary.observability_failure_rate:.1f} %"),
        ("CPU utilisation", f"{summary.cpu_utilisation:.2f}"),
    ]
    if summary.baseline_rmse_mean is not None:
        rows.append(("baseline RMSE [m]", f"{summary.baseline_rmse_mean:.3f}"))
    if summary.rmse_ratio is not None:
        rows.append(("RMSE ratio", f"{summary.rmse_ratio:.3f}"))
    width = max(len(label) for label, _ in rows)
    return "\n".join(f"{label.ljust(width)}  {value}" for label, value in rows)


def format_bench_table(rows: Sequence[BenchRow]) -> str:
    header = f"{'sigma_dB':>8}  {'rmse':>8}  {'baseline':>8}  {'ratio':>6}  {'median_ms':>9}"
    lines = [header]
    for row in rows:
        ratio = f"{row.rmse_ratio:.3f}" if row.rmse_ratio is not None else "-"
        lines.append(
            f"{row.shadowing_sigma_db:>8.2f}  {row.rmse_mean:>8.3f}  {row.baseline_rmse_mean:>8.3f}  "
            f"{ratio:>6}  {row.solve_time_median_ms:>9.2f}"
        )
    return "\n".join(lines)


def _read_trajectory(path: Path) -> list[dict[str, str]]:
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if tuple(reader.fieldnames or ()) != TRAJECTORY_COLUMNS:
            raise ConfigurationError(f"{path.name} does not have the columns {', '.join(TRAJECTORY_COLUMNS)}")
        return list(reader)


def _trial_index(path: Path) -> int:
    suffix = path.stem.split("_", 1)[1]
    if not suffix.isdigit():
        raise ConfigurationError(f"{path.name} is not a trial trajectory; expected <kind>_<trial>.csv")
    return int(suffix)


def export_result(result_dir: Path, fmt: str, out_path: Path | None = None) -> Path:
    """Consolidate a result directory's trajectories into one CSV or JSON file."""

    if fmt not in {"csv", "json"}:
        raise InvalidArgumentError(f"Unsupported export format {fmt!r}")
    if not result_dir.is_dir():
        raise ConfigurationError(f"Result directory {result_dir} does not exist")

    rows: list[dict[str, str]] = []
    for kind in ("truth", "est"):
        for trial, path in sorted((_trial_index(path), path) for path in result_dir.glob(f"{kind}_*.csv")):
            rows += [{"trial": str(trial), "kind": kind, **row} for row in _read_trajectory(path)]
    if not rows:
        raise ConfigurationError(f"No trajectories found in {result_dir}")

    out_path = out_path or result_dir / f"export.{fmt}"
    if fmt == "csv":
        with out_path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.DictWriter(handle, fieldnames=EXPORT_COLUMNS)
            writer.writeheader()
            writer.writerows(rows)
    else:
        document = {"result": str(result_dir), "rows": rows}
        metrics_path = result_dir / "metrics.json"
        if metrics_path.exists():
            document["metrics"] = json.loads(metrics_path.read_text(encoding="utf-8"))
        out_path.write_text(json.dumps(document, indent=2), encoding="utf-8")
    return out_path
