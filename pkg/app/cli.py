"""Command line entry point for simulation, single solves, trace checks, benchmarks, calibration and export."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from app.core.logging import configure_logging
from app.core.scenario import load_scenario, parse_scenario
from app.core.settings import get_settings
from app.schemas.report import BenchRow
from app.services.exceptions import ConfigurationError, InvalidArgumentError, NumericalError, ServiceError
from app.services.harness import dead_reckoning_baseline, run_scenario, summarize
from app.services.network_service import NetworkService
from app.services.radio import fit_path_loss
from app.services.optimization_service import OptimizationService
from app.services.reporting import export_result, format_bench_table, format_table, write_result

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ASSUMPTIONS_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _simulate(args: argparse.Namespace) -> int:
    settings = get_settings()
    config = load_scenario(args.config)
    out_dir = Path(args.out) if args.out else settings.output_dir
    result = run_scenario(config, max_workers=settings.max_workers)
    baseline = dead_reckoning_baseline(config, max_workers=settings.max_workers) if args.baseline else None
    summary = summarize([result], [baseline] if baseline else None)
    try:
        write_result(result, summary, out_dir)
    except OSError as exc:
        raise ConfigurationError(f"Cannot write results to {out_dir}: {exc}") from exc
    print(format_table(summary))
    return EXIT_OK


def _optimize(args: argparse.Namespace) -> int:
    service = OptimizationService()
    try:
        raw = Path(args.problem).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"Cannot read problem file {args.problem}: {exc}") from exc
    document = service.optimize(service.load_problem(raw))
    Path(args.out).write_text(document.model_dump_json(indent=2), encoding="utf-8")
    print(f"final_chi2={document.final_chi2!r} iterations={document.iterations} converged={document.converged}")
    return EXIT_OK


def _validate_network(args: argparse.Namespace) -> int:
    service = NetworkService()
    try:
        with Path(args.trace).open(encoding="utf-8") as handle:
            records = service.parse_trace(handle)
    except OSError as exc:
        raise ConfigurationError(f"Cannot read trace file {args.trace}: {exc}") from exc
    report = service.validate(records, args.xi, args.T, args.horizon)
    print(report.model_dump_json(indent=2))
    return EXIT_OK if report.passed else EXIT_ASSUMPTIONS_FAILED


def _bench(args: argparse.Namespace) -> int:
    settings = get_settings()
    config = load_scenario(args.config)
    if args.trials is not None:
        config = parse_scenario({**config.model_dump(), "trials": args.trials})
    sigmas = args.rssi_sigma or [config.path_loss.shadowing_sigma_db]

    rows = []
    for sigma in sigmas:
        data = config.model_dump()
        data["path_loss"]["shadowing_sigma_db"] = sigma
        scenario = parse_scenario(data)
        result = run_scenario(scenario, max_workers=settings.max_workers)
        baseline = dead_reckoning_baseline(scenario, max_workers=settings.max_workers)
        summary = summarize([result], [baseline])
        rows.append(
            BenchRow(
                shadowing_sigma_db=sigma,
                rmse_mean=summary.rmse_mean,
                baseline_rmse_mean=summary.baseline_rmse_mean or 0.0,
                rmse_ratio=summary.rmse_ratio,
                solve_time_median_ms=summary.solve_time_median_ms,
            )
        )
    print(format_bench_table(rows))
    return EXIT_OK


def _export(args: argparse.Namespace) -> int:
    path = export_result(Path(args.result), args.format, Path(args.out) if args.out else None)
    print(path)
    return EXIT_OK


def _read_samples(path: Path) -> tuple[list[float], list[float]]:
    try:
        with path.open(newline="", encoding="utf-8") as handle:
            rows = list(csv.DictReader(handle))
    except OSError as exc:
        raise ConfigurationError(f"Cannot read samples file {path}: {exc}") from exc
    try:
        return [float(row["distance_m"]) for row in rows], [float(row["rssi_dbm"]) for row in rows]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"{path.name} needs numeric distance_m and rssi_dbm columns") from exc


def _calibrate(args: argparse.Namespace) -> int:
    if args.shadowing_sigma is not None and args.shadowing_sigma < 0.0:
        raise InvalidArgumentError("--shadowing-sigma must be non-negative")
    distances, rssi = _read_samples(Path(args.samples))
    params = fit_path_loss(distances, rssi, args.shadowing_sigma)
    print(params.model_dump_json(indent=2))
    return EXIT_OK


def _serve(args: argparse.Namespace) -> int:  # pragma: no cover
    import uvicorn

    uvicorn.run("app.main:app", host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relloc", description="Multi-robot relative localization toolkit")
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="Run a scenario and write trajectories and metrics")
    simulate.add_argument("--config", required=True, help="Scenario YAML file")
    simulate.add_argument("--out", help="Output directory (defaults to OUTPUT_DIR)")
    simulate.add_argument("--baseline", action="store_true", help="Also run the dead-reckoning baseline")
    simulate.set_defaults(handler=_simulate)

    optimize = commands.add_parser("optimize", help="Solve a single pose-graph problem document")
    optimize.add_argument("--problem", required=True)
    optimize.add_argument("--out", required=True)
    optimize.set_defaults(handler=_optimize)

    validate = commands.add_parser("validate-network", help="Check a network trace against the weight assumptions")
    validate.add_argument("--trace", required=True, help="JSON-lines network trace")
    validate.add_argument("--xi", type=float, required=True)
    validate.add_argument("--T", type=int, required=True, dest="T")
    validate.add_argument("--horizon", type=int)
    validate.set_defaults(handler=_validate_network)

    bench = commands.add_parser("bench", help="Compare graph optimization with dead reckoning")
    bench.add_argument("--config", required=True)
    bench.add_argument("--trials", type=int)
    bench.add_argument("--rssi-sigma", type=float, nargs="+", dest="rssi_sigma", help="Shadowing sigmas (dB) to sweep")
    bench.set_defaults(handler=_bench)

    export = commands.add_parser("export", help="Consolidate a result directory into one file")
    export.add_argument("--result", required=True)
    export.add_argument("--format", choices=("csv", "json"), default="csv")
    export.add_argument("--out")
    export.set_defaults(handler=_export)

    calibrate = commands.add_parser("calibrate", help="Fit path-loss parameters to measured RSSI samples")
    calibrate.add_argument("--samples", required=True, help="CSV file with distance_m and rssi_dbm columns")
    calibrate.add_argument(
        "--shadowing-sigma", type=float, dest="shadowing_sigma", help="Fix sigma (dB) instead of fitting it"
    )
    calibrate.set_defaults(handler=_calibrate)

    serve = commands.add_parser("serve", help="Run the HTTP API")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(handler=_serve)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(get_settings().log_level)
    try:
        return args.handler(args)
    except (ConfigurationError, InvalidArgumentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ServiceError:
        logger.exception("Command %s failed", args.command)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
