"""
Geodesic Lab Master Script

Command-line entry point: `run <scenario>` executes the scenario's experiment
and writes its artifacts plus manifest.json; `emit-plots <report-dir>` derives
two-column plot series from an existing run.

Exit status: 0 on success, 2 for scenario errors, 3 for numerical failures.
"""

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

from dotenv import load_dotenv, find_dotenv

from constants import EXIT_NUMERICAL, EXIT_OK, EXIT_SCHEMA
from src.errors import NumericalError, ScenarioSchemaError
from src.reports import AVAILABLE_REPORTS
from src.reports.utils.json_exporter import JsonExporter, MANIFEST_NAME
from src.reports.utils.plot_series import PlotSeriesExporter
from src.utils.logging import Logger, console_log_callback
from src.utils.scenario_loader import load_scenario


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="Master seed (overrides the scenario and LAB_SEED)")
    common.add_argument("--threads", type=int, help="Worker threads for per-state batches")
    common.add_argument("--output", help="Output directory (overrides the scenario and LAB_OUTPUT_DIR)")

    parser = argparse.ArgumentParser(description="Numerical lab for Anosov geodesic flows on surfaces")
    subparsers = parser.add_subparsers(dest="command", required=True)
    run_parser = subparsers.add_parser("run", parents=[common], help="Run the experiment of a scenario file")
    run_parser.add_argument("scenario", help="Scenario INI file")
    plots_parser = subparsers.add_parser("emit-plots", help="Write plot series for an existing run directory")
    plots_parser.add_argument("report_dir", help="Output directory of a previous run")
    return parser


def _print_error(message):
    print(message, file=sys.stderr)
    Logger().error(message)


def run_scenario(args, log=console_log_callback):
    """Load, run and write the manifest; returns the exit status"""
    try:
        scenario = load_scenario(args.scenario).with_overrides(args.seed, args.threads, args.output)
    except ScenarioSchemaError as e:
        _print_error(f"Scenario error in {args.scenario}: {str(e)}")
        return EXIT_SCHEMA
    except ValueError as e:
        _print_error(f"Invalid option: {str(e)}")
        return EXIT_SCHEMA

    output_dir = scenario.output_dir
    os.makedirs(output_dir, exist_ok=True)
    exporter = JsonExporter(log)
    log(f"Running '{scenario.experiment}' on {scenario.model.model_id} "
        f"(seed {scenario.seed}, {scenario.threads} thread(s)) -> {output_dir}")

    start = time.time()
    status = EXIT_OK
    with ThreadPoolExecutor(max_workers=scenario.threads) as executor:
        report = AVAILABLE_REPORTS[scenario.experiment](scenario, output_dir, log, executor)
        try:
            files = report.generate()
            log(f"Generated {len(files)} file(s) in {time.time() - start:.1f}s")
        except NumericalError as e:
            _print_error(f"Numerical failure in stage '{e.stage}': {str(e)}")
            exporter.export(e.to_dict(), os.path.join(output_dir, 'diagnostic.json'))
            status = EXIT_NUMERICAL
        except ScenarioSchemaError as e:
            _print_error(f"Scenario error in {args.scenario}: {str(e)}")
            status = EXIT_SCHEMA
        except (ValueError, ArithmeticError) as e:
            failure = NumericalError(str(e), stage='report',
                                     diagnostics={'error': type(e).__name__, 'experiment': scenario.experiment})
            _print_error(f"Numerical failure in stage 'report': {type(e).__name__}: {str(e)}")
            exporter.export(failure.to_dict(), os.path.join(output_dir, 'diagnostic.json'))
            status = EXIT_NUMERICAL

    exporter.write_manifest(output_dir, scenario.to_dict())
    return status


def emit_plots(args, log=console_log_callback):
    """Plot series for a finished run; the manifest is rewritten to list them"""
    report_dir = args.report_dir
    try:
        files = PlotSeriesExporter(report_dir, log).export()
    except FileNotFoundError as e:
        _print_error(str(e))
        return EXIT_SCHEMA

    exporter = JsonExporter(log)
    scenario = None
    manifest_path = os.path.join(report_dir, MANIFEST_NAME)
    if os.path.isfile(manifest_path):
        with open(manifest_path, 'r', encoding='utf-8') as handle:
            scenario = json.load(handle).get('scenario')
    exporter.write_manifest(report_dir, scenario)
    log(f"Wrote {len(files)} plot series")
    return EXIT_OK


def run_cli(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)

    # Load environment variables from .env file
    load_dotenv(find_dotenv(usecwd=True), override=False)

    if args.command == "run":
        return run_scenario(args)
    return emit_plots(args)


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
