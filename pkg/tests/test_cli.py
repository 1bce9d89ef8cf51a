import os
import sys
import json

import pytest

# Add the repository root to the path so we can import the modules
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from constants import EXIT_NUMERICAL, EXIT_OK, EXIT_SCHEMA
from src.errors import ChartDomainError
from src.lab_master import build_parser, run_cli
from src.reports import AVAILABLE_REPORTS
from src.reports.base_report import BaseReport

SMALL_SPECTRUM = """[model]
kind = HyperbolicConstant
c = 1.0

[experiment]
name = spectrum
seed = 5

[budgets]
T = 100
spectrum_states = 1
regularity_k = 3
trajectory_T = 2
"""

FLAT_INCLUSION = """[model]
kind = Flat

[experiment]
name = inclusion

[budgets]
bound_samples = 2
inclusion_samples = 4
"""


@pytest.fixture
def scenario_file(tmp_path):
    def write(text, name='scenario.ini'):
        path = tmp_path / name
        path.write_text(text, encoding='utf-8')
        return str(path)
    return write


def _read_bytes(directory):
    contents = {}
    for root, _, files in os.walk(directory):
        for name in files:
            path = os.path.join(root, name)
            with open(path, 'rb') as handle:
                contents[os.path.relpath(path, directory)] = handle.read()
    return contents


class TestParser:
    def test_run_flags(self):
        args = build_parser().parse_args(['run', 'a.ini', '--seed', '4', '--threads', '2', '--output', 'out'])
        assert (args.command, args.scenario, args.seed, args.threads, args.output) == ('run', 'a.ini', 4, 2, 'out')

    def test_emit_plots_takes_a_directory(self):
        args = build_parser().parse_args(['emit-plots', 'out'])
        assert (args.command, args.report_dir) == ('emit-plots', 'out')


class TestRun:
    def test_schema_error_exits_2(self, scenario_file, tmp_path):
        path = scenario_file("[experiment]\nname = spectrum\n\n[budgets]\nT = 100\n")
        assert run_cli(['run', path, '--output', str(tmp_path / 'out')]) == EXIT_SCHEMA

    def test_missing_file_exits_2(self, tmp_path):
        assert run_cli(['run', str(tmp_path / 'absent.ini')]) == EXIT_SCHEMA

    def test_bad_thread_count_exits_2(self, scenario_file, tmp_path):
        path = scenario_file(SMALL_SPECTRUM)
        assert run_cli(['run', path, '--threads', '0', '--output', str(tmp_path / 'out')]) == EXIT_SCHEMA

    def test_spectrum_run(self, scenario_file, tmp_path):
        path = scenario_file(SMALL_SPECTRUM)
        output = tmp_path / 'out'
        assert run_cli(['run', path, '--output', str(output)]) == EXIT_OK
        for name in ('spectrum.json', 'spectrum_trace.csv', 'regularity.csv', 'trajectory.csv', 'manifest.json'):
            assert (output / name).is_file()
        with open(output / 'spectrum.json', 'r', encoding='utf-8') as handle:
            record = json.load(handle)
        assert record['model'] == 'HyperbolicConstant(c=1)'
        assert record['chi_plus'] == pytest.approx(1.0, abs=2e-2)

    def test_reruns_are_identical(self, scenario_file, tmp_path):
        path = scenario_file(SMALL_SPECTRUM)
        first, second = tmp_path / 'first', tmp_path / 'second'
        assert run_cli(['run', path, '--output', str(first)]) == EXIT_OK
        assert run_cli(['run', path, '--output', str(second)]) == EXIT_OK
        first_files, second_files = _read_bytes(first), _read_bytes(second)
        first_files.pop('manifest.json')
        second_files.pop('manifest.json')
        assert first_files == second_files

    def test_numerical_failure_exits_3(self, scenario_file, tmp_path):
        path = scenario_file(FLAT_INCLUSION)
        output = tmp_path / 'out'
        assert run_cli(['run', path, '--output', str(output)]) == EXIT_NUMERICAL
        with open(output / 'diagnostic.json', 'r', encoding='utf-8') as handle:
            assert json.load(handle)['stage'] == 'certificate'
        assert (output / 'manifest.json').is_file()

    def test_chart_failure_exits_3(self, scenario_file, tmp_path, monkeypatch):
        class LeavesTheChart(BaseReport):
            def generate(self):
                raise ChartDomainError("y = -0.5 is outside the upper half-plane")

        monkeypatch.setitem(AVAILABLE_REPORTS, 'spectrum', LeavesTheChart)
        output = tmp_path / 'out'
        assert run_cli(['run', scenario_file(SMALL_SPECTRUM), '--output', str(output)]) == EXIT_NUMERICAL
        with open(output / 'diagnostic.json', 'r', encoding='utf-8') as handle:
            diagnostic = json.load(handle)
        assert diagnostic['stage'] == 'report'
        assert diagnostic['diagnostics']['error'] == 'ChartDomainError'
        assert 'upper half-plane' in diagnostic['message']


class TestEmitPlots:
    def test_empty_directory_exits_2(self, tmp_path):
        assert run_cli(['emit-plots', str(tmp_path)]) == EXIT_SCHEMA

    def test_plots_after_a_run(self, scenario_file, tmp_path):
        path = scenario_file(SMALL_SPECTRUM)
        output = tmp_path / 'out'
        assert run_cli(['run', path, '--output', str(output)]) == EXIT_OK
        assert run_cli(['emit-plots', str(output)]) == EXIT_OK
        assert (output / 'plots' / 'spectrum_exponent_1.csv').is_file()
        with open(output / 'manifest.json', 'r', encoding='utf-8') as handle:
            manifest = json.load(handle)
        assert 'plots/spectrum_exponent_1.csv' in [item['path'] for item in manifest['artifacts']]
        assert manifest['scenario']['seed'] == 5
