import os
import sys
import json
import hashlib

import numpy as np
import pandas as pd
import pytest

# Add the repository root to the path so we can import the modules
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.reports.utils.json_exporter import MANIFEST_NAME, JsonExporter, to_jsonable
from src.reports.utils.plot_series import PlotSeriesExporter


@pytest.fixture
def exporter():
    return JsonExporter(lambda message: None)


@pytest.fixture
def run_dir(tmp_path):
    pd.DataFrame({
        'theta_id': [0, 0, 0, 1, 1],
        'n': [0, 1, 2, 0, 1],
        'measure': [1.0, 0.5, 0.0, 0.8, 0.2],
    }).to_csv(tmp_path / 'bowen_counts.csv', index=False)
    pd.DataFrame({
        't': [10.0, 20.0],
        'exponent_1': [1.1, 1.0],
        'exponent_2': [0.0, 0.0],
        'exponent_3': [-1.1, -1.0],
    }).to_csv(tmp_path / 'spectrum_trace.csv', index=False)
    with open(tmp_path / 'bounds.json', 'w', encoding='utf-8') as handle:
        json.dump({'bounds': {'checks': [{'name': 'time_one_norm', 'worst_margin': 0.25},
                                         {'name': 'eberlein', 'worst_margin': 0.0}]}}, handle)
    return tmp_path


class TestJsonExport:
    def test_to_jsonable(self):
        data = {'a': np.float64('nan'), 'b': np.arange(2), 'c': (np.bool_(True), np.int64(4)), 1: float('inf')}
        assert to_jsonable(data) == {'a': None, 'b': [0, 1], 'c': [True, 4], '1': None}

    def test_key_order_is_kept(self, exporter, tmp_path):
        path = exporter.export({'z': 1, 'a': 2}, str(tmp_path / 'out.json'))
        with open(path, 'r', encoding='utf-8') as handle:
            assert list(json.load(handle)) == ['z', 'a']

    def test_export_is_deterministic(self, exporter, tmp_path):
        data = {'model': 'Flat', 'values': np.linspace(0.0, 1.0, 5)}
        first = exporter.export(data, str(tmp_path / 'first.json'))
        second = exporter.export(data, str(tmp_path / 'second.json'))
        with open(first, 'rb') as a, open(second, 'rb') as b:
            assert a.read() == b.read()

    def test_manifest(self, exporter, run_dir):
        manifest_path = exporter.write_manifest(str(run_dir), {'seed': 1})
        with open(manifest_path, 'r', encoding='utf-8') as handle:
            manifest = json.load(handle)
        paths = [item['path'] for item in manifest['artifacts']]
        assert paths == sorted(['bounds.json', 'bowen_counts.csv', 'spectrum_trace.csv'])
        assert MANIFEST_NAME not in paths
        with open(run_dir / 'bounds.json', 'rb') as handle:
            digest = hashlib.sha256(handle.read()).hexdigest()
        assert manifest['artifacts'][0]['sha256'] == digest
        assert manifest['scenario'] == {'seed': 1}
        assert 'generated_at' in manifest


class TestPlotSeries:
    def test_series_for_every_artifact(self, run_dir):
        files = PlotSeriesExporter(str(run_dir), lambda message: None).export()
        names = sorted(os.path.basename(path) for path in files)
        assert names == ['bound_margins.csv', 'bowen_decay_theta0.csv', 'bowen_decay_theta1.csv',
                         'spectrum_exponent_1.csv', 'spectrum_exponent_2.csv', 'spectrum_exponent_3.csv']

    def test_bowen_decay_drops_empty_sets(self, run_dir):
        PlotSeriesExporter(str(run_dir), lambda message: None).export()
        series = pd.read_csv(run_dir / 'plots' / 'bowen_decay_theta0.csv')
        assert list(series.columns) == ['n', 'neg_log_measure']
        assert series['n'].tolist() == [0, 1]
        assert series['neg_log_measure'].tolist() == pytest.approx([0.0, np.log(2.0)])

    def test_bound_margins(self, run_dir):
        PlotSeriesExporter(str(run_dir), lambda message: None).export()
        series = pd.read_csv(run_dir / 'plots' / 'bound_margins.csv')
        assert series['check'].tolist() == ['time_one_norm', 'eberlein']

    def test_empty_bowen_counts(self, tmp_path):
        pd.DataFrame(columns=['theta_id', 'n', 'measure']).to_csv(tmp_path / 'bowen_counts.csv', index=False)
        files = PlotSeriesExporter(str(tmp_path), lambda message: None).export()
        assert [os.path.basename(path) for path in files] == ['bowen_decay.csv']
        with open(files[0], 'r', encoding='utf-8') as handle:
            assert handle.read().strip() == 'n,neg_log_measure'

    def test_bounds_without_certificate(self, tmp_path):
        with open(tmp_path / 'bounds.json', 'w', encoding='utf-8') as handle:
            json.dump({'splitting_converged': False, 'bounds': None}, handle)
        PlotSeriesExporter(str(tmp_path), lambda message: None).export()
        assert pd.read_csv(tmp_path / 'plots' / 'bound_margins.csv').empty

    def test_missing_artifacts(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            PlotSeriesExporter(str(tmp_path), lambda message: None).export()
