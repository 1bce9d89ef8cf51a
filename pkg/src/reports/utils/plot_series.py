"""Two-column (x, y) series for plotting, derived from the artifacts of a run"""

import json
import math
import os

import pandas as pd

PLOT_DIR = 'plots'
KNOWN_ARTIFACTS = ('bowen_counts.csv', 'spectrum_trace.csv', 'bounds.json')


class PlotSeriesExporter:
    def __init__(self, report_dir, log_func):
        self.report_dir = report_dir
        self.plot_dir = os.path.join(report_dir, PLOT_DIR)
        self.log = log_func

    def export(self):
        """
        Write one CSV per figure under <report_dir>/plots

        Returns:
            list: created files

        Raises:
            FileNotFoundError: report_dir holds no run artifacts
        """
        present = [name for name in KNOWN_ARTIFACTS if os.path.isfile(os.path.join(self.report_dir, name))]
        if not present:
            raise FileNotFoundError(f"No report artifacts in {self.report_dir}; expected one of {KNOWN_ARTIFACTS}")
        os.makedirs(self.plot_dir, exist_ok=True)

        files = []
        if 'bowen_counts.csv' in present:
            files.extend(self._bowen_decay())
        if 'spectrum_trace.csv' in present:
            files.extend(self._spectrum_traces())
        if 'bounds.json' in present:
            files.extend(self._bound_margins())
        return files

    def _write(self, frame, name):
        path = os.path.join(self.plot_dir, name)
        frame.to_csv(path, index=False)
        self.log(f"Wrote {PLOT_DIR}/{name}")
        return path

    def _bowen_decay(self):
        """-log nu(S_n) against n, one series per state"""
        counts = pd.read_csv(os.path.join(self.report_dir, 'bowen_counts.csv'))
        if counts.empty:
            return [self._write(pd.DataFrame(columns=['n', 'neg_log_measure']), 'bowen_decay.csv')]
        files = []
        for theta_id, rows in counts.groupby('theta_id'):
            rows = rows[rows['measure'] > 0].sort_values('n')
            series = pd.DataFrame({'n': rows['n'], 'neg_log_measure': [-math.log(value) for value in rows['measure']]})
            files.append(self._write(series, f"bowen_decay_theta{int(theta_id)}.csv"))
        return files

    def _spectrum_traces(self):
        trace = pd.read_csv(os.path.join(self.report_dir, 'spectrum_trace.csv'))
        return [self._write(trace[['t', column]], f"spectrum_{column}.csv")
                for column in trace.columns if column != 't']

    def _bound_margins(self):
        with open(os.path.join(self.report_dir, 'bounds.json'), 'r', encoding='utf-8') as handle:
            bounds = json.load(handle)
        checks = (bounds.get('bounds') or {}).get('checks', [])
        series = pd.DataFrame([{'check': item['name'], 'worst_margin': item['worst_margin']} for item in checks],
                              columns=['check', 'worst_margin'])
        return [self._write(series, 'bound_margins.csv')]
