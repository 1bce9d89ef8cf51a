"""
Spectrum Report

Lyapunov spectrum of the time-one map, chi+, the regularity sandwich and,
when the splitting converges, the growth rate along E^u for comparison.
"""

import numpy as np
import pandas as pd

from src.errors import NumericalError
from src.flow.trajectory import trajectory_frame
from .analyzers.spectrum_analyzer import chi_plus, regularity_check
from .analyzers.splitting_analyzer import unstable_growth_rate
from .base_report import BaseReport

GROWTH_RATE_STEPS = 200


class SpectrumReport(BaseReport):
    """spectrum.json, spectrum_trace.csv, regularity.csv and the optional trajectory dump"""

    def generate(self):
        output_files = []
        spectrum = self.primary_spectrum()
        chi = chi_plus(spectrum)
        self.log(f"chi+ = {chi:.6f}")

        record = spectrum.to_dict()
        record['chi_plus'] = chi
        record['chi_plus_per_unit_time'] = chi / spectrum.time_scale
        record['seed_independence'] = self._seed_independence()

        self.log("Checking Lyapunov regularity...")
        witnesses, summary = regularity_check(spectrum.theta0, self.budgets.regularity_k,
                                              self.budgets.regularity_epsilon, spectrum, opts=self.opts)
        record['regularity'] = summary.to_dict()
        self.log(f"Regularity sandwich holds at {summary.pass_fraction:.1%} of the witnesses")
        record['unstable_growth_rate'] = self._growth_rate(spectrum)

        self.record = record
        output_files.append(self.save_json(record, 'spectrum'))
        output_files.append(self.save_csv(self._trace_frame(spectrum), 'spectrum_trace'))
        output_files.append(self.save_csv(pd.DataFrame([item.to_row() for item in witnesses]), 'regularity'))

        if self.budgets.trajectory_T > 0:
            self.log(f"Dumping trajectory up to t = {self.budgets.trajectory_T:g}...")
            trajectory = trajectory_frame(spectrum.theta0, self.budgets.trajectory_T, self.budgets.time_scale,
                                          self.opts)
            output_files.append(self.save_csv(trajectory, 'trajectory'))
        return output_files

    def _growth_rate(self, spectrum):
        """Average log growth along E^u, set against the top exponent"""
        steps = int(min(GROWTH_RATE_STEPS, max(spectrum.T / spectrum.time_scale, 1)))
        try:
            rate = unstable_growth_rate(spectrum.theta0, steps, opts=self.opts)
        except NumericalError as e:
            self.log(f"No unstable growth rate: {str(e)}")
            return None
        top = max(spectrum.raw_exponents) / spectrum.time_scale
        return {'steps': steps, 'rate': rate, 'top_exponent': top, 'difference': rate - top}

    def _seed_independence(self):
        spectra = self.spectrum_stage()
        if len(spectra) < 2:
            return None
        values = []
        for spectrum in spectra:
            try:
                values.append(chi_plus(spectrum))
            except NumericalError as e:
                self.log(f"Skipping an unconverged spectrum in the seed comparison: {str(e)}")
        if not values:
            return None
        return {
            'runs': len(spectra),
            'converged_runs': len(values),
            'chi_plus': values,
            'spread': float(np.max(values) - np.min(values)),
        }

    @staticmethod
    def _trace_frame(spectrum):
        frame = pd.DataFrame(np.asarray(spectrum.convergence_trace),
                             columns=[f"exponent_{index + 1}" for index in range(3)])
        frame.insert(0, 't', np.asarray(spectrum.trace_times, dtype=float))
        return frame
