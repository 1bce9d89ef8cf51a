"""
Entropy Lab Report

Local entropies from Bowen-set measures, the grid-partition bound, the
return-time histogram and the Ruelle / Pesin verdicts against chi+.
"""

import dataclasses

import numpy as np
import pandas as pd

from src.errors import NumericalError
from src.flow.trajectory import orbit_batch
from src.sasaki.bundle import liouville_sample
from .analyzers.bowen_analyzer import (BowenAnalyzer, return_time_distribution, return_time_radii,
                                      return_times_along_orbit)
from .analyzers.partition_analyzer import PartitionAnalyzer
from .analyzers.spectrum_analyzer import chi_plus
from .analyzers.verdict import verdict
from .base_report import BaseReport


class EntropyLabReport(BaseReport):
    """entropy.json, bowen_counts.csv and return_times.csv"""

    def generate(self):
        output_files = []
        cfg = self.scenario.bowen
        spectrum = self.primary_spectrum()
        chi = chi_plus(spectrum) / spectrum.time_scale
        P_logdet, Upsilon = self.entropy_constants()
        self.log(f"chi+ = {chi:.4f} per unit time; P_logdet = {P_logdet:.4f}, Upsilon = {Upsilon:.4f}")

        self.log(f"Estimating Bowen-set measures at {self.budgets.entropy_states} state(s), "
                 f"depths {list(cfg.n_range)}...")
        states = self.sample_states('entropy-states', self.budgets.entropy_states)
        bowen = BowenAnalyzer(states, cfg, self.scenario.seed, self.opts, self.log, chi, P_logdet,
                              self.scenario.pesin_epsilon).analyze(self.executor)
        if bowen is None:
            raise NumericalError("Bowen-set estimation rejected its inputs; see the log", stage='entropy')

        partition = self._partition_bound()
        report = verdict(self.model, cfg, spectrum, bowen['entropies'], P_logdet, Upsilon, partition,
                         self.scenario.tolerance, self.scenario.pesin_epsilon)
        if report.h_central is not None:
            self.log(f"h = {report.h_central:.4f} +/- {report.h_half_width:.4f}; "
                     f"Ruelle {'pass' if report.ruelle_pass else 'fail'}")

        record = report.to_dict()
        record['N'] = cfg.N
        record['xi_graph'] = cfg.xi_graph
        record['cusp_mass_fraction'] = cfg.core.cusp_mass_fraction(self.model)
        record['xi_sweep'] = self._xi_sweep(states, bowen['entropies'], spectrum, chi, P_logdet, Upsilon)
        record['monotonicity_violations'] = {theta_id: [list(pair) for pair in pairs]
                                             for theta_id, pairs in bowen['monotonicity'].items()}
        self.record = record
        self.entropy_report = report

        output_files.append(self.save_json(record, 'entropy'))
        output_files.append(self.save_csv(bowen['measures'], 'bowen_counts'))
        output_files.append(self.save_csv(self._return_times(), 'return_times'))
        return output_files

    def _partition_bound(self):
        """Partition bound on Liouville orbits, compared with rho_m when a certificate exists"""
        count, steps = self.budgets.partition_orbits, self.budgets.partition_steps
        points = liouville_sample(self.model, self.scenario.bowen.core, count, self.rng('partition'))
        orbits = orbit_batch(self.model, points, steps, 1.0, self.opts)
        certificate = self.certificate_stage()
        rho_m = None if certificate is None else certificate.inner_radius(self.budgets.inclusion_rho)
        return PartitionAnalyzer(self.model, orbits, self.scenario.partition, self.budgets.partition_m, self.log,
                                 rho_m=rho_m, opts=self.opts).analyze()

    def _return_times(self):
        """Return-time histogram with rho(theta) for every xi_graph of the grid"""
        cfg = self.scenario.bowen
        histogram = return_time_distribution(self.model, cfg, self.budgets.return_samples,
                                             self.rng('return-times'), self.opts)
        frames = []
        for xi in self.scenario.xi_grid:
            frame = histogram.copy()
            frame['rho'] = return_time_radii(dataclasses.replace(cfg, xi_graph=xi), frame['L'].to_numpy())
            frame.insert(0, 'xi_graph', xi)
            frames.append(frame)
        return pd.concat(frames, ignore_index=True)

    def _xi_sweep(self, states, entropies, spectrum, chi, P_logdet, Upsilon):
        """
        Local entropies and verdicts for every xi_graph of the grid

        Only states whose radii along the Bowen orbit change with xi are
        rerun, on the same random streams; the others keep their estimate.
        """
        cfg = self.scenario.bowen
        depth = max(cfg.n_range, default=0)
        return_times = [return_times_along_orbit(theta, cfg, depth, self.opts)[0] for theta in states]
        rows = []
        for xi in self.scenario.xi_grid:
            variant = dataclasses.replace(cfg, xi_graph=xi)
            swept = list(entropies)
            changed = [index for index, L in enumerate(return_times)
                       if not np.array_equal(return_time_radii(variant, L), return_time_radii(cfg, L))]
            if changed:
                self.log(f"xi_graph = {xi}: rerunning {len(changed)} state(s) with changed radii")
                rerun = BowenAnalyzer([states[index] for index in changed], variant, self.scenario.seed, self.opts,
                                      self.log, chi, P_logdet, self.scenario.pesin_epsilon,
                                      theta_ids=changed).analyze(self.executor)
                if rerun is None:
                    raise NumericalError(f"Bowen-set estimation at xi_graph = {xi} rejected its inputs",
                                         stage='entropy')
                for entropy in rerun['entropies']:
                    swept[entropy.theta_id] = entropy
            report = verdict(self.model, variant, spectrum, swept, P_logdet, Upsilon, None,
                             self.scenario.tolerance, self.scenario.pesin_epsilon)
            rows.append({
                'xi_graph': xi,
                'rerun_states': len(changed),
                'h_central': report.h_central,
                'h_half_width': report.h_half_width,
                'ruelle_pass': report.ruelle_pass,
                'ruelle_violations': len(report.ruelle_violations),
                'lower_bound_fraction': report.lower_bound_fraction,
                'pesin_deviation': report.pesin_deviation,
                'pesin_pass': report.pesin_pass,
            })
        return rows
