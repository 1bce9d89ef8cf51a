"""
Base Report Class

Base class for every experiment report. Reports share the pipeline stages
(spectrum, splitting and certificate, entropy) and cache their results, so
the full verdict reuses what the single-experiment reports compute.
"""

import os

import numpy as np

from constants import SAFETY_FACTOR
from src.errors import ScenarioSchemaError
from src.models.unit_tangent import UnitTangentState
from src.reports.analyzers.bounds_analyzer import build_certificate
from src.reports.analyzers.spectrum_analyzer import SpectrumAnalyzer
from src.reports.analyzers.splitting_analyzer import SplittingAnalyzer, cocycle_supremum
from src.reports.utils.json_exporter import JsonExporter
from src.sasaki.bundle import liouville_states
from src.utils.rng import stream


class BaseReport:
    """Base class for all reports"""

    def __init__(self, scenario, output_dir, log_callback, executor=None, stages=None):
        """
        Initialize the report

        Args:
            scenario: validated Scenario
            output_dir: Directory to save output files
            log_callback: Function to call for logging messages
            executor: optional concurrent.futures executor for per-state batches
            stages: stage cache shared with other reports of the same run
        """
        self.scenario = scenario
        self.model = scenario.model
        self.opts = scenario.integrator
        self.budgets = scenario.budgets
        self.output_dir = output_dir
        self.log = log_callback
        self.executor = executor
        self.exporter = JsonExporter(log_callback)
        self._stages = {} if stages is None else stages

    def generate(self):
        """
        Generate the report and return list of created files

        Returns:
            list: Paths to created output files
        """
        raise NotImplementedError("Subclasses must implement the generate() method")

    def rng(self, *labels):
        return stream(self.scenario.seed, *labels)

    def sample_states(self, label, count):
        """Liouville states on the compact core from the stream (seed, label)"""
        return liouville_states(self.model, self.scenario.bowen.core, count, self.rng(label))

    def save_csv(self, df, filename_prefix):
        """
        Save a DataFrame as CSV with consistent naming

        Artifacts carry no timestamp so reruns with the same seed are
        byte-identical.

        Returns:
            Full path to saved file
        """
        filename = f"{filename_prefix}.csv"
        filepath = os.path.join(self.output_dir, filename)
        df.to_csv(filepath, index=False)
        self.log(f"Wrote {filename} ({len(df)} rows)")
        return filepath

    def save_json(self, data, filename_prefix):
        return self.exporter.export(data, os.path.join(self.output_dir, f"{filename_prefix}.json"))

    def spectrum_stage(self):
        """Lyapunov spectra from spectrum_states Liouville initial states"""
        if 'spectrum' not in self._stages:
            self.log("Computing Lyapunov spectra...")
            states = self.sample_states('spectrum-states', self.budgets.spectrum_states)
            analyzer = SpectrumAnalyzer(states, self.budgets.T, self.budgets.renorm_dt,
                                        lambda index: self.rng('spectrum', index), self.opts, self.log,
                                        self.budgets.time_scale)
            self._stages['spectrum'] = analyzer.analyze(self.executor)
        return self._stages['spectrum']

    def splitting_stage(self):
        """Splittings over bound_samples states with the fitted and sampled constants"""
        if 'splitting' not in self._stages:
            self.log("Estimating the Anosov splitting...")
            states = self.sample_states('bound-states', self.budgets.bound_samples)
            analyzer = SplittingAnalyzer(states, self.opts, self.log, self.budgets.splitting_horizon,
                                         self.budgets.fit_horizon)
            self._stages['splitting'] = analyzer.analyze(self.executor)
        return self._stages['splitting']

    def certificate_stage(self):
        """AnosovCertificate from the splitting stage, or None when the splitting failed"""
        if 'certificate' not in self._stages:
            splitting = self.splitting_stage()
            certificate = None
            if splitting is not None:
                forward, reverse, sampled = splitting['forward'], splitting['reverse'], splitting['sampled']
                try:
                    certificate = build_certificate(self.model.curvature_scale, forward.C, forward.lam, sampled.Q,
                                                    sampled.delta_proj, C_rev=reverse.C, lam_rev=reverse.lam)
                    self.log(f"Certificate built with m = {certificate.m}")
                except ValueError as e:
                    self.log(f"Could not build the certificate: {str(e)}")
            self._stages['certificate'] = certificate
        return self._stages['certificate']

    def reference_state(self):
        """Central state of the core used by single-state experiments"""
        (x0, x1), (y0, y1) = self.scenario.bowen.core.chart_box(self.model)
        x = 0.5 * (x0 + x1)
        y = 0.5 * (y0 + y1) if self.model.is_flat else max(1.2, y0 + 0.1)
        return UnitTangentState.from_angle(self.model, x, y, np.pi / 6.0)

    def primary_spectrum(self):
        """First spectrum of the spectrum stage"""
        spectra = self.spectrum_stage()
        if not spectra:
            raise ScenarioSchemaError(f"Spectrum budget rejected (T = {self.budgets.T}, "
                                      f"renorm_dt = {self.budgets.renorm_dt}); see the log", key='budgets.T')
        return spectra[0]

    def entropy_constants(self):
        """
        (P_logdet, Upsilon) for the entropy bounds

        Taken from the sampled constants of the splitting stage. Without a
        splitting there is no unstable bundle: P_logdet is 0 and Upsilon is
        sampled directly from the time-one cocycle.
        """
        splitting = self.splitting_stage()
        if splitting is not None:
            return splitting['sampled'].P_logdet, splitting['sampled'].Upsilon
        states = self.sample_states('bound-states', self.budgets.bound_samples)
        return 0.0, SAFETY_FACTOR * cocycle_supremum(self.model, states, self.opts)
