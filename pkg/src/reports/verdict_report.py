"""
Full Verdict Report

Runs the spectrum, bounds, inclusion and entropy reports on one shared stage
cache and condenses their records into report.json.
"""

from .base_report import BaseReport
from .bounds_report import BoundsReport
from .entropy_report import EntropyLabReport
from .inclusion_report import InclusionReport
from .spectrum_report import SpectrumReport


class VerdictReport(BaseReport):
    """Every experiment artifact plus report.json"""

    def generate(self):
        output_files = []
        parts = {}
        for name, report_class in (('spectrum', SpectrumReport), ('bounds', BoundsReport),
                                   ('inclusion', InclusionReport), ('entropy', EntropyLabReport)):
            if name == 'inclusion' and self.certificate_stage() is None:
                self.log("No certificate; skipping the inclusion check")
                parts[name] = None
                continue
            self.log(f"--- {name} ---")
            report = report_class(self.scenario, self.output_dir, self.log, self.executor, self._stages)
            output_files.extend(report.generate())
            parts[name] = report.record

        entropy = parts['entropy']
        bounds = parts['bounds']
        inclusion = parts['inclusion']
        summary = {
            'model': self.model.model_id,
            'seed': self.scenario.seed,
            'chi_plus': entropy['chi_plus'],
            'h_central': entropy['h_central'],
            'h_half_width': entropy['h_half_width'],
            'ruelle_slack': entropy['ruelle_slack'],
            'ruelle_pass': entropy['ruelle_pass'],
            'ruelle_violations': len(entropy['ruelle_violations']),
            'lower_bound_fraction': entropy['lower_bound_fraction'],
            'lower_bound_pass': entropy['lower_bound_pass'],
            'pesin_deviation': entropy['pesin_deviation'],
            'pesin_pass': entropy['pesin_pass'],
            'tolerance': entropy['tolerance'],
            'spectrum': parts['spectrum']['exponents'],
            'multiplicities': parts['spectrum']['multiplicities'],
            'certificate': bounds['certificate'],
            'bound_violations': None if not bounds.get('bounds') else bounds['bounds']['total_violations'],
            'inclusion_passed': None if inclusion is None else inclusion['result']['passed'],
            'largest_inclusion_rho': None if inclusion is None else inclusion['largest_rho'],
            'h_partition': entropy['h_partition'],
            'notes': entropy['notes'],
        }
        self.record = summary
        output_files.append(self.save_json(summary, 'report'))
        return output_files
