"""
Bounds Report

Fits the Anosov constants, builds the certificate and checks every derived
inequality over the sampled states.
"""

import numpy as np
import pandas as pd

from .analyzers.bounds_analyzer import BoundsAnalyzer
from .analyzers.splitting_analyzer import ratio_diagnostic
from .base_report import BaseReport

RATIO_TIMES = np.arange(0.0, 20.0 + 1e-9, 1.0)


class BoundsReport(BaseReport):
    """bounds.json, splitting.csv and ratio.csv"""

    def generate(self):
        output_files = []
        splitting = self.splitting_stage()
        record = {'model': self.model.model_id, 'samples': self.budgets.bound_samples}

        if splitting is None:
            # Flat and other non-hyperbolic models end here
            record.update({
                'splitting_converged': False,
                'diagnostic': "Splitting did not converge at any sampled state; no certificate",
                'certificate': None,
                'bounds': None,
            })
            self.record = record
            output_files.append(self.save_json(record, 'bounds'))
            return output_files

        output_files.append(self.save_csv(splitting['table'], 'splitting'))
        certificate = self.certificate_stage()
        record.update({
            'splitting_converged': True,
            'forward_fit': splitting['forward'].to_dict(),
            'reverse_fit': splitting['reverse'].to_dict(),
            'sampled': splitting['sampled'].to_dict(),
            'certificate': None if certificate is None else certificate.to_dict(),
        })

        ratio = self._ratio(splitting)
        if ratio is not None:
            record['ratio_all_inside'] = ratio.all_inside
            frame = pd.DataFrame({'t': ratio.t, 'r': ratio.r, 'lower': ratio.lower, 'upper': ratio.upper,
                                  'inside': ratio.inside})
            output_files.append(self.save_csv(frame, 'ratio'))

        if certificate is None:
            record['bounds'] = None
        else:
            states = [estimate.theta for estimate in splitting['estimates'] if estimate.converged]
            report = BoundsAnalyzer(states, certificate, self.opts, self.log,
                                    self.scenario.seed).analyze(self.executor)
            record['bounds'] = None if report is None else report.to_dict()

        self.record = record
        output_files.append(self.save_json(record, 'bounds'))
        return output_files

    def _ratio(self, splitting):
        """Ratio diagnostic at the first converged state"""
        estimate = next(item for item in splitting['estimates'] if item.converged)
        try:
            return ratio_diagnostic(estimate.theta, estimate.e_s, estimate.e_u, RATIO_TIMES,
                                    splitting['forward'].lam, opts=self.opts)
        except ValueError as e:
            self.log(f"Could not evaluate the ratio diagnostic: {str(e)}")
            return None
