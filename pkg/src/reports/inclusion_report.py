"""
Inclusion Report

Pushes the Sasaki-exponential ball of radius rho through phi^m at the
reference state and compares the image with the linearized ellipsoid.
"""

from src.errors import NumericalError
from .analyzers.inclusion_analyzer import InclusionAnalyzer
from .base_report import BaseReport


class InclusionReport(BaseReport):
    """inclusion.json"""

    def generate(self):
        certificate = self.certificate_stage()
        if certificate is None:
            raise NumericalError("No Anosov certificate for this model; the inclusion check needs one",
                                 stage='certificate', diagnostics={'model': self.model.model_id})

        theta = self.reference_state()
        rho = self.budgets.inclusion_rho
        analyzer = InclusionAnalyzer(theta, certificate, self.budgets.inclusion_samples,
                                     lambda *labels: self.rng('inclusion', *labels), self.opts, self.log, rho)
        outcome = analyzer.analyze()
        if outcome is None:
            raise NumericalError("Inclusion check rejected its inputs; see the log", stage='inclusion',
                                 diagnostics={'rho': rho, 'm': certificate.m})

        record = {
            'model': self.model.model_id,
            'theta': theta.to_dict(),
            'm': certificate.m,
            'rho': rho,
            'inner_radius': certificate.inner_radius(rho),
            'rho_decay_rate': certificate.rho_decay_rate(rho),
            'asymptotic_decay_rate': certificate.asymptotic_decay_rate,
            'result': outcome['result'].to_dict(),
            'sweep': [item.to_dict() for item in outcome['sweep']],
            'largest_rho': outcome['largest_rho'],
        }
        self.record = record
        return [self.save_json(record, 'inclusion')]
