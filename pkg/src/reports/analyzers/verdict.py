"""Ruelle and Pesin verdicts from the spectrum and the local entropy estimates"""

import math

import numpy as np

from constants import CONFIDENCE_Z, ENTROPY_TOLERANCE, LOWER_BOUND_MIN_FRACTION, PESIN_EPSILON
from src.models.entropy import BowenConfig, EntropyReport
from src.models.spectrum import LyapunovSpectrum
from src.reports.analyzers.spectrum_analyzer import chi_plus as positive_exponent_sum


def quantitative_lower_bound(chi_plus: float, Upsilon: float, P_logdet: float, N: float, dim: int = 3,
                             epsilon: float = PESIN_EPSILON) -> float:
    """chi+ - 2 sqrt(eps) dim log Upsilon - eps - eps / N - 4 P sqrt(eps)"""
    root = math.sqrt(epsilon)
    return chi_plus - 2.0 * root * dim * math.log(Upsilon) - epsilon - epsilon / N - 4.0 * P_logdet * root


def central_entropy(h_estimates):
    """
    Median of the conclusive local entropies per unit time with a half-width

    Returns:
        tuple: (h_central, half_width), (None, None) when nothing is conclusive
    """
    conclusive = [item for item in h_estimates if not item.inconclusive and item.h is not None]
    if not conclusive:
        return None, None
    values = np.array([item.h for item in conclusive])
    widths = np.array([item.half_width for item in conclusive])
    spread = CONFIDENCE_Z * float(np.std(values, ddof=1)) / math.sqrt(len(values)) if len(values) > 1 else 0.0
    return float(np.median(values)), max(float(np.median(widths)), spread)


def ruelle_violations(h_estimates, chi_plus: float, tolerance: float = ENTROPY_TOLERANCE):
    """Witnesses of conclusive states with h - half_width > chi+ + tolerance"""
    return [
        {'theta_id': item.theta_id, 'h': item.h, 'half_width': item.half_width, 'excess': item.h - chi_plus}
        for item in h_estimates
        if not item.inconclusive and item.h is not None and item.h - item.half_width > chi_plus + tolerance
    ]


def lower_bound_summary(h_estimates, min_fraction: float = LOWER_BOUND_MIN_FRACTION):
    """
    Fraction of states whose slope meets the Pesin lower bound

    Returns:
        tuple: (fraction, fraction >= min_fraction), (None, None) when no state was judged
    """
    judged = [item.lower_bound_holds for item in h_estimates if item.lower_bound_holds is not None]
    if not judged:
        return None, None
    fraction = sum(judged) / len(judged)
    return fraction, bool(fraction >= min_fraction)


def verdict(model, cfg: BowenConfig, spectrum: LyapunovSpectrum, h_estimates, P_logdet: float, Upsilon: float,
            partition=None, tolerance: float = ENTROPY_TOLERANCE, epsilon: float = PESIN_EPSILON) -> EntropyReport:
    """
    Set the entropy estimates against chi+

    Ruelle passes when chi+ - h_central >= -tolerance and no single state
    exceeds chi+ + tolerance beyond its half-width. The Pesin deviation
    |h_central - chi+| is always reported; it is judged only on
    finite-volume models sampled from the Liouville measure.

    Args:
        model: SurfaceModel shared by every input
        cfg: BowenConfig of the entropy runs
        spectrum: LyapunovSpectrum of the same model
        h_estimates: LocalEntropy list
        P_logdet, Upsilon: sampled suprema
        partition: optional PartitionBound

    Raises:
        ValueError: inputs from different models
        NumericalError: the spectrum did not converge
    """
    model_ids = {spectrum.model_id} | {item.model_id for item in h_estimates if item.model_id}
    if model_ids != {model.model_id}:
        raise ValueError(f"Verdict inputs mix models: {sorted(model_ids | {model.model_id})}")

    chi = positive_exponent_sum(spectrum) / spectrum.time_scale
    h_central, half_width = central_entropy(h_estimates)
    notes = ["Indeterminate Bowen samples are counted inside, which biases the entropy estimates down"]
    violations = ruelle_violations(h_estimates, chi, tolerance)
    lower_fraction, lower_pass = lower_bound_summary(h_estimates)
    ruelle_slack = pesin_deviation = pesin_pass = None
    ruelle_pass = False
    if h_central is None:
        notes.append("No conclusive local entropy estimate; verdicts withheld")
    else:
        ruelle_slack = chi - h_central
        ruelle_pass = ruelle_slack >= -tolerance and not violations
        pesin_deviation = abs(h_central - chi)
        if model.finite_volume or model.is_flat:
            pesin_pass = pesin_deviation <= tolerance
        else:
            notes.append(f"{model.model_id} is not a finite-volume quotient; Pesin deviation reported only")

    lower = quantitative_lower_bound(chi, Upsilon, P_logdet, cfg.N, model.n + 1, epsilon)
    return EntropyReport(
        model_id=model.model_id, chi_plus=chi, h_local=list(h_estimates), h_central=h_central,
        h_half_width=half_width, h_partition=partition, ruelle_slack=ruelle_slack,
        pesin_deviation=pesin_deviation, P_logdet=P_logdet, Upsilon=Upsilon, tolerance=tolerance,
        ruelle_pass=bool(ruelle_pass), pesin_pass=pesin_pass, pesin_lower_bound=lower,
        ruelle_violations=violations, lower_bound_fraction=lower_fraction, lower_bound_pass=lower_pass, notes=notes,
    )
