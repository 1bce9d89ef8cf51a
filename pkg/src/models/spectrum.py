from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from constants import REGULARITY_REL_TOL, SPECTRUM_CONVERGENCE_THRESHOLD
from src.models.unit_tangent import UnitTangentState


@dataclass
class LyapunovSpectrum:
    """
    Lyapunov exponents of the time-one map with multiplicities

    exponents / multiplicities are the clustered values (descending);
    raw_exponents keeps the three unclustered time averages.
    """
    model_id: str
    exponents: List[float]
    multiplicities: List[int]
    T: float
    renorm_count: int
    theta0: UnitTangentState
    raw_exponents: List[float]
    trace_times: np.ndarray
    convergence_trace: np.ndarray
    trace_halfwidth: float
    time_scale: float = 1.0

    @property
    def converged(self) -> bool:
        return self.trace_halfwidth <= SPECTRUM_CONVERGENCE_THRESHOLD

    @property
    def zero_sum_defect(self) -> float:
        return abs(float(np.dot(self.exponents, self.multiplicities)))

    @property
    def symmetry_defect(self) -> float:
        raw = np.sort(np.asarray(self.raw_exponents))
        return float(np.max(np.abs(raw + raw[::-1])))

    @property
    def zero_exponent_gap(self) -> float:
        return float(np.min(np.abs(self.raw_exponents)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'model': self.model_id,
            'theta0': self.theta0.to_dict(),
            'T': self.T,
            'renorm_count': self.renorm_count,
            'exponents': list(self.exponents),
            'multiplicities': list(self.multiplicities),
            'raw_exponents': list(self.raw_exponents),
            'trace_halfwidth': self.trace_halfwidth,
            'converged': self.converged,
            'zero_sum_defect': self.zero_sum_defect,
            'symmetry_defect': self.symmetry_defect,
            'zero_exponent_gap': self.zero_exponent_gap,
            'time_scale': self.time_scale,
            'convergence_trace': [
                {'t': float(t), 'exponents': [float(value) for value in row]}
                for t, row in zip(self.trace_times, self.convergence_trace)
            ],
        }


@dataclass
class RegularityWitness:
    """Both sandwich inequalities at one iterate for one test vector"""
    theta: UnitTangentState
    k: int
    epsilon: float
    vector_id: int
    exponent: float
    growth: float
    lower_pass: bool
    upper_pass: bool

    @property
    def passed(self) -> bool:
        return self.lower_pass and self.upper_pass

    def to_row(self) -> Dict[str, Any]:
        return {
            'vector_id': self.vector_id,
            'k': self.k,
            'epsilon': self.epsilon,
            'exponent': self.exponent,
            'growth': self.growth,
            'lower_pass': self.lower_pass,
            'upper_pass': self.upper_pass,
            'pass': self.passed,
        }


@dataclass
class RegularitySummary:
    """Pass fraction and per-vector crossover iterate"""
    pass_fraction: float
    crossover: Dict[int, Optional[int]] = field(default_factory=dict)

    @classmethod
    def from_witnesses(cls, witnesses: Sequence[RegularityWitness]) -> 'RegularitySummary':
        if not witnesses:
            return cls(1.0, {})
        passed = sum(1 for item in witnesses if item.passed)
        crossover = {}
        for vector_id in sorted({item.vector_id for item in witnesses}):
            rows = sorted((item for item in witnesses if item.vector_id == vector_id), key=lambda item: item.k)
            first = None
            for item in reversed(rows):
                if not item.passed:
                    break
                first = item.k
            crossover[vector_id] = first
        return cls(passed / len(witnesses), crossover)

    def to_dict(self) -> Dict[str, Any]:
        return {'pass_fraction': self.pass_fraction,
                'crossover': {str(key): value for key, value in self.crossover.items()}}


def sandwich_holds(growth: float, norm0: float, k: int, exponent: float, epsilon: float,
                   rel_tol: float = REGULARITY_REL_TOL):
    """(lower ok, upper ok) for e^{k(X - eps)}|xi| <= |d phi^k xi| <= e^{k(X + eps)}|xi|"""
    lower = np.exp(k * (exponent - epsilon)) * norm0
    upper = np.exp(k * (exponent + epsilon)) * norm0
    return bool(lower <= growth * (1.0 + rel_tol)), bool(growth <= upper * (1.0 + rel_tol))
