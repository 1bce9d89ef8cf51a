from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional
import math

import numpy as np

from src.models.unit_tangent import SplitVector, UnitTangentState


@dataclass
class SplittingEstimate:
    """
    Stable and unstable directions at one state

    e_s and e_u are unit SplitVectors orthogonal to the flow; their frame
    components (along G, H, V) are kept in e_s_frame / e_u_frame.
    """
    theta: UnitTangentState
    e_s: SplitVector
    e_u: SplitVector
    g_dir: SplitVector
    horizon: float
    residual: float
    e_s_frame: np.ndarray = None
    e_u_frame: np.ndarray = None
    converged: bool = True
    diagnostic: str = ''

    @property
    def cos_angle(self) -> float:
        """Sasaki cosine between e_s and e_u (the splitting function f)"""
        return float(np.dot(self.e_s_frame, self.e_u_frame))

    @property
    def f(self) -> float:
        return abs(self.cos_angle)

    @property
    def projection_norm(self) -> float:
        """Norm of the projection onto E^s along E^u + <G>"""
        sine = math.sqrt(max(1.0 - self.cos_angle ** 2, 0.0))
        return math.inf if sine == 0.0 else 1.0 / sine

    def eberlein_ratios(self):
        """|K(e)| / |d pi(e)| for e_s and e_u"""
        ratios = []
        for frame in (self.e_s_frame, self.e_u_frame):
            horizontal = math.hypot(frame[0], frame[1])
            ratios.append(math.inf if horizontal == 0.0 else abs(frame[2]) / horizontal)
        return tuple(ratios)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'theta': self.theta.to_dict(),
            'e_s': [float(value) for value in self.e_s_frame],
            'e_u': [float(value) for value in self.e_u_frame],
            'horizon': self.horizon,
            'residual': self.residual,
            'converged': self.converged,
            'diagnostic': self.diagnostic,
        }


@dataclass
class ConstantsFit:
    """Envelope fit log |d phi^-t on E^u| <= log C + t log lambda"""
    C: float
    lam: float
    slope: float
    intercept: float
    r_squared: float
    samples: int
    horizon: float
    lam_floor_ok: bool
    reversed_flow: bool = False
    note: str = ''

    def to_dict(self) -> Dict[str, Any]:
        return {
            'C': self.C,
            'lambda': self.lam,
            'r_squared': self.r_squared,
            'samples': self.samples,
            'horizon': self.horizon,
            'lambda_floor_ok': self.lam_floor_ok,
            'reversed_flow': self.reversed_flow,
            'note': self.note,
        }


@dataclass
class SampledConstants:
    """Sampled suprema over a batch of states, safety factors applied"""
    Q: float
    delta_proj: float
    P_logdet: float
    Upsilon: float
    max_f: float
    max_projection: float
    samples: int
    failed_splittings: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'Q': self.Q,
            'delta_proj': self.delta_proj,
            'P_logdet': self.P_logdet,
            'Upsilon': self.Upsilon,
            'max_f': self.max_f,
            'max_projection': self.max_projection,
            'samples': self.samples,
            'failed_splittings': self.failed_splittings,
        }


@dataclass
class AnosovCertificate:
    """Explicit constants derived from (c, C, lambda, Q, delta_proj, m)"""
    c: float
    C: float
    lam: float
    Q: float
    delta_proj: float
    m: int
    L: float
    P1: float
    P2: float
    P: float
    tau1: float
    tau2: float
    kappa: float
    h_c: float
    K1: float
    K2: float
    beta: float
    cotasup: float
    admissible_m: Optional[int] = None

    @property
    def lam_floor_ok(self) -> bool:
        return self.lam >= math.exp(-self.c) * (1.0 - 1e-9)

    def inner_radius(self, rho: float) -> float:
        """rho_m = beta kappa^-1 rho"""
        return self.beta / self.kappa * rho

    def rho_decay_rate(self, rho: float) -> float:
        """(1/m) log rho_m"""
        return math.log(self.inner_radius(rho)) / self.m

    @property
    def asymptotic_decay_rate(self) -> float:
        return -math.log(self.h_c) - 2.0 * self.c

    def invariant_violations(self) -> List[str]:
        """Names of the certificate invariants that fail"""
        failures = []
        if not self.Q < 1.0:
            failures.append('Q < 1')
        if not self.lam_floor_ok:
            failures.append('lambda >= exp(-c)')
        if not self.kappa > 1.0:
            failures.append('kappa > 1')
        if not 0.0 < self.beta < 1.0:
            failures.append('0 < beta < 1')
        return failures

    def to_dict(self) -> Dict[str, Any]:
        return {
            'c': self.c,
            'C': self.C,
            'lambda': self.lam,
            'Q': self.Q,
            'delta_proj': self.delta_proj,
            'm': self.m,
            'L': self.L,
            'P': self.P,
            'P1': self.P1,
            'P2': self.P2,
            'tau1': self.tau1,
            'tau2': self.tau2,
            'kappa': self.kappa,
            'K1': self.K1,
            'K2': self.K2,
            'beta': self.beta,
            'h_c': self.h_c,
            'cotasup': self.cotasup,
            'admissible_m': self.admissible_m,
            'asymptotic_decay_rate': self.asymptotic_decay_rate,
            'invariant_violations': self.invariant_violations(),
        }


@dataclass
class BoundCheck:
    """Outcome of one inequality over a sample: violations and the worst witness"""
    name: str
    samples: int = 0
    violations: int = 0
    worst_margin: float = math.inf
    witness: Optional[Dict[str, Any]] = None

    def record(self, margin: float, witness: Dict[str, Any], tol: float):
        self.samples += 1
        if margin < -tol:
            self.violations += 1
        if margin < self.worst_margin:
            self.worst_margin = float(margin)
            self.witness = witness

    def merge(self, other: 'BoundCheck') -> 'BoundCheck':
        merged = BoundCheck(self.name, self.samples + other.samples, self.violations + other.violations)
        best = self if self.worst_margin <= other.worst_margin else other
        merged.worst_margin, merged.witness = best.worst_margin, best.witness
        return merged

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'samples': self.samples,
            'violations': self.violations,
            'worst_margin': None if math.isinf(self.worst_margin) else self.worst_margin,
            'witness': self.witness,
        }


@dataclass
class BoundReport:
    """Per-inequality pass counts for one certificate"""
    model_id: str
    m: int
    checks: List[BoundCheck] = field(default_factory=list)

    @property
    def total_violations(self) -> int:
        return sum(check.violations for check in self.checks)

    def check(self, name: str) -> BoundCheck:
        for item in self.checks:
            if item.name == name:
                return item
        raise KeyError(f"No bound check named '{name}'")

    def to_dict(self) -> Dict[str, Any]:
        return {
            'model': self.model_id,
            'm': self.m,
            'total_violations': self.total_violations,
            'checks': [item.to_dict() for item in self.checks],
        }


@dataclass
class InclusionResult:
    """Image of the small exponential ball against the linearized ellipsoid"""
    passed: bool
    worst_margin: float
    samples: int
    skipped: int
    m: int
    rho: float
    inner_radius: float

    @property
    def skipped_fraction(self) -> float:
        return self.skipped / self.samples if self.samples else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'passed': self.passed,
            'worst_margin': self.worst_margin,
            'samples': self.samples,
            'skipped': self.skipped,
            'skipped_fraction': self.skipped_fraction,
            'm': self.m,
            'rho': self.rho,
            'inner_radius': self.inner_radius,
        }


@dataclass
class RatioDiagnostic:
    """r(t) with its two-sided exponential envelope"""
    t: np.ndarray
    r: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    @property
    def inside(self) -> np.ndarray:
        scale = np.maximum(np.abs(self.r), 1e-300)
        return (self.r >= self.lower - 1e-9 * scale) & (self.r <= self.upper + 1e-9 * scale)

    @property
    def all_inside(self) -> bool:
        return bool(np.all(self.inside))
