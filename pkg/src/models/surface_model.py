from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple
from collections import namedtuple
import math

import numpy as np

from constants import BUMP_CENTER, BUMP_WIDTH, BUMP_BOUNDARY_MARGIN
from src.errors import ChartDomainError


FLAT = 'Flat'
HYPERBOLIC = 'HyperbolicConstant'
MODULAR = 'ModularSurface'
PERTURBED = 'PerturbedHyperbolic'
MODEL_KINDS = (FLAT, HYPERBOLIC, MODULAR, PERTURBED)

# u and its derivatives up to second order for the conformal factor e^{2u}
ConformalJet = namedtuple('ConformalJet', ['u', 'ux', 'uy', 'uxx', 'uxy', 'uyy'])

# Gaussian curvature and its chart gradient
CurvatureJet = namedtuple('CurvatureJet', ['K', 'Kx', 'Ky'])


@dataclass(frozen=True)
class Bump:
    """Quartic bump (1 - r^2)^4 in the coordinates (x, s = log y)"""
    x0: float = BUMP_CENTER[0]
    s0: float = BUMP_CENTER[1]
    width: float = BUMP_WIDTH
    weight: float = 1.0

    @property
    def y_max(self) -> float:
        return math.exp(self.s0 + self.width)

    @property
    def y_min(self) -> float:
        return math.exp(self.s0 - self.width)

    def base_amplitude(self) -> float:
        """Amplitude keeping |y^2 f_xx + f_ss - f_s| below 0.75 * weight"""
        w = self.width
        return self.weight * 0.75 / (10.0 * (self.y_max ** 2 + 1.0) / w ** 2 + 2.0 / w)

    def fits_fundamental_domain(self, margin: float = BUMP_BOUNDARY_MARGIN) -> bool:
        """Support stays inside |Re z| < 1/2, |z| > 1 with a margin"""
        x_reach = abs(self.x0) + self.width
        x_inner = max(abs(self.x0) - self.width, 0.0)
        return x_reach < 0.5 - margin and x_inner ** 2 + self.y_min ** 2 > 1.0 + margin

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Bump':
        return cls(
            x0=float(data.get('x0', BUMP_CENTER[0])),
            s0=float(data.get('s0', BUMP_CENTER[1])),
            width=float(data.get('width', BUMP_WIDTH)),
            weight=float(data.get('weight', 1.0)),
        )


@dataclass(frozen=True)
class ChartPoint:
    """Chart coordinates of a base point together with the owning model id"""
    coords: Tuple[float, ...]
    model_id: str = ''

    @property
    def x(self) -> float:
        return float(self.coords[0])

    @property
    def y(self) -> float:
        return float(self.coords[1])

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)


@dataclass(frozen=True)
class SurfaceModel:
    """
    Conformal surface model g = e^{2u}(dx^2 + dy^2)

    Flat lives on the Euclidean plane. The three hyperbolic kinds live on the
    upper half-plane, by default quotiented by the modular group so that every
    state is kept over the standard fundamental domain.
    """
    kind: str
    c: float = 1.0
    epsilon: float = 0.0
    bumps: Tuple[Bump, ...] = field(default_factory=tuple)
    quotient: bool = True

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"Unknown model kind '{self.kind}', expected one of {MODEL_KINDS}")
        if not self.c > 0:
            raise ValueError(f"Curvature scale c must be positive, got {self.c}")
        if self.kind == MODULAR and self.c != 1.0:
            raise ValueError("ModularSurface is normalized to curvature -1 (c = 1)")
        if self.kind == PERTURBED:
            if not 0.0 <= self.epsilon < 1.0:
                raise ValueError(f"Perturbation amplitude must lie in [0, 1), got {self.epsilon}")
            if not self.bumps:
                object.__setattr__(self, 'bumps', (Bump(),))
            for bump in self.bumps:
                if not bump.fits_fundamental_domain():
                    raise ValueError(f"Bump {bump} leaves the interior of the fundamental domain")
        elif self.epsilon or self.bumps:
            object.__setattr__(self, 'epsilon', 0.0)
            object.__setattr__(self, 'bumps', tuple())

    @classmethod
    def flat(cls) -> 'SurfaceModel':
        return cls(kind=FLAT)

    @classmethod
    def hyperbolic(cls, c: float = 1.0, quotient: bool = True) -> 'SurfaceModel':
        return cls(kind=HYPERBOLIC, c=c, quotient=quotient)

    @classmethod
    def modular(cls) -> 'SurfaceModel':
        return cls(kind=MODULAR)

    @classmethod
    def perturbed(cls, c: float = 1.0, epsilon: float = 0.1, bumps: Optional[Tuple[Bump, ...]] = None,
                  quotient: bool = True) -> 'SurfaceModel':
        return cls(kind=PERTURBED, c=c, epsilon=epsilon, bumps=tuple(bumps or ()), quotient=quotient)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SurfaceModel':
        """Create a model from a flat dictionary (scenario [model] section)"""
        kind = str(data.get('kind', '')).strip()
        bumps = tuple(Bump.from_dict(item) for item in data.get('bumps', ()))
        return cls(
            kind=kind,
            c=float(data.get('c', 1.0)),
            epsilon=float(data.get('epsilon', 0.0)),
            bumps=bumps,
            quotient=bool(data.get('quotient', True)),
        )

    @property
    def n(self) -> int:
        return 2

    @property
    def model_id(self) -> str:
        if self.kind == FLAT:
            return FLAT
        if self.kind == MODULAR:
            return MODULAR
        suffix = '' if self.quotient else ',halfplane'
        if self.kind == HYPERBOLIC:
            return f"{HYPERBOLIC}(c={self.c:g}{suffix})"
        return f"{PERTURBED}(c={self.c:g},eps={self.epsilon:g}{suffix})"

    @property
    def chart(self) -> str:
        if self.kind == FLAT:
            return 'euclidean-plane'
        return 'modular-fundamental-domain' if self.quotient else 'upper-half-plane'

    @property
    def is_flat(self) -> bool:
        return self.kind == FLAT

    @property
    def is_quotient(self) -> bool:
        return self.kind != FLAT and self.quotient

    @property
    def has_constant_curvature(self) -> bool:
        return self.kind != PERTURBED

    @property
    def hyperbolic_declared(self) -> bool:
        """Flow declared hyperbolic (negative curvature bounded away from zero)"""
        return self.kind != FLAT

    @property
    def finite_volume(self) -> bool:
        return self.is_quotient

    @property
    def curvature_bounds(self) -> Tuple[float, float]:
        """Declared pinching interval (-b^2, -a^2)"""
        if self.kind == FLAT:
            return (0.0, 0.0)
        if self.kind == PERTURBED:
            return (-(self.c * (1.0 + self.epsilon)) ** 2, -(self.c * (1.0 - self.epsilon)) ** 2)
        return (-self.c ** 2, -self.c ** 2)

    @property
    def curvature_scale(self) -> float:
        """The c of 'sectional curvature bounded below by -c^2'"""
        return math.sqrt(-self.curvature_bounds[0])

    def bump_sup(self) -> float:
        """Upper bound of |f| over the surface"""
        if self.kind != PERTURBED:
            return 0.0
        return sum(bump.base_amplitude() for bump in self.bumps) / len(self.bumps)

    def validate(self, x, y):
        """Raise ChartDomainError for points outside the chart"""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ChartDomainError(f"Non-finite chart coordinates for {self.model_id}")
        if self.kind != FLAT and np.any(y <= 0.0):
            raise ChartDomainError(
                f"Half-plane chart of {self.model_id} needs y > 0, got min y = {float(np.min(y))}")

    def bump_jet(self, x, y) -> Dict[str, np.ndarray]:
        """
        Values and derivatives of the bump sum f(x, s) with s = log y

        Returns:
            dict with keys f, fx, fs, fxx, fxs, fss, fxxx, fxxs, fxss, fsss
        """
        x = np.asarray(x, dtype=float)
        s = np.log(np.asarray(y, dtype=float))
        keys = ('f', 'fx', 'fs', 'fxx', 'fxs', 'fss', 'fxxx', 'fxxs', 'fxss', 'fsss')
        jet = {key: np.zeros(np.broadcast(x, s).shape) for key in keys}
        if self.kind != PERTURBED:
            return jet

        scale = 1.0 / len(self.bumps)
        for bump in self.bumps:
            w = bump.width
            amp = bump.base_amplitude() * scale
            zx = (x - bump.x0) / w
            zs = (s - bump.s0) / w
            om = np.clip(1.0 - (zx * zx + zs * zs), 0.0, None)
            g0 = om ** 4
            g1 = -4.0 * om ** 3
            g2 = 12.0 * om ** 2
            g3 = -24.0 * om

            jet['f'] += amp * g0
            jet['fx'] += amp * g1 * 2.0 * zx / w
            jet['fs'] += amp * g1 * 2.0 * zs / w
            jet['fxx'] += amp * (g2 * 4.0 * zx * zx + g1 * 2.0) / w ** 2
            jet['fxs'] += amp * (g2 * 4.0 * zx * zs) / w ** 2
            jet['fss'] += amp * (g2 * 4.0 * zs * zs + g1 * 2.0) / w ** 2
            jet['fxxx'] += amp * (g3 * 8.0 * zx ** 3 + g2 * 12.0 * zx) / w ** 3
            jet['fxxs'] += amp * (g3 * 8.0 * zx * zx * zs + g2 * 4.0 * zs) / w ** 3
            jet['fxss'] += amp * (g3 * 8.0 * zx * zs * zs + g2 * 4.0 * zx) / w ** 3
            jet['fsss'] += amp * (g3 * 8.0 * zs ** 3 + g2 * 12.0 * zs) / w ** 3
        return jet

    def conformal_jet(self, x, y) -> ConformalJet:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        zeros = np.zeros(np.broadcast(x, y).shape)
        if self.kind == FLAT:
            return ConformalJet(zeros, zeros, zeros, zeros, zeros, zeros)

        u = -np.log(self.c * y) + zeros
        ux = zeros.copy()
        uy = -1.0 / y + zeros
        uxx = zeros.copy()
        uxy = zeros.copy()
        uyy = 1.0 / y ** 2 + zeros
        if self.kind == PERTURBED:
            eps = self.epsilon
            b = self.bump_jet(x, y)
            u = u + eps * b['f']
            ux = ux + eps * b['fx']
            uy = uy + eps * b['fs'] / y
            uxx = uxx + eps * b['fxx']
            uxy = uxy + eps * b['fxs'] / y
            uyy = uyy + eps * (b['fss'] - b['fs']) / y ** 2
        return ConformalJet(u, ux, uy, uxx, uxy, uyy)

    def curvature_jet(self, x, y) -> CurvatureJet:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        zeros = np.zeros(np.broadcast(x, y).shape)
        if self.kind == FLAT:
            return CurvatureJet(zeros, zeros, zeros)
        c2 = self.c ** 2
        if self.kind != PERTURBED:
            return CurvatureJet(zeros - c2, zeros, zeros)

        eps = self.epsilon
        b = self.bump_jet(x, y)
        E = np.exp(-2.0 * eps * b['f'])
        D = 1.0 + eps * (y ** 2 * b['fxx'] + b['fss'] - b['fs'])
        Dx = eps * (y ** 2 * b['fxxx'] + b['fxss'] - b['fxs'])
        Dy = eps * (2.0 * y * b['fxx'] + y * b['fxxs'] + (b['fsss'] - b['fss']) / y)
        K = -c2 * E * D
        Kx = -c2 * (-2.0 * eps * b['fx'] * E * D + E * Dx)
        Ky = -c2 * (-2.0 * eps * (b['fs'] / y) * E * D + E * Dy)
        return CurvatureJet(K, Kx, Ky)

    def flow_fields(self, x, y):
        """First derivatives of u and the curvature, the inputs of the geodesic and Jacobi equations"""
        if self.kind != PERTURBED:
            jet = self.conformal_jet(x, y)
            return jet.u, jet.ux, jet.uy, self.curvature_jet(x, y).K

        eps = self.epsilon
        b = self.bump_jet(x, y)
        u = eps * b['f'] - np.log(self.c * y)
        ux = eps * b['fx']
        uy = (eps * b['fs'] - 1.0) / y
        K = -self.c ** 2 * np.exp(-2.0 * eps * b['f']) * (1.0 + eps * (y ** 2 * b['fxx'] + b['fss'] - b['fs']))
        return u, ux, uy, K

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kind': self.kind,
            'model_id': self.model_id,
            'c': self.c,
            'epsilon': self.epsilon,
            'quotient': self.quotient,
            'curvature_bounds': list(self.curvature_bounds),
        }
