from dataclasses import dataclass
from typing import Any, Dict

import numpy as np

from src.models.unit_tangent import UnitTangentState


@dataclass(frozen=True)
class JacobiState:
    """Perpendicular Jacobi field value J and covariant derivative J' at time t"""
    J: float
    Jp: float
    t: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.J, self.Jp], dtype=float)

    def is_trivial(self, tol: float = 0.0) -> bool:
        return abs(self.J) <= tol and abs(self.Jp) <= tol


@dataclass(frozen=True)
class FlowSample:
    """
    State reached by the geodesic flow with the cocycle accumulated on the way

    The cocycle is 3x3 in the Sasaki-orthonormal frame (G, H, V): flow
    direction, horizontal normal, vertical normal.
    """
    state: UnitTangentState
    t: float
    cocycle: np.ndarray
    cusp_excursion: bool = False

    @property
    def perpendicular_block(self) -> np.ndarray:
        return self.cocycle[1:, 1:]


@dataclass
class ModularState:
    """Matrix of SL(2, R) representing a unit tangent vector of the modular surface"""
    matrix: np.ndarray
    reduced: bool = False

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float).reshape(2, 2)

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))

    @property
    def base_point(self) -> complex:
        (a, b), (c, d) = self.matrix
        return (a * 1j + b) / (c * 1j + d)

    def to_dict(self) -> Dict[str, Any]:
        return {'matrix': self.matrix.tolist(), 'reduced': self.reduced}
