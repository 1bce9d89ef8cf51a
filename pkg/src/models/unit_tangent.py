from dataclasses import dataclass
from typing import Any, Dict
import math

import numpy as np

from constants import UNIT_SPEED_TOL
from src.models.surface_model import SurfaceModel, ChartPoint
from src.errors import ChartDomainError


@dataclass(frozen=True)
class UnitTangentState:
    """A point theta = (x, v) of the unit tangent bundle in chart components"""
    model: SurfaceModel
    base: ChartPoint
    direction: tuple

    def __post_init__(self):
        self.model.validate(self.base.x, self.base.y)
        speed = self.speed()
        if abs(speed - 1.0) > UNIT_SPEED_TOL:
            raise ValueError(f"Direction is not unit length for {self.model.model_id}: |v| = {speed:.12g}")

    @classmethod
    def from_angle(cls, model: SurfaceModel, x: float, y: float, alpha: float) -> 'UnitTangentState':
        """State at (x, y) whose direction makes chart angle alpha"""
        model.validate(x, y)
        lam = math.exp(float(model.conformal_jet(x, y).u))
        return cls(model, ChartPoint((float(x), float(y)), model.model_id),
                   (math.cos(alpha) / lam, math.sin(alpha) / lam))

    @classmethod
    def from_vector(cls, model: SurfaceModel, x: float, y: float, vx: float, vy: float,
                    normalize: bool = True) -> 'UnitTangentState':
        if normalize:
            if vx == 0.0 and vy == 0.0:
                raise ChartDomainError("Cannot normalize the zero vector")
            return cls.from_angle(model, x, y, math.atan2(vy, vx))
        return cls(model, ChartPoint((float(x), float(y)), model.model_id), (float(vx), float(vy)))

    @classmethod
    def from_array(cls, model: SurfaceModel, row) -> 'UnitTangentState':
        """Inverse of as_array: (x, y, vx, vy)"""
        x, y, vx, vy = (float(value) for value in row)
        return cls(model, ChartPoint((x, y), model.model_id), (vx, vy))

    @property
    def x(self) -> float:
        return self.base.x

    @property
    def y(self) -> float:
        return self.base.y

    @property
    def alpha(self) -> float:
        return math.atan2(self.direction[1], self.direction[0])

    @property
    def conformal_factor(self) -> float:
        """lambda = e^u at the base point"""
        return math.exp(float(self.model.conformal_jet(self.x, self.y).u))

    def speed(self) -> float:
        lam = math.exp(float(self.model.conformal_jet(self.base.x, self.base.y).u))
        return lam * math.hypot(self.direction[0], self.direction[1])

    def velocity(self) -> np.ndarray:
        return np.asarray(self.direction, dtype=float)

    def normal(self) -> np.ndarray:
        """v rotated by +90 degrees, a unit vector orthogonal to v"""
        return np.array([-self.direction[1], self.direction[0]], dtype=float)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.direction[0], self.direction[1]], dtype=float)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'model_id': self.model.model_id,
            'x': self.x,
            'y': self.y,
            'alpha': self.alpha,
        }


@dataclass(frozen=True)
class SplitVector:
    """
    Tangent vector to SM stored as (horizontal, vertical) = (d pi(xi), K(xi))

    Both parts are chart vectors at the base point of the owning state.
    """
    horiz: tuple
    vert: tuple
    base: tuple = ()

    def horiz_array(self) -> np.ndarray:
        return np.asarray(self.horiz, dtype=float)

    def vert_array(self) -> np.ndarray:
        return np.asarray(self.vert, dtype=float)
