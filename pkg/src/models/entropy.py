from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple
import math

import numpy as np

from constants import (FLAT_CORE_HALF_WIDTH, FLOW_STEP_N, RETURN_TIME_CAP, RHO_CONST, T0_DEFAULT,
                       XI_GRAPH, Y_CORE)
from src.models.surface_model import SurfaceModel

FUNDAMENTAL_DOMAIN_FLOOR = math.sqrt(3.0) / 2.0


@dataclass(frozen=True)
class CoreRegion:
    """
    Compact core K' of the phase space

    Hyperbolic models: the part of the standard fundamental domain with
    y <= y_core (all directions). Flat: the square |x|, |y| <= half_width.
    """
    y_core: float = Y_CORE
    half_width: float = FLAT_CORE_HALF_WIDTH

    def contains(self, model: SurfaceModel, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if model.is_flat:
            return (np.abs(x) <= self.half_width) & (np.abs(y) <= self.half_width)
        return (np.abs(x) <= 0.5) & (x * x + y * y >= 1.0 - 1e-12) & (y <= self.y_core)

    def chart_box(self, model: SurfaceModel) -> Tuple[Tuple[float, float], Tuple[float, float]]:
        """Bounding box of the core in chart coordinates"""
        if model.is_flat:
            return (-self.half_width, self.half_width), (-self.half_width, self.half_width)
        return (-0.5, 0.5), (FUNDAMENTAL_DOMAIN_FLOOR, self.y_core)

    def cusp_mass_fraction(self, model: SurfaceModel) -> float:
        """Liouville share of the fundamental domain above y_core (0 for Flat)"""
        if model.is_flat:
            return 0.0
        return 3.0 / (math.pi * self.y_core)


@dataclass(frozen=True)
class BowenConfig:
    """Parameters of the Bowen-ball estimator and the return-time radius"""
    N: float = FLOW_STEP_N
    rho_const: float = RHO_CONST
    xi_graph: float = XI_GRAPH
    core: CoreRegion = field(default_factory=CoreRegion)
    n_range: Tuple[int, ...] = tuple(range(0, 9))
    samples_per_depth: int = 2000
    t0: float = T0_DEFAULT
    return_cap: int = RETURN_TIME_CAP

    def __post_init__(self):
        if not 0.0 < self.xi_graph < 1.0:
            raise ValueError(f"xi_graph must lie in (0, 1), got {self.xi_graph}")
        if not 0.0 < self.rho_const < 1.0:
            raise ValueError(f"rho_const must lie in (0, 1), got {self.rho_const}")
        if self.rho_const > self.t0 / 2.0:
            raise ValueError(f"rho_const = {self.rho_const} exceeds t0 / 2 = {self.t0 / 2.0}")
        if not self.N > 0:
            raise ValueError(f"Flow time per step N must be positive, got {self.N}")
        if self.samples_per_depth < 1:
            raise ValueError("samples_per_depth must be positive")
        if any(n < 0 for n in self.n_range):
            raise ValueError("Bowen depths must be non-negative")
        object.__setattr__(self, 'n_range', tuple(sorted(int(n) for n in self.n_range)))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'BowenConfig':
        n_min = int(data.get('n_min', 0))
        n_max = int(data.get('n_max', 8))
        n_step = int(data.get('n_step', 1))
        return cls(
            N=float(data.get('N', FLOW_STEP_N)),
            rho_const=float(data.get('rho_const', RHO_CONST)),
            xi_graph=float(data.get('xi_graph', XI_GRAPH)),
            core=CoreRegion(y_core=float(data.get('y_core', Y_CORE)),
                            half_width=float(data.get('core_half_width', FLAT_CORE_HALF_WIDTH))),
            n_range=tuple(range(n_min, n_max + 1, n_step)) if n_max >= n_min else tuple(),
            samples_per_depth=int(data.get('samples_per_depth', 2000)),
            t0=float(data.get('t0', T0_DEFAULT)),
            return_cap=int(data.get('return_cap', RETURN_TIME_CAP)),
        )


@dataclass(frozen=True)
class ReturnTime:
    """L(theta) and rho(theta) = min(a, xi^L); truncated when no return within the cap"""
    L: int
    rho: float
    in_core: bool
    truncated: bool = False


@dataclass
class BowenMeasure:
    """Monte Carlo estimate of the reference measure of one Bowen set"""
    theta_id: int
    n: int
    measure: float
    half_width: float
    inside: int
    escaped: int
    indeterminate: int
    samples: int
    ball_measure: float
    box_volume: float
    doublings: int = 0

    def to_row(self) -> Dict[str, Any]:
        return {
            'theta_id': self.theta_id,
            'n': self.n,
            'inside': self.inside,
            'escaped': self.escaped,
            'indeterminate': self.indeterminate,
            'ball_measure': self.ball_measure,
        }


@dataclass
class LocalEntropy:
    """Decay rate of Bowen-set measures for one state"""
    theta_id: int
    h: Optional[float]
    half_width: Optional[float]
    window: Tuple[int, int] = (0, 0)
    slope_low: Optional[float] = None
    slope_high: Optional[float] = None
    r_squared: Optional[float] = None
    inconclusive: bool = False
    lower_bound: Optional[float] = None
    lower_bound_holds: Optional[bool] = None
    model_id: str = ''

    def to_dict(self) -> Dict[str, Any]:
        return {
            'theta_id': self.theta_id,
            'h': self.h,
            'half_width': self.half_width,
            'window': list(self.window),
            'slope_low': self.slope_low,
            'slope_high': self.slope_high,
            'r_squared': self.r_squared,
            'inconclusive': self.inconclusive,
            'lower_bound': self.lower_bound,
            'lower_bound_holds': self.lower_bound_holds,
        }


@dataclass(frozen=True)
class GridPartition:
    """
    Product grid on the chart box of the core in (x, y, alpha)

    Cells are numbered 0..cells-1; the index `cells` is the complement.
    """
    core: CoreRegion
    shape: Tuple[int, int, int] = (8, 8, 8)

    def __post_init__(self):
        if len(self.shape) != 3 or any(int(size) < 1 for size in self.shape):
            raise ValueError(f"Partition shape must be three positive integers, got {self.shape}")
        object.__setattr__(self, 'shape', tuple(int(size) for size in self.shape))

    @property
    def cells(self) -> int:
        return int(np.prod(self.shape))

    @property
    def complement(self) -> int:
        return self.cells

    def edges(self, model: SurfaceModel):
        (x0, x1), (y0, y1) = self.core.chart_box(model)
        return (np.linspace(x0, x1, self.shape[0] + 1), np.linspace(y0, y1, self.shape[1] + 1),
                np.linspace(-math.pi, math.pi, self.shape[2] + 1))

    def refined(self) -> 'GridPartition':
        return GridPartition(self.core, tuple(2 * size for size in self.shape))

    def cell_index(self, model: SurfaceModel, rows) -> np.ndarray:
        """Cell numbers of (..., 3) rows of reduced (x, y, alpha); points off the core get the complement"""
        rows = np.asarray(rows, dtype=float)
        x, y = rows[..., 0], rows[..., 1]
        alpha = np.mod(rows[..., 2] + math.pi, 2.0 * math.pi) - math.pi
        (x0, x1), (y0, y1) = self.core.chart_box(model)
        ix = np.clip(((x - x0) / (x1 - x0) * self.shape[0]).astype(int), 0, self.shape[0] - 1)
        iy = np.clip(((y - y0) / (y1 - y0) * self.shape[1]).astype(int), 0, self.shape[1] - 1)
        ia = np.clip(((alpha + math.pi) / (2.0 * math.pi) * self.shape[2]).astype(int), 0, self.shape[2] - 1)
        index = np.ravel_multi_index((ix, iy, ia), self.shape)
        return np.where(self.core.contains(model, x, y), index, self.complement)

    def cell_box(self, model: SurfaceModel, index: int):
        """((x0, x1), (y0, y1), (a0, a1)) of one cell"""
        ex, ey, ea = self.edges(model)
        ix, iy, ia = np.unravel_index(index, self.shape)
        return (ex[ix], ex[ix + 1]), (ey[iy], ey[iy + 1]), (ea[ia], ea[ia + 1])

    def diameter_bound(self, model: SurfaceModel) -> float:
        """
        Upper bound of the Sasaki diameter of every cell

        Chart diagonal scaled by sup (lambda + |grad u|) over the core box,
        plus the fiber width.
        """
        ex, ey, ea = self.edges(model)
        gx, gy = np.meshgrid(ex, ey, indexing='ij')
        u, ux, uy, _ = model.flow_fields(gx.ravel(), gy.ravel())
        scale = float(np.max(np.exp(u) + np.hypot(ux, uy)))
        return scale * math.hypot(ex[1] - ex[0], ey[1] - ey[0]) + (ea[1] - ea[0])


@dataclass
class PartitionBound:
    """Both sides of the conditional-entropy inequality for a grid partition"""
    conditional_entropy: float
    census_bound: float
    cells: int
    merged_cells: int
    cell_diameter: float
    diameter_condition_met: Optional[bool]
    notes: List[str] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.conditional_entropy <= self.census_bound + 1e-12

    def to_dict(self) -> Dict[str, Any]:
        return {
            'conditional_entropy': self.conditional_entropy,
            'census_bound': self.census_bound,
            'holds': self.holds,
            'cells': self.cells,
            'merged_cells': self.merged_cells,
            'cell_diameter': self.cell_diameter,
            'diameter_condition_met': self.diameter_condition_met,
            'notes': list(self.notes),
        }


@dataclass
class EntropyReport:
    """Entropy estimates set against the positive Lyapunov exponents"""
    model_id: str
    chi_plus: float
    h_local: List[LocalEntropy]
    h_central: Optional[float]
    h_half_width: Optional[float]
    h_partition: Optional[PartitionBound]
    ruelle_slack: Optional[float]
    pesin_deviation: Optional[float]
    P_logdet: float
    Upsilon: float
    tolerance: float
    ruelle_pass: bool
    pesin_pass: Optional[bool]
    pesin_lower_bound: Optional[float] = None
    ruelle_violations: List[Dict[str, Any]] = field(default_factory=list)
    lower_bound_fraction: Optional[float] = None
    lower_bound_pass: Optional[bool] = None
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'model': self.model_id,
            'chi_plus': self.chi_plus,
            'h_central': self.h_central,
            'h_half_width': self.h_half_width,
            'ruelle_slack': self.ruelle_slack,
            'ruelle_pass': self.ruelle_pass,
            'ruelle_violations': [dict(item) for item in self.ruelle_violations],
            'lower_bound_fraction': self.lower_bound_fraction,
            'lower_bound_pass': self.lower_bound_pass,
            'pesin_deviation': self.pesin_deviation,
            'pesin_pass': self.pesin_pass,
            'pesin_lower_bound': self.pesin_lower_bound,
            'tolerance': self.tolerance,
            'P_logdet': self.P_logdet,
            'Upsilon': self.Upsilon,
            'h_partition': None if self.h_partition is None else self.h_partition.to_dict(),
            'h_local': [item.to_dict() for item in self.h_local],
            'notes': list(self.notes),
        }
