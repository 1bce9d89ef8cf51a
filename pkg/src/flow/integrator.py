"""
Geodesic flow on the unit tangent bundle with simultaneous Jacobi propagation.

Chart integrator: two-stage Gauss-Legendre (symmetric, order 4) on the
combined field (x, y, v, J, J'), fixed-point stage iteration, per-step
renormalization of v and fundamental-domain reduction for quotient models.
Constant-curvature models also have an exact path (straight lines, or the
SL(2, R) flow with cosh/sinh Jacobi blocks).

Cocycles are 3x3 in the Sasaki-orthonormal frame (G, H, V) and equal
diag(1, M) with M the 2x2 propagator of (J, J').
"""

from dataclasses import dataclass
import math

import numpy as np

from constants import DEFAULT_DT, FIXED_POINT_TOL, FIXED_POINT_MAX_ITER, Y_CAP
from src.errors import NumericalError
from src.flow.modular import frame_matrices, frame_points, geodesic_element, reduce_points
from src.models.jacobi_state import FlowSample, JacobiState
from src.models.surface_model import SurfaceModel
from src.models.unit_tangent import UnitTangentState
from src.utils.logging import Logger

SQRT3 = math.sqrt(3.0)
A11, A12 = 0.25, 0.25 - SQRT3 / 6.0
A21, A22 = 0.25 + SQRT3 / 6.0, 0.25

METHODS = ('auto', 'integrator', 'exact')


@dataclass(frozen=True)
class IntegratorOptions:
    """Options shared by every flow entry point"""
    dt: float = DEFAULT_DT
    method: str = 'auto'
    y_cap: float = Y_CAP

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"Integrator step must be positive, got {self.dt}")
        if self.method not in METHODS:
            raise ValueError(f"Unknown integration method '{self.method}', expected one of {METHODS}")

    def resolve(self, model: SurfaceModel) -> str:
        if self.method == 'exact' and not model.has_constant_curvature:
            raise ValueError(f"No exact flow for {model.model_id}")
        if self.method == 'auto':
            return 'exact' if model.has_constant_curvature else 'integrator'
        return self.method


@dataclass
class BatchState:
    """Batch of unit tangent vectors (chart data) with optional Jacobi columns"""
    x: np.ndarray
    y: np.ndarray
    vx: np.ndarray
    vy: np.ndarray
    jacobi: np.ndarray = None
    cusp: np.ndarray = None

    def __post_init__(self):
        self.x = np.atleast_1d(np.asarray(self.x, dtype=float)).copy()
        self.y = np.atleast_1d(np.asarray(self.y, dtype=float)).copy()
        self.vx = np.atleast_1d(np.asarray(self.vx, dtype=float)).copy()
        self.vy = np.atleast_1d(np.asarray(self.vy, dtype=float)).copy()
        if self.jacobi is not None:
            self.jacobi = np.asarray(self.jacobi, dtype=float).copy()
            if self.jacobi.ndim != 3 or self.jacobi.shape[:2] != (self.x.size, 2):
                raise ValueError(f"Jacobi columns must have shape (batch, 2, k), got {self.jacobi.shape}")
        if self.cusp is None:
            self.cusp = np.zeros(self.x.size, dtype=bool)

    @classmethod
    def from_states(cls, states, jacobi=None) -> 'BatchState':
        data = np.array([state.as_array() for state in states], dtype=float).reshape(-1, 4)
        return cls(data[:, 0], data[:, 1], data[:, 2], data[:, 3], jacobi=jacobi)

    @property
    def size(self) -> int:
        return self.x.size

    def as_array(self) -> np.ndarray:
        return np.column_stack([self.x, self.y, self.vx, self.vy])

    def copy(self) -> 'BatchState':
        return BatchState(self.x, self.y, self.vx, self.vy,
                          None if self.jacobi is None else self.jacobi, self.cusp.copy())


def _pack(batch: BatchState) -> np.ndarray:
    parts = [batch.x[:, None], batch.y[:, None], batch.vx[:, None], batch.vy[:, None]]
    if batch.jacobi is not None:
        parts += [batch.jacobi[:, 0, :], batch.jacobi[:, 1, :]]
    return np.hstack(parts)


def _unpack(Y: np.ndarray, batch: BatchState) -> BatchState:
    k = 0 if batch.jacobi is None else batch.jacobi.shape[2]
    jacobi = None
    if k:
        jacobi = np.stack([Y[:, 4:4 + k], Y[:, 4 + k:4 + 2 * k]], axis=1)
    return BatchState(Y[:, 0], Y[:, 1], Y[:, 2], Y[:, 3], jacobi, batch.cusp)


def _vector_field(model: SurfaceModel, Y: np.ndarray, k: int) -> np.ndarray:
    x, y, p, q = Y[:, 0], Y[:, 1], Y[:, 2], Y[:, 3]
    _, ux, uy, K = model.flow_fields(x, y)
    dY = np.empty_like(Y)
    dY[:, 0] = p
    dY[:, 1] = q
    dY[:, 2] = -(ux * p * p + 2.0 * uy * p * q - ux * q * q)
    dY[:, 3] = -(-uy * p * p + 2.0 * ux * p * q + uy * q * q)
    if k:
        dY[:, 4:4 + k] = Y[:, 4 + k:4 + 2 * k]
        dY[:, 4 + k:4 + 2 * k] = -K[:, None] * Y[:, 4:4 + k]
    return dY


def _gauss_legendre_step(model: SurfaceModel, Y: np.ndarray, h: float, k: int) -> np.ndarray:
    k1 = _vector_field(model, Y, k)
    k2 = k1
    for iteration in range(FIXED_POINT_MAX_ITER):
        n1 = _vector_field(model, Y + h * (A11 * k1 + A12 * k2), k)
        n2 = _vector_field(model, Y + h * (A21 * k1 + A22 * k2), k)
        if not (np.all(np.isfinite(n1)) and np.all(np.isfinite(n2))):
            raise NumericalError("Non-finite stage values in the geodesic integrator", stage='flow',
                                 diagnostics={'step': h, 'iteration': iteration})
        change = max(np.max(np.abs(n1 - k1)), np.max(np.abs(n2 - k2)))
        k1, k2 = n1, n2
        scale = 1.0 + max(np.max(np.abs(k1)), np.max(np.abs(k2)))
        if change <= FIXED_POINT_TOL * scale:
            return Y + 0.5 * h * (k1 + k2)
    raise NumericalError("Gauss-Legendre stage iteration did not converge; reduce dt", stage='flow',
                         diagnostics={'step': h, 'last_change': float(change)})


def _renormalize(model: SurfaceModel, Y: np.ndarray):
    u = model.conformal_jet(Y[:, 0], Y[:, 1]).u
    speed = np.exp(u) * np.hypot(Y[:, 2], Y[:, 3])
    Y[:, 2] /= speed
    Y[:, 3] /= speed


def _reduce_batch(model: SurfaceModel, Y: np.ndarray):
    z, w = reduce_points(Y[:, 0] + 1j * Y[:, 1], Y[:, 2] + 1j * Y[:, 3])
    Y[:, 0], Y[:, 1] = z.real, z.imag
    Y[:, 2], Y[:, 3] = w.real, w.imag


def _integrate(model: SurfaceModel, batch: BatchState, t: float, opts: IntegratorOptions) -> BatchState:
    k = 0 if batch.jacobi is None else batch.jacobi.shape[2]
    steps = max(1, int(math.ceil(abs(t) / opts.dt - 1e-9)))
    h = t / steps
    Y = _pack(batch)
    cusp = batch.cusp.copy()
    for _ in range(steps):
        Y = _gauss_legendre_step(model, Y, h, k)
        _renormalize(model, Y)
        if model.is_quotient:
            _reduce_batch(model, Y)
        cusp |= Y[:, 1] > opts.y_cap
    result = _unpack(Y, batch)
    result.cusp = cusp
    return result


def constant_jacobi_block(model: SurfaceModel, t: float) -> np.ndarray:
    """Exact 2x2 propagator of J'' + K J = 0 for constant K = -c^2 (or 0)"""
    if model.is_flat:
        return np.array([[1.0, t], [0.0, 1.0]])
    c = model.c
    ch, sh = math.cosh(c * t), math.sinh(c * t)
    return np.array([[ch, sh / c], [c * sh, ch]])


def _exact(model: SurfaceModel, batch: BatchState, t: float, opts: IntegratorOptions) -> BatchState:
    result = batch.copy()
    if model.is_flat:
        result.x = batch.x + t * batch.vx
        result.y = batch.y + t * batch.vy
    else:
        c = model.c
        # Sub-steps of hyperbolic time at most 1 keep the SL(2, R) entries well conditioned
        pieces = max(1, int(math.ceil(abs(c * t))))
        element = geodesic_element(c * t / pieces)
        z = batch.x + 1j * batch.y
        w = (batch.vx + 1j * batch.vy) / c
        for _ in range(pieces):
            g = frame_matrices(z, w) @ element
            z, w = frame_points(g)
            if model.is_quotient:
                z, w = reduce_points(z, w)
            result.cusp = result.cusp | (z.imag > opts.y_cap)
        result.x, result.y = z.real.copy(), z.imag.copy()
        result.vx, result.vy = (c * w).real.copy(), (c * w).imag.copy()
    if batch.jacobi is not None:
        block = constant_jacobi_block(model, t)
        result.jacobi = np.einsum('ij,bjk->bik', block, batch.jacobi)
    return result


def propagate_batch(model: SurfaceModel, batch: BatchState, t: float, opts: IntegratorOptions = None) -> BatchState:
    """
    Push a batch of states (and their Jacobi columns) by the flow for time t

    Args:
        model: surface model shared by the batch
        batch: BatchState
        t: flow time (any sign)
        opts: IntegratorOptions

    Returns:
        BatchState at time t
    """
    opts = opts or IntegratorOptions()
    t = float(t)
    model.validate(batch.x, batch.y)
    if t == 0.0:
        return batch.copy()
    method = opts.resolve(model)
    if method == 'exact':
        result = _exact(model, batch, t, opts)
    else:
        result = _integrate(model, batch, t, opts)
    if np.any(result.cusp & ~batch.cusp):
        Logger().info(f"Cusp excursion above y = {opts.y_cap:g} in {int(np.sum(result.cusp))} orbit(s) "
                      f"of {model.model_id}")
    return result


def identity_jacobi(size: int) -> np.ndarray:
    """Jacobi columns of the identity propagator for a batch"""
    return np.repeat(np.eye(2)[None, :, :], size, axis=0)


def cocycle_from_block(block: np.ndarray) -> np.ndarray:
    cocycle = np.eye(3)
    cocycle[1:, 1:] = block
    return cocycle


def flow(theta: UnitTangentState, t: float, opts: IntegratorOptions = None) -> FlowSample:
    """
    Geodesic flow phi^t(theta) with the accumulated cocycle

    Args:
        theta: starting state
        t: time
        opts: IntegratorOptions (method 'auto' uses exact paths when available)

    Returns:
        FlowSample
    """
    model = theta.model
    batch = BatchState.from_states([theta], jacobi=identity_jacobi(1))
    result = propagate_batch(model, batch, t, opts)
    state = UnitTangentState.from_array(model, result.as_array()[0])
    return FlowSample(state=state, t=float(t), cocycle=cocycle_from_block(result.jacobi[0]),
                      cusp_excursion=bool(result.cusp[0]))


def jacobi_propagate(theta: UnitTangentState, init: JacobiState, t: float,
                     opts: IntegratorOptions = None) -> JacobiState:
    """Solve J'' + K(gamma(t)) J = 0 along the orbit of theta"""
    batch = BatchState.from_states([theta], jacobi=np.array([[[init.J], [init.Jp]]], dtype=float))
    result = propagate_batch(theta.model, batch, t, opts)
    return JacobiState(J=float(result.jacobi[0, 0, 0]), Jp=float(result.jacobi[0, 1, 0]), t=init.t + float(t))


def flow_derivative(theta: UnitTangentState, t: float, opts: IntegratorOptions = None) -> np.ndarray:
    """3x3 matrix of d phi^t in the frames (G, H, V) at theta and phi^t(theta)"""
    return flow(theta, t, opts).cocycle
