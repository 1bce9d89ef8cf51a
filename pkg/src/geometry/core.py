"""
Base-surface geometry: metric, connection, curvature and the exponential map.

All reference models are conformal, g = e^{2u}(dx^2 + dy^2), so the
Christoffel symbols and the Gaussian curvature K = -e^{-2u} (u_xx + u_yy)
follow from the jet of u. The curvature tensor uses the convention
R(X, Y)Z = K (<X, Z> Y - <Y, Z> X), for which <R(X, Y)X, Y> is the
sectional curvature and J'' + R(gamma', J)gamma' = 0 is the Jacobi equation.
"""

import math

import numpy as np

from constants import EXP_DERIVATIVE_BOUND
from src.errors import ChartDomainError
from src.flow.integrator import BatchState, IntegratorOptions, propagate_batch
from src.models.surface_model import ChartPoint, SurfaceModel
from src.models.unit_tangent import UnitTangentState


def _coords(p):
    if isinstance(p, ChartPoint):
        return p.x, p.y
    x, y = p
    return float(x), float(y)


def _conformal(model: SurfaceModel, p):
    x, y = _coords(p)
    model.validate(x, y)
    return model.conformal_jet(x, y)


def metric_at(model: SurfaceModel, p) -> np.ndarray:
    """Metric matrix g_ij at p"""
    jet = _conformal(model, p)
    return math.exp(2.0 * float(jet.u)) * np.eye(2)


def inner(model: SurfaceModel, p, X, Y) -> float:
    jet = _conformal(model, p)
    return math.exp(2.0 * float(jet.u)) * float(np.dot(X, Y))


def norm(model: SurfaceModel, p, X) -> float:
    return math.sqrt(max(inner(model, p, X, X), 0.0))


def christoffel_at(model: SurfaceModel, p) -> np.ndarray:
    """
    Christoffel symbols Gamma[k, i, j] = Gamma^k_ij

    Args:
        model: SurfaceModel
        p: ChartPoint or (x, y)

    Returns:
        2x2x2 numpy array, symmetric in (i, j)
    """
    jet = _conformal(model, p)
    ux, uy = float(jet.ux), float(jet.uy)
    gamma = np.zeros((2, 2, 2))
    gamma[0, 0, 0] = ux
    gamma[0, 0, 1] = gamma[0, 1, 0] = uy
    gamma[0, 1, 1] = -ux
    gamma[1, 0, 0] = -uy
    gamma[1, 0, 1] = gamma[1, 1, 0] = ux
    gamma[1, 1, 1] = uy
    return gamma


def gaussian_curvature(model: SurfaceModel, p) -> float:
    x, y = _coords(p)
    model.validate(x, y)
    return float(model.curvature_jet(x, y).K)


def curvature_at(model: SurfaceModel, p, plane=None) -> float:
    """
    Sectional curvature of the plane spanned by two tangent vectors

    For surfaces the value is plane independent; the plane is still checked
    for degeneracy when given.
    """
    K = gaussian_curvature(model, p)
    if plane is not None:
        X, Y = (np.asarray(vector, dtype=float) for vector in plane)
        area = inner(model, p, X, X) * inner(model, p, Y, Y) - inner(model, p, X, Y) ** 2
        scale = inner(model, p, X, X) * inner(model, p, Y, Y)
        if not scale > 0 or area <= 1e-14 * scale:
            raise ChartDomainError("Degenerate plane: the two tangent vectors are dependent")
    return K


def riemann_apply(model: SurfaceModel, p, X, Y, Z) -> np.ndarray:
    """R(X, Y)Z as a chart vector"""
    K = gaussian_curvature(model, p)
    X, Y = np.asarray(X, dtype=float), np.asarray(Y, dtype=float)
    return K * (inner(model, p, X, Z) * Y - inner(model, p, Y, Z) * X)


def riemann_derivative_apply(model: SurfaceModel, p, U, X, Y, Z) -> np.ndarray:
    """(nabla_U R)(X, Y)Z; on a surface only dK(U) survives"""
    x, y = _coords(p)
    model.validate(x, y)
    jet = model.curvature_jet(x, y)
    dK = float(jet.Kx) * U[0] + float(jet.Ky) * U[1]
    X, Y = np.asarray(X, dtype=float), np.asarray(Y, dtype=float)
    return dK * (inner(model, p, X, Z) * Y - inner(model, p, Y, Z) * X)


def curvature_tensor_norm(model: SurfaceModel, p) -> float:
    """Operator norm of (X, Y) -> R(X, Y) on unit vectors, which is |K|"""
    return abs(gaussian_curvature(model, p))


def curvature_derivative_norm(model: SurfaceModel, p) -> float:
    """|nabla K| measured in the metric, the size of nabla R on a surface"""
    x, y = _coords(p)
    model.validate(x, y)
    jet = model.curvature_jet(x, y)
    lam = math.exp(float(model.conformal_jet(x, y).u))
    return math.hypot(float(jet.Kx), float(jet.Ky)) / lam


def exp_map(model: SurfaceModel, x, v, t: float, w=None, opts: IntegratorOptions = None):
    """
    Exponential map exp_x(t v), optionally with d(exp_x)_{tv} applied to w

    The derivative splits w into its components along and across v: the
    parallel part is carried unchanged (Gauss lemma) and the normal part
    follows the Jacobi field with J(0) = 0.

    Args:
        model: SurfaceModel
        x: ChartPoint or (x, y)
        v: nonzero chart tangent vector
        t: time
        w: optional chart tangent vector
        opts: IntegratorOptions

    Returns:
        ChartPoint, or (ChartPoint, derivative chart vector) when w is given
    """
    px, py = _coords(x)
    v = np.asarray(v, dtype=float)
    speed = norm(model, (px, py), v)
    if not speed > 0:
        raise ValueError("exp_map needs a nonzero direction")
    if not math.isfinite(t):
        raise ValueError(f"exp_map needs a finite time, got {t}")
    theta = UnitTangentState.from_vector(model, px, py, v[0], v[1])
    length = t * speed

    jacobi = None
    a = b = 0.0
    if w is not None:
        w = np.asarray(w, dtype=float)
        a = inner(model, (px, py), w, theta.velocity())
        b = inner(model, (px, py), w, theta.normal())
        initial_slope = b / length if length != 0.0 else 0.0
        jacobi = np.array([[[0.0], [initial_slope]]])

    batch = BatchState.from_states([theta], jacobi=jacobi)
    result = propagate_batch(model, batch, length, opts)
    end = ChartPoint((float(result.x[0]), float(result.y[0])), model.model_id)
    if w is None:
        return end
    if length == 0.0:
        return end, w.copy()

    end_v = np.array([result.vx[0], result.vy[0]])
    end_n = np.array([-end_v[1], end_v[0]])
    return end, a * end_v + float(result.jacobi[0, 0, 0]) * end_n


def exp_derivative_norm(model: SurfaceModel, x, v, t: float, w, opts: IntegratorOptions = None) -> float:
    end, image = exp_map(model, x, v, t, w=w, opts=opts)
    return norm(model, end, image)


def estimate_t0(model: SurfaceModel, rng, t_grid=None, samples: int = 100,
                bound: float = EXP_DERIVATIVE_BOUND, opts: IntegratorOptions = None):
    """
    Largest t0 on a grid for which ||d(exp_x)_{tv} w|| <= bound on a sample

    Samples unit v and w at random base points and checks every grid time up
    to the candidate, in both directions.

    Returns:
        tuple: (largest valid t0 or 0.0, worst norm observed up to it)
    """
    t_grid = sorted(t_grid if t_grid is not None else np.round(np.arange(0.25, 4.01, 0.25), 2))
    points = sample_base_points(model, rng, samples)
    angles = rng.uniform(-np.pi, np.pi, size=(samples, 2))

    valid_t0 = 0.0
    worst_valid = 0.0
    for t in t_grid:
        worst = 0.0
        for (px, py), (alpha, beta) in zip(points, angles):
            lam = math.exp(float(model.conformal_jet(px, py).u))
            v = np.array([math.cos(alpha), math.sin(alpha)]) / lam
            w = np.array([math.cos(beta), math.sin(beta)]) / lam
            worst = max(worst,
                        exp_derivative_norm(model, (px, py), v, t, w, opts),
                        exp_derivative_norm(model, (px, py), v, -t, w, opts))
        if worst > bound:
            break
        valid_t0 = float(t)
        worst_valid = worst
    return valid_t0, worst_valid


def sample_base_points(model: SurfaceModel, rng, count: int) -> np.ndarray:
    """Uniform chart points in a reference window of the model's chart"""
    if model.is_flat:
        return rng.uniform(-1.0, 1.0, size=(count, 2))
    xs = rng.uniform(-0.5, 0.5, size=count)
    ys = np.exp(rng.uniform(math.log(0.9), math.log(3.0), size=count))
    if model.is_quotient:
        ys = np.maximum(ys, np.sqrt(np.maximum(1.0 - xs ** 2, 0.0)) + 1e-3)
    return np.column_stack([xs, ys])
