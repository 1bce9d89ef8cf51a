"""
Sasaki metric of SM in the local coordinates (x, y, alpha).

With lambda = e^u the metric reads

    lambda^2 (dx^2 + dy^2) + (d alpha + u_x dy - u_y dx)^2

and its geodesics define the exponential map of SM used by the inclusion
check. The inverse exponential is found by root finding from the linear
guess.
"""

import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import root

from src.errors import NumericalError
from src.sasaki.bundle import wrap_angle
from src.models.surface_model import SurfaceModel
from src.utils.logging import Logger

ODE_RTOL = 1e-10
ODE_ATOL = 1e-12
ROOT_TOL = 1e-12


def _jet(model: SurfaceModel, point):
    x, y = float(point[0]), float(point[1])
    model.validate(x, y)
    jet = model.conformal_jet(x, y)
    return tuple(float(value) for value in jet)


def lifted_metric(model: SurfaceModel, point) -> np.ndarray:
    """3x3 Sasaki metric matrix at (x, y, alpha)"""
    u, ux, uy, _, _, _ = _jet(model, point)
    lam2 = math.exp(2.0 * u)
    return np.array([
        [lam2 + uy * uy, -ux * uy, -uy],
        [-ux * uy, lam2 + ux * ux, ux],
        [-uy, ux, 1.0],
    ])


def lifted_metric_derivatives(model: SurfaceModel, point) -> np.ndarray:
    """dG[c, a, b] = d_c G_ab for c in (x, y, alpha)"""
    u, ux, uy, uxx, uxy, uyy = _jet(model, point)
    lam2 = math.exp(2.0 * u)
    dG = np.zeros((3, 3, 3))
    # (d/dx of ux, uy), (d/dy of ux, uy)
    for axis, (dux, duy, du) in enumerate(((uxx, uxy, ux), (uxy, uyy, uy))):
        dG[axis] = np.array([
            [2.0 * lam2 * du + 2.0 * uy * duy, -(dux * uy + ux * duy), -duy],
            [-(dux * uy + ux * duy), 2.0 * lam2 * du + 2.0 * ux * dux, dux],
            [-duy, dux, 0.0],
        ])
    return dG


def lifted_christoffel(model: SurfaceModel, point) -> np.ndarray:
    """Gamma[k, i, j] of the lifted metric"""
    G = lifted_metric(model, point)
    dG = lifted_metric_derivatives(model, point)
    lowered = 0.5 * (np.einsum('ilj->lij', dG) + np.einsum('jli->lij', dG) - dG)
    return np.einsum('kl,lij->kij', np.linalg.inv(G), lowered)


def frame_to_coordinates(model: SurfaceModel, point, frame) -> np.ndarray:
    """Coordinate components (dx, dy, d alpha) of a vector given in the frame (G, H, V)"""
    u, ux, uy, _, _, _ = _jet(model, point)
    lam = math.exp(u)
    alpha = float(point[2])
    a, b, c = (float(value) for value in frame)
    dx = (a * math.cos(alpha) - b * math.sin(alpha)) / lam
    dy = (a * math.sin(alpha) + b * math.cos(alpha)) / lam
    return np.array([dx, dy, c - ux * dy + uy * dx])


def coordinates_to_frame(model: SurfaceModel, point, tangent) -> np.ndarray:
    u, ux, uy, _, _, _ = _jet(model, point)
    lam = math.exp(u)
    alpha = float(point[2])
    dx, dy, dalpha = (float(value) for value in tangent)
    return np.array([
        lam * (dx * math.cos(alpha) + dy * math.sin(alpha)),
        lam * (-dx * math.sin(alpha) + dy * math.cos(alpha)),
        dalpha + ux * dy - uy * dx,
    ])


def lifted_norm(model: SurfaceModel, point, tangent) -> float:
    tangent = np.asarray(tangent, dtype=float)
    return math.sqrt(max(float(tangent @ lifted_metric(model, point) @ tangent), 0.0))


def sm_exp(model: SurfaceModel, point, tangent, t: float = 1.0, with_velocity: bool = False):
    """
    Exponential map of SM: the lifted-metric geodesic from point with
    coordinate velocity tangent, evaluated at time t

    Args:
        model: SurfaceModel (half-plane chart, no reduction)
        point: (x, y, alpha)
        tangent: coordinate velocity (dx, dy, d alpha)
        t: time
        with_velocity: also return the final coordinate velocity

    Returns:
        numpy array (x, y, alpha), optionally with the velocity
    """
    point = np.asarray(point, dtype=float)
    tangent = np.asarray(tangent, dtype=float)
    if t == 0.0 or not np.any(tangent):
        return (point.copy(), tangent.copy()) if with_velocity else point.copy()

    def rhs(_, state):
        q, qdot = state[:3], state[3:]
        if not state[1] > 0 and not model.is_flat:
            raise NumericalError("Lifted geodesic left the half-plane", stage='sm_exp',
                                 diagnostics={'point': q.tolist()})
        gamma = lifted_christoffel(model, q)
        return np.concatenate([qdot, -np.einsum('kij,i,j->k', gamma, qdot, qdot)])

    solution = solve_ivp(rhs, (0.0, float(t)), np.concatenate([point, tangent]), method='DOP853',
                         rtol=ODE_RTOL, atol=ODE_ATOL)
    if not solution.success:
        raise NumericalError(f"SM geodesic integration failed: {solution.message}", stage='sm_exp',
                             diagnostics={'point': point.tolist(), 'tangent': tangent.tolist()})
    end = solution.y[:, -1]
    if with_velocity:
        return end[:3], end[3:]
    return end[:3]


def sm_exp_inverse(model: SurfaceModel, point, target, guess=None) -> np.ndarray:
    """
    Coordinate velocity zeta with sm_exp(point, zeta) = target (angles modulo 2 pi)

    Raises:
        NumericalError: when the root finder does not converge
    """
    point = np.asarray(point, dtype=float)
    target = np.asarray(target, dtype=float)
    if guess is None:
        guess = np.array([target[0] - point[0], target[1] - point[1], wrap_angle(target[2] - point[2])])

    def residual(zeta):
        end = sm_exp(model, point, zeta)
        return np.array([end[0] - target[0], end[1] - target[1], wrap_angle(end[2] - target[2])])

    solution = root(residual, np.asarray(guess, dtype=float), method='hybr', tol=ROOT_TOL)
    if not solution.success or np.max(np.abs(residual(solution.x))) > 1e-9:
        Logger().info(f"Inverse SM exponential failed near {point.tolist()}: {solution.message}")
        raise NumericalError("Inverse SM exponential did not converge", stage='sm_exp_inverse',
                             diagnostics={'point': point.tolist(), 'target': target.tolist()})
    return solution.x
