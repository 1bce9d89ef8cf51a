"""
Finite-difference oracles for connection and curvature.

Fourth-order central stencils with step FD_STEP, applied to metric
functions only, so each oracle is independent of the analytic formulas it
checks.
"""

import numpy as np

from constants import FD_STEP
from src.geometry.core import curvature_at, metric_at


def first_derivative(func, point, axis, h=FD_STEP):
    """Fourth-order central derivative of func (array valued) along one axis"""
    point = np.asarray(point, dtype=float)
    step = np.zeros_like(point)
    step[axis] = h
    return (-func(point + 2 * step) + 8 * func(point + step)
            - 8 * func(point - step) + func(point - 2 * step)) / (12.0 * h)


def second_derivative(func, point, axis_a, axis_b, h=FD_STEP):
    """Fourth-order central second derivative; mixed axes use nested first-derivative stencils"""
    point = np.asarray(point, dtype=float)
    if axis_a == axis_b:
        step = np.zeros_like(point)
        step[axis_a] = h
        return (-func(point + 2 * step) + 16 * func(point + step) - 30 * func(point)
                + 16 * func(point - step) - func(point - 2 * step)) / (12.0 * h * h)
    return first_derivative(lambda q: first_derivative(func, q, axis_b, h), point, axis_a, h)


def metric_derivatives(metric_fn, point, h=FD_STEP):
    """
    First and second derivatives of a metric function

    Returns:
        tuple: (dg[c, a, b] = d_c g_ab, ddg[c, d, a, b] = d_c d_d g_ab)
    """
    point = np.asarray(point, dtype=float)
    n = point.size
    dg = np.array([first_derivative(metric_fn, point, c, h) for c in range(n)])
    ddg = np.empty((n, n, n, n))
    for c in range(n):
        for d in range(c, n):
            ddg[c, d] = second_derivative(metric_fn, point, c, d, h)
            ddg[d, c] = ddg[c, d]
    return dg, ddg


def christoffel_from_metric(g, dg):
    """Gamma^k_ij = 1/2 g^{kl} (d_i g_lj + d_j g_li - d_l g_ij)"""
    ginv = np.linalg.inv(g)
    lowered = 0.5 * (np.einsum('ilj->lij', dg) + np.einsum('jli->lij', dg) - dg)
    return np.einsum('kl,lij->kij', ginv, lowered)


def christoffel_oracle(model, p, h=FD_STEP):
    """Christoffel symbols of a surface model from finite differences of metric_at"""
    metric_fn = lambda q: metric_at(model, (q[0], q[1]))
    point = np.array([p[0], p[1]], dtype=float) if not hasattr(p, 'coords') else p.as_array()
    g = metric_fn(point)
    dg = np.array([first_derivative(metric_fn, point, c, h) for c in range(2)])
    return christoffel_from_metric(g, dg)


def riemann_lowered(g, dg, ddg):
    """
    Fully covariant curvature tensor R_abcd with R_1212 = K det g on surfaces
    """
    gamma = christoffel_from_metric(g, dg)
    second = 0.5 * (np.einsum('bcad->abcd', ddg) + np.einsum('adbc->abcd', ddg)
                    - np.einsum('bdac->abcd', ddg) - np.einsum('acbd->abcd', ddg))
    quadratic = (np.einsum('ef,ebc,fad->abcd', g, gamma, gamma)
                 - np.einsum('ef,ebd,fac->abcd', g, gamma, gamma))
    return second + quadratic


def sectional_oracle(metric_fn, point, X, Y, h=FD_STEP):
    """Sectional curvature of span(X, Y) for a metric given in local coordinates"""
    point = np.asarray(point, dtype=float)
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    g = metric_fn(point)
    dg, ddg = metric_derivatives(metric_fn, point, h)
    R = riemann_lowered(g, dg, ddg)
    numerator = np.einsum('abcd,a,b,c,d->', R, X, Y, X, Y)
    area = (X @ g @ X) * (Y @ g @ Y) - (X @ g @ Y) ** 2
    return float(numerator / area)


def brioschi_curvature(model, p, h=FD_STEP):
    """Gaussian curvature from the first fundamental form (E, F, G) by the Brioschi formula"""
    point = np.array([p[0], p[1]], dtype=float) if not hasattr(p, 'coords') else p.as_array()
    metric_fn = lambda q: metric_at(model, (q[0], q[1]))
    g = metric_fn(point)
    dg, ddg = metric_derivatives(metric_fn, point, h)
    E, F, G = g[0, 0], g[0, 1], g[1, 1]
    E_u, E_v = dg[0, 0, 0], dg[1, 0, 0]
    F_u, F_v = dg[0, 0, 1], dg[1, 0, 1]
    G_u, G_v = dg[0, 1, 1], dg[1, 1, 1]
    E_vv, F_uv, G_uu = ddg[1, 1, 0, 0], ddg[0, 1, 0, 1], ddg[0, 0, 1, 1]

    first = np.array([
        [-0.5 * E_vv + F_uv - 0.5 * G_uu, 0.5 * E_u, F_u - 0.5 * E_v],
        [F_v - 0.5 * G_u, E, F],
        [0.5 * G_v, F, G],
    ])
    second = np.array([
        [0.0, 0.5 * E_v, 0.5 * G_u],
        [0.5 * E_v, E, F],
        [0.5 * G_u, F, G],
    ])
    return float((np.linalg.det(first) - np.linalg.det(second)) / (E * G - F * F) ** 2)


def curvature_gradient_oracle(model, p, h=FD_STEP):
    """(dK/dx, dK/dy) by central differences of curvature_at"""
    point = np.array([p[0], p[1]], dtype=float) if not hasattr(p, 'coords') else p.as_array()
    curvature_fn = lambda q: np.array(curvature_at(model, (q[0], q[1])))
    return np.array([first_derivative(curvature_fn, point, axis, h) for axis in range(2)])
