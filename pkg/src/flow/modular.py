"""
Modular-group machinery: fundamental-domain reduction and the exact SL(2, R)
geodesic flow.

A unit tangent vector (z, w) of the hyperbolic plane (w a chart vector with
|w| = Im z) corresponds to g = n(x) a(y) k(phi) with g.i = z and
w = i / (c i + d)^2. The geodesic flow is right multiplication by
diag(e^{t/2}, e^{-t/2}); the modular group acts on the left.
"""

import itertools

import numpy as np

from constants import REDUCTION_MAX_ITER
from src.errors import NumericalError
from src.models.jacobi_state import ModularState

UNIT_CIRCLE_TOL = 1e-12

T_MATRIX = np.array([[1.0, 1.0], [0.0, 1.0]])
T_INVERSE = np.array([[1.0, -1.0], [0.0, 1.0]])
S_MATRIX = np.array([[0.0, -1.0], [1.0, 0.0]])


def _projective_key(matrix):
    m = np.rint(matrix).astype(int)
    flat = m.ravel()
    first = next((value for value in flat if value != 0), 1)
    if first < 0:
        m = -m
    return tuple(m.ravel())


def _build_neighbor_set(max_length=3):
    """Modular group elements given by words of length <= max_length in T, T^-1, S"""
    generators = (T_MATRIX, T_INVERSE, S_MATRIX)
    found = {_projective_key(np.eye(2)): np.eye(2)}
    for length in range(1, max_length + 1):
        for word in itertools.product(generators, repeat=length):
            product = np.eye(2)
            for letter in word:
                product = product @ letter
            found.setdefault(_projective_key(product), product)
    return [found[key] for key in sorted(found)]


# Identity first, then tiles adjacent to the fundamental domain
NEIGHBOR_SET = sorted(_build_neighbor_set(), key=lambda m: (not np.allclose(m, np.eye(2)), _projective_key(m)))


def mobius(gamma, z, w=None):
    """Apply gamma to base points z and, if given, chart directions w"""
    (a, b), (c, d) = gamma
    denom = c * z + d
    z_new = (a * z + b) / denom
    if w is None:
        return z_new
    return z_new, w / denom ** 2


def reduce_points(z, w):
    """
    Move (z, w) over the standard fundamental domain

    Tie-breaking: Re z = 1/2 goes to -1/2 and points on |z| = 1 with Re z > 0
    are inverted, so the result is a function of the input.

    Args:
        z: complex base points (array)
        w: complex chart directions (array)

    Returns:
        tuple: reduced (z, w)
    """
    z = np.array(z, dtype=complex, copy=True)
    w = np.array(w, dtype=complex, copy=True)
    for _ in range(REDUCTION_MAX_ITER):
        shift = np.floor(z.real + 0.5)
        z = z - shift
        r2 = z.real ** 2 + z.imag ** 2
        invert = (r2 < 1.0 - UNIT_CIRCLE_TOL) | ((np.abs(r2 - 1.0) <= UNIT_CIRCLE_TOL) & (z.real > UNIT_CIRCLE_TOL))
        if not np.any(invert):
            return z, w
        zi = z[invert]
        w[invert] = w[invert] / zi ** 2
        z[invert] = -1.0 / zi
    raise NumericalError("Fundamental-domain reduction did not terminate", stage='reduction',
                         diagnostics={'iterations': REDUCTION_MAX_ITER})


def is_reduced(z, tol=1e-9) -> bool:
    z = complex(z)
    return abs(z.real) <= 0.5 + tol and abs(z) >= 1.0 - tol


def frame_matrices(z, w):
    """SL(2, R) matrices g = n(x) a(y) k(phi) for unit hyperbolic vectors (|w| = Im z)"""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    x, y = z.real, z.imag
    phi = 0.5 * (0.5 * np.pi - np.angle(w))
    sqrt_y = np.sqrt(y)
    cos_p, sin_p = np.cos(phi), np.sin(phi)
    g = np.empty(z.shape + (2, 2))
    g[..., 0, 0] = sqrt_y * cos_p + x * sin_p / sqrt_y
    g[..., 0, 1] = -sqrt_y * sin_p + x * cos_p / sqrt_y
    g[..., 1, 0] = sin_p / sqrt_y
    g[..., 1, 1] = cos_p / sqrt_y
    return g


def frame_points(g):
    """Inverse of frame_matrices: (z, w) = (g.i, i / (c i + d)^2)"""
    g = np.asarray(g, dtype=float)
    a, b, c, d = g[..., 0, 0], g[..., 0, 1], g[..., 1, 0], g[..., 1, 1]
    denom = c * 1j + d
    return (a * 1j + b) / denom, 1j / denom ** 2


def geodesic_element(t):
    return np.array([[np.exp(0.5 * t), 0.0], [0.0, np.exp(-0.5 * t)]])


def reduce_matrix(matrix):
    """Left-multiply by a modular element so that g.i lies over the fundamental domain"""
    g = np.array(matrix, dtype=float)
    for _ in range(REDUCTION_MAX_ITER):
        z, _ = frame_points(g)
        z = complex(z)
        shift = np.floor(z.real + 0.5)
        if shift != 0.0:
            g = np.array([[1.0, -shift], [0.0, 1.0]]) @ g
            z = z - shift
        r2 = abs(z) ** 2
        if r2 < 1.0 - UNIT_CIRCLE_TOL or (abs(r2 - 1.0) <= UNIT_CIRCLE_TOL and z.real > UNIT_CIRCLE_TOL):
            g = S_MATRIX @ g
            continue
        return g
    raise NumericalError("Fundamental-domain reduction did not terminate", stage='reduction',
                         diagnostics={'iterations': REDUCTION_MAX_ITER})


def modular_flow(s: ModularState, t: float, reduce: bool = True) -> ModularState:
    """
    Exact geodesic flow on the modular surface

    Args:
        s: current state, determinant 1 within 1e-8
        t: flow time
        reduce: re-reduce to the fundamental domain after the flow step

    Returns:
        ModularState
    """
    det = s.det
    if abs(det - 1.0) > 1e-8:
        raise ValueError(f"Modular state must have determinant 1, got {det:.12g}")
    if t == 0.0:
        return ModularState(s.matrix.copy(), s.reduced)
    g = s.matrix @ geodesic_element(t)
    if not reduce:
        return ModularState(g, False)
    g = reduce_matrix(g)
    # Keep det exactly 1 against rounding
    g = g / np.sqrt(np.linalg.det(g))
    return ModularState(g, True)


def same_modular_point(first: ModularState, second: ModularState, tol: float = 1e-8) -> bool:
    """Equality of reduced representatives up to the sign of PSL(2, R)"""
    a = reduce_matrix(first.matrix)
    b = reduce_matrix(second.matrix)
    return bool(np.max(np.abs(a - b)) <= tol or np.max(np.abs(a + b)) <= tol)


def state_to_modular(x, y, vx, vy, c=1.0) -> ModularState:
    """Chart state of a curvature -c^2 model to its SL(2, R) representative"""
    z = complex(x, y)
    w = complex(vx, vy) / c
    g = frame_matrices(np.array([z]), np.array([w]))[0]
    return ModularState(g, is_reduced(z))


def modular_to_state(s: ModularState, c=1.0):
    """Returns (x, y, vx, vy) chart data for a curvature -c^2 model"""
    z, w = frame_points(s.matrix)
    z, w = complex(z), complex(w) * c
    return z.real, z.imag, w.real, w.imag
