"""
The unit tangent bundle SM with the Sasaki metric.

Points of SM are stored as (x, y, alpha) with alpha the chart angle of the
direction. A tangent vector xi splits into its horizontal part d pi(xi) and
its vertical part K(xi); on SM the vertical part is a multiple of the unit
normal n = v rotated by +90 degrees, and in coordinates its length is

    a = d alpha + u_x dy - u_y dx

for the conformal metric e^{2u}(dx^2 + dy^2). The Sasaki-orthonormal frame
at theta is (G, H, V) = ((v, 0), (n, 0), (0, n)).
"""

import math

import numpy as np
from numpy.polynomial.legendre import leggauss

from constants import QUADRATURE_NODES
from src.errors import ChartDomainError
from src.flow.modular import NEIGHBOR_SET, mobius, reduce_points
from src.geometry.core import inner, riemann_apply, riemann_derivative_apply
from src.models.entropy import CoreRegion, FUNDAMENTAL_DOMAIN_FLOOR
from src.models.surface_model import SurfaceModel
from src.models.unit_tangent import SplitVector, UnitTangentState

ADMISSIBLE_TOL = 1e-9
BASE_MATCH_TOL = 1e-12

_NODES, _WEIGHTS = leggauss(QUADRATURE_NODES)
SEGMENT_NODES = 0.5 * (_NODES + 1.0)
SEGMENT_WEIGHTS = 0.5 * _WEIGHTS


def wrap_angle(angle):
    """Representative of an angle in [-pi, pi)"""
    return (np.asarray(angle, dtype=float) + np.pi) % (2.0 * np.pi) - np.pi


def state_coordinates(theta: UnitTangentState) -> np.ndarray:
    """(x, y, alpha) coordinates of a state"""
    return np.array([theta.x, theta.y, theta.alpha], dtype=float)


def _check_attached(theta: UnitTangentState, xi: SplitVector):
    if not xi.base:
        return
    if (abs(xi.base[0] - theta.x) > BASE_MATCH_TOL * (1.0 + abs(theta.x))
            or abs(xi.base[1] - theta.y) > BASE_MATCH_TOL * (1.0 + abs(theta.y))):
        raise ValueError(f"Tangent vector attached at {tuple(xi.base)} but the state sits at "
                         f"({theta.x}, {theta.y})")


def attach(theta: UnitTangentState, horiz, vert) -> SplitVector:
    """SplitVector at theta from chart vectors"""
    return SplitVector(tuple(float(value) for value in horiz), tuple(float(value) for value in vert),
                       (theta.x, theta.y))


def from_frame(theta: UnitTangentState, coords) -> SplitVector:
    """SplitVector with components (along G, along H, along V) in the orthonormal frame"""
    a, b, c = (float(value) for value in coords)
    v, n = theta.velocity(), theta.normal()
    return attach(theta, a * v + b * n, c * n)


def frame_coordinates(theta: UnitTangentState, xi: SplitVector) -> np.ndarray:
    """Components of xi in the frame (G, H, V); the vertical part must be normal to v"""
    _check_attached(theta, xi)
    model, p = theta.model, (theta.x, theta.y)
    v, n = theta.velocity(), theta.normal()
    h, w = xi.horiz_array(), xi.vert_array()
    along = inner(model, p, w, v)
    if abs(along) > ADMISSIBLE_TOL * (1.0 + math.sqrt(max(inner(model, p, w, w), 0.0))):
        raise ChartDomainError(f"Vertical part has a component {along:.3g} along the direction; "
                               f"the vector is not tangent to SM")
    return np.array([inner(model, p, h, v), inner(model, p, h, n), inner(model, p, w, n)])


def split(theta: UnitTangentState, tangent) -> SplitVector:
    """
    Split a coordinate tangent vector (dx, dy, d alpha) at theta

    Args:
        theta: base state
        tangent: coordinate components in (x, y, alpha)

    Returns:
        SplitVector with horizontal part (dx, dy) and vertical part a n
    """
    dx, dy, dalpha = (float(value) for value in tangent)
    jet = theta.model.conformal_jet(theta.x, theta.y)
    a = dalpha + float(jet.ux) * dy - float(jet.uy) * dx
    return attach(theta, (dx, dy), a * theta.normal())


def assemble(theta: UnitTangentState, xi: SplitVector) -> np.ndarray:
    """Inverse of split: coordinate components (dx, dy, d alpha)"""
    coords = frame_coordinates(theta, xi)
    dx, dy = xi.horiz_array()
    jet = theta.model.conformal_jet(theta.x, theta.y)
    return np.array([dx, dy, coords[2] - float(jet.ux) * dy + float(jet.uy) * dx])


def sasaki_inner(theta: UnitTangentState, xi: SplitVector, eta: SplitVector) -> float:
    """
    Sasaki inner product g(d pi xi, d pi eta) + g(K xi, K eta)

    Raises:
        ValueError: if either vector is attached to another base point
    """
    _check_attached(theta, xi)
    _check_attached(theta, eta)
    model, p = theta.model, (theta.x, theta.y)
    return (inner(model, p, xi.horiz_array(), eta.horiz_array())
            + inner(model, p, xi.vert_array(), eta.vert_array()))


def sasaki_norm(theta: UnitTangentState, xi: SplitVector) -> float:
    return math.sqrt(max(sasaki_inner(theta, xi, xi), 0.0))


def check_admissible(theta: UnitTangentState, first: SplitVector, second: SplitVector,
                     tol: float = ADMISSIBLE_TOL):
    """Raise ChartDomainError naming the first violated normalization of a basis pair"""
    model, p = theta.model, (theta.x, theta.y)
    v1, w1 = first.horiz_array(), first.vert_array()
    v2, w2 = second.horiz_array(), second.vert_array()
    for index, (v, w) in enumerate(((v1, w1), (v2, w2)), start=1):
        total = inner(model, p, v, v) + inner(model, p, w, w)
        if abs(total - 1.0) > tol:
            raise ChartDomainError(f"Inadmissible basis: |v{index}|^2 + |w{index}|^2 = {total:.12g}, expected 1")
    horizontal = inner(model, p, v1, v2)
    if abs(horizontal) > tol:
        raise ChartDomainError(f"Inadmissible basis: <v1, v2> = {horizontal:.3g}, expected 0")
    vertical = inner(model, p, w1, w2)
    if abs(vertical) > tol:
        raise ChartDomainError(f"Inadmissible basis: <w1, w2> = {vertical:.3g}, expected 0")


def sasaki_sectional(theta: UnitTangentState, basis) -> float:
    """
    Sasaki sectional curvature of the plane spanned by (v1, w1), (v2, w2)

    Evaluates all ten terms: the base curvature of (v1, v2), the mixed
    curvature term, |w1|^2 |w2|^2, the four quadratic R terms along the
    direction v, and the two covariant-derivative terms.

    Args:
        theta: base state; v is its direction
        basis: pair of SplitVectors satisfying |v_i|^2 + |w_i|^2 = 1 and
            <v1, v2> = <w1, w2> = 0

    Returns:
        float
    """
    first, second = basis
    _check_attached(theta, first)
    _check_attached(theta, second)
    check_admissible(theta, first, second)

    model, p = theta.model, (theta.x, theta.y)
    v = theta.velocity()
    v1, w1 = first.horiz_array(), first.vert_array()
    v2, w2 = second.horiz_array(), second.vert_array()

    def R(X, Y, Z):
        return riemann_apply(model, p, X, Y, Z)

    def dR(U, X, Y, Z):
        return riemann_derivative_apply(model, p, U, X, Y, Z)

    def g(X, Y):
        return inner(model, p, X, Y)

    R_v1v2 = lambda Z: R(v1, v2, Z)
    R_v_w2_v1 = R(v, w2, v1)
    R_v_w1_v2 = R(v, w1, v2)
    R_v1v2_v = R_v1v2(v)

    total = g(R_v1v2(v1), v2)
    total += 3.0 * g(R_v1v2(w1), w2)
    total += g(w1, w1) * g(w2, w2)
    total -= 0.75 * g(R_v1v2_v, R_v1v2_v)
    total += 0.25 * g(R_v_w2_v1, R_v_w2_v1)
    total += 0.25 * g(R_v_w1_v2, R_v_w1_v2)
    total += 0.5 * g(R(v, w1, w2), R_v_w2_v1)
    total -= g(R(v, w1, v1), R(v, w2, v2))
    total += g(dR(v1, v, w2, v2), v1)
    total += g(dR(v2, v, w1, v1), v2)
    return float(total)


def _reduced_coordinates(model: SurfaceModel, points: np.ndarray) -> np.ndarray:
    """Move (x, y, alpha) rows over the fundamental domain for quotient models"""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if not model.is_quotient:
        return points
    z, w = reduce_points(points[:, 0] + 1j * points[:, 1], np.exp(1j * points[:, 2]))
    return np.column_stack([z.real, z.imag, np.angle(w)])


def base_distance_lower(model: SurfaceModel, z1, z2) -> np.ndarray:
    """
    Lower bound of the base distance between chart points (complex arrays)

    Exact for Flat and the constant-curvature models. The bump sum is
    non-negative, so the perturbed metric dominates the unperturbed one and
    the hyperbolic distance is still a lower bound.
    """
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    gap = np.abs(z2 - z1)
    if model.is_flat:
        return gap
    return 2.0 * np.arcsinh(gap / (2.0 * np.sqrt(z1.imag * z2.imag))) / model.c


def segment_length_and_holonomy(model: SurfaceModel, z1, z2):
    """
    Riemannian length of the chart segment [z1, z2] and the rotation of
    parallel transport along it (Gauss-Legendre quadrature)
    """
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    dz = np.broadcast_to(z2 - z1, np.broadcast(z1, z2).shape)
    pts = np.asarray(z1)[..., None] + SEGMENT_NODES * dz[..., None]
    u, ux, uy, _ = model.flow_fields(pts.real, pts.imag)
    length = np.sum(SEGMENT_WEIGHTS * np.exp(u), axis=-1) * np.abs(dz)
    holonomy = np.sum(SEGMENT_WEIGHTS * (uy * dz.real[..., None] - ux * dz.imag[..., None]), axis=-1)
    return length, holonomy


def straight_path_length(model: SurfaceModel, z1, alpha1, z2, alpha2) -> np.ndarray:
    """Lifted-metric length of the straight coordinate path, fiber turned the short way"""
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    shape = np.broadcast(z1, z2, alpha1, alpha2).shape
    dz = np.broadcast_to(z2 - z1, shape)
    dalpha = np.broadcast_to(wrap_angle(np.asarray(alpha2) - np.asarray(alpha1)), shape)
    pts = np.broadcast_to(z1, shape)[..., None] + SEGMENT_NODES * dz[..., None]
    u, ux, uy, _ = model.flow_fields(pts.real, pts.imag)
    vertical = dalpha[..., None] + ux * dz.imag[..., None] - uy * dz.real[..., None]
    speed = np.sqrt(np.exp(2.0 * u) * np.abs(dz[..., None]) ** 2 + vertical ** 2)
    return np.sum(SEGMENT_WEIGHTS * speed, axis=-1)


def distance_bounds_batch(model: SurfaceModel, reference, others, radius: float = None):
    """
    Sasaki distance bounds between one state and a batch of states

    Quotient models compare against the translates of each state by
    NEIGHBOR_SET; the lower bound is the smallest base distance, the upper
    bounds use the translate realizing it.

    Args:
        model: SurfaceModel
        reference: (x, y, alpha)
        others: array (B, 3) of (x, y, alpha)
        radius: when given, also compute the local lower bound valid for
            pairs at true distance at most radius

    Returns:
        dict of arrays 'lower', 'upper', 'refined' and, with radius, 'lower_local'
    """
    reference = _reduced_coordinates(model, reference)[0]
    others = _reduced_coordinates(model, others)
    z1 = complex(reference[0], reference[1])
    a1 = reference[2]
    z2 = others[:, 0] + 1j * others[:, 1]
    w2 = np.exp(1j * others[:, 2])

    candidates = NEIGHBOR_SET if model.is_quotient else [np.eye(2)]
    translates, angles, distances = [], [], []
    for gamma in candidates:
        zg, wg = mobius(gamma, z2, w2)
        translates.append(zg)
        angles.append(np.angle(wg))
        distances.append(base_distance_lower(model, z1, zg))
    translates = np.array(translates)
    angles = np.array(angles)
    distances = np.array(distances)

    best = np.argmin(distances, axis=0)
    columns = np.arange(others.shape[0])
    lower = distances[best, columns]
    zb = translates[best, columns]
    ab = angles[best, columns]

    length, holonomy = segment_length_and_holonomy(model, z1, zb)
    upper = length + np.abs(wrap_angle(ab - a1 - holonomy))
    refined = np.minimum(upper, straight_path_length(model, z1, a1, zb, ab))
    result = {'lower': lower, 'upper': upper, 'refined': refined}

    if radius is not None:
        k_max = abs(model.curvature_bounds[0])
        local = distances.copy()
        for index in range(len(candidates)):
            near = distances[index] <= radius
            if not np.any(near):
                continue
            seg, hol = segment_length_and_holonomy(model, z1, translates[index][near])
            relative = np.abs(wrap_angle(angles[index][near] - a1 - hol))
            slack = k_max * (radius + seg) ** 2 / (4.0 * np.pi)
            fiber = np.maximum(relative - slack, 0.0)
            local[index][near] = np.sqrt(distances[index][near] ** 2 + fiber ** 2)
        result['lower_local'] = np.min(local, axis=0)
    return result


def _check_same_model(theta: UnitTangentState, omega: UnitTangentState):
    if theta.model != omega.model:
        raise ValueError(f"States live on different models: {theta.model.model_id} and {omega.model.model_id}")


def sm_distance_bounds(theta: UnitTangentState, omega: UnitTangentState):
    """
    Lower and upper bounds of the Sasaki distance

    lower is the base distance d(pi theta, pi omega); upper is the length of
    the horizontal lift of the chart segment followed by the fiber arc.

    Returns:
        tuple: (lower, upper)
    """
    _check_same_model(theta, omega)
    bounds = distance_bounds_batch(theta.model, state_coordinates(theta), state_coordinates(omega)[None, :])
    return float(bounds['lower'][0]), float(bounds['upper'][0])


def sm_distance_lower_local(theta: UnitTangentState, omega: UnitTangentState, radius: float) -> float:
    """
    Lower bound of the Sasaki distance that holds whenever the distance is at most radius

    Adds the fiber rotation relative to parallel transport along the chart
    segment, less the holonomy defect |K|max (radius + l)^2 / (4 pi).
    """
    _check_same_model(theta, omega)
    if not radius > 0:
        raise ValueError(f"Comparison radius must be positive, got {radius}")
    bounds = distance_bounds_batch(theta.model, state_coordinates(theta), state_coordinates(omega)[None, :],
                                   radius=radius)
    return float(bounds['lower_local'][0])


def liouville_density(model: SurfaceModel, x, y) -> np.ndarray:
    """Density of the Liouville measure in (x, y, alpha) coordinates"""
    return np.exp(2.0 * model.conformal_jet(x, y).u)


def liouville_sample(model: SurfaceModel, core: CoreRegion, count: int, rng) -> np.ndarray:
    """
    Liouville-distributed (x, y, alpha) rows on the compact core

    Hyperbolic kinds: 1/y uniform (density 1/y^2) with rejection outside
    the fundamental domain and, for the perturbed model, acceptance
    e^{2 eps (f - sup f)}. Flat: uniform on the core square.
    """
    if count < 1:
        raise ValueError(f"Sample count must be positive, got {count}")
    if model.is_flat:
        half = core.half_width
        return np.column_stack([rng.uniform(-half, half, count), rng.uniform(-half, half, count),
                                rng.uniform(-np.pi, np.pi, count)])

    accepted = []
    total = 0
    inv_low, inv_high = 1.0 / core.y_core, 1.0 / FUNDAMENTAL_DOMAIN_FLOOR
    f_sup = model.bump_sup()
    while total < count:
        batch = max(2 * (count - total), 64)
        x = rng.uniform(-0.5, 0.5, batch)
        y = 1.0 / rng.uniform(inv_low, inv_high, batch)
        keep = x * x + y * y >= 1.0
        if model.epsilon:
            f = model.bump_jet(x, y)['f']
            keep &= rng.uniform(0.0, 1.0, batch) < np.exp(2.0 * model.epsilon * (f - f_sup))
        rows = np.column_stack([x[keep], y[keep], rng.uniform(-np.pi, np.pi, int(np.sum(keep)))])
        accepted.append(rows)
        total += rows.shape[0]
    return np.vstack(accepted)[:count]


def liouville_states(model: SurfaceModel, core: CoreRegion, count: int, rng):
    """UnitTangentStates drawn from liouville_sample"""
    return [UnitTangentState.from_angle(model, x, y, alpha) for x, y, alpha in liouville_sample(model, core, count, rng)]
