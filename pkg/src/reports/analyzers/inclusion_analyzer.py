"""
Small exponential balls against linearized ellipsoids.

The image of exp_theta(B(0, rho_m)) under phi^m is pulled back to the tangent
space at phi^m(theta) and located against d phi^m(B(0, rho)) with
rho_m = beta kappa^-1 rho.
"""

import dataclasses
import math

import numpy as np

from constants import INCLUSION_MAX_SKIP_FRACTION, INCLUSION_RADIUS, INCLUSION_SWEEP
from src.errors import NumericalError
from src.flow.integrator import flow
from src.models.certificate import AnosovCertificate, InclusionResult
from src.models.unit_tangent import UnitTangentState
from src.sasaki.bundle import state_coordinates
from src.sasaki.lifted_metric import coordinates_to_frame, frame_to_coordinates, sm_exp, sm_exp_inverse


def sphere_directions(rng, count: int) -> np.ndarray:
    """Uniform unit vectors of R^3"""
    directions = rng.standard_normal((count, 3))
    return directions / np.linalg.norm(directions, axis=1, keepdims=True)


def _unfolded(theta: UnitTangentState) -> UnitTangentState:
    # Exponential maps of quotient models are evaluated in the universal cover
    if not theta.model.is_quotient:
        return theta
    model = dataclasses.replace(theta.model, quotient=False)
    return UnitTangentState.from_angle(model, theta.x, theta.y, theta.alpha)


def ball_inclusion(theta: UnitTangentState, m: int, rho: float, cert: AnosovCertificate,
                   n_boundary: int, rng, opts=None) -> InclusionResult:
    """
    Check phi^m(exp_theta(B(0, rho_m))) inside exp_{phi^m theta}(d phi^m(B(0, rho)))

    Boundary points of the small sphere are pushed by phi^m o exp_theta and
    pulled back with the inverse exponential at phi^m(theta), seeded with
    the linearization. A sample's margin is 1 - |d phi^m^-1 zeta| / rho.
    Samples where the exponential or its inverse fail are skipped.

    Args:
        theta: base state
        m: iterate
        rho: outer radius in (0, 1)
        cert: AnosovCertificate giving beta and kappa
        n_boundary: number of boundary samples
        rng: numpy Generator

    Returns:
        InclusionResult; passed needs every margin positive and a skipped
        fraction under INCLUSION_MAX_SKIP_FRACTION
    """
    if not 0.0 < rho < 1.0:
        raise ValueError(f"Ball radius rho must lie in (0, 1), got {rho}")
    if n_boundary < 1:
        raise ValueError("Inclusion check needs at least one boundary sample")
    if m < 0:
        raise ValueError(f"Iterate m = {m} must be non-negative")
    inner_radius = cert.inner_radius(rho)

    if m == 0:
        margin = 1.0 - inner_radius / rho
        return InclusionResult(margin > 0.0, margin, n_boundary, 0, 0, rho, inner_radius)

    local = _unfolded(theta)
    model = local.model
    start = state_coordinates(local)
    image = flow(local, m, opts)
    cocycle = image.cocycle
    end = state_coordinates(image.state)

    worst = math.inf
    skipped = 0
    for direction in sphere_directions(rng, n_boundary):
        xi = inner_radius * direction
        try:
            point = sm_exp(model, start, frame_to_coordinates(model, start, xi))
            pushed = flow(UnitTangentState.from_angle(model, *point), m, opts).state
            guess = frame_to_coordinates(model, end, cocycle @ xi)
            zeta = sm_exp_inverse(model, end, state_coordinates(pushed), guess=guess)
        except NumericalError:
            skipped += 1
            continue
        preimage = np.linalg.solve(cocycle, coordinates_to_frame(model, end, zeta))
        worst = min(worst, 1.0 - float(np.linalg.norm(preimage)) / rho)

    passed = math.isfinite(worst) and worst > 0.0 and skipped < INCLUSION_MAX_SKIP_FRACTION * n_boundary
    return InclusionResult(bool(passed), worst, n_boundary, skipped, m, rho, inner_radius)


def inclusion_sweep(theta: UnitTangentState, cert: AnosovCertificate, n_boundary: int, rng_factory,
                    rhos=INCLUSION_SWEEP, opts=None):
    """
    Inclusion results over a grid of outer radii

    Args:
        rng_factory: callable index -> Generator, one stream per radius

    Returns:
        tuple: (list of InclusionResult, largest passing rho or None)
    """
    results = [ball_inclusion(theta, cert.m, rho, cert, n_boundary, rng_factory(index), opts)
               for index, rho in enumerate(rhos)]
    passing = [result.rho for result in results if result.passed]
    return results, (max(passing) if passing else None)


class InclusionAnalyzer:
    def __init__(self, theta, cert, n_boundary, rng_factory, opts, log_func, rho=INCLUSION_RADIUS):
        self.theta = theta
        self.cert = cert
        self.n_boundary = n_boundary
        self.rng_factory = rng_factory
        self.opts = opts
        self.rho = rho
        self.log = log_func

    def analyze(self):
        """
        Run the inclusion at the configured radius and over the sweep grid

        Returns:
            dict with 'result', 'sweep' and 'largest_rho', or None on bad input
        """
        try:
            result = ball_inclusion(self.theta, self.cert.m, self.rho, self.cert, self.n_boundary,
                                    self.rng_factory('inclusion'), self.opts)
            self.log(f"Inclusion at rho={self.rho}: {'pass' if result.passed else 'fail'} "
                     f"(worst margin {result.worst_margin:.3e}, {result.skipped} skipped)")
            sweep, largest = inclusion_sweep(self.theta, self.cert, self.n_boundary,
                                             lambda index: self.rng_factory('sweep', index), opts=self.opts)
            self.log(f"Largest passing radius in the sweep: {largest}")
            return {'result': result, 'sweep': sweep, 'largest_rho': largest}
        except ValueError as e:
            self.log(f"Could not run the inclusion check: {str(e)}")
            return None
