"""Certificate of explicit constants and the per-state bound checks"""

import math

import numpy as np

from constants import BOUND_REL_TOL, EBERLEIN_REL_TOL, NEARBY_RADIUS, NEARBY_SAMPLES, SPLITTING_HORIZON
from src.flow.integrator import flow_derivative
from src.models.certificate import AnosovCertificate, BoundCheck, BoundReport
from src.models.unit_tangent import UnitTangentState
from src.reports.analyzers.splitting_analyzer import estimate_splitting
from src.sasaki.bundle import state_coordinates
from src.sasaki.lifted_metric import frame_to_coordinates, sm_exp
from src.utils.rng import stream

CHECK_NAMES = (
    'time_one_norm',
    'time_one_h',
    'two_sided_norm',
    'norm_conorm_ratio',
    'nearby_norm_ratio',
    'unstable_growth',
    'conorm_stable',
    'jacobi_time_one',
    'splitting_angle',
    'eberlein',
)


def jacobi_bound(c: float, C: float, lam: float) -> float:
    """((1 + c) / c) sinh c + C lambda sqrt(1 + c^2)"""
    return (1.0 + c) / c * math.sinh(c) + C * lam * math.sqrt(1.0 + c * c)


def h_of_c(c: float, L: float, C: float, lam: float) -> float:
    root = math.sqrt(1.0 + c * c)
    return 2.0 * L * C * lam + L * C * lam * c * c + L * root * (1.0 + c) / c * math.sinh(c) + 1.0


def default_iterate(C: float, lam: float) -> int:
    """Smallest m >= 1 with C lambda^m < 1/2"""
    m = 1
    while C * lam ** m >= 0.5:
        m += 1
    return m


def admissible_iterate(L: float, C: float, lam: float, limit: int = 1000):
    """Smallest m with eps_m = (L + 1) C lambda^m < 1 and sqrt(1 - eps_m^2) > eps_m C lambda^m"""
    for m in range(1, limit + 1):
        eps_m = (L + 1.0) * C * lam ** m
        if eps_m < 1.0 and math.sqrt(1.0 - eps_m ** 2) > eps_m * C * lam ** m:
            return m
    return None


def build_certificate(c: float, C: float, lam: float, Q: float, delta_proj: float, m: int = None,
                      C_rev: float = None, lam_rev: float = None) -> AnosovCertificate:
    """
    Evaluate every explicit constant from the fitted and sampled inputs

    Args:
        c: curvature scale (sectional curvature >= -c^2)
        C, lam: Anosov constants of the flow
        Q: angle bound, must be < 1
        delta_proj: projection-norm bound
        m: iterate (default: smallest m with C lambda^m < 1/2)
        C_rev, lam_rev: constants of the time-reversed flow (default: C, lam)

    Returns:
        AnosovCertificate
    """
    if not Q < 1.0:
        raise ValueError(f"Angle bound Q = {Q} must be below 1")
    if Q < 0.0:
        raise ValueError(f"Angle bound Q = {Q} must be non-negative")
    if not 0.0 < lam < 1.0:
        raise ValueError(f"Contraction rate lambda = {lam} must lie in (0, 1)")
    if not C > 0.0:
        raise ValueError(f"Anosov prefactor C = {C} must be positive")
    if not c > 0.0:
        raise ValueError(f"Curvature scale c = {c} must be positive")
    if not delta_proj > 0.0:
        raise ValueError(f"Projection bound delta_proj = {delta_proj} must be positive")
    m = default_iterate(C, lam) if m is None else int(m)
    if m < 1:
        raise ValueError(f"Iterate m = {m} must be at least 1")

    C_rev = C if C_rev is None else C_rev
    lam_rev = lam if lam_rev is None else lam_rev

    L = 1.0 / math.sqrt(1.0 - Q) + 1.0
    P1 = jacobi_bound(c, C, lam)
    P2 = jacobi_bound(c, C_rev, lam_rev)
    P = max(P1, P2)
    tau1 = 2.0 * L + 1.0
    tau2 = 1.0 / (2.0 * delta_proj)
    kappa = tau1 / tau2 * (1.0 + c * c) * math.exp(2.0 * c * m)
    h_c = h_of_c(c, L, C, lam)
    K1 = h_c ** m
    K2 = 1.0 / C
    return AnosovCertificate(
        c=c, C=C, lam=lam, Q=Q, delta_proj=delta_proj, m=m, L=L, P1=P1, P2=P2, P=P,
        tau1=tau1, tau2=tau2, kappa=kappa, h_c=h_c, K1=K1, K2=K2, beta=K2 / K1,
        cotasup=L * C * lam + L * math.sqrt(1.0 + c * c) * P + 1.0,
        admissible_m=admissible_iterate(L, C, lam),
    )


def cocycle_norms(cocycle):
    """(operator norm, co-norm) of a cocycle in orthonormal frames"""
    singular = np.linalg.svd(np.asarray(cocycle, dtype=float), compute_uv=False)
    return float(singular[0]), float(singular[-1])


def _margin(rhs: float, lhs: float) -> float:
    return (rhs - lhs) / max(abs(rhs), 1.0)


def nearby_states(theta: UnitTangentState, rng, radius: float = NEARBY_RADIUS, count: int = NEARBY_SAMPLES):
    """
    States within Sasaki distance radius of theta

    Each one is the endpoint of an SM geodesic from theta along a uniformly
    random unit direction of the frame (G, H, V), of length at most radius.

    Returns:
        list of (UnitTangentState, length) pairs
    """
    if not radius > 0:
        raise ValueError(f"Nearby radius must be positive, got {radius}")
    point = state_coordinates(theta)
    nearby = []
    for _ in range(count):
        direction = rng.standard_normal(3)
        direction /= np.linalg.norm(direction)
        length = radius * (1.0 - rng.random())
        x, y, alpha = sm_exp(theta.model, point, frame_to_coordinates(theta.model, point, direction), length)
        nearby.append((UnitTangentState.from_angle(theta.model, x, y, alpha), float(length)))
    return nearby


def check_state(theta: UnitTangentState, cert: AnosovCertificate, opts=None, horizon=SPLITTING_HORIZON, rng=None,
                radius: float = NEARBY_RADIUS):
    """All bound checks at one state; checks that need the splitting are skipped when it fails"""
    checks = {name: BoundCheck(name) for name in CHECK_NAMES}
    tol = BOUND_REL_TOL
    base_witness = theta.to_dict()
    rng = stream(0, 'nearby') if rng is None else rng

    def record(name, rhs, lhs, margin=None, **extra):
        witness = dict(base_witness, lhs=float(lhs), rhs=float(rhs), **extra)
        checks[name].record(_margin(rhs, lhs) if margin is None else margin, witness, tol)

    D1 = flow_derivative(theta, 1.0, opts)
    Dm = flow_derivative(theta, cert.m, opts)
    norm1, _ = cocycle_norms(D1)
    norm_m, conorm_m = cocycle_norms(Dm)

    record('time_one_norm', cert.cotasup, norm1)
    record('time_one_h', cert.h_c, norm1)
    record('two_sided_norm', cert.K1, norm_m,
           margin=min(_margin(norm_m, cert.K2), _margin(cert.K1, norm_m)))
    record('norm_conorm_ratio', cert.kappa * conorm_m, norm_m)

    # one sample per state: the nearby state with the largest norm
    candidates = [(cert.beta * cocycle_norms(flow_derivative(other, cert.m, opts))[0], distance, other)
                  for other, distance in nearby_states(theta, rng, radius)]
    lhs, distance, other = max(candidates, key=lambda item: item[0])
    record('nearby_norm_ratio', norm_m, lhs, distance=distance, radius=radius, nearby=other.to_dict())

    estimate = estimate_splitting(theta, horizon, opts)
    if not estimate.converged:
        return checks
    e_s, e_u = estimate.e_s_frame, estimate.e_u_frame
    record('unstable_growth', cert.tau1 * np.linalg.norm(Dm @ e_u), norm_m)
    record('conorm_stable', conorm_m, cert.tau2 * np.linalg.norm(Dm @ e_s))

    directions = (e_u, e_s, np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0]))
    jacobi_one = max(abs((D1 @ direction)[1]) for direction in directions)
    record('jacobi_time_one', cert.P, jacobi_one)
    record('splitting_angle', cert.Q, estimate.f)

    eberlein = min(_margin(cert.c * abs(frame[1]), abs(frame[2])) for frame in (e_s, e_u))
    checks['eberlein'].record(eberlein, dict(base_witness, e_s=e_s.tolist(), e_u=e_u.tolist()), EBERLEIN_REL_TOL)
    return checks


def check_bounds(states, cert: AnosovCertificate, opts=None, executor=None, seed: int = 0,
                 radius: float = NEARBY_RADIUS) -> BoundReport:
    """
    Evaluate every inequality of the certificate over a sample of states

    Nearby states for state i are drawn from the stream (seed, 'nearby', i)
    within Sasaki distance radius.

    Returns:
        BoundReport with one BoundCheck per inequality in CHECK_NAMES order
    """
    states = list(states)
    if not states:
        raise ValueError("check_bounds needs at least one state")
    mapper = executor.map if executor is not None else map
    merged = {name: BoundCheck(name) for name in CHECK_NAMES}

    def run(indexed):
        index, theta = indexed
        return check_state(theta, cert, opts, rng=stream(seed, 'nearby', index), radius=radius)

    for partial in mapper(run, enumerate(states)):
        for name in CHECK_NAMES:
            merged[name] = merged[name].merge(partial[name])
    return BoundReport(states[0].model.model_id, cert.m, [merged[name] for name in CHECK_NAMES])


class BoundsAnalyzer:
    def __init__(self, states, cert, opts, log_func, seed=0):
        self.states = list(states)
        self.cert = cert
        self.opts = opts
        self.log = log_func
        self.seed = seed

    def analyze(self, executor=None):
        """Run check_bounds and log a one-line summary per inequality"""
        try:
            report = check_bounds(self.states, self.cert, self.opts, executor, self.seed)
            for check in report.checks:
                self.log(f"{check.name}: {check.violations} violation(s) over {check.samples} sample(s)")
            return report
        except ValueError as e:
            self.log(f"Could not check the bounds: {str(e)}")
            return None
