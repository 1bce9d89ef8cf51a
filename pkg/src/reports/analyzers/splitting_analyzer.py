"""Anosov splitting - stable/unstable directions, fitted (C, lambda), sampled suprema and growth rates"""

import math

import numpy as np
import pandas as pd
from scipy.stats import linregress

from constants import (GENERIC_JACOBI_VECTOR, SAFETY_FACTOR, SPLITTING_HORIZON, SPLITTING_RESIDUAL_TOL,
                       BOUND_REL_TOL, CONJUGATE_POINT_TOL)
from src.errors import NumericalError
from src.flow.integrator import BatchState, flow, identity_jacobi, propagate_batch
from src.models.certificate import ConstantsFit, RatioDiagnostic, SampledConstants, SplittingEstimate
from src.models.unit_tangent import UnitTangentState
from src.sasaki.bundle import from_frame, frame_coordinates
from src.utils.logging import Logger


def _direction(pair):
    pair = np.asarray(pair, dtype=float)
    pair = pair / np.hypot(pair[0], pair[1])
    lead = pair[0] if abs(pair[0]) > 1e-14 else pair[1]
    return pair if lead >= 0 else -pair


def _angle(first, second) -> float:
    cross = first[0] * second[1] - first[1] * second[0]
    return math.atan2(abs(cross), abs(float(np.dot(first, second))))


def _limit_directions(theta: UnitTangentState, horizon: float, opts):
    """(e_s, e_u) in (J, J') coordinates after back-propagating a generic vector over the horizon"""
    generic = np.asarray(GENERIC_JACOBI_VECTOR, dtype=float)
    backward = flow(theta, -horizon, opts).perpendicular_block
    forward = flow(theta, horizon, opts).perpendicular_block
    e_u = _direction(np.linalg.solve(backward, generic))
    e_s = _direction(np.linalg.solve(forward, generic))
    return e_s, e_u


def estimate_splitting(theta: UnitTangentState, T: float = SPLITTING_HORIZON, opts=None) -> SplittingEstimate:
    """
    Stable and unstable directions at theta

    e_u is d phi^T applied at phi^-T(theta) to a generic perpendicular
    vector, computed as the inverse of d phi^-T at theta; e_s likewise with
    the flow reversed. The residual is the angle between the horizon-T and
    horizon-3T/4 estimates.

    Args:
        theta: state
        T: horizon
        opts: IntegratorOptions

    Returns:
        SplittingEstimate; converged is False (with a diagnostic) when the
        residual exceeds SPLITTING_RESIDUAL_TOL
    """
    if not T > 0:
        raise ValueError(f"Splitting horizon must be positive, got {T}")
    e_s, e_u = _limit_directions(theta, T, opts)
    e_s_short, e_u_short = _limit_directions(theta, 0.75 * T, opts)
    residual = max(_angle(e_s, e_s_short), _angle(e_u, e_u_short))

    converged = residual <= SPLITTING_RESIDUAL_TOL
    diagnostic = ''
    if not converged:
        diagnostic = (f"Splitting did not converge on {theta.model.model_id}: residual {residual:.3e} "
                      f"above {SPLITTING_RESIDUAL_TOL:g} at horizon {T:g}")
        Logger().info(diagnostic)

    e_s_frame = np.array([0.0, e_s[0], e_s[1]])
    e_u_frame = np.array([0.0, e_u[0], e_u[1]])
    return SplittingEstimate(
        theta=theta,
        e_s=from_frame(theta, e_s_frame),
        e_u=from_frame(theta, e_u_frame),
        g_dir=from_frame(theta, (1.0, 0.0, 0.0)),
        horizon=float(T),
        residual=float(residual),
        e_s_frame=e_s_frame,
        e_u_frame=e_u_frame,
        converged=converged,
        diagnostic=diagnostic,
    )


def require_converged(estimate: SplittingEstimate) -> SplittingEstimate:
    if not estimate.converged:
        raise NumericalError(estimate.diagnostic, stage='splitting',
                             diagnostics={'residual': estimate.residual, 'horizon': estimate.horizon})
    return estimate


def _column_norms(model, estimates, frames, steps: int, direction: float, opts) -> np.ndarray:
    """log |J, J'| at unit times for Jacobi columns started from the given frame vectors"""
    states = [estimate.theta for estimate in estimates]
    jacobi = np.array([[[frame[1]], [frame[2]]] for frame in frames], dtype=float)
    batch = BatchState.from_states(states, jacobi=jacobi)
    logs = np.empty((steps + 1, len(states)))
    logs[0] = np.log(np.hypot(batch.jacobi[:, 0, 0], batch.jacobi[:, 1, 0]))
    for step in range(1, steps + 1):
        batch = propagate_batch(model, batch, direction, opts)
        logs[step] = np.log(np.hypot(batch.jacobi[:, 0, 0], batch.jacobi[:, 1, 0]))
    return logs


def fit_anosov_constants(estimates, T: float = 10.0, reversed_flow: bool = False, opts=None) -> ConstantsFit:
    """
    Fit C and lambda to |d phi^-t restricted to E^u| <= C lambda^t

    The fit runs over the envelope (maximum over orbits at each integer t);
    the intercept is then raised until the line dominates every envelope
    point. With reversed_flow the stable directions are pushed forward
    instead, which gives the constants of the time-reversed flow.

    Args:
        estimates: converged SplittingEstimates along the sampled orbits
        T: fit horizon (integer times 0..T)
        reversed_flow: fit E^s under the forward flow
        opts: IntegratorOptions

    Returns:
        ConstantsFit
    """
    estimates = [estimate for estimate in estimates if estimate.converged]
    steps = int(math.floor(T))
    if not estimates or steps < 2:
        raise ValueError(f"Insufficient samples for the constants fit: {len(estimates)} converged "
                         f"splitting(s), horizon {T}")
    model = estimates[0].theta.model
    frames = [estimate.e_s_frame if reversed_flow else estimate.e_u_frame for estimate in estimates]
    logs = _column_norms(model, estimates, frames, steps, 1.0 if reversed_flow else -1.0, opts)

    times = np.arange(steps + 1, dtype=float)
    envelope = logs.max(axis=1)
    fit = linregress(times, envelope)
    slope = float(fit.slope)
    intercept = float(fit.intercept) + max(float(np.max(envelope - (fit.intercept + fit.slope * times))), 0.0)
    lam = math.exp(slope)
    if not 0.0 < lam < 1.0:
        raise ValueError(f"No contraction on the sample of {model.model_id}: fitted lambda = {lam:.6g}")

    floor = math.exp(-model.curvature_scale)
    lam_floor_ok = lam >= floor * (1.0 - BOUND_REL_TOL)
    note = ''
    if not lam_floor_ok:
        note = f"lambda = {lam:.6g} below exp(-c) = {floor:.6g}"
        Logger().info(f"Constants fit on {model.model_id}: {note}")
    return ConstantsFit(C=math.exp(intercept), lam=lam, slope=slope, intercept=intercept,
                        r_squared=float(fit.rvalue ** 2), samples=len(estimates), horizon=float(steps),
                        lam_floor_ok=lam_floor_ok, reversed_flow=reversed_flow, note=note)


def ratio_diagnostic(theta: UnitTangentState, xi_s, eta_u, t_grid, lam: float, c: float = None,
                     opts=None) -> RatioDiagnostic:
    """
    r(t) = lambda^-t |J_xi(t)| / (lambda^t |J_eta(t)|) with the envelope
    r(0) e^{(-2 log lambda - 2c) t} <= r(t) <= r(0) e^{(-2 log lambda + 2c) t}

    Raises:
        ValueError: if a Jacobi field vanishes on the grid (conjugate point)
    """
    c = theta.model.curvature_scale if c is None else c
    times = np.asarray(sorted(float(t) for t in t_grid))
    if times.size == 0 or times[0] < 0:
        raise ValueError("ratio_diagnostic needs a non-empty grid of non-negative times")
    s_frame = frame_coordinates(theta, xi_s)
    u_frame = frame_coordinates(theta, eta_u)
    jacobi = np.array([[[s_frame[1], u_frame[1]], [s_frame[2], u_frame[2]]]])
    batch = BatchState.from_states([theta], jacobi=jacobi)

    values = []
    current = 0.0
    for t in times:
        batch = propagate_batch(theta.model, batch, t - current, opts)
        current = t
        J_s, J_u = abs(batch.jacobi[0, 0, 0]), abs(batch.jacobi[0, 0, 1])
        if J_s < CONJUGATE_POINT_TOL or J_u < CONJUGATE_POINT_TOL:
            raise ValueError(f"Jacobi field vanishes at t = {t:g}: conjugate point along the orbit")
        values.append(lam ** (-t) * J_s / (lam ** t * J_u))

    r = np.array(values)
    r0 = abs(s_frame[1]) / abs(u_frame[1])
    log_lam = math.log(lam)
    lower = r0 * np.exp((-2.0 * log_lam - 2.0 * c) * times)
    upper = r0 * np.exp((-2.0 * log_lam + 2.0 * c) * times)
    return RatioDiagnostic(times, r, lower, upper)


def cocycle_supremum(model, states, opts=None) -> float:
    """sup of the operator norm of d phi^{+1} and d phi^{-1} over the states, at least 1"""
    upsilon = 1.0
    for direction in (1.0, -1.0):
        batch = propagate_batch(model, BatchState.from_states(states, jacobi=identity_jacobi(len(states))),
                                direction, opts)
        norms = np.linalg.svd(batch.jacobi, compute_uv=False)[:, 0]
        upsilon = max(upsilon, float(np.max(norms)))
    return upsilon


def sample_constants(estimates, opts=None) -> SampledConstants:
    """
    Sampled Q, delta_proj, P_logdet and Upsilon

    Q = min(1.1 max f, (1 + max f) / 2) stays below 1; the other suprema are
    multiplied by the safety factor 1.1.
    """
    accepted = [estimate for estimate in estimates if estimate.converged]
    failed = len(estimates) - len(accepted)
    if not accepted:
        raise ValueError("No converged splitting in the sample; constants cannot be measured")
    model = accepted[0].theta.model
    states = [estimate.theta for estimate in accepted]

    max_f = max(estimate.f for estimate in accepted)
    max_projection = max(estimate.projection_norm for estimate in accepted)

    unstable = _column_norms(model, accepted, [estimate.e_u_frame for estimate in accepted], 1, 1.0, opts)
    log_det = float(np.max(unstable[1]))

    upsilon = cocycle_supremum(model, states, opts)

    return SampledConstants(
        Q=min(SAFETY_FACTOR * max_f, 0.5 * (1.0 + max_f)),
        delta_proj=SAFETY_FACTOR * max_projection,
        P_logdet=SAFETY_FACTOR * max(log_det, 0.0),
        Upsilon=SAFETY_FACTOR * upsilon,
        max_f=max_f,
        max_projection=max_projection,
        samples=len(accepted),
        failed_splittings=failed,
    )


def unstable_growth_rate(theta: UnitTangentState, T: int, estimate: SplittingEstimate = None, opts=None) -> float:
    """Time average of log |d phi^1 restricted to E^u| over T unit steps along the orbit"""
    steps = int(T)
    if steps < 1:
        raise ValueError(f"Growth-rate horizon must be at least 1, got {T}")
    estimate = require_converged(estimate or estimate_splitting(theta, opts=opts))
    frame = estimate.e_u_frame
    batch = BatchState.from_states([theta], jacobi=np.array([[[frame[1]], [frame[2]]]]))
    total = 0.0
    for _ in range(steps):
        batch = propagate_batch(theta.model, batch, 1.0, opts)
        size = math.hypot(batch.jacobi[0, 0, 0], batch.jacobi[0, 1, 0])
        total += math.log(size)
        batch.jacobi /= size
    return total / steps


class SplittingAnalyzer:
    def __init__(self, states, opts, log_func, horizon=SPLITTING_HORIZON, fit_horizon=10.0):
        self.states = list(states)
        self.opts = opts
        self.log = log_func
        self.horizon = horizon
        self.fit_horizon = fit_horizon

    def analyze(self, executor=None):
        """Splittings for every state, the forward and reversed constants fits and the sampled suprema"""
        try:
            mapper = executor.map if executor is not None else map
            estimates = list(mapper(lambda theta: estimate_splitting(theta, self.horizon, self.opts), self.states))
            converged = sum(1 for estimate in estimates if estimate.converged)
            self.log(f"Splitting converged at {converged} of {len(estimates)} sampled states")
            forward = fit_anosov_constants(estimates, self.fit_horizon, opts=self.opts)
            reverse = fit_anosov_constants(estimates, self.fit_horizon, reversed_flow=True, opts=self.opts)
            sampled = sample_constants(estimates, self.opts)
            self.log(f"Fitted C = {forward.C:.4f}, lambda = {forward.lam:.4f}; Q = {sampled.Q:.4f}")
            return {
                'estimates': estimates,
                'forward': forward,
                'reverse': reverse,
                'sampled': sampled,
                'table': self._estimates_frame(estimates),
            }
        except ValueError as e:
            self.log(f"Could not analyze the splitting: {str(e)}")
            return None

    def _estimates_frame(self, estimates):
        rows = []
        for index, estimate in enumerate(estimates):
            rows.append({
                'theta_id': index,
                'x': estimate.theta.x,
                'y': estimate.theta.y,
                'alpha': estimate.theta.alpha,
                'converged': estimate.converged,
                'residual': estimate.residual,
                'f': estimate.f,
                'e_s_J': estimate.e_s_frame[1],
                'e_s_Jp': estimate.e_s_frame[2],
                'e_u_J': estimate.e_u_frame[1],
                'e_u_Jp': estimate.e_u_frame[2],
            })
        return pd.DataFrame(rows)
