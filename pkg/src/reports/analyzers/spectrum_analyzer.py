"""
Lyapunov spectrum of the time-one map by QR-reorthonormalized cocycle products.
"""

import math

import numpy as np

from constants import (COCYCLE_OVERFLOW, RENORM_DT, SPECTRUM_CLUSTER_FACTOR, SPECTRUM_HALFWIDTH_FLOOR,
                       SPECTRUM_POSITIVE_FACTOR, SPECTRUM_TRANSIENT_FRACTION)
from src.errors import NumericalError
from src.flow.integrator import BatchState, cocycle_from_block, identity_jacobi, propagate_batch
from src.flow.trajectory import sample_orbit
from src.models.spectrum import LyapunovSpectrum, RegularitySummary, RegularityWitness, sandwich_holds
from src.models.unit_tangent import UnitTangentState
from src.reports.analyzers.splitting_analyzer import estimate_splitting
from src.utils.rng import random_rotation

TRACE_CHECKPOINTS = 50
MIN_INTERVALS = 100


def positive_qr(matrix: np.ndarray):
    """Thin QR with a positive diagonal of R"""
    q, r = np.linalg.qr(matrix)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs, signs[:, None] * r


def cluster_exponents(values, resolution: float):
    """
    Merge descending exponents closer than resolution

    Returns:
        tuple: (cluster means, multiplicities), both descending
    """
    ordered = sorted((float(value) for value in values), reverse=True)
    groups = [[ordered[0]]]
    for value in ordered[1:]:
        if groups[-1][-1] - value < resolution:
            groups[-1].append(value)
        else:
            groups.append([value])
    return [float(np.mean(group)) for group in groups], [len(group) for group in groups]


def _trace_halfwidth(trace: np.ndarray) -> float:
    final = trace[-1]
    recent = trace[len(trace) // 2:]
    return max(float(np.max(np.abs(recent - final))), SPECTRUM_HALFWIDTH_FLOOR)


def lyapunov_spectrum(theta0: UnitTangentState, T: float, renorm_dt: float = RENORM_DT, rng=None,
                      opts=None, time_scale: float = 1.0) -> LyapunovSpectrum:
    """
    Lyapunov exponents along the orbit of theta0

    The cocycle acts on a random orthonormal frame; every renorm_dt the frame
    is re-orthonormalized and the logs of the R diagonal are accumulated.
    The first 5% of the run is discarded as transient.

    Args:
        theta0: initial state
        T: total flow time, at least 100 renorm_dt
        renorm_dt: renormalization interval
        rng: numpy Generator for the initial frame (identity frame when None)
        opts: IntegratorOptions
        time_scale: flow time per iterate of the discrete map; exponents are
            reported per iterate

    Returns:
        LyapunovSpectrum

    Raises:
        NumericalError: cocycle overflow between renormalizations
    """
    if not renorm_dt > 0:
        raise ValueError(f"Renormalization interval must be positive, got {renorm_dt}")
    if T < MIN_INTERVALS * renorm_dt:
        raise ValueError(f"T = {T} must be at least {MIN_INTERVALS} renormalization intervals ({renorm_dt})")
    model = theta0.model
    intervals = int(math.floor(T / renorm_dt + 1e-9))
    transient = int(math.floor(SPECTRUM_TRANSIENT_FRACTION * intervals))
    every = max(1, (intervals - transient) // TRACE_CHECKPOINTS)

    frame = random_rotation(rng) if rng is not None else np.eye(3)
    batch = BatchState.from_states([theta0])
    sums = np.zeros(3)
    trace_times, trace = [], []

    for index in range(1, intervals + 1):
        batch.jacobi = identity_jacobi(1)
        batch = propagate_batch(model, batch, renorm_dt, opts)
        block = batch.jacobi[0]
        if not np.all(np.isfinite(block)) or np.max(np.abs(block)) > COCYCLE_OVERFLOW:
            raise NumericalError(f"Cocycle overflow within one renormalization interval; use a renorm_dt "
                                 f"below {renorm_dt}", stage='spectrum',
                                 diagnostics={'t': index * renorm_dt, 'renorm_dt': renorm_dt})
        frame, r = positive_qr(cocycle_from_block(block) @ frame)
        if index <= transient:
            continue
        sums += np.log(np.diag(r))
        if (index - transient) % every == 0 or index == intervals:
            elapsed = (index - transient) * renorm_dt
            trace_times.append(index * renorm_dt)
            trace.append(np.sort(sums / elapsed)[::-1] * time_scale)

    trace = np.array(trace)
    raw = trace[-1]
    halfwidth = _trace_halfwidth(trace)
    exponents, multiplicities = cluster_exponents(raw, SPECTRUM_CLUSTER_FACTOR * halfwidth)
    return LyapunovSpectrum(
        model_id=model.model_id, exponents=exponents, multiplicities=multiplicities, T=float(T),
        renorm_count=intervals, theta0=theta0, raw_exponents=[float(value) for value in raw],
        trace_times=np.array(trace_times), convergence_trace=trace, trace_halfwidth=halfwidth,
        time_scale=time_scale,
    )


def chi_plus(spectrum: LyapunovSpectrum) -> float:
    """
    Sum of the positive exponents weighted by multiplicity

    An exponent counts as positive above 3 trace half-widths.

    Raises:
        NumericalError: the spectrum did not converge
    """
    if not spectrum.converged:
        raise NumericalError(f"Spectrum not converged (trace half-width {spectrum.trace_halfwidth:.3e})",
                             stage='spectrum', diagnostics={'trace_halfwidth': spectrum.trace_halfwidth,
                                                            'T': spectrum.T})
    threshold = SPECTRUM_POSITIVE_FACTOR * spectrum.trace_halfwidth
    return float(sum(value * k for value, k in zip(spectrum.exponents, spectrum.multiplicities)
                     if value > threshold))


def default_basis(theta: UnitTangentState, opts=None):
    """Frame vectors G, H, V plus e_u and e_s when the splitting converges"""
    basis = [np.eye(3)[i] for i in range(3)]
    estimate = estimate_splitting(theta, opts=opts)
    if estimate.converged:
        basis += [estimate.e_u_frame, estimate.e_s_frame]
    return basis


def regularity_check(theta: UnitTangentState, k_max: int, epsilon: float, spectrum: LyapunovSpectrum,
                     basis=None, opts=None):
    """
    Sandwich e^{k(X - eps)}|xi| <= |d phi^k xi| <= e^{k(X + eps)}|xi| for k = 1..k_max

    X(theta, xi) is the spectrum exponent closest to the growth rate of xi
    measured at k_max.

    Returns:
        tuple: (list of RegularityWitness, RegularitySummary)
    """
    if k_max < 1:
        raise ValueError(f"k_max must be at least 1, got {k_max}")
    if epsilon < 0:
        raise ValueError(f"epsilon must be non-negative, got {epsilon}")
    basis = default_basis(theta, opts) if basis is None else [np.asarray(xi, dtype=float) for xi in basis]
    cocycles = [sample.cocycle for sample in sample_orbit(theta, k_max * spectrum.time_scale,
                                                          spectrum.time_scale, opts)]
    exponents = np.asarray(spectrum.exponents)
    witnesses = []
    for vector_id, xi in enumerate(basis):
        norm0 = float(np.linalg.norm(xi))
        if norm0 == 0.0:
            raise ValueError(f"Test vector {vector_id} is zero")
        measured = math.log(np.linalg.norm(cocycles[k_max] @ xi) / norm0) / k_max
        exponent = float(exponents[np.argmin(np.abs(exponents - measured))])
        for k in range(1, k_max + 1):
            growth = float(np.linalg.norm(cocycles[k] @ xi))
            lower, upper = sandwich_holds(growth, norm0, k, exponent, epsilon)
            witnesses.append(RegularityWitness(theta, k, epsilon, vector_id, exponent, growth, lower, upper))
    return witnesses, RegularitySummary.from_witnesses(witnesses)


class SpectrumAnalyzer:
    def __init__(self, states, T, renorm_dt, rng_factory, opts, log_func, time_scale=1.0):
        self.states = list(states)
        self.T = T
        self.renorm_dt = renorm_dt
        self.rng_factory = rng_factory
        self.opts = opts
        self.time_scale = time_scale
        self.log = log_func

    def _run(self, indexed):
        index, theta = indexed
        return lyapunov_spectrum(theta, self.T, self.renorm_dt, self.rng_factory(index), self.opts,
                                 self.time_scale)

    def analyze(self, executor=None):
        """
        One spectrum per initial state

        Returns:
            list of LyapunovSpectrum, or None on bad input
        """
        try:
            mapper = executor.map if executor is not None else map
            spectra = list(mapper(self._run, enumerate(self.states)))
            for spectrum in spectra:
                exponents = ', '.join(f"{value:+.4f}" for value in spectrum.exponents)
                self.log(f"Spectrum of {spectrum.model_id}: [{exponents}] "
                         f"(half-width {spectrum.trace_halfwidth:.2e})")
            return spectra
        except ValueError as e:
            self.log(f"Could not compute the Lyapunov spectrum: {str(e)}")
            return None
