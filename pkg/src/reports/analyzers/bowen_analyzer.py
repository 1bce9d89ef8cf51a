"""
Bowen-set measures, local entropy and the return-time radius.

Bowen sets are sampled in a box of frame coordinates at theta aligned with the
right singular vectors of d g^n, where g = phi^N. Each sample is classified
with the Sasaki distance bounds along both orbits: escaped when the local
lower bound exceeds the radius at some step, inside when the upper bound
stays within the radius at every step, indeterminate otherwise. Indeterminate
samples are counted inside.
"""

import math

import numpy as np
import pandas as pd
from scipy.stats import linregress, theilslopes

from constants import (BOWEN_BOX_INFLATION, BOWEN_EDGE_FRACTION, BOWEN_MAX_DOUBLINGS, CONFIDENCE_Z,
                       INDETERMINATE_MAX_FRACTION, LINEAR_WINDOW_MIN_POINTS, LINEAR_WINDOW_R2, PESIN_EPSILON)
from src.errors import NumericalError
from src.flow.integrator import flow_derivative
from src.flow.modular import reduce_points
from src.flow.trajectory import orbit_batch
from src.models.entropy import BowenConfig, BowenMeasure, LocalEntropy, ReturnTime
from src.models.unit_tangent import UnitTangentState
from src.sasaki.bundle import distance_bounds_batch, liouville_density, liouville_sample, state_coordinates
from src.sasaki.lifted_metric import frame_to_coordinates
from src.utils.logging import Logger
from src.utils.rng import stream


def core_membership(model, cfg: BowenConfig, rows) -> np.ndarray:
    """Core membership of (..., 3) rows of (x, y, alpha), reduced first on quotient models"""
    rows = np.asarray(rows, dtype=float)
    x, y = rows[..., 0], rows[..., 1]
    if model.is_quotient:
        z, _ = reduce_points((x + 1j * y).ravel(), np.ones(x.size, dtype=complex))
        x, y = z.real.reshape(x.shape), z.imag.reshape(y.shape)
    return cfg.core.contains(model, x, y)


def _return_times(membership: np.ndarray, start: int, cap: int):
    """L and truncation flags at row `start` of a (steps + 1, B) membership table"""
    in_core = membership[start]
    L = np.zeros(membership.shape[1], dtype=int)
    truncated = np.zeros(membership.shape[1], dtype=bool)
    pending = in_core.copy()
    for k in range(1, cap + 1):
        hit = pending & membership[start + k]
        L[hit] = k
        pending &= ~hit
    truncated[pending] = True
    return L, in_core, truncated


def return_time_radii(cfg: BowenConfig, L) -> np.ndarray:
    """min(a, xi^L) for an array of return times"""
    return np.minimum(cfg.rho_const, cfg.xi_graph ** np.asarray(L, dtype=float))


def return_time_rho(theta: UnitTangentState, cfg: BowenConfig, opts=None) -> ReturnTime:
    """
    rho(theta) = min(a, xi^L(theta))

    L is the first k >= 1 with g^k(theta) in the core, 0 off the core. A
    state of the core with no return within cfg.return_cap gets L = 0 and
    the truncated flag.
    """
    orbit = orbit_batch(theta.model, state_coordinates(theta)[None, :], cfg.return_cap, cfg.N, opts)
    membership = core_membership(theta.model, cfg, orbit)
    L, in_core, truncated = _return_times(membership, 0, cfg.return_cap)
    if truncated[0]:
        Logger().info(f"No return to the core within {cfg.return_cap} steps from {theta.to_dict()}")
    return ReturnTime(int(L[0]), float(return_time_radii(cfg, L)[0]), bool(in_core[0]), bool(truncated[0]))


def return_times_along_orbit(theta: UnitTangentState, cfg: BowenConfig, n: int, opts=None):
    """
    Return times L(g^j theta) for j = 0..n with the reference orbit

    Returns:
        tuple: (int array (n + 1,), orbit rows (n + 1, 3))
    """
    orbit = orbit_batch(theta.model, state_coordinates(theta)[None, :], n + cfg.return_cap, cfg.N, opts)[:, 0, :]
    membership = core_membership(theta.model, cfg, orbit)[:, None]
    L = np.array([_return_times(membership, j, cfg.return_cap)[0][0] for j in range(n + 1)], dtype=int)
    return L, orbit[:n + 1]


def rho_along_orbit(theta: UnitTangentState, cfg: BowenConfig, n: int, opts=None):
    """
    Radii rho(g^j theta) for j = 0..n with the reference orbit

    Returns:
        tuple: (rho array (n + 1,), orbit rows (n + 1, 3))
    """
    L, orbit = return_times_along_orbit(theta, cfg, n, opts)
    return return_time_radii(cfg, L), orbit


def return_time_distribution(model, cfg: BowenConfig, count: int, rng, opts=None) -> pd.DataFrame:
    """
    Histogram of L over Liouville samples of the core

    Returns:
        DataFrame with columns L, count, rho, truncated
    """
    points = liouville_sample(model, cfg.core, count, rng)
    orbit = orbit_batch(model, points, cfg.return_cap, cfg.N, opts)
    L, _, truncated = _return_times(core_membership(model, cfg, orbit), 0, cfg.return_cap)
    frame = pd.DataFrame({'L': L, 'truncated': truncated})
    histogram = frame.groupby('L').agg(count=('L', 'size'), truncated=('truncated', 'sum')).reset_index()
    histogram['rho'] = return_time_radii(cfg, histogram['L'].to_numpy())
    return histogram[['L', 'count', 'rho', 'truncated']]


def _frame_matrix(model, point) -> np.ndarray:
    return np.column_stack([frame_to_coordinates(model, point, column) for column in np.eye(3)])


def _classify(model, reference_orbit, sample_orbit, rho):
    """(inside, escaped, indeterminate) masks over the samples"""
    escaped = np.zeros(sample_orbit.shape[1], dtype=bool)
    certain = np.ones(sample_orbit.shape[1], dtype=bool)
    for j in range(reference_orbit.shape[0]):
        bounds = distance_bounds_batch(model, reference_orbit[j], sample_orbit[j], radius=rho[j])
        escaped |= bounds['lower_local'] > rho[j]
        certain &= bounds['refined'] <= rho[j]
    inside = certain & ~escaped
    indeterminate = ~certain & ~escaped
    return inside, escaped, indeterminate


def bowen_set_measure(theta: UnitTangentState, cfg: BowenConfig, n: int, rng, opts=None,
                      theta_id: int = 0) -> BowenMeasure:
    """
    Monte Carlo estimate of the Liouville measure of S_n(g, rho, theta)

    Args:
        theta: centre state
        cfg: BowenConfig
        n: depth
        rng: numpy Generator
        theta_id: label carried into the output rows

    Returns:
        BowenMeasure with a CONFIDENCE_Z half-width

    Raises:
        NumericalError: more than 10% of the samples fall in the indeterminate band
    """
    if n < 0:
        raise ValueError(f"Bowen depth must be non-negative, got {n}")
    model = theta.model
    rho, reference = rho_along_orbit(theta, cfg, n, opts)
    rho0 = float(rho[0])
    _, singular, right = np.linalg.svd(flow_derivative(theta, n * cfg.N, opts))
    widths = BOWEN_BOX_INFLATION * np.minimum(rho0, 2.0 * np.max(rho) / singular)

    center = state_coordinates(theta)
    to_coordinates = _frame_matrix(model, center)
    density0 = float(liouville_density(model, center[0], center[1]))
    count = cfg.samples_per_depth

    for doublings in range(BOWEN_MAX_DOUBLINGS + 1):
        local = rng.uniform(-1.0, 1.0, (count, 3)) * widths
        points = center + (local @ right) @ to_coordinates.T
        orbit = orbit_batch(model, points, n, cfg.N, opts)
        inside, escaped, indeterminate = _classify(model, reference, orbit, rho)
        kept = inside | indeterminate
        at_edge = np.any(np.abs(local[kept]) >= BOWEN_EDGE_FRACTION * widths, axis=0)
        if not np.any(at_edge) or doublings == BOWEN_MAX_DOUBLINGS:
            break
        widths = np.where(at_edge, 2.0 * widths, widths)

    fraction = float(np.mean(indeterminate))
    if fraction > INDETERMINATE_MAX_FRACTION:
        raise NumericalError(f"Indeterminate distance band holds {fraction:.1%} of the Bowen samples at depth {n}; "
                             f"reduce rho_const or tighten the distance bounds", stage='bowen',
                             diagnostics={'theta': theta.to_dict(), 'n': n, 'indeterminate_fraction': fraction})

    volume = float(np.prod(2.0 * widths))
    weights = liouville_density(model, points[:, 0], points[:, 1]) / density0
    values = volume * weights * kept
    measure = float(np.mean(values))
    spread = float(np.std(values, ddof=1)) if count > 1 else 0.0
    half_width = CONFIDENCE_Z * spread / math.sqrt(count)
    if half_width == 0.0:
        half_width = volume / count
    return BowenMeasure(
        theta_id=theta_id, n=n, measure=measure, half_width=half_width, inside=int(np.sum(inside)),
        escaped=int(np.sum(escaped)), indeterminate=int(np.sum(indeterminate)), samples=count,
        ball_measure=4.0 / 3.0 * math.pi * rho0 ** 3, box_volume=volume, doublings=doublings,
    )


def largest_linear_window(depths, values, min_points: int = LINEAR_WINDOW_MIN_POINTS,
                          min_r2: float = LINEAR_WINDOW_R2):
    """
    Longest contiguous run of (depth, value) pairs with linear-fit r^2 >= min_r2

    Returns:
        tuple (start, stop) of slice indices, or None
    """
    size = len(depths)
    for length in range(size, min_points - 1, -1):
        for start in range(0, size - length + 1):
            x, y = depths[start:start + length], values[start:start + length]
            if np.ptp(y) == 0.0 or linregress(x, y).rvalue ** 2 >= min_r2:
                return start, start + length
    return None


def pesin_lower_bound(chi_plus: float, P_logdet: float, N: float, epsilon: float = PESIN_EPSILON) -> float:
    """N (chi+ - eps - eps / N - 4 P sqrt(eps))"""
    return N * (chi_plus - epsilon - epsilon / N - 4.0 * P_logdet * math.sqrt(epsilon))


def fit_local_entropy(measures, N: float, theta_id: int = 0, chi_plus: float = None, P_logdet: float = None,
                      epsilon: float = PESIN_EPSILON, model_id: str = '') -> LocalEntropy:
    """
    Decay rate of -log nu(S_n) by a Theil-Sen fit over the largest linear window

    Depths after the first empty Bowen set are dropped. The half-width
    combines the Theil-Sen interval with the Monte Carlo half-widths.
    """
    usable = []
    for item in sorted(measures, key=lambda measure: measure.n):
        if item.measure <= 0.0:
            break
        usable.append(item)
    depths = np.array([item.n for item in usable], dtype=float)
    values = np.array([-math.log(item.measure) for item in usable])
    window = largest_linear_window(depths, values) if len(usable) >= LINEAR_WINDOW_MIN_POINTS else None
    if window is None:
        return LocalEntropy(theta_id, None, None, inconclusive=True, model_id=model_id)

    start, stop = window
    x, y = depths[start:stop], values[start:stop]
    slope, _, slope_low, slope_high = theilslopes(y, x)
    fit = linregress(x, y)
    relative = max(item.half_width / item.measure for item in usable[start:stop])
    sampling = 2.0 * relative / (x[-1] - x[0])
    h = max(slope / N, 0.0)
    half_width = max(0.5 * (slope_high - slope_low), sampling) / N

    lower_bound = holds = None
    if chi_plus is not None and P_logdet is not None:
        lower_bound = pesin_lower_bound(chi_plus, P_logdet, N, epsilon)
        holds = bool(slope + half_width * N >= lower_bound)
    return LocalEntropy(
        theta_id=theta_id, h=h, half_width=half_width, window=(int(x[0]), int(x[-1])),
        slope_low=float(slope_low) / N, slope_high=float(slope_high) / N, r_squared=float(fit.rvalue ** 2),
        lower_bound=lower_bound, lower_bound_holds=holds, model_id=model_id,
    )


def local_entropy(theta: UnitTangentState, cfg: BowenConfig, seed: int, theta_id: int = 0, chi_plus: float = None,
                  P_logdet: float = None, epsilon: float = PESIN_EPSILON, opts=None):
    """
    h(g, rho, theta) from Bowen-set measures over cfg.n_range

    Each depth draws from its own stream (seed, 'bowen', theta_id, n).

    Returns:
        tuple: (LocalEntropy, list of BowenMeasure)
    """
    measures = [bowen_set_measure(theta, cfg, n, stream(seed, 'bowen', theta_id, n), opts, theta_id)
                for n in cfg.n_range]
    entropy = fit_local_entropy(measures, cfg.N, theta_id, chi_plus, P_logdet, epsilon, theta.model.model_id)
    return entropy, measures


def monotonicity_violations(measures):
    """Consecutive depths where nu(S_{n+1}) exceeds nu(S_n) by more than one half-width"""
    ordered = sorted(measures, key=lambda item: item.n)
    return [(first.n, second.n) for first, second in zip(ordered, ordered[1:])
            if second.measure > first.measure + max(first.half_width, second.half_width)]


def measures_frame(measures) -> pd.DataFrame:
    """Per-depth counts with the estimates appended"""
    rows = []
    for item in measures:
        row = item.to_row()
        row.update({'measure': item.measure, 'half_width': item.half_width, 'samples': item.samples})
        rows.append(row)
    columns = ['theta_id', 'n', 'inside', 'escaped', 'indeterminate', 'ball_measure', 'measure', 'half_width',
               'samples']
    return pd.DataFrame(rows, columns=columns)


class BowenAnalyzer:
    def __init__(self, states, cfg, seed, opts, log_func, chi_plus=None, P_logdet=None, epsilon=PESIN_EPSILON,
                 theta_ids=None):
        self.states = list(states)
        self.theta_ids = list(range(len(self.states))) if theta_ids is None else list(theta_ids)
        self.cfg = cfg
        self.seed = seed
        self.opts = opts
        self.chi_plus = chi_plus
        self.P_logdet = P_logdet
        self.epsilon = epsilon
        self.log = log_func

    def _run(self, indexed):
        theta_id, theta = indexed
        return local_entropy(theta, self.cfg, self.seed, theta_id, self.chi_plus, self.P_logdet, self.epsilon,
                             self.opts)

    def analyze(self, executor=None):
        """
        Local entropy for every state

        Returns:
            dict with 'entropies', 'measures' (DataFrame) and 'monotonicity'
            (list of violating depth pairs per state), or None on bad input
        """
        try:
            mapper = executor.map if executor is not None else map
            results = list(mapper(self._run, zip(self.theta_ids, self.states)))
        except ValueError as e:
            self.log(f"Could not estimate local entropy: {str(e)}")
            return None
        entropies = [entropy for entropy, _ in results]
        measures = [item for _, batch in results for item in batch]
        monotonicity = {entropy.theta_id: monotonicity_violations(batch) for entropy, batch in results}
        for entropy in entropies:
            if entropy.inconclusive:
                self.log(f"State {entropy.theta_id}: no linear window, local entropy inconclusive")
            else:
                self.log(f"State {entropy.theta_id}: h = {entropy.h:.4f} +/- {entropy.half_width:.4f} "
                         f"over depths {entropy.window[0]}..{entropy.window[1]}")
        return {'entropies': entropies, 'measures': measures_frame(measures), 'monotonicity': monotonicity}
