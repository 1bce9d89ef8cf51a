"""
Orbit sampling and the trajectory dump.

Trajectory CSV column order: t, x, y, vx, vy, then the 3x3 cocycle entries
D00 .. D22 row by row, then the cusp-excursion flag.
"""

import math

import numpy as np
import pandas as pd

from src.flow.integrator import (BatchState, IntegratorOptions, cocycle_from_block, identity_jacobi,
                                 propagate_batch)
from src.models.jacobi_state import FlowSample
from src.models.surface_model import SurfaceModel
from src.models.unit_tangent import UnitTangentState

COCYCLE_COLUMNS = [f'D{i}{j}' for i in range(3) for j in range(3)]
TRAJECTORY_COLUMNS = ['t', 'x', 'y', 'vx', 'vy'] + COCYCLE_COLUMNS + ['cusp']


def sample_orbit(theta: UnitTangentState, t_end: float, sample_dt: float = 1.0,
                 opts: IntegratorOptions = None):
    """
    FlowSamples of one orbit at t = 0, sample_dt, 2 sample_dt, ... up to t_end

    The cocycle of each sample is accumulated from time 0.

    Returns:
        list of FlowSample
    """
    if not sample_dt > 0:
        raise ValueError(f"Sampling interval must be positive, got {sample_dt}")
    model = theta.model
    count = int(math.floor(abs(t_end) / sample_dt + 1e-9))
    step = math.copysign(sample_dt, t_end) if t_end else sample_dt
    batch = BatchState.from_states([theta], jacobi=identity_jacobi(1))
    samples = [FlowSample(theta, 0.0, np.eye(3), False)]
    for index in range(1, count + 1):
        batch = propagate_batch(model, batch, step, opts)
        state = UnitTangentState.from_array(model, batch.as_array()[0])
        samples.append(FlowSample(state, index * step, cocycle_from_block(batch.jacobi[0]), bool(batch.cusp[0])))
    return samples


def trajectory_frame(theta: UnitTangentState, t_end: float, sample_dt: float = 1.0,
                     opts: IntegratorOptions = None) -> pd.DataFrame:
    """Trajectory dump of one orbit as a DataFrame in TRAJECTORY_COLUMNS order"""
    rows = []
    for sample in sample_orbit(theta, t_end, sample_dt, opts):
        x, y, vx, vy = sample.state.as_array()
        rows.append([sample.t, x, y, vx, vy] + list(sample.cocycle.ravel()) + [sample.cusp_excursion])
    return pd.DataFrame(rows, columns=TRAJECTORY_COLUMNS)


def states_to_rows(states) -> np.ndarray:
    """(B, 4) chart rows (x, y, vx, vy) of a list of states"""
    return np.array([state.as_array() for state in states], dtype=float).reshape(-1, 4)


def angle_rows_to_batch(model: SurfaceModel, points) -> BatchState:
    """BatchState from (x, y, alpha) rows"""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    lam = np.exp(model.conformal_jet(points[:, 0], points[:, 1]).u)
    return BatchState(points[:, 0], points[:, 1], np.cos(points[:, 2]) / lam, np.sin(points[:, 2]) / lam)


def batch_to_angle_rows(batch: BatchState) -> np.ndarray:
    return np.column_stack([batch.x, batch.y, np.arctan2(batch.vy, batch.vx)])


def orbit_batch(model: SurfaceModel, points, steps: int, step_time: float = 1.0,
                opts: IntegratorOptions = None) -> np.ndarray:
    """
    Iterates of a batch of states under phi^step_time

    Args:
        model: SurfaceModel
        points: (B, 3) array of (x, y, alpha)
        steps: number of iterates
        step_time: flow time per iterate

    Returns:
        array (steps + 1, B, 3) of (x, y, alpha)
    """
    batch = angle_rows_to_batch(model, points)
    out = np.empty((steps + 1, batch.size, 3))
    out[0] = batch_to_angle_rows(batch)
    for index in range(1, steps + 1):
        batch = propagate_batch(model, batch, step_time, opts)
        out[index] = batch_to_angle_rows(batch)
    return out
