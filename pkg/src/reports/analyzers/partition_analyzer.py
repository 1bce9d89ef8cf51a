"""Conditional entropy of a grid partition against its geometric intersection census"""

import itertools
import math

import numpy as np
import pandas as pd

from constants import MIN_CELL_COUNT
from src.flow.modular import reduce_points
from src.flow.trajectory import orbit_batch
from src.models.entropy import GridPartition, PartitionBound


def reduced_rows(model, rows) -> np.ndarray:
    """(x, y, alpha) rows moved over the fundamental domain on quotient models"""
    rows = np.asarray(rows, dtype=float)
    if not model.is_quotient:
        return rows
    flat = rows.reshape(-1, 3)
    z, w = reduce_points(flat[:, 0] + 1j * flat[:, 1], np.exp(1j * flat[:, 2]))
    return np.column_stack([z.real, z.imag, np.angle(w)]).reshape(rows.shape)


def symbol_pairs(model, orbits, partition: GridPartition, m: int) -> pd.DataFrame:
    """
    (source, target) cell pairs at lag m from a batch of orbits

    Args:
        orbits: array (steps + 1, B, 3) of (x, y, alpha)

    Returns:
        DataFrame with columns source, target
    """
    orbits = np.asarray(orbits, dtype=float)
    if m < 1 or m >= orbits.shape[0]:
        raise ValueError(f"Lag m = {m} must lie in [1, {orbits.shape[0] - 1}]")
    symbols = partition.cell_index(model, reduced_rows(model, orbits))
    return pd.DataFrame({'source': symbols[:-m].ravel(), 'target': symbols[m:].ravel()})


def merge_sparse_cells(pairs: pd.DataFrame, complement: int, min_count: int = MIN_CELL_COUNT):
    """
    Send cells seen fewer than min_count times to the complement

    Returns:
        tuple: (remapped pairs, number of merged cells)
    """
    counts = pd.concat([pairs['source'], pairs['target']]).value_counts()
    sparse = set(counts[(counts < min_count) & (counts.index != complement)].index)
    if not sparse:
        return pairs, 0
    remapped = pairs.replace({'source': {cell: complement for cell in sparse},
                              'target': {cell: complement for cell in sparse}})
    return remapped, len(sparse)


def conditional_entropy(pairs: pd.DataFrame) -> float:
    """Plug-in H(target | source) = H(source, target) - H(source), in nats"""
    if pairs.empty:
        return 0.0
    joint = pairs.groupby(['source', 'target']).size().to_numpy(dtype=float)
    marginal = pairs.groupby('source').size().to_numpy(dtype=float)
    total = float(len(pairs))

    def entropy(counts):
        p = counts / total
        return float(-np.sum(p * np.log(p)))

    return max(entropy(joint) - entropy(marginal), 0.0)


def _pushed_cells(model, partition: GridPartition, cell: int, m_time: float, opts) -> set:
    """Cells meeting the bounding box of phi^m applied to a 3x3x3 grid of the cell"""
    box = partition.cell_box(model, cell)
    grid = np.array(list(itertools.product(*[np.linspace(low, high, 3) for low, high in box])))
    image = reduced_rows(model, orbit_batch(model, grid, 1, m_time, opts)[-1])
    hit = set(np.unique(partition.cell_index(model, image)).tolist())

    edges = partition.edges(model)
    lows, highs = image.min(axis=0), image.max(axis=0)
    if highs[2] - lows[2] > math.pi:
        lows[2], highs[2] = -math.pi, math.pi
    ranges = []
    for axis in range(3):
        inner = edges[axis]
        first = int(np.clip(np.searchsorted(inner, lows[axis], side='right') - 1, 0, partition.shape[axis] - 1))
        last = int(np.clip(np.searchsorted(inner, highs[axis], side='right') - 1, 0, partition.shape[axis] - 1))
        ranges.append(range(first, last + 1))
    for index in itertools.product(*ranges):
        hit.add(int(np.ravel_multi_index(index, partition.shape)))
    return hit


def partition_entropy_bound(model, orbits, partition: GridPartition, m: int, step_time: float = 1.0,
                            rho_m: float = None, opts=None) -> PartitionBound:
    """
    Both sides of H(P | phi^m P) <= sum_D mu(D) log card{X in P : X meets D}

    The left side is the plug-in conditional entropy of symbol pairs at lag
    m. The census pushes each observed source cell by phi^m and counts the
    cells met by the bounding box of the image, together with the observed
    successors; the complement cell counts every cell.

    Args:
        model: SurfaceModel
        orbits: array (steps + 1, B, 3) sampled every step_time
        partition: GridPartition
        m: lag in samples
        step_time: flow time between samples
        rho_m: radius the cell diameter is compared against (rho_m / 2)

    Returns:
        PartitionBound
    """
    pairs = symbol_pairs(model, orbits, partition, m)
    pairs, merged = merge_sparse_cells(pairs, partition.complement)
    notes = []
    if merged:
        notes.append(f"{merged} cell(s) with fewer than {MIN_CELL_COUNT} visits merged into the complement; "
                     f"this coarsens the partition and lowers the conditional entropy")

    H = conditional_entropy(pairs)
    successors = {source: set(targets.tolist()) for source, targets in pairs.groupby('source')['target']}
    weights = pairs['source'].value_counts(normalize=True)
    census = 0.0
    for source, weight in weights.items():
        if source == partition.complement:
            card = partition.cells + 1
        else:
            met = _pushed_cells(model, partition, int(source), m * step_time, opts) | successors[source]
            card = len(met)
        census += float(weight) * math.log(card)

    diameter = partition.diameter_bound(model)
    condition = None if rho_m is None else bool(diameter <= rho_m / 2.0)
    if condition is False:
        notes.append(f"Cell diameter {diameter:.3e} exceeds rho_m / 2 = {rho_m / 2.0:.3e}")
    return PartitionBound(H, census, partition.cells, merged, diameter, condition, notes)


class PartitionAnalyzer:
    def __init__(self, model, orbits, partition, m, log_func, step_time=1.0, rho_m=None, opts=None):
        self.model = model
        self.orbits = orbits
        self.partition = partition
        self.m = m
        self.step_time = step_time
        self.rho_m = rho_m
        self.opts = opts
        self.log = log_func

    def analyze(self):
        try:
            bound = partition_entropy_bound(self.model, self.orbits, self.partition, self.m, self.step_time,
                                            self.rho_m, self.opts)
            self.log(f"Partition: H(P | phi^m P) = {bound.conditional_entropy:.4f}, "
                     f"census bound = {bound.census_bound:.4f}")
            return bound
        except ValueError as e:
            self.log(f"Could not evaluate the partition bound: {str(e)}")
            return None
