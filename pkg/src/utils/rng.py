"""
Counter-based random streams.

Every Monte Carlo batch draws from its own generator keyed by the global seed
and a tuple of labels, so results do not depend on execution order or on the
number of worker threads.
"""

import zlib

import numpy as np


def _label_to_int(label):
    if isinstance(label, (int, np.integer)):
        if label < 0:
            raise ValueError(f"Stream labels must be non-negative, got {label}")
        return int(label)
    return zlib.crc32(str(label).encode('utf-8'))


def stream(seed, *labels):
    """
    Build an independent generator for (seed, labels...)

    Args:
        seed: Global integer seed
        *labels: Integers or strings naming the stream (experiment, theta index, depth, attempt)

    Returns:
        numpy.random.Generator
    """
    entropy = [_label_to_int(seed)] + [_label_to_int(label) for label in labels]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def random_rotation(rng, dim=3):
    """Haar-distributed orthogonal matrix with positive-diagonal QR convention"""
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))
