import os
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

# Add the repository root to the path so we can import the modules
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.utils.rng import random_rotation, stream


class TestStreams:
    def test_same_labels_same_draws(self):
        assert_allclose(stream(1, 'bowen', 0, 3).random(5), stream(1, 'bowen', 0, 3).random(5))

    def test_labels_separate_streams(self):
        assert not np.allclose(stream(1, 'bowen', 0, 3).random(5), stream(1, 'bowen', 0, 4).random(5))
        assert not np.allclose(stream(1, 'spectrum').random(5), stream(2, 'spectrum').random(5))

    def test_negative_label(self):
        with pytest.raises(ValueError):
            stream(1, -2)

    def test_random_rotation_is_orthogonal(self):
        q = random_rotation(stream(3, 'frame'))
        assert_allclose(q.T @ q, np.eye(3), atol=1e-12)
