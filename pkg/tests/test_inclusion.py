import os
import sys
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

# Add the repository root to the path so we can import the modules
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.models.surface_model import SurfaceModel
from src.models.unit_tangent import UnitTangentState
from src.reports.analyzers.bounds_analyzer import build_certificate
from src.reports.analyzers.inclusion_analyzer import (InclusionAnalyzer, ball_inclusion, inclusion_sweep,
                                                      sphere_directions)
from src.utils.rng import stream


@pytest.fixture
def cert():
    return build_certificate(c=1.0, C=1.0, lam=math.exp(-1.0), Q=0.1, delta_proj=1.1)


@pytest.fixture
def theta():
    return UnitTangentState.from_angle(SurfaceModel.hyperbolic(), 0.1, 1.5, 0.4)


class TestBallInclusion:
    def test_zero_iterate_is_trivial(self, theta, cert):
        result = ball_inclusion(theta, 0, 0.1, cert, 10, np.random.default_rng(0))
        assert result.passed
        assert result.worst_margin == pytest.approx(1.0 - cert.beta / cert.kappa)
        assert result.skipped == 0

    def test_small_ball_fits_after_one_step(self, theta, cert):
        result = ball_inclusion(theta, 1, 0.1, cert, 4, stream(3, 'inclusion'))
        assert result.passed
        assert result.samples == 4
        assert result.inner_radius == pytest.approx(cert.inner_radius(0.1))
        # the image is essentially linear at radius rho_m, so the margin is about 1 - rho_m / rho
        assert result.worst_margin == pytest.approx(1.0 - cert.beta / cert.kappa, abs=1e-3)

    @pytest.mark.parametrize("rho", [0.0, 1.0, -0.5])
    def test_radius_out_of_range(self, theta, cert, rho):
        with pytest.raises(ValueError):
            ball_inclusion(theta, 1, rho, cert, 4, np.random.default_rng(0))

    def test_bad_iterate_and_samples(self, theta, cert):
        with pytest.raises(ValueError):
            ball_inclusion(theta, -1, 0.1, cert, 4, np.random.default_rng(0))
        with pytest.raises(ValueError):
            ball_inclusion(theta, 1, 0.1, cert, 0, np.random.default_rng(0))


class TestSweep:
    def test_sphere_directions_are_unit(self):
        directions = sphere_directions(np.random.default_rng(1), 20)
        assert directions.shape == (20, 3)
        assert_allclose(np.linalg.norm(directions, axis=1), 1.0)

    def test_sweep_reports_largest_radius(self, theta):
        cert = build_certificate(c=1.0, C=1.0, lam=math.exp(-1.0), Q=0.1, delta_proj=1.1, m=1)
        results, largest = inclusion_sweep(theta, cert, 2, lambda index: stream(5, 'sweep', index),
                                           rhos=(0.05, 0.1))
        assert [result.rho for result in results] == [0.05, 0.1]
        assert largest == 0.1

    def test_analyzer_reports_bad_radius(self, theta, cert):
        messages = []
        analyzer = InclusionAnalyzer(theta, cert, 2, lambda *labels: stream(1, *labels), None, messages.append,
                                     rho=2.0)
        assert analyzer.analyze() is None
        assert any('Could not run the inclusion check' in message for message in messages)
