import os
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

# Add the repository root to the path so we can import the modules
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.errors import ChartDomainError
from src.models.entropy import CoreRegion
from src.models.surface_model import SurfaceModel
from src.models.unit_tangent import UnitTangentState
from src.sasaki.bundle import (assemble, attach, distance_bounds_batch, frame_coordinates, from_frame,
                               liouville_density, liouville_sample, liouville_states, sasaki_norm,
                               sasaki_sectional, sm_distance_bounds, split, state_coordinates)
from src.sasaki.lifted_metric import (coordinates_to_frame, frame_to_coordinates, lifted_norm, sm_exp,
                                      sm_exp_inverse)


@pytest.fixture
def theta():
    return UnitTangentState.from_angle(SurfaceModel.hyperbolic(quotient=False), 0.1, 2.0, 0.3)


class TestSasakiFrame:
    def test_frame_vectors_are_orthonormal(self, theta):
        for coords in np.eye(3):
            assert sasaki_norm(theta, from_frame(theta, coords)) == pytest.approx(1.0, rel=1e-12)
        assert_allclose(frame_coordinates(theta, from_frame(theta, [0.3, -0.4, 0.5])), [0.3, -0.4, 0.5],
                        atol=1e-12)

    def test_split_and_assemble(self, theta):
        tangent = np.array([0.2, -0.1, 0.7])
        assert_allclose(assemble(theta, split(theta, tangent)), tangent, atol=1e-12)

    def test_lifted_metric_agrees_with_frame(self, theta):
        point = state_coordinates(theta)
        tangent = frame_to_coordinates(theta.model, point, [0.6, 0.0, 0.8])
        assert lifted_norm(theta.model, point, tangent) == pytest.approx(1.0, rel=1e-12)
        assert_allclose(coordinates_to_frame(theta.model, point, tangent), [0.6, 0.0, 0.8], atol=1e-12)

    def test_vertical_part_along_direction_is_rejected(self, theta):
        xi = attach(theta, (0.0, 0.0), theta.velocity())
        with pytest.raises(ChartDomainError):
            frame_coordinates(theta, xi)


class TestSasakiCurvature:
    @pytest.mark.parametrize("c", [1.0, 2.0])
    def test_horizontal_plane(self, c):
        state = UnitTangentState.from_angle(SurfaceModel.hyperbolic(c, quotient=False), 0.0, 1.5, 0.4)
        zero = (0.0, 0.0)
        basis = (attach(state, state.velocity(), zero), attach(state, state.normal(), zero))
        # K - 3/4 K^2
        assert sasaki_sectional(state, basis) == pytest.approx(-c ** 2 - 0.75 * c ** 4, rel=1e-10)

    @pytest.mark.parametrize("c", [1.0, 2.0])
    def test_mixed_plane(self, c):
        state = UnitTangentState.from_angle(SurfaceModel.hyperbolic(c, quotient=False), 0.0, 1.5, 0.4)
        zero = (0.0, 0.0)
        basis = (attach(state, state.normal(), zero), attach(state, zero, state.normal()))
        assert sasaki_sectional(state, basis) == pytest.approx(0.25 * c ** 4, rel=1e-10)

    def test_flat_planes_vanish(self):
        state = UnitTangentState.from_angle(SurfaceModel.flat(), 1.0, -2.0, 0.4)
        zero = (0.0, 0.0)
        basis = (attach(state, state.velocity(), zero), attach(state, zero, state.normal()))
        assert sasaki_sectional(state, basis) == pytest.approx(0.0, abs=1e-14)

    def test_inadmissible_basis(self, theta):
        zero = (0.0, 0.0)
        basis = (attach(theta, 2.0 * theta.velocity(), zero), attach(theta, theta.normal(), zero))
        with pytest.raises(ChartDomainError):
            sasaki_sectional(theta, basis)


class TestDistanceBounds:
    def test_bounds_are_ordered(self):
        model = SurfaceModel.modular()
        rng = np.random.default_rng(3)
        points = liouville_sample(model, CoreRegion(), 50, rng)
        bounds = distance_bounds_batch(model, points[0], points[1:], radius=0.5)
        assert np.all(bounds['lower'] <= bounds['refined'] + 1e-12)
        assert np.all(bounds['refined'] <= bounds['upper'] + 1e-12)
        assert np.all(bounds['lower'] <= bounds['lower_local'] + 1e-12)

    def test_flat_bounds_are_exact(self):
        model = SurfaceModel.flat()
        first = UnitTangentState.from_angle(model, 0.0, 0.0, 0.0)
        second = UnitTangentState.from_angle(model, 0.3, 0.4, 0.0)
        lower, upper = sm_distance_bounds(first, second)
        assert lower == pytest.approx(0.5)
        assert upper == pytest.approx(0.5)

    def test_different_models_are_rejected(self, theta):
        other = UnitTangentState.from_angle(SurfaceModel.flat(), 0.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            sm_distance_bounds(theta, other)


class TestLiouville:
    def test_samples_stay_in_core(self):
        model = SurfaceModel.hyperbolic()
        core = CoreRegion(y_core=3.0)
        points = liouville_sample(model, core, 200, np.random.default_rng(1))
        assert points.shape == (200, 3)
        assert np.all(core.contains(model, points[:, 0], points[:, 1]))

    def test_flat_samples_are_uniform_box(self):
        points = liouville_sample(SurfaceModel.flat(), CoreRegion(half_width=2.0), 100, np.random.default_rng(2))
        assert np.all(np.abs(points[:, :2]) <= 2.0)
        assert_allclose(liouville_density(SurfaceModel.flat(), points[:, 0], points[:, 1]), 1.0)

    def test_states_are_unit(self):
        states = liouville_states(SurfaceModel.perturbed(), CoreRegion(), 10, np.random.default_rng(4))
        assert len(states) == 10
        assert all(state.speed() == pytest.approx(1.0) for state in states)

    def test_bad_count(self):
        with pytest.raises(ValueError):
            liouville_sample(SurfaceModel.flat(), CoreRegion(), 0, np.random.default_rng(0))


class TestSasakiExponential:
    def test_flat_geodesics_are_lines(self):
        end = sm_exp(SurfaceModel.flat(), [0.0, 0.0, 0.0], [1.0, 2.0, 0.5])
        assert_allclose(end, [1.0, 2.0, 0.5], atol=1e-9)

    def test_zero_tangent(self, theta):
        point = state_coordinates(theta)
        assert_allclose(sm_exp(theta.model, point, np.zeros(3)), point)

    def test_inverse_recovers_small_tangent(self, theta):
        point = state_coordinates(theta)
        tangent = np.array([0.01, -0.02, 0.03])
        target = sm_exp(theta.model, point, tangent)
        assert_allclose(sm_exp_inverse(theta.model, point, target), tangent, atol=1e-8)
