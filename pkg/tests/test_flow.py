import os
import sys
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

# Add the repository root to the path so we can import the modules
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.flow.integrator import IntegratorOptions, flow, flow_derivative, jacobi_propagate
from src.flow.modular import (is_reduced, modular_flow, modular_to_state, reduce_points, same_modular_point,
                              state_to_modular)
from src.flow.trajectory import TRAJECTORY_COLUMNS, orbit_batch, sample_orbit, trajectory_frame
from src.models.jacobi_state import JacobiState
from src.models.surface_model import SurfaceModel
from src.models.unit_tangent import UnitTangentState
from src.reports.analyzers.bounds_analyzer import cocycle_norms


@pytest.fixture
def coarse():
    return IntegratorOptions(dt=1e-2, method='integrator')


class TestExactFlow:
    def test_time_one_norm_and_conorm(self):
        theta = UnitTangentState.from_angle(SurfaceModel.hyperbolic(), 0.1, 1.5, 0.4)
        top, bottom = cocycle_norms(flow_derivative(theta, 1.0))
        assert top == pytest.approx(math.e, rel=1e-10)
        assert bottom == pytest.approx(1.0 / math.e, rel=1e-10)

    @pytest.mark.parametrize("c", [0.5, 2.0])
    def test_jacobi_field_growth(self, c):
        theta = UnitTangentState.from_angle(SurfaceModel.hyperbolic(c, quotient=False), 0.0, 1.0, 0.0)
        result = jacobi_propagate(theta, JacobiState(J=1.0, Jp=c), 2.0)
        assert result.J == pytest.approx(math.exp(2.0 * c), rel=1e-10)
        assert result.t == pytest.approx(2.0)

    def test_flat_is_linear(self):
        theta = UnitTangentState.from_angle(SurfaceModel.flat(), 0.0, 0.0, 0.0)
        sample = flow(theta, 3.0)
        assert_allclose(sample.state.as_array(), [3.0, 0.0, 1.0, 0.0], atol=1e-12)
        assert_allclose(sample.perpendicular_block, [[1.0, 3.0], [0.0, 1.0]], atol=1e-12)


class TestIntegrator:
    def test_integrator_matches_exact_paths(self, coarse):
        model = SurfaceModel.hyperbolic(quotient=False)
        theta = UnitTangentState.from_angle(model, 0.2, 1.3, 1.1)
        exact = flow(theta, 1.5, IntegratorOptions(method='exact'))
        numeric = flow(theta, 1.5, coarse)
        assert_allclose(numeric.state.as_array(), exact.state.as_array(), atol=1e-6)
        assert_allclose(numeric.cocycle, exact.cocycle, atol=1e-6)

    def test_unit_speed_is_kept(self, coarse):
        model = SurfaceModel.perturbed(epsilon=0.2, quotient=False)
        theta = UnitTangentState.from_angle(model, 0.0, 1.4, 0.3)
        assert flow(theta, 5.0, coarse).state.speed() == pytest.approx(1.0, abs=1e-9)

    def test_reversibility(self, coarse):
        model = SurfaceModel.perturbed(epsilon=0.2, quotient=False)
        theta = UnitTangentState.from_angle(model, 0.1, 1.6, -0.7)
        there = flow(theta, 2.0, coarse).state
        back = flow(there, -2.0, coarse).state
        assert_allclose(back.as_array(), theta.as_array(), atol=1e-8)

    def test_exact_method_rejected_for_variable_curvature(self):
        with pytest.raises(ValueError):
            IntegratorOptions(method='exact').resolve(SurfaceModel.perturbed())

    def test_bad_step(self):
        with pytest.raises(ValueError):
            IntegratorOptions(dt=0.0)


class TestModularReduction:
    def test_points_land_in_fundamental_domain(self):
        rng = np.random.default_rng(11)
        z = rng.uniform(-3.0, 3.0, 40) + 1j * rng.uniform(0.05, 2.0, 40)
        reduced, _ = reduce_points(z, np.ones(40, dtype=complex))
        assert all(is_reduced(point) for point in reduced)

    def test_quotient_flow_stays_reduced(self):
        theta = UnitTangentState.from_angle(SurfaceModel.modular(), 0.3, 1.2, 2.0)
        for sample in sample_orbit(theta, 10.0, 1.0):
            assert is_reduced(complex(sample.state.x, sample.state.y))

    def test_matrix_flow_agrees_with_chart_flow(self):
        model = SurfaceModel.modular()
        theta = UnitTangentState.from_angle(model, -0.2, 1.4, 0.9)
        chart = flow(theta, 3.0).state
        matrix = modular_flow(state_to_modular(*theta.as_array()), 3.0)
        expected = state_to_modular(*chart.as_array())
        assert same_modular_point(matrix, expected, tol=1e-7)
        x, y, _, _ = modular_to_state(matrix)
        assert is_reduced(complex(x, y))


class TestTrajectories:
    def test_orbit_batch_shape(self):
        model = SurfaceModel.hyperbolic()
        points = np.array([[0.0, 1.5, 0.0], [0.2, 2.0, 1.0]])
        orbits = orbit_batch(model, points, 4, 0.5)
        assert orbits.shape == (5, 2, 3)
        assert_allclose(orbits[0], points, atol=1e-12)

    def test_trajectory_frame_columns(self):
        theta = UnitTangentState.from_angle(SurfaceModel.hyperbolic(), 0.0, 1.5, 0.2)
        frame = trajectory_frame(theta, 3.0, 1.0)
        assert list(frame.columns) == TRAJECTORY_COLUMNS
        assert len(frame) == 4
        assert frame['t'].tolist() == [0.0, 1.0, 2.0, 3.0]


class TestFlowInvariants:
    def test_perpendicular_block_keeps_unit_determinant(self, coarse):
        model = SurfaceModel.perturbed(epsilon=0.2)
        state = UnitTangentState.from_angle(model, 0.1, 1.4, 0.3)
        for _ in range(100):
            sample = flow(state, 1.0, coarse)
            assert np.linalg.det(sample.perpendicular_block) == pytest.approx(1.0, abs=1e-9)
            state = sample.state
        assert state.speed() == pytest.approx(1.0, abs=1e-9)

    def test_wronskian_over_a_long_stretch(self, coarse):
        model = SurfaceModel.perturbed(epsilon=0.2, quotient=False)
        theta = UnitTangentState.from_angle(model, 0.0, 1.2, 0.8)
        block = flow(theta, 10.0, coarse).perpendicular_block
        assert np.linalg.det(block) == pytest.approx(1.0, abs=1e-6)

    def test_halving_the_step_changes_nothing(self):
        model = SurfaceModel.perturbed(epsilon=0.2, quotient=False)
        theta = UnitTangentState.from_angle(model, 0.1, 1.6, -0.7)
        step = flow(theta, 5.0, IntegratorOptions(dt=1e-2, method='integrator'))
        half = flow(theta, 5.0, IntegratorOptions(dt=5e-3, method='integrator'))
        assert_allclose(half.state.as_array(), step.state.as_array(), atol=1e-6)
        assert_allclose(half.cocycle, step.cocycle, rtol=1e-5, atol=1e-6)

    def test_integrator_matches_exact_across_reductions(self, coarse):
        x, y, alpha = 0.4, 1.1, 0.2
        unfolded = flow(UnitTangentState.from_angle(SurfaceModel.hyperbolic(quotient=False), x, y, alpha), 6.0,
                        IntegratorOptions(method='exact')).state
        assert not is_reduced(complex(unfolded.x, unfolded.y))

        theta = UnitTangentState.from_angle(SurfaceModel.hyperbolic(), x, y, alpha)
        exact = flow(theta, 6.0, IntegratorOptions(method='exact'))
        numeric = flow(theta, 6.0, coarse)
        assert is_reduced(complex(numeric.state.x, numeric.state.y))
        assert same_modular_point(state_to_modular(*numeric.state.as_array()),
                                  state_to_modular(*exact.state.as_array()), tol=1e-5)
        assert_allclose(cocycle_norms(numeric.cocycle), cocycle_norms(exact.cocycle), rtol=1e-5)
