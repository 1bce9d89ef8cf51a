import os
import sys
import math

import numpy as np
import pandas as pd
import pytest

# Add the repository root to the path so we can import the modules
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.flow.trajectory import orbit_batch
from src.models.entropy import BowenConfig, BowenMeasure, CoreRegion, GridPartition, LocalEntropy
from src.models.spectrum import LyapunovSpectrum
from src.models.surface_model import SurfaceModel
from src.models.unit_tangent import UnitTangentState
from src.reports.analyzers.bowen_analyzer import (BowenAnalyzer, _return_times, bowen_set_measure,
                                                  fit_local_entropy, largest_linear_window, local_entropy,
                                                  measures_frame, monotonicity_violations, pesin_lower_bound,
                                                  return_time_distribution, return_time_radii, return_time_rho,
                                                  return_times_along_orbit)
from src.reports.analyzers.partition_analyzer import (PartitionAnalyzer, conditional_entropy, merge_sparse_cells,
                                                      partition_entropy_bound, symbol_pairs)
from src.reports.analyzers.verdict import (central_entropy, lower_bound_summary, quantitative_lower_bound,
                                           ruelle_violations, verdict)
from src.reports.entropy_report import EntropyLabReport
from src.sasaki.bundle import liouville_sample
from src.utils.rng import stream
from src.utils.scenario_loader import parse_scenario_text


def _measure(n, value, half_width=None):
    half_width = 0.01 * value if half_width is None else half_width
    return BowenMeasure(theta_id=0, n=n, measure=value, half_width=half_width, inside=1, escaped=0,
                        indeterminate=0, samples=100, ball_measure=1.0, box_volume=1.0)


def _spectrum(theta, exponents=(1.0, 0.0, -1.0)):
    return LyapunovSpectrum(model_id=theta.model.model_id, exponents=list(exponents),
                            multiplicities=[1] * len(exponents), T=200.0, renorm_count=200, theta0=theta,
                            raw_exponents=list(exponents), trace_times=np.array([200.0]),
                            convergence_trace=np.array([list(exponents)]), trace_halfwidth=1e-6)


@pytest.fixture
def flat_theta():
    return UnitTangentState.from_angle(SurfaceModel.flat(), 0.0, 0.0, 0.3)


@pytest.fixture(scope="module", params=["hyperbolic", "modular"])
def curvature_one_run(request):
    model = SurfaceModel.hyperbolic() if request.param == "hyperbolic" else SurfaceModel.modular()
    theta = UnitTangentState.from_angle(model, 0.1, 1.5, 0.3)
    cfg = BowenConfig(n_range=tuple(range(0, 9)), samples_per_depth=2000)
    entropy, measures = local_entropy(theta, cfg, 1)
    return theta, entropy, measures


def _estimates(values, half_width=0.05, holds=None):
    return [LocalEntropy(index, value, half_width, lower_bound_holds=None if holds is None else holds[index])
            for index, value in enumerate(values)]


class TestBowenConfig:
    @pytest.mark.parametrize("kwargs", [
        {'xi_graph': 1.0},
        {'xi_graph': 0.0},
        {'rho_const': 0.3},
        {'rho_const': 0.0},
        {'N': 0.0},
        {'samples_per_depth': 0},
        {'n_range': (0, -1)},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            BowenConfig(**kwargs)

    def test_from_dict(self):
        cfg = BowenConfig.from_dict({'n_min': 2, 'n_max': 6, 'n_step': 2, 'y_core': '4.0'})
        assert cfg.n_range == (2, 4, 6)
        assert cfg.core.y_core == 4.0


class TestReturnTimes:
    def test_return_time_table(self):
        membership = np.array([[1, 1, 0], [0, 0, 0], [1, 0, 0], [0, 0, 1]], dtype=bool)
        L, in_core, truncated = _return_times(membership, 0, 3)
        assert L.tolist() == [2, 0, 0]
        assert in_core.tolist() == [True, True, False]
        assert truncated.tolist() == [False, True, False]

    def test_radius_from_first_return(self, flat_theta):
        result = return_time_rho(flat_theta, BowenConfig(xi_graph=0.01))
        assert result.L == 1
        assert result.in_core
        assert result.rho == pytest.approx(0.01)

    def test_off_core_state(self):
        theta = UnitTangentState.from_angle(SurfaceModel.flat(), 50.0, 0.0, 0.0)
        result = return_time_rho(theta, BowenConfig(xi_graph=0.01))
        assert not result.in_core
        assert result.L == 0
        assert result.rho == pytest.approx(0.05)

    def test_distribution_counts_every_sample(self):
        cfg = BowenConfig(return_cap=5)
        histogram = return_time_distribution(SurfaceModel.flat(), cfg, 40, np.random.default_rng(2))
        assert list(histogram.columns) == ['L', 'count', 'rho', 'truncated']
        assert histogram['count'].sum() == 40


class TestBowenMeasure:
    def test_flat_depth_zero_is_the_ball(self, flat_theta):
        cfg = BowenConfig(samples_per_depth=2000)
        measure = bowen_set_measure(flat_theta, cfg, 0, stream(11, 'bowen', 0, 0))
        assert measure.inside + measure.escaped + measure.indeterminate == measure.samples
        assert measure.indeterminate == 0
        assert measure.ball_measure == pytest.approx(4.0 / 3.0 * math.pi * 0.05 ** 3)
        assert measure.measure == pytest.approx(measure.ball_measure, rel=0.15)

    def test_negative_depth(self, flat_theta):
        with pytest.raises(ValueError):
            bowen_set_measure(flat_theta, BowenConfig(), -1, np.random.default_rng(0))

    def test_measures_frame_columns(self):
        frame = measures_frame([_measure(0, 1.0), _measure(1, 0.5)])
        assert list(frame.columns) == ['theta_id', 'n', 'inside', 'escaped', 'indeterminate', 'ball_measure',
                                       'measure', 'half_width', 'samples']
        assert len(frame) == 2


class TestLocalEntropy:
    def test_largest_linear_window(self):
        assert largest_linear_window(np.arange(6.0), np.array([0.0, 1.0, 2.0, 3.0, 10.0, 20.0])) == (0, 4)
        assert largest_linear_window(np.arange(2.0), np.array([0.0, 1.0])) is None

    @pytest.mark.parametrize("N", [1.0, 2.0])
    def test_exponential_decay(self, N):
        measures = [_measure(n, math.exp(-n)) for n in range(9)]
        entropy = fit_local_entropy(measures, N)
        assert entropy.h == pytest.approx(1.0 / N, rel=1e-9)
        assert entropy.window == (0, 8)
        assert entropy.half_width == pytest.approx(2.0 * 0.01 / 8.0 / N, rel=1e-6)
        assert not entropy.inconclusive

    def test_empty_sets_are_dropped(self):
        measures = [_measure(0, 1.0), _measure(1, math.exp(-1.0)), _measure(2, 0.0), _measure(3, 0.0)]
        assert fit_local_entropy(measures, 1.0).inconclusive

    def test_lower_bound(self):
        assert pesin_lower_bound(1.0, 0.5, 2.0, 0.04) == pytest.approx(1.08)
        entropy = fit_local_entropy([_measure(n, math.exp(-n)) for n in range(5)], 1.0, chi_plus=1.0,
                                    P_logdet=0.0)
        assert entropy.lower_bound == pytest.approx(0.9)
        assert entropy.lower_bound_holds

    def test_monotonicity(self):
        measures = [_measure(0, 1.0), _measure(1, 1.5), _measure(2, 1.49)]
        assert monotonicity_violations(measures) == [(0, 1)]

    def test_analyzer_flags_inconclusive_states(self, flat_theta):
        messages = []
        cfg = BowenConfig(n_range=(0,), samples_per_depth=200)
        result = BowenAnalyzer([flat_theta], cfg, 5, None, messages.append).analyze()
        assert result['entropies'][0].inconclusive
        assert len(result['measures']) == 1
        assert result['monotonicity'] == {0: []}
        assert any('inconclusive' in message for message in messages)


class TestPartition:
    def test_conditional_entropy(self):
        pairs = pd.DataFrame({'source': [0, 0, 1, 1], 'target': [2, 3, 4, 4]})
        assert conditional_entropy(pairs) == pytest.approx(0.5 * math.log(2.0))
        assert conditional_entropy(pd.DataFrame({'source': [1] * 6, 'target': [1] * 6})) == 0.0

    def test_symbol_lag_range(self):
        model = SurfaceModel.flat()
        orbits = np.zeros((3, 4, 3))
        partition = GridPartition(CoreRegion(), (2, 2, 2))
        assert len(symbol_pairs(model, orbits, partition, 2)) == 4
        for m in (0, 3):
            with pytest.raises(ValueError):
                symbol_pairs(model, orbits, partition, m)

    def test_cell_index_and_complement(self):
        model = SurfaceModel.flat()
        partition = GridPartition(CoreRegion(), (2, 2, 2))
        rows = np.array([[-5.0, -5.0, -3.0], [5.0, 5.0, 3.0], [15.0, 0.0, 0.0]])
        assert partition.cell_index(model, rows).tolist() == [0, 7, 8]

    def test_merge_sparse_cells(self):
        pairs = pd.DataFrame({'source': [0] * 10 + [1], 'target': [0] * 10 + [2]})
        merged, count = merge_sparse_cells(pairs, 99)
        assert count == 2
        assert merged['source'].iloc[-1] == 99
        assert merged['target'].iloc[-1] == 99

    def test_flat_bound_holds(self):
        model = SurfaceModel.flat()
        points = liouville_sample(model, CoreRegion(half_width=2.0), 300, np.random.default_rng(6))
        orbits = orbit_batch(model, points, 3, 1.0)
        partition = GridPartition(CoreRegion(half_width=2.0), (2, 2, 2))
        bound = partition_entropy_bound(model, orbits, partition, 1)
        assert bound.holds
        assert bound.diameter_condition_met is None
        assert bound.cells == 8

    def test_analyzer_reports_bad_lag(self):
        messages = []
        analyzer = PartitionAnalyzer(SurfaceModel.flat(), np.zeros((2, 3, 3)), GridPartition(CoreRegion(), (2, 2, 2)),
                                     5, messages.append)
        assert analyzer.analyze() is None
        assert any('Could not evaluate the partition bound' in message for message in messages)


class TestVerdict:
    def test_quantitative_lower_bound(self):
        assert quantitative_lower_bound(1.0, 1.0, 0.0, 1.0, 3, 0.04) == pytest.approx(0.92)
        assert quantitative_lower_bound(1.0, math.e, 0.0, 1.0, 3, 0.04) == pytest.approx(-0.28)

    def test_central_entropy(self):
        estimates = [LocalEntropy(0, 1.0, 0.1), LocalEntropy(1, 1.2, 0.2), LocalEntropy(2, 0.9, 0.1),
                     LocalEntropy(3, None, None, inconclusive=True)]
        h, half_width = central_entropy(estimates)
        assert h == pytest.approx(1.0)
        spread = 1.96 * np.std([1.0, 1.2, 0.9], ddof=1) / math.sqrt(3.0)
        assert half_width == pytest.approx(max(0.1, spread))
        assert central_entropy([LocalEntropy(0, None, None, inconclusive=True)]) == (None, None)

    def test_ruelle_and_pesin_pass(self):
        theta = UnitTangentState.from_angle(SurfaceModel.modular(), 0.1, 1.5, 0.4)
        report = verdict(theta.model, BowenConfig(), _spectrum(theta),
                         [LocalEntropy(0, 0.95, 0.05, model_id=theta.model.model_id)], 1.1, 1.1 * math.e)
        assert report.chi_plus == pytest.approx(1.0)
        assert report.ruelle_slack == pytest.approx(0.05)
        assert report.ruelle_pass
        assert report.pesin_pass

    def test_ruelle_failure(self):
        theta = UnitTangentState.from_angle(SurfaceModel.modular(), 0.1, 1.5, 0.4)
        report = verdict(theta.model, BowenConfig(), _spectrum(theta), [LocalEntropy(0, 1.3, 0.05)], 1.1, 3.0)
        assert not report.ruelle_pass
        assert report.pesin_deviation == pytest.approx(0.3)
        assert not report.pesin_pass

    def test_infinite_volume_reports_deviation_only(self):
        theta = UnitTangentState.from_angle(SurfaceModel.hyperbolic(quotient=False), 0.1, 1.5, 0.4)
        report = verdict(theta.model, BowenConfig(), _spectrum(theta), [LocalEntropy(0, 1.0, 0.05)], 1.1, 3.0)
        assert report.pesin_pass is None
        assert report.pesin_deviation == pytest.approx(0.0, abs=1e-12)
        assert any('not a finite-volume quotient' in note for note in report.notes)

    def test_withheld_without_estimates(self):
        theta = UnitTangentState.from_angle(SurfaceModel.modular(), 0.1, 1.5, 0.4)
        report = verdict(theta.model, BowenConfig(), _spectrum(theta), [], 1.1, 3.0)
        assert report.h_central is None
        assert not report.ruelle_pass
        assert any('verdicts withheld' in note for note in report.notes)

    def test_mixed_models(self):
        theta = UnitTangentState.from_angle(SurfaceModel.modular(), 0.1, 1.5, 0.4)
        with pytest.raises(ValueError):
            verdict(theta.model, BowenConfig(), _spectrum(theta), [LocalEntropy(0, 1.0, 0.1, model_id='Flat')],
                    1.1, 3.0)

    def test_single_state_above_chi_fails_ruelle(self):
        theta = UnitTangentState.from_angle(SurfaceModel.modular(), 0.1, 1.5, 0.4)
        estimates = _estimates([1.0] * 19 + [3.0])
        report = verdict(theta.model, BowenConfig(), _spectrum(theta), estimates, 1.1, 1.1 * math.e)
        assert report.h_central == pytest.approx(1.0)
        assert report.ruelle_slack == pytest.approx(0.0)
        assert not report.ruelle_pass
        assert len(report.ruelle_violations) == 1
        assert report.ruelle_violations[0]['theta_id'] == 19
        assert report.ruelle_violations[0]['excess'] == pytest.approx(2.0)

    def test_violation_needs_the_whole_interval_above_chi(self):
        assert ruelle_violations(_estimates([1.2], half_width=0.1), 1.0, 0.15) == []
        assert ruelle_violations(_estimates([1.3], half_width=0.1), 1.0, 0.15)[0]['half_width'] == pytest.approx(0.1)
        assert ruelle_violations([LocalEntropy(0, None, None, inconclusive=True)], 1.0) == []

    @pytest.mark.parametrize("holding, passed", [(18, True), (17, False)])
    def test_lower_bound_fraction(self, holding, passed):
        estimates = _estimates([1.0] * 20, holds=[True] * holding + [False] * (20 - holding))
        fraction, passes = lower_bound_summary(estimates)
        assert fraction == pytest.approx(holding / 20.0)
        assert passes is passed

    def test_lower_bound_fraction_without_judged_states(self):
        assert lower_bound_summary(_estimates([1.0, 1.0])) == (None, None)

    def test_report_carries_aggregates(self):
        theta = UnitTangentState.from_angle(SurfaceModel.modular(), 0.1, 1.5, 0.4)
        estimates = _estimates([1.0] * 9 + [3.0], holds=[True] * 8 + [False] * 2)
        record = verdict(theta.model, BowenConfig(), _spectrum(theta), estimates, 1.1, 1.1 * math.e).to_dict()
        assert len(record['ruelle_violations']) == 1
        assert record['lower_bound_fraction'] == pytest.approx(0.8)
        assert record['lower_bound_pass'] is False
        assert record['ruelle_pass'] is False


class TestCurvatureOneEntropy:
    def test_entropy_is_one(self, curvature_one_run):
        _, entropy, _ = curvature_one_run
        assert not entropy.inconclusive
        assert entropy.h == pytest.approx(1.0, abs=0.15)
        assert entropy.half_width is not None

    def test_measures_decrease(self, curvature_one_run):
        _, _, measures = curvature_one_run
        assert monotonicity_violations(measures) == []
        assert all(item.measure > 0.0 for item in measures)

    def test_ruelle_holds_state_by_state(self, curvature_one_run):
        theta, entropy, _ = curvature_one_run
        report = verdict(theta.model, BowenConfig(), _spectrum(theta), [entropy], 1.0, math.e)
        assert report.ruelle_pass
        assert report.ruelle_violations == []


class TestFlatDecay:
    def test_no_exponential_decay_at_large_depth(self, flat_theta):
        cfg = BowenConfig(n_range=(40, 60, 80, 100), samples_per_depth=1000)
        _, measures = local_entropy(flat_theta, cfg, 3)
        assert all(item.measure > 0.0 for item in measures)
        depths = np.array([item.n for item in measures], dtype=float)
        slope = np.polyfit(depths, -np.log([item.measure for item in measures]), 1)[0]
        assert slope <= 0.05


class TestXiSweep:
    def test_radii_follow_xi(self):
        L = np.array([0, 1, 2, 40])
        assert return_time_radii(BowenConfig(xi_graph=0.9), L).tolist() == pytest.approx([0.05, 0.05, 0.05,
                                                                                           0.9 ** 40])
        assert return_time_radii(BowenConfig(xi_graph=0.01), L).tolist() == pytest.approx([0.05, 0.01, 1e-4,
                                                                                            1e-80])

    def test_return_times_along_orbit_shape(self, flat_theta):
        L, orbit = return_times_along_orbit(flat_theta, BowenConfig(), 3)
        assert L.shape == (4,)
        assert orbit.shape == (4, 3)
        assert L[0] == 1

    def test_only_changed_states_are_rerun(self, flat_theta, tmp_path):
        scenario = parse_scenario_text(
            "[model]\nkind = Flat\n\n[experiment]\nname = entropy\n\n"
            "[entropy]\nn_max = 2\nsamples_per_depth = 200\nxi_grid = 0.01, 0.9\n", env={})
        report = EntropyLabReport(scenario, str(tmp_path), lambda message: None)
        far = UnitTangentState.from_angle(SurfaceModel.flat(), 50.0, 0.0, 0.0)
        entropies = [LocalEntropy(0, 0.0, 0.01), LocalEntropy(1, 0.0, 0.01)]
        rows = report._xi_sweep([flat_theta, far], entropies, _spectrum(flat_theta, (0.0, 0.0, 0.0)), 0.0, 0.0, 1.0)
        assert [row['xi_graph'] for row in rows] == [0.01, 0.9]
        assert rows[0]['rerun_states'] == 1
        assert rows[1]['rerun_states'] == 0
        assert rows[1]['h_central'] == pytest.approx(0.0)
        assert set(rows[0]) >= {'h_central', 'ruelle_pass', 'ruelle_violations', 'lower_bound_fraction'}
