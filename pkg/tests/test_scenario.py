import os
import sys
import glob

import pytest

# Add the repository root to the path so we can import the modules
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.errors import ScenarioSchemaError
from src.utils.scenario_loader import line_index, load_scenario, parse_scenario_text

SCENARIO_DIR = os.path.abspath(os.path.join(os.path.dirname(__file__), '..', 'scenarios'))

VALID = """# spectrum run
[model]
kind = HyperbolicConstant
c = 1.0

[experiment]
name = spectrum
seed = 7

[budgets]
T = 200
"""


def _parse(text, env=None):
    return parse_scenario_text(text, env={} if env is None else env)


class TestScenarioParsing:
    def test_valid_scenario(self):
        scenario = _parse(VALID)
        assert scenario.model.model_id == 'HyperbolicConstant(c=1)'
        assert scenario.experiment == 'spectrum'
        assert scenario.seed == 7
        assert scenario.budgets.T == 200.0
        assert scenario.integrator.method == 'auto'
        assert scenario.to_dict()['budgets']['T'] == 200.0

    def test_line_index(self):
        index = line_index(VALID)
        assert index[('model', None)] == 2
        assert index[('model', 'kind')] == 3
        assert index[('budgets', 'T')] == 11

    def test_missing_model_section(self):
        text = VALID.replace("[model]\nkind = HyperbolicConstant\nc = 1.0\n", "")
        with pytest.raises(ScenarioSchemaError) as error:
            _parse(text)
        assert 'model' in error.value.key
        assert 'kind' in str(error.value)

    def test_unknown_key_reports_its_line(self):
        with pytest.raises(ScenarioSchemaError) as error:
            _parse(VALID + "bogus = 1\n")
        assert error.value.line == 12
        assert error.value.key == 'budgets.bogus'
        assert str(error.value).startswith('line 12: ')

    def test_unknown_section(self):
        with pytest.raises(ScenarioSchemaError) as error:
            _parse(VALID + "\n[extras]\nx = 1\n")
        assert error.value.line == 13

    def test_bad_value(self):
        with pytest.raises(ScenarioSchemaError) as error:
            _parse(VALID.replace("T = 200", "T = many"))
        assert error.value.key == 'budgets.T'
        assert error.value.line == 11

    def test_non_positive_budget(self):
        with pytest.raises(ScenarioSchemaError) as error:
            _parse(VALID.replace("T = 200", "T = -5"))
        assert 'must be positive' in str(error.value)

    def test_zero_trajectory_is_allowed(self):
        assert _parse(VALID + "trajectory_T = 0\n").budgets.trajectory_T == 0.0

    def test_unknown_experiment(self):
        with pytest.raises(ScenarioSchemaError) as error:
            _parse(VALID.replace("name = spectrum", "name = everything"))
        assert error.value.key == 'experiment.name'

    def test_experiment_needs_its_budget(self):
        with pytest.raises(ScenarioSchemaError) as error:
            _parse(VALID.replace("name = spectrum", "name = bounds"))
        assert 'bound_samples' in str(error.value)

    def test_exact_method_needs_constant_curvature(self):
        text = VALID.replace("kind = HyperbolicConstant", "kind = PerturbedHyperbolic\nepsilon = 0.1")
        text = text.replace("seed = 7", "seed = 7\nmethod = exact")
        with pytest.raises(ScenarioSchemaError) as error:
            _parse(text)
        assert error.value.key == 'experiment.method'

    def test_malformed_text(self):
        with pytest.raises(ScenarioSchemaError) as error:
            _parse("kind = Flat\n")
        assert 'Malformed' in str(error.value)


class TestScenarioValues:
    def test_bumps(self):
        text = VALID.replace("kind = HyperbolicConstant",
                             "kind = PerturbedHyperbolic\nepsilon = 0.1\nbumps = 0.0:0.47:0.35:1.0")
        scenario = _parse(text)
        assert len(scenario.model.bumps) == 1
        assert scenario.model.epsilon == 0.1

    def test_bad_bump(self):
        text = VALID.replace("kind = HyperbolicConstant",
                             "kind = PerturbedHyperbolic\nepsilon = 0.1\nbumps = 0.0:0.47")
        with pytest.raises(ScenarioSchemaError) as error:
            _parse(text)
        assert error.value.key == 'model.bumps'

    def test_partition_shape(self):
        scenario = _parse(VALID + "partition_shape = 4, 4, 2\n")
        assert scenario.partition.shape == (4, 4, 2)
        with pytest.raises(ScenarioSchemaError):
            _parse(VALID + "partition_shape = 4, 4\n")

    def test_environment_defaults(self):
        env = {'LAB_SEED': '99', 'LAB_THREADS': '3', 'LAB_OUTPUT_DIR': 'elsewhere'}
        scenario = _parse(VALID.replace("seed = 7\n", ""), env=env)
        assert scenario.seed == 99
        assert scenario.threads == 3
        assert scenario.output_dir == 'elsewhere'

    def test_file_values_beat_environment(self):
        scenario = _parse(VALID, env={'LAB_SEED': '99'})
        assert scenario.seed == 7

    def test_overrides(self):
        scenario = _parse(VALID).with_overrides(seed=3, threads=2, output_dir='out')
        assert (scenario.seed, scenario.threads, scenario.output_dir) == (3, 2, 'out')
        with pytest.raises(ValueError):
            _parse(VALID).with_overrides(threads=0)

    def test_entropy_section(self):
        scenario = _parse(VALID + "\n[entropy]\nn_max = 4\nxi_grid = 0.8, 0.9\ntolerance = 0.2\n")
        assert scenario.bowen.n_range == (0, 1, 2, 3, 4)
        assert scenario.xi_grid == (0.8, 0.9)
        assert scenario.tolerance == 0.2


class TestScenarioFiles:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioSchemaError):
            load_scenario(str(tmp_path / 'absent.ini'))

    @pytest.mark.parametrize("path", sorted(glob.glob(os.path.join(SCENARIO_DIR, '*.ini'))))
    def test_shipped_scenarios_load(self, path):
        scenario = load_scenario(path, env={})
        assert scenario.source == os.path.basename(path)

    def test_modular_verdict_budgets(self):
        scenario = load_scenario(os.path.join(SCENARIO_DIR, 'modular_verdict.ini'), env={})
        assert max(scenario.bowen.n_range) == 12
        assert scenario.bowen.samples_per_depth == 10000
        assert scenario.budgets.entropy_states == 20
        assert scenario.xi_grid == (0.8, 0.9, 0.95)
