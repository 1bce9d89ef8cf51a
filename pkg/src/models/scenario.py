from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, Optional, Tuple
import os

from constants import (DEFAULT_DT, DEFAULT_OUTPUT_DIR, DEFAULT_SEED, DEFAULT_THREADS, ENTROPY_TOLERANCE,
                       INCLUSION_RADIUS, PESIN_EPSILON, RENORM_DT, SPLITTING_HORIZON, XI_GRAPH_GRID)
from src.errors import ScenarioSchemaError
from src.flow.integrator import IntegratorOptions
from src.models.entropy import BowenConfig, GridPartition
from src.models.surface_model import SurfaceModel

EXPERIMENTS = ('spectrum', 'bounds', 'inclusion', 'entropy', 'full-verdict')


def _floats(raw: str) -> Tuple[float, ...]:
    return tuple(float(part) for part in raw.split(',') if part.strip())


def _ints(raw: str) -> Tuple[int, ...]:
    return tuple(int(part) for part in raw.split(',') if part.strip())


def _bumps(raw: str):
    """x0:s0:width:weight entries separated by commas"""
    bumps = []
    for entry in raw.split(','):
        if not entry.strip():
            continue
        values = [float(part) for part in entry.split(':')]
        if len(values) != 4:
            raise ValueError(f"bump '{entry.strip()}' needs x0:s0:width:weight")
        bumps.append(dict(zip(('x0', 's0', 'width', 'weight'), values)))
    return bumps


def _shape(raw: str) -> Tuple[int, int, int]:
    shape = _ints(raw)
    if len(shape) != 3 or any(size < 1 for size in shape):
        raise ValueError(f"partition shape needs three positive integers, got '{raw.strip()}'")
    return shape


def _boolean(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ('1', 'yes', 'true', 'on'):
        return True
    if lowered in ('0', 'no', 'false', 'off'):
        return False
    raise ValueError(f"'{raw}' is not a boolean")


# section -> key -> converter; the grammar documented in README.md
SCHEMA: Dict[str, Dict[str, Callable[[str], Any]]] = {
    'model': {'kind': str.strip, 'c': float, 'epsilon': float, 'quotient': _boolean, 'bumps': _bumps},
    'experiment': {'name': str.strip, 'seed': int, 'threads': int, 'method': str.strip, 'dt': float},
    'budgets': {
        'T': float, 'renorm_dt': float, 'time_scale': float, 'spectrum_states': int, 'regularity_k': int,
        'regularity_epsilon': float, 'bound_samples': int, 'splitting_horizon': float, 'fit_horizon': float,
        'inclusion_samples': int, 'inclusion_rho': float, 'entropy_states': int, 'return_samples': int,
        'partition_orbits': int, 'partition_steps': int, 'partition_m': int, 'partition_shape': _shape,
        'trajectory_T': float,
    },
    'entropy': {
        'N': float, 'rho_const': float, 'xi_graph': float, 'xi_grid': _floats, 'y_core': float,
        'core_half_width': float, 'n_min': int, 'n_max': int, 'n_step': int, 'samples_per_depth': int,
        't0': float, 'return_cap': int, 'epsilon': float, 'tolerance': float,
    },
    'output': {'dir': str.strip},
}

REQUIRED = {
    'model': ('kind',),
    'experiment': ('name',),
}

EXPERIMENT_REQUIRED = {
    'spectrum': (('budgets', 'T'),),
    'bounds': (('budgets', 'bound_samples'),),
    'inclusion': (('budgets', 'inclusion_samples'),),
    'entropy': (('entropy', 'n_max'),),
    'full-verdict': (('budgets', 'T'), ('budgets', 'bound_samples'), ('entropy', 'n_max')),
}

# Budgets allowed to be zero (zero disables the artifact)
NON_NEGATIVE = {'trajectory_T', 'n_min', 'regularity_epsilon'}


@dataclass(frozen=True)
class Budgets:
    """Run sizes of every experiment stage"""
    T: float = 1000.0
    renorm_dt: float = RENORM_DT
    time_scale: float = 1.0
    spectrum_states: int = 1
    regularity_k: int = 10
    regularity_epsilon: float = 0.1
    bound_samples: int = 100
    splitting_horizon: float = SPLITTING_HORIZON
    fit_horizon: float = 10.0
    inclusion_samples: int = 1000
    inclusion_rho: float = INCLUSION_RADIUS
    entropy_states: int = 20
    return_samples: int = 1000
    partition_orbits: int = 200
    partition_steps: int = 20
    partition_m: int = 1
    partition_shape: Tuple[int, ...] = (8, 8, 8)
    trajectory_T: float = 0.0

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Budgets':
        return cls(**data)


@dataclass(frozen=True)
class Scenario:
    """A validated scenario file"""
    model: SurfaceModel
    experiment: str
    seed: int = DEFAULT_SEED
    threads: int = DEFAULT_THREADS
    output_dir: str = DEFAULT_OUTPUT_DIR
    integrator: IntegratorOptions = field(default_factory=IntegratorOptions)
    budgets: Budgets = field(default_factory=Budgets)
    bowen: BowenConfig = field(default_factory=BowenConfig)
    pesin_epsilon: float = PESIN_EPSILON
    tolerance: float = ENTROPY_TOLERANCE
    xi_grid: Tuple[float, ...] = XI_GRAPH_GRID
    source: str = ''

    @property
    def partition(self) -> GridPartition:
        return GridPartition(self.bowen.core, tuple(self.budgets.partition_shape))

    def with_overrides(self, seed: Optional[int] = None, threads: Optional[int] = None,
                       output_dir: Optional[str] = None) -> 'Scenario':
        """Copy with command-line overrides applied"""
        values = {}
        if seed is not None:
            values['seed'] = int(seed)
        if threads is not None:
            if threads < 1:
                raise ValueError(f"Thread count must be positive, got {threads}")
            values['threads'] = int(threads)
        if output_dir is not None:
            values['output_dir'] = output_dir
        return replace(self, **values)

    @classmethod
    def from_config(cls, sections: Dict[str, Dict[str, str]], locate: Callable[[str, Optional[str]], Optional[int]],
                    env=None, source: str = '') -> 'Scenario':
        """
        Build a Scenario from raw section dictionaries

        Args:
            sections: section -> key -> raw string value
            locate: (section, key) -> 1-based line of the key (None when absent)
            env: environment mapping for LAB_SEED / LAB_THREADS / LAB_OUTPUT_DIR defaults
            source: file name recorded with the scenario

        Raises:
            ScenarioSchemaError: unknown or missing keys, bad values, failed invariants
        """
        env = os.environ if env is None else env
        values = {}
        for section, entries in sections.items():
            if section not in SCHEMA:
                raise ScenarioSchemaError(f"Unknown section [{section}]", locate(section, None), section)
            for key, raw in entries.items():
                if key not in SCHEMA[section]:
                    raise ScenarioSchemaError(f"Unknown key '{key}' in section [{section}]", locate(section, key),
                                              f"{section}.{key}")
                try:
                    values[(section, key)] = SCHEMA[section][key](raw)
                except ValueError as e:
                    raise ScenarioSchemaError(f"Bad value for '{section}.{key}': {str(e)}", locate(section, key),
                                              f"{section}.{key}")

        for section, keys in REQUIRED.items():
            for key in keys:
                if (section, key) not in values:
                    raise ScenarioSchemaError(f"Missing required key '{key}' in section [{section}]",
                                              locate(section, None), f"{section}.{key}")
        experiment = values[('experiment', 'name')]
        if experiment not in EXPERIMENTS:
            raise ScenarioSchemaError(f"Unknown experiment '{experiment}', expected one of {EXPERIMENTS}",
                                      locate('experiment', 'name'), 'experiment.name')
        for section, key in EXPERIMENT_REQUIRED[experiment]:
            if (section, key) not in values:
                raise ScenarioSchemaError(f"Experiment '{experiment}' needs key '{key}' in section [{section}]",
                                          locate(section, None), f"{section}.{key}")

        for (section, key), value in values.items():
            if isinstance(value, (int, float)) and not isinstance(value, bool):
                floor_ok = value >= 0 if key in NON_NEGATIVE else value > 0
                if not floor_ok:
                    raise ScenarioSchemaError(f"'{section}.{key}' must be positive, got {value}",
                                              locate(section, key), f"{section}.{key}")

        def pick(section):
            return {key: value for (name, key), value in values.items() if name == section}

        model_values = pick('model')
        experiment_values = pick('experiment')
        entropy_values = pick('entropy')
        try:
            model = SurfaceModel.from_dict(model_values)
        except ValueError as e:
            raise ScenarioSchemaError(f"Invalid model: {str(e)}", locate('model', 'kind'), 'model')
        try:
            integrator = IntegratorOptions(dt=experiment_values.get('dt', DEFAULT_DT),
                                           method=experiment_values.get('method', 'auto'))
            integrator.resolve(model)
        except ValueError as e:
            raise ScenarioSchemaError(str(e), locate('experiment', 'method'), 'experiment.method')
        try:
            bowen = BowenConfig.from_dict(entropy_values)
        except ValueError as e:
            raise ScenarioSchemaError(f"Invalid entropy settings: {str(e)}", locate('entropy', None), 'entropy')

        return cls(
            model=model,
            experiment=experiment,
            seed=experiment_values.get('seed', int(env.get('LAB_SEED', DEFAULT_SEED))),
            threads=experiment_values.get('threads', int(env.get('LAB_THREADS', DEFAULT_THREADS))),
            output_dir=pick('output').get('dir', env.get('LAB_OUTPUT_DIR', DEFAULT_OUTPUT_DIR)),
            integrator=integrator,
            budgets=Budgets.from_dict(pick('budgets')),
            bowen=bowen,
            pesin_epsilon=entropy_values.get('epsilon', PESIN_EPSILON),
            tolerance=entropy_values.get('tolerance', ENTROPY_TOLERANCE),
            xi_grid=entropy_values.get('xi_grid', XI_GRAPH_GRID),
            source=source,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'source': self.source,
            'experiment': self.experiment,
            'seed': self.seed,
            'model': self.model.to_dict(),
            'integrator': {'dt': self.integrator.dt, 'method': self.integrator.method},
            'budgets': dict(self.budgets.__dict__),
        }
