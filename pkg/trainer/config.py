"""
Experiment configuration

Precedence: command-line flag > key-value config file > Django settings
(which read the environment, then fall back to the protocol defaults).

Config files are flat ``key = value`` text with ``#`` comments. The file a run
writes into its output directory is itself a valid config file.
"""

import logging
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, NamedTuple, Optional

from django.conf import settings

from .data import SplitSpec
from .engine import EngineConfig, Mode, SchedulerKind
from .exceptions import ConfigError, DatasetError
from .guided import RankBy
from .optim import RMSpropInit, Rule
from .scheduler import LatencyModel

logger = logging.getLogger(__name__)


class Algorithm(NamedTuple):
    mode: Mode
    guided: bool
    rule: Rule


ALGORITHMS = {
    'sgd': Algorithm(Mode.SEQUENTIAL, False, Rule.VANILLA),
    'gsgd': Algorithm(Mode.SEQUENTIAL, True, Rule.VANILLA),
    'ssgd': Algorithm(Mode.SYNC, False, Rule.VANILLA),
    'gssgd': Algorithm(Mode.SYNC, True, Rule.VANILLA),
    'asgd': Algorithm(Mode.ASYNC, False, Rule.VANILLA),
    'gasgd': Algorithm(Mode.ASYNC, True, Rule.VANILLA),
    'srmsprop': Algorithm(Mode.SYNC, False, Rule.RMSPROP),
    'gsrmsprop': Algorithm(Mode.SYNC, True, Rule.RMSPROP),
    'sadagrad': Algorithm(Mode.SYNC, False, Rule.ADAGRAD),
    'gsadagrad': Algorithm(Mode.SYNC, True, Rule.ADAGRAD),
    # sequential and asynchronous adaptive variants
    'rmsprop': Algorithm(Mode.SEQUENTIAL, False, Rule.RMSPROP),
    'grmsprop': Algorithm(Mode.SEQUENTIAL, True, Rule.RMSPROP),
    'adagrad': Algorithm(Mode.SEQUENTIAL, False, Rule.ADAGRAD),
    'gadagrad': Algorithm(Mode.SEQUENTIAL, True, Rule.ADAGRAD),
    'armsprop': Algorithm(Mode.ASYNC, False, Rule.RMSPROP),
    'garmsprop': Algorithm(Mode.ASYNC, True, Rule.RMSPROP),
    'aadagrad': Algorithm(Mode.ASYNC, False, Rule.ADAGRAD),
    'gaadagrad': Algorithm(Mode.ASYNC, True, Rule.ADAGRAD),
}


def resolve_algorithm(name: str) -> Algorithm:
    try:
        return ALGORITHMS[name.lower()]
    except KeyError:
        raise ConfigError(
            f"--algo: unknown algorithm '{name}' (choose from {', '.join(ALGORITHMS)})"
        ) from None


def naive_counterpart(name: str) -> Optional[str]:
    """'gssgd' -> 'ssgd'; None for unguided names"""
    name = name.lower()
    if name.startswith('g') and name[1:] in ALGORITHMS and ALGORITHMS[name].guided:
        return name[1:]
    return None


@dataclass
class ExperimentConfig:
    dataset: str = ''
    has_header: bool = False
    label_column: int = -1
    iqr_factor: Optional[float] = None
    algorithm: str = 'gsgd'
    runs: int = 30
    epochs: int = 50
    max_updates: int = 0
    eta: float = 0.2
    rho: int = 10
    workers: int = 10
    batch_size: int = 10
    replay_cap: int = 4
    rank_by: str = 'verif'
    seed: int = 0
    scheduler: str = 'simulated'
    latency: str = '0:0'
    rmsprop_init: str = 'paper'
    beta: float = 0.9
    epsilon: float = 1e-8
    test_fraction: float = 0.2
    validation_fraction: float = 0.2
    stratify: bool = False
    init_range: float = 0.05
    divergence_threshold: float = 1e6
    out: str = 'results'

    @classmethod
    def from_settings(cls) -> 'ExperimentConfig':
        """Defaults taken from Django settings"""
        return cls(
            runs=settings.GSGD_RUNS,
            epochs=settings.GSGD_EPOCHS,
            max_updates=settings.GSGD_MAX_UPDATES,
            eta=settings.GSGD_ETA,
            rho=settings.GSGD_RHO,
            workers=settings.GSGD_WORKERS,
            batch_size=settings.GSGD_BATCH_SIZE,
            replay_cap=settings.GSGD_REPLAY_CAP,
            rank_by=settings.GSGD_RANK_BY,
            seed=settings.GSGD_BASE_SEED,
            scheduler=settings.GSGD_SCHEDULER,
            latency=settings.GSGD_LATENCY,
            rmsprop_init=settings.GSGD_RMSPROP_INIT,
            beta=settings.GSGD_RMSPROP_BETA,
            epsilon=settings.GSGD_EPSILON,
            test_fraction=settings.GSGD_TEST_FRACTION,
            validation_fraction=settings.GSGD_VALIDATION_FRACTION,
            init_range=settings.GSGD_INIT_RANGE,
            divergence_threshold=settings.GSGD_DIVERGENCE_THRESHOLD,
            out=settings.GSGD_OUTPUT_DIR,
        )

    @classmethod
    def load(cls, path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> 'ExperimentConfig':
        """Settings defaults, then the config file, then explicit overrides"""
        config = cls.from_settings()
        if path:
            config = config.updated(read_config_file(path))
        if overrides:
            config = config.updated({key: value for key, value in overrides.items() if value is not None})
        config.validate()
        return config

    def updated(self, values: Dict[str, Any]) -> 'ExperimentConfig':
        known = {f.name: f for f in fields(self)}
        changes = {}
        for key, value in values.items():
            key = key.replace('-', '_')
            if key not in known:
                raise ConfigError(f"Unknown config key '{key}'")
            changes[key] = _coerce(known[key], value)
        return replace(self, **changes)

    def validate(self):
        resolve_algorithm(self.algorithm)
        if self.runs < 1:
            raise ConfigError(f"--runs must be at least 1, got {self.runs}")
        try:
            RankBy(self.rank_by)
        except ValueError:
            raise ConfigError(f"--rank-by must be verif or self, got '{self.rank_by}'") from None
        try:
            RMSpropInit(self.rmsprop_init)
        except ValueError:
            raise ConfigError(f"--rmsprop-init must be paper or square, got '{self.rmsprop_init}'") from None
        try:
            SchedulerKind(self.scheduler)
        except ValueError:
            raise ConfigError(f"--scheduler must be simulated or concurrent, got '{self.scheduler}'") from None
        LatencyModel.parse(self.latency)
        self.split_spec(self.seed)
        engine = self.engine_config(self.seed)
        engine.optimizer_state()
        engine.guided_config()

    @property
    def algo(self) -> Algorithm:
        return resolve_algorithm(self.algorithm)

    def run_seed(self, index: int) -> int:
        return self.seed + index

    def split_spec(self, seed: int) -> SplitSpec:
        try:
            return SplitSpec(self.test_fraction, self.validation_fraction, seed, self.stratify)
        except DatasetError as e:
            raise ConfigError(str(e)) from e

    def engine_config(self, seed: int) -> EngineConfig:
        algo = self.algo
        return EngineConfig(
            mode=algo.mode,
            guided=algo.guided,
            rule=algo.rule,
            workers=self.workers,
            epochs=self.epochs,
            max_updates=self.max_updates,
            eta=self.eta,
            rho=self.rho,
            replay_cap=self.replay_cap,
            rank_by=RankBy(self.rank_by),
            batch_size=self.batch_size,
            seed=seed,
            scheduler=SchedulerKind(self.scheduler),
            latency=LatencyModel.parse(self.latency),
            beta=self.beta,
            epsilon=self.epsilon,
            rmsprop_init=RMSpropInit(self.rmsprop_init),
            init_range=self.init_range,
            divergence_threshold=self.divergence_threshold,
        )

    def dumps(self) -> str:
        lines = []
        for key, value in asdict(self).items():
            if value is None:
                value = ''
            lines.append(f"{key} = {value}")
        return '\n'.join(lines) + '\n'

    def save(self, path):
        Path(path).write_text(self.dumps(), encoding='utf-8')


def _coerce(spec, value):
    if isinstance(value, str):
        value = value.strip()
    try:
        if spec.type is bool:
            if isinstance(value, bool):
                return value
            lowered = str(value).lower()
            if lowered in ('1', 'true', 'yes', 'on'):
                return True
            if lowered in ('0', 'false', 'no', 'off', ''):
                return False
            raise ValueError(value)
        if spec.type == Optional[float]:
            return None if value in ('', None) else float(value)
        if spec.type is int:
            return int(value)
        if spec.type is float:
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"Invalid value '{value}' for config key '{spec.name}'") from None


def read_config_file(path) -> Dict[str, str]:
    """Parse a flat key = value file"""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    values = {}
    for number, line in enumerate(path.read_text(encoding='utf-8').splitlines(), 1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f"{path}:{number}: expected 'key = value'")
        key, value = line.split('=', 1)
        values[key.strip()] = value.strip()
    return values
