"""
Experiment harness: seeded repetitions, benchmark suites and rho sweeps

Run i of a configuration uses seed base_seed + i for its split, its initial
weights, its batch order and its simulated schedule, so a configuration
reproduces exactly under the simulated scheduler.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from django.conf import settings

from . import catalog, results
from .config import ALGORITHMS, ExperimentConfig, naive_counterpart
from .data import Dataset, iqr_filter, load_csv, split
from .engine import Mode, RunResult, run
from .exceptions import ConfigError, DatasetError
from .metrics_publisher import get_metrics_publisher
from .stats import StatsSummary, summarize, wilcoxon_signed_rank, wilcoxon_signed_rank_two_tailed

logger = logging.getLogger(__name__)

SIGNIFICANCE = 0.05


@dataclass
class ExperimentOutcome:
    config: ExperimentConfig
    dataset_name: str
    results: List[RunResult]

    @property
    def accuracies(self) -> List[float]:
        """Percent test accuracy of every run that finished"""
        return [100.0 * result.test_accuracy for result in self.results if not result.diverged]

    @property
    def divergent_seeds(self) -> List[int]:
        return [result.seed for result in self.results if result.diverged]

    @property
    def summary(self) -> Optional[StatsSummary]:
        accuracies = self.accuracies
        return summarize(accuracies) if accuracies else None


def load_dataset(config: ExperimentConfig, path: Optional[str] = None,
                 label_column: Optional[int] = None) -> Dataset:
    """Load the configured dataset, IQR-filtered once when iqr_factor is set"""
    path = path or config.dataset
    if not path:
        raise ConfigError("--dataset is required")
    dataset = load_csv(
        path,
        has_header=config.has_header,
        label_column=config.label_column if label_column is None else label_column,
    )
    if config.iqr_factor is not None:
        dataset = replace(iqr_filter(dataset, config.iqr_factor), name=f"{dataset.name} (filtered)")
    return dataset


def run_label(dataset_name: str, algorithm: str, seed: int) -> str:
    return f"{dataset_name}-{algorithm}-{seed}".replace(' ', '_')


def run_repetitions(config: ExperimentConfig, dataset: Dataset, jobs: int = 1) -> ExperimentOutcome:
    """Execute config.runs seeded runs, optionally in a thread pool, collected in run order"""
    publisher = get_metrics_publisher()

    def one(index: int) -> RunResult:
        seed = config.run_seed(index)
        splits = split(dataset, config.split_spec(seed))
        on_epoch = None
        if publisher.enabled:
            on_epoch = publisher.epoch_callback(run_label(dataset.name, config.algorithm, seed))
        return run(config.engine_config(seed), splits, on_epoch)

    logger.info(
        f"[Experiment] {config.algorithm} on {dataset.name}: {config.runs} runs from seed {config.seed}"
    )
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(one, range(config.runs)))
    else:
        outcomes = [one(index) for index in range(config.runs)]
    return ExperimentOutcome(config=config, dataset_name=dataset.name, results=outcomes)


def write_outcome(outcome: ExperimentOutcome, out_dir) -> Path:
    """config.txt, run_NN.txt, run_NN_metrics.csv and summary.txt under out_dir"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outcome.config.save(out_dir / 'config.txt')
    for index, result in enumerate(outcome.results):
        results.write_run_result(result, out_dir / f"run_{index:02d}.txt")
        results.write_metrics_csv(result.epochs, out_dir / f"run_{index:02d}_metrics.csv")
    summary = outcome.summary
    if summary is not None:
        values = results.summary_fields(summary, outcome.divergent_seeds)
    else:
        values = {'n': '0', 'divergent_runs': ' '.join(str(seed) for seed in outcome.divergent_seeds)}
    results.write_key_values({'dataset': outcome.dataset_name, 'algorithm': outcome.config.algorithm, **values},
                             out_dir / 'summary.txt')
    return out_dir


def paired_accuracies(first: ExperimentOutcome, second: ExperimentOutcome) -> Tuple[List[float], List[float]]:
    """Accuracies paired by run index, skipping pairs where either run diverged"""
    a, b = [], []
    for left, right in zip(first.results, second.results):
        if not (left.diverged or right.diverged):
            a.append(100.0 * left.test_accuracy)
            b.append(100.0 * right.test_accuracy)
    return a, b


@dataclass(frozen=True)
class BenchDataset:
    path: str
    label_column: Optional[int] = None
    filtered: bool = False
    title: Optional[str] = None

    @classmethod
    def parse(cls, token: str) -> 'BenchDataset':
        """'path[,label=N][,filtered]'"""
        path, *options = [part.strip() for part in token.split(',')]
        label_column, filtered = None, False
        for option in options:
            if option == 'filtered':
                filtered = True
            elif option.startswith('label='):
                try:
                    label_column = int(option[len('label='):])
                except ValueError:
                    raise ConfigError(f"--datasets: bad label column in '{token}'") from None
            else:
                raise ConfigError(f"--datasets: unknown option '{option}' in '{token}'")
        return cls(path=path, label_column=label_column, filtered=filtered)


def catalog_suite(directory) -> List[BenchDataset]:
    directory = Path(directory)
    return [
        BenchDataset(
            path=str(directory / entry.filename),
            label_column=entry.label_column,
            filtered=entry.filtered,
            title=entry.title,
        )
        for entry in catalog.BENCHMARKS
    ]


@dataclass
class BenchReport:
    rows: List[list] = field(default_factory=list)
    wins: Dict[Tuple[str, str], List[int]] = field(default_factory=dict)
    failed: List[str] = field(default_factory=list)

    header = ['dataset', 'algorithm', 'status', 'runs', 'divergent', 'best', 'mean', 'tolerance',
              'paired_with', 'p_value', 'insignificant']

    def win_rows(self) -> List[list]:
        return [[guided, naive, counts[0], counts[1]] for (guided, naive), counts in self.wins.items()]


def bench(config: ExperimentConfig, suite: Sequence[BenchDataset], algorithms: Sequence[str],
          jobs: int = 1) -> BenchReport:
    """One row per (dataset, algorithm) plus guided-vs-naive Wilcoxon p-values and win counts"""
    for name in algorithms:
        if name.lower() not in ALGORITHMS:
            raise ConfigError(f"--algos: unknown algorithm '{name}'")
    report = BenchReport()
    pairs = [(name, naive_counterpart(name)) for name in algorithms
             if naive_counterpart(name) in algorithms]

    for entry in suite:
        factor = config.iqr_factor if config.iqr_factor is not None else settings.GSGD_IQR_FACTOR
        dataset_config = replace(config, iqr_factor=factor if entry.filtered else None)
        try:
            dataset = load_dataset(dataset_config, entry.path, entry.label_column)
            outcomes = {name: run_repetitions(replace(dataset_config, algorithm=name), dataset, jobs)
                        for name in algorithms}
        except DatasetError as e:
            title = entry.title or entry.path
            logger.warning(f"[Experiment] Dataset {title} failed: {e}")
            report.failed.append(title)
            for name in algorithms:
                report.rows.append([title, name, 'failed', 0, 0, None, None, None, '', None, ''])
            continue
        title = entry.title or dataset.name
        p_values = {}
        for guided_name, naive_name in pairs:
            a, b = paired_accuracies(outcomes[guided_name], outcomes[naive_name])
            p = wilcoxon_signed_rank_two_tailed(a, b).p_value if a else None
            p_values[guided_name] = (naive_name, p)
            p_values[naive_name] = (guided_name, p)
            guided_summary, naive_summary = outcomes[guided_name].summary, outcomes[naive_name].summary
            counts = report.wins.setdefault((guided_name, naive_name), [0, 0])
            if guided_summary and naive_summary:
                counts[1] += 1
                if guided_summary.mean_trimmed >= naive_summary.mean_trimmed:
                    counts[0] += 1

        for name in algorithms:
            outcome = outcomes[name]
            summary = outcome.summary
            partner, p = p_values.get(name, ('', None))
            report.rows.append([
                title, name, 'ok', len(outcome.results), len(outcome.divergent_seeds),
                summary.best if summary else None,
                summary.mean_trimmed if summary else None,
                summary.tolerance if summary else None,
                partner, p,
                '†' if p is not None and p > SIGNIFICANCE else '',
            ])
    return report


def resolve_rho(token: str, train_size: int) -> int:
    """'10' -> 10; '40%' -> floor(0.40 * train_size), at least 1"""
    token = token.strip()
    try:
        if token.endswith('%'):
            return max(1, math.floor(float(token[:-1]) / 100.0 * train_size))
        value = int(token)
    except ValueError:
        raise ConfigError(f"--rhos: cannot read '{token}'") from None
    if value < 0:
        raise ConfigError(f"--rhos: rho must be >= 0, got {value}")
    return value


def rho_config(config: ExperimentConfig, rho: int) -> ExperimentConfig:
    """rho = 0 is the sequential baseline; otherwise c = rho in parallel modes"""
    if rho == 0:
        return replace(config, algorithm='sgd')
    workers = rho if config.algo.mode is not Mode.SEQUENTIAL else config.workers
    return replace(config, rho=rho, workers=workers, replay_cap=min(config.replay_cap, rho))


def sweep_rho(config: ExperimentConfig, dataset: Dataset, rho_tokens: Sequence[str],
              jobs: int = 1) -> Tuple[List[list], List[ExperimentOutcome]]:
    train_size = len(split(dataset, config.split_spec(config.seed)).train)
    rhos = [resolve_rho(token, train_size) for token in rho_tokens]
    rows, outcomes = [], []
    baseline = None
    for rho in rhos:
        rho_cfg = rho_config(config, rho)
        rho_cfg.validate()
        outcome = run_repetitions(rho_cfg, dataset, jobs)
        outcomes.append(outcome)
        if rho == 0 and baseline is None:
            baseline = outcome
        summary = outcome.summary
        p = p_greater = None
        if baseline is not None and outcome is not baseline:
            a, b = paired_accuracies(outcome, baseline)
            if a:
                p = wilcoxon_signed_rank_two_tailed(a, b).p_value
                # one-sided: the sequential baseline is more accurate than this rho
                p_greater = wilcoxon_signed_rank(b, a, 'greater').p_value
        rows.append([
            rho, rho_cfg.algorithm, 1 if rho == 0 else rho_cfg.workers,
            f"{100.0 * rho / train_size:.3g}%",
            summary.mean_trimmed if summary else None,
            summary.tolerance if summary else None,
            summary.best if summary else None,
            len(outcome.divergent_seeds), p, p_greater,
        ])
    return rows, outcomes


SWEEP_HEADER = ['rho', 'algorithm', 'workers', 'rho_share_of_train', 'mean', 'tolerance', 'best',
                'divergent', 'p_vs_sequential', 'p_sequential_greater']
