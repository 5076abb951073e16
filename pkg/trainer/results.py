"""
Run artifacts: flat key-value result files and CSV tables

All numeric output uses 5 significant digits.
"""

import csv
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Sequence

from .engine import EpochMetrics, RunResult
from .stats import StatsSummary

logger = logging.getLogger(__name__)

METRICS_COLUMNS = ['epoch', 'train_loss', 'val_loss', 'val_accuracy', 'updates', 'replays', 'mean_staleness']


def fmt(value) -> str:
    """5 significant digits for reals, plain text otherwise"""
    if isinstance(value, bool) or value is None:
        return '' if value is None else str(value).lower()
    if isinstance(value, float):
        return f"{value:.5g}"
    return str(value)


def _join(values: Iterable) -> str:
    return ' '.join(fmt(value) for value in values)


def run_result_fields(result: RunResult) -> Dict[str, str]:
    histogram = ' '.join(f"{staleness}:{count}" for staleness, count in result.staleness_histogram.items())
    return {
        'seed': fmt(result.seed),
        'mode': result.mode.value,
        'guided': fmt(result.guided),
        'rule': result.rule.value,
        'workers': fmt(result.workers),
        'epochs_completed': fmt(len(result.epochs)),
        'test_accuracy': fmt(result.test_accuracy),
        'update_count': fmt(result.update_count),
        'applied_count': fmt(result.applied_count),
        'replay_count': fmt(result.replay_count),
        'guided_evaluations': fmt(result.guided_evaluations),
        'staleness_histogram': histogram,
        'train_loss': _join(result.train_loss),
        'val_loss': _join(result.val_loss),
        'val_accuracy': _join(result.val_accuracy),
        'examples_per_epoch': _join(result.examples_per_epoch),
        'diverged': fmt(result.diverged),
        'error': result.error or '',
    }


def write_key_values(values: Dict[str, str], path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(''.join(f"{key} = {value}\n" for key, value in values.items()), encoding='utf-8')


def read_key_values(path) -> Dict[str, str]:
    values = {}
    for line in Path(path).read_text(encoding='utf-8').splitlines():
        if '=' in line:
            key, value = line.split('=', 1)
            values[key.strip()] = value.strip()
    return values


def write_run_result(result: RunResult, path, include_wall_time: bool = False):
    """Flat key-value file; wall time is left out unless asked so files stay reproducible"""
    values = run_result_fields(result)
    if include_wall_time:
        values['wall_time'] = fmt(result.wall_time)
    write_key_values(values, path)


def metrics_row(row: EpochMetrics) -> List[str]:
    return [fmt(getattr(row, column)) for column in METRICS_COLUMNS]


def write_metrics_csv(rows: Sequence[EpochMetrics], path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle)
        writer.writerow(METRICS_COLUMNS)
        for row in rows:
            writer.writerow(metrics_row(row))


def summary_fields(summary: StatsSummary, divergent_seeds: Sequence[int] = ()) -> Dict[str, str]:
    return {
        'n': fmt(summary.n),
        'best': fmt(summary.best),
        'mean_trimmed': fmt(summary.mean_trimmed),
        'tolerance': fmt(summary.tolerance),
        'q1': fmt(summary.q1),
        'q3': fmt(summary.q3),
        'divergent_runs': ' '.join(str(seed) for seed in divergent_seeds),
    }


def write_table(header: Sequence[str], rows: Iterable[Sequence], path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(value) for value in row])
    logger.info(f"[Experiment] Wrote {path}")
