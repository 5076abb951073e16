"""
Django management command to run one algorithm on one dataset for N seeded runs

Usage:
    python manage.py run_experiment --dataset data/pima.csv --algo gssgd
    python manage.py run_experiment --config results/pima-gssgd/config.txt
    python manage.py run_experiment --dataset data/pima.csv --algo sgd --runs 1 --out /tmp/sgd
"""

from pathlib import Path

from django.core.management.base import CommandError

from trainer.experiments import run_repetitions, write_outcome
from trainer.results import fmt

from ._experiment import EXIT_DIVERGENCE, ExperimentCommand


class Command(ExperimentCommand):
    help = 'Run seeded repetitions of one algorithm and write per-run results plus a summary'

    def handle(self, *args, **options):
        config = self.load_config(options)
        dataset = self.load_dataset(config)

        self.stdout.write(
            f"Running {config.algorithm} on {dataset.name} (N={len(dataset)}, F={dataset.n_features}, "
            f"K={dataset.n_classes}) for {config.runs} runs"
        )
        outcome = run_repetitions(config, dataset, jobs=max(1, options['jobs']))
        out_dir = write_outcome(outcome, Path(config.out))

        for index, result in enumerate(outcome.results):
            if result.diverged:
                self.stdout.write(self.style.ERROR(f"[{index + 1}/{config.runs}] ✗ seed {result.seed}: {result.error}"))
            else:
                self.stdout.write(
                    f"[{index + 1}/{config.runs}] seed {result.seed}: test accuracy {fmt(100.0 * result.test_accuracy)}%"
                    f" ({result.update_count} updates, {result.replay_count} replayed)"
                )

        summary = outcome.summary
        self.stdout.write("\n" + "=" * 60)
        if summary is not None:
            self.stdout.write(self.style.SUCCESS(
                f"best {fmt(summary.best)}  mean {fmt(summary.mean_trimmed)} ± {fmt(summary.tolerance)}  (n={summary.n})"
            ))
        self.stdout.write(f"Results written to {out_dir}")

        if outcome.divergent_seeds:
            raise CommandError(
                f"{len(outcome.divergent_seeds)} run(s) diverged: seeds {outcome.divergent_seeds}",
                returncode=EXIT_DIVERGENCE,
            )
