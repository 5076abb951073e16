"""
Django management command to measure accuracy as a function of rho

rho = 0 is the sequential baseline; for rho >= 1 the configured algorithm runs
with c = rho workers. Percent tokens resolve against the training split size.

Usage:
    python manage.py sweep_rho --dataset data/thyroid.csv --label-column 0 --algo gssgd --rhos 0 4 10 20% 40%
"""

from pathlib import Path

from django.core.management.base import CommandError

from trainer.exceptions import ConfigError
from trainer.experiments import SWEEP_HEADER, sweep_rho
from trainer.results import fmt, write_table

from ._experiment import EXIT_CONFIG, EXIT_DIVERGENCE, ExperimentCommand


class Command(ExperimentCommand):
    help = 'Mean accuracy over seeded runs for each delay tolerance rho'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--rhos',
            nargs='+',
            required=True,
            help="rho values: integers >= 0 or percentages of the training split such as 40%%"
        )

    def handle(self, *args, **options):
        config = self.load_config(options)
        dataset = self.load_dataset(config)

        try:
            rows, outcomes = sweep_rho(config, dataset, options['rhos'], jobs=max(1, options['jobs']))
        except ConfigError as e:
            raise CommandError(str(e), returncode=EXIT_CONFIG)

        out_dir = Path(config.out)
        write_table(SWEEP_HEADER, rows, out_dir / 'sweep.csv')
        config.save(out_dir / 'config.txt')

        for row in rows:
            rho, algorithm, workers, share, mean, tolerance = row[:6]
            self.stdout.write(f"rho={rho} ({share}) {algorithm} c={workers}: {fmt(mean)} ± {fmt(tolerance)}")
        self.stdout.write(f"Sweep written to {out_dir / 'sweep.csv'}")

        divergent = sum(len(outcome.divergent_seeds) for outcome in outcomes)
        if divergent:
            raise CommandError(f"{divergent} run(s) diverged during the sweep", returncode=EXIT_DIVERGENCE)
