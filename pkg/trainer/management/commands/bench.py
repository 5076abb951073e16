"""
Django management command to run a benchmark suite (datasets x algorithms)

Usage:
    python manage.py bench --list-datasets
    python manage.py bench --catalog-dir ~/uci --algos sgd gsgd ssgd gssgd asgd gasgd
    python manage.py bench --datasets data/pima.csv data/pima.csv,filtered data/thyroid.csv,label=0 \\
        --algos srmsprop gsrmsprop --out results/bench
"""

from pathlib import Path

from django.core.management.base import CommandError

from trainer import catalog
from trainer.exceptions import ConfigError
from trainer.experiments import BenchDataset, bench, catalog_suite
from trainer.results import write_table

from ._experiment import EXIT_CONFIG, EXIT_PARTIAL_SUITE, ExperimentCommand

DEFAULT_ALGORITHMS = ['sgd', 'gsgd', 'ssgd', 'gssgd', 'asgd', 'gasgd']


class Command(ExperimentCommand):
    help = 'Compare algorithms across datasets: best/mean/tolerance per pair plus Wilcoxon p-values'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--datasets',
            nargs='+',
            default=[],
            help="Dataset entries 'path[,label=N][,filtered]'"
        )
        parser.add_argument(
            '--catalog-dir',
            help='Directory holding the benchmark catalog CSV files'
        )
        parser.add_argument(
            '--algos',
            nargs='+',
            default=DEFAULT_ALGORITHMS,
            help='Algorithms to compare'
        )
        parser.add_argument(
            '--list-datasets',
            action='store_true',
            help='Print the benchmark catalog with download instructions and exit'
        )

    def handle(self, *args, **options):
        if options['list_datasets']:
            self.stdout.write(catalog.describe())
            return

        config = self.load_config(options)
        try:
            suite = [BenchDataset.parse(token) for token in options['datasets']]
        except ConfigError as e:
            raise CommandError(str(e), returncode=EXIT_CONFIG)
        if options['catalog_dir']:
            suite.extend(catalog_suite(options['catalog_dir']))
        if not suite:
            raise CommandError('--datasets or --catalog-dir is required', returncode=EXIT_CONFIG)

        algorithms = [name.lower() for name in options['algos']]
        self.stdout.write(f"Benchmark: {len(suite)} datasets x {len(algorithms)} algorithms, {config.runs} runs each")
        try:
            report = bench(config, suite, algorithms, jobs=max(1, options['jobs']))
        except ConfigError as e:
            raise CommandError(str(e), returncode=EXIT_CONFIG)

        out_dir = Path(config.out)
        write_table(report.header, report.rows, out_dir / 'results.csv')
        write_table(['guided', 'naive', 'guided_wins', 'datasets'], report.win_rows(), out_dir / 'wins.csv')
        config.save(out_dir / 'config.txt')

        for guided, naive, wins, compared in report.win_rows():
            self.stdout.write(self.style.SUCCESS(f"{guided} >= {naive} on {wins}/{compared} datasets"))
        self.stdout.write(f"Results written to {out_dir / 'results.csv'}")

        if report.failed:
            raise CommandError(
                f"{len(report.failed)} dataset(s) failed: {', '.join(report.failed)}",
                returncode=EXIT_PARTIAL_SUITE,
            )
