"""
Django management command to remove IQR outliers from a dataset CSV

Quantiles come from the input file in one pass; filtering the output again
recomputes them and may remove more rows.

Usage:
    python manage.py filter_outliers --input data/pima.csv --output data/pima_filtered.csv
    python manage.py filter_outliers --input data/liver.csv --output /tmp/liver.csv --factor 1.5
"""

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from trainer.data import iqr_filter, load_csv, write_csv
from trainer.exceptions import DatasetError

from ._experiment import EXIT_CONFIG


class Command(BaseCommand):
    help = 'Write a copy of a dataset with IQR outliers removed'

    def add_arguments(self, parser):
        parser.add_argument(
            '--input',
            required=True,
            help='Source CSV'
        )
        parser.add_argument(
            '--output',
            required=True,
            help='Destination CSV (same schema as the input)'
        )
        parser.add_argument(
            '--factor',
            type=float,
            default=None,
            help='IQR multiplier for the fences (default: GSGD_IQR_FACTOR)'
        )
        parser.add_argument(
            '--header',
            action='store_true',
            help='Input has a header row'
        )
        parser.add_argument(
            '--label-column',
            type=int,
            default=-1,
            help='Label column index (default: last)'
        )

    def handle(self, *args, **options):
        factor = options['factor'] if options['factor'] is not None else settings.GSGD_IQR_FACTOR
        try:
            dataset = load_csv(options['input'], has_header=options['header'], label_column=options['label_column'])
            filtered = iqr_filter(dataset, factor)
            write_csv(filtered, options['output'])
        except DatasetError as e:
            raise CommandError(str(e), returncode=EXIT_CONFIG)

        removed = len(dataset) - len(filtered)
        self.stdout.write(self.style.SUCCESS(
            f"Removed {removed} of {len(dataset)} rows (factor {factor:g}); wrote {len(filtered)} rows to {options['output']}"
        ))
