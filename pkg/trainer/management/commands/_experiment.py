"""Shared options for the experiment commands"""

from django.core.management.base import BaseCommand, CommandError

from trainer.config import ExperimentConfig
from trainer.data import split
from trainer.exceptions import ConfigError, DatasetError
from trainer.experiments import load_dataset
from trainer.metrics_publisher import get_metrics_publisher

EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_PARTIAL_SUITE = 4

# flag dest -> ExperimentConfig field
OVERRIDES = {
    'dataset': 'dataset',
    'header': 'has_header',
    'label_column': 'label_column',
    'iqr_factor': 'iqr_factor',
    'algo': 'algorithm',
    'runs': 'runs',
    'epochs': 'epochs',
    'max_updates': 'max_updates',
    'eta': 'eta',
    'rho': 'rho',
    'workers': 'workers',
    'batch_size': 'batch_size',
    'replay_cap': 'replay_cap',
    'seed': 'seed',
    'scheduler': 'scheduler',
    'latency': 'latency',
    'out': 'out',
    'stratify': 'stratify',
    'rmsprop_init': 'rmsprop_init',
    'rank_by': 'rank_by',
}


class ExperimentCommand(BaseCommand):
    """Base for commands that build an ExperimentConfig from file + flags"""

    def execute(self, *args, **options):
        try:
            return super().execute(*args, **options)
        finally:
            publisher = get_metrics_publisher()
            if publisher.enabled:
                publisher.disconnect()

    def add_arguments(self, parser):
        parser.add_argument('--config', help='Key-value config file (flags take precedence)')
        parser.add_argument('--dataset', help='Dataset CSV path')
        parser.add_argument('--header', action='store_const', const=True, default=None,
                            help='Dataset CSV has a header row')
        parser.add_argument('--label-column', type=int, help='Label column index (default: last)')
        parser.add_argument('--iqr-factor', type=float, help='Apply IQR outlier filtering with this factor first')
        parser.add_argument('--algo', help='sgd, gsgd, ssgd, gssgd, asgd, gasgd, srmsprop, gsrmsprop, sadagrad, gsadagrad, ...')
        parser.add_argument('--runs', type=int, help='Seeded repetitions')
        parser.add_argument('--epochs', type=int, help='Passes over the training split')
        parser.add_argument('--max-updates', type=int, help='Cap on applied gradients (0 = none)')
        parser.add_argument('--eta', type=float, help='Learning rate')
        parser.add_argument('--rho', type=int, help='Delay tolerance / replay interval')
        parser.add_argument('--workers', type=int, help='Worker count c')
        parser.add_argument('--batch-size', type=int, help='Mini-batch size m')
        parser.add_argument('--replay-cap', type=int, help='Most consistent batches replayed per window')
        parser.add_argument('--seed', type=int, help='Base seed; run i uses seed + i')
        parser.add_argument('--scheduler', help='simulated or concurrent')
        parser.add_argument('--latency', help="Simulated worker delay 'lo:hi' or 'lo:hi,lo:hi,...' per worker")
        parser.add_argument('--out', help='Output directory')
        parser.add_argument('--stratify', action='store_const', const=True, default=None,
                            help='Stratify the train/validation/test split by class')
        parser.add_argument('--rmsprop-init', help="paper (r_1 = v_1) or square (r_1 = v_1^2)")
        parser.add_argument('--rank-by', help='Rank consistent batches by verif or self error change')
        parser.add_argument('--jobs', type=int, default=1, help='Independent runs executed in parallel')

    def load_config(self, options) -> ExperimentConfig:
        overrides = {field: options.get(dest) for dest, field in OVERRIDES.items()}
        try:
            return ExperimentConfig.load(options.get('config'), overrides)
        except ConfigError as e:
            raise CommandError(str(e), returncode=EXIT_CONFIG)

    def load_dataset(self, config: ExperimentConfig):
        try:
            dataset = load_dataset(config)
            split(dataset, config.split_spec(config.seed))
            return dataset
        except (ConfigError, DatasetError) as e:
            raise CommandError(str(e), returncode=EXIT_CONFIG)
