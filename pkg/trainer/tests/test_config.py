import tempfile
from pathlib import Path

from django.test import SimpleTestCase, override_settings

from trainer.config import ALGORITHMS, ExperimentConfig, naive_counterpart, read_config_file, resolve_algorithm
from trainer.engine import Mode
from trainer.exceptions import ConfigError
from trainer.optim import Rule


class AlgorithmTableTests(SimpleTestCase):

    def test_paper_pairings(self):
        self.assertEqual(resolve_algorithm('gSSGD'), (Mode.SYNC, True, Rule.VANILLA))
        self.assertEqual(resolve_algorithm('asgd'), (Mode.ASYNC, False, Rule.VANILLA))
        self.assertEqual(resolve_algorithm('gsrmsprop'), (Mode.SYNC, True, Rule.RMSPROP))

    def test_every_guided_name_has_a_naive_twin(self):
        for name, algo in ALGORITHMS.items():
            if algo.guided:
                twin = naive_counterpart(name)
                self.assertEqual(ALGORITHMS[twin]._replace(guided=True), algo)
            else:
                self.assertIsNone(naive_counterpart(name))

    def test_unknown_algorithm_names_the_flag(self):
        with self.assertRaisesMessage(ConfigError, '--algo'):
            resolve_algorithm('adam')


class ExperimentConfigTests(SimpleTestCase):

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def _file(self, text):
        path = self.tmp / 'experiment.txt'
        path.write_text(text)
        return path

    @override_settings(GSGD_RUNS=30, GSGD_EPOCHS=50, GSGD_ETA=0.2, GSGD_RHO=10)
    def test_defaults_from_settings(self):
        config = ExperimentConfig.load()
        self.assertEqual((config.runs, config.epochs, config.eta, config.rho), (30, 50, 0.2, 10))

    @override_settings(GSGD_EPOCHS=7)
    def test_settings_are_the_fallback(self):
        self.assertEqual(ExperimentConfig.load().epochs, 7)

    def test_flag_beats_file_beats_settings(self):
        path = self._file("# protocol\nruns = 3\neta = 0.5  # faster\nalgorithm = gssgd\n")
        config = ExperimentConfig.load(str(path), {'runs': 2, 'eta': None, 'workers': 4})
        self.assertEqual((config.runs, config.eta, config.workers, config.algorithm), (2, 0.5, 4, 'gssgd'))

    def test_round_trip(self):
        config = ExperimentConfig.load(None, {'dataset': 'pima.csv', 'iqr_factor': 1.5, 'stratify': True,
                                              'latency': '0:3', 'algorithm': 'gasgd'})
        config.save(self.tmp / 'config.txt')
        self.assertEqual(ExperimentConfig.load(str(self.tmp / 'config.txt')), config)

    def test_unset_iqr_factor_round_trips_as_none(self):
        config = ExperimentConfig.load()
        config.save(self.tmp / 'config.txt')
        self.assertIsNone(ExperimentConfig.load(str(self.tmp / 'config.txt')).iqr_factor)

    def test_errors(self):
        bad_files = ["colour = blue\n", "runs = many\n", "runs\n", "stratify = maybe\n"]
        for text in bad_files:
            with self.assertRaises(ConfigError):
                ExperimentConfig.load(str(self._file(text)))
        with self.assertRaises(ConfigError):
            ExperimentConfig.load(str(self.tmp / 'missing.txt'))

    def test_validation(self):
        invalid = [
            {'algorithm': 'sgd2'},
            {'runs': 0},
            {'rank_by': 'loss'},
            {'rmsprop_init': 'zero'},
            {'scheduler': 'mpi'},
            {'latency': 'x'},
            {'test_fraction': 1.5},
            {'algorithm': 'gsgd', 'rho': 0},
            {'eta': -0.1},
            {'workers': 0},
        ]
        for overrides in invalid:
            with self.assertRaises(ConfigError, msg=overrides):
                ExperimentConfig.load(None, overrides)

    def test_seeds_and_engine_config(self):
        config = ExperimentConfig.load(None, {'seed': 100, 'algorithm': 'gsadagrad', 'replay_cap': 2})
        self.assertEqual(config.run_seed(3), 103)
        engine = config.engine_config(config.run_seed(3))
        self.assertEqual((engine.mode, engine.guided, engine.rule, engine.seed), (Mode.SYNC, True, Rule.ADAGRAD, 103))
        self.assertEqual(engine.guided_config().replay_cap, 2)

    def test_read_config_file(self):
        path = self._file("a = 1\n\n# comment\nb = x = y\n")
        self.assertEqual(read_config_file(path), {'a': '1', 'b': 'x = y'})
