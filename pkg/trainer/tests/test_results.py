import tempfile
from pathlib import Path

from django.test import SimpleTestCase

from trainer.engine import EngineConfig, Mode, run
from trainer.results import (
    METRICS_COLUMNS, fmt, read_key_values, write_metrics_csv, write_run_result, write_table,
)

from .test_engine import _splits


class FormatTests(SimpleTestCase):

    def test_five_significant_digits(self):
        self.assertEqual(fmt(0.123456789), '0.12346')
        self.assertEqual(fmt(77.71234), '77.712')
        self.assertEqual(fmt(1e-9), '1e-09')

    def test_other_values(self):
        self.assertEqual(fmt(True), 'true')
        self.assertEqual(fmt(None), '')
        self.assertEqual(fmt(12), '12')
        self.assertEqual(fmt('†'), '†')


class ArtifactTests(SimpleTestCase):

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)
        self.result = run(EngineConfig(mode=Mode.ASYNC, workers=2, epochs=2, guided=True, rho=3), _splits())

    def tearDown(self):
        self._tmp.cleanup()

    def test_run_result_file(self):
        write_run_result(self.result, self.tmp / 'run.txt')
        values = read_key_values(self.tmp / 'run.txt')
        self.assertEqual(values['mode'], 'async')
        self.assertEqual(values['guided'], 'true')
        self.assertEqual(len(values['train_loss'].split()), 2)
        self.assertEqual(values['examples_per_epoch'], '64 64')
        self.assertNotIn('wall_time', values)
        self.assertEqual(int(values['update_count']),
                         int(values['applied_count']) + int(values['replay_count']))

    def test_wall_time_on_request(self):
        write_run_result(self.result, self.tmp / 'run.txt', include_wall_time=True)
        self.assertIn('wall_time', read_key_values(self.tmp / 'run.txt'))

    def test_metrics_csv(self):
        write_metrics_csv(self.result.epochs, self.tmp / 'metrics.csv')
        lines = (self.tmp / 'metrics.csv').read_text().splitlines()
        self.assertEqual(lines[0], ','.join(METRICS_COLUMNS))
        self.assertEqual(len(lines), 3)
        self.assertTrue(lines[1].startswith('1,'))

    def test_table_creates_directories(self):
        write_table(['a', 'b'], [[1, 0.5], ['x', None]], self.tmp / 'nested' / 'table.csv')
        self.assertEqual((self.tmp / 'nested' / 'table.csv').read_text().splitlines(), ['a,b', '1,0.5', 'x,'])
