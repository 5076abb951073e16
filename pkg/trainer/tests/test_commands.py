import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings

from trainer.config import ExperimentConfig
from trainer.experiments import load_dataset, paired_accuracies, sweep_rho
from trainer.results import read_key_values
from trainer.stats import wilcoxon_signed_rank

from .fixtures import OUTLIER_ROWS, write_blobs_csv, write_rows


@override_settings(GSGD_MQTT_BROKER_HOST='')
class CommandTestCase(SimpleTestCase):

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)
        self.blobs = write_blobs_csv(self.tmp / 'blobs.csv', n_per_class=50)

    def tearDown(self):
        self._tmp.cleanup()

    def call(self, name, **options):
        out = StringIO()
        call_command(name, stdout=out, **options)
        return out.getvalue()

    def assertExitCode(self, code, name, **options):
        with self.assertRaises(CommandError) as ctx:
            self.call(name, **options)
        self.assertEqual(ctx.exception.returncode, code)
        return ctx.exception


class RunExperimentTests(CommandTestCase):

    def run_experiment(self, out, **options):
        defaults = {'dataset': str(self.blobs), 'algo': 'gssgd', 'runs': 2, 'epochs': 3, 'workers': 4, 'rho': 4}
        defaults.update(options)
        return self.call('run_experiment', out=str(out), **defaults)

    def test_writes_artifacts(self):
        output = self.run_experiment(self.tmp / 'out')
        out = self.tmp / 'out'
        for name in ('config.txt', 'run_00.txt', 'run_01.txt', 'run_00_metrics.csv', 'summary.txt'):
            self.assertTrue((out / name).exists(), name)
        summary = read_key_values(out / 'summary.txt')
        self.assertEqual(summary['n'], '2')
        self.assertEqual(summary['algorithm'], 'gssgd')
        self.assertEqual(read_key_values(out / 'run_01.txt')['seed'], '1')
        self.assertIn('Results written to', output)

    def test_single_run_best_equals_mean(self):
        self.run_experiment(self.tmp / 'one', algo='sgd', runs=1)
        summary = read_key_values(self.tmp / 'one' / 'summary.txt')
        self.assertEqual(summary['best'], summary['mean_trimmed'])
        self.assertEqual(summary['tolerance'], '0')

    def test_deterministic(self):
        for algo in ('sgd', 'gssgd', 'gasgd'):
            self.run_experiment(self.tmp / f'{algo}-a', algo=algo, latency='0:2')
            self.run_experiment(self.tmp / f'{algo}-b', algo=algo, latency='0:2')
            for name in ('run_00.txt', 'run_01_metrics.csv', 'summary.txt'):
                self.assertEqual((self.tmp / f'{algo}-a' / name).read_bytes(),
                                 (self.tmp / f'{algo}-b' / name).read_bytes())

    def test_config_echo_reruns_identically(self):
        self.run_experiment(self.tmp / 'first', algo='gasgd', latency='1:3')
        self.call('run_experiment', config=str(self.tmp / 'first' / 'config.txt'), out=str(self.tmp / 'again'))
        for name in ('run_00_metrics.csv', 'run_01.txt', 'summary.txt'):
            self.assertEqual((self.tmp / 'first' / name).read_bytes(), (self.tmp / 'again' / name).read_bytes())

    def test_parallel_jobs_match_serial(self):
        self.run_experiment(self.tmp / 'serial', runs=3)
        self.run_experiment(self.tmp / 'threads', runs=3, jobs=3)
        for index in range(3):
            name = f'run_{index:02d}_metrics.csv'
            self.assertEqual((self.tmp / 'serial' / name).read_bytes(), (self.tmp / 'threads' / name).read_bytes())

    def test_filtered_dataset_name(self):
        self.run_experiment(self.tmp / 'filtered', algo='sgd', runs=1, iqr_factor=3.0)
        self.assertEqual(read_key_values(self.tmp / 'filtered' / 'summary.txt')['dataset'], 'blobs (filtered)')

    def test_invalid_algorithm(self):
        error = self.assertExitCode(2, 'run_experiment', dataset=str(self.blobs), algo='adam',
                                    out=str(self.tmp / 'x'))
        self.assertIn('--algo', str(error))

    def test_config_errors(self):
        self.assertExitCode(2, 'run_experiment', dataset=str(self.tmp / 'absent.csv'), out=str(self.tmp / 'x'))
        self.assertExitCode(2, 'run_experiment', out=str(self.tmp / 'x'))
        self.assertExitCode(2, 'run_experiment', dataset=str(self.blobs), latency='1:0', out=str(self.tmp / 'x'))
        tiny = write_rows(self.tmp / 'tiny.csv', [['1', 'a'], ['2', 'b'], ['3', 'a'], ['4', 'b']])
        self.assertExitCode(2, 'run_experiment', dataset=str(tiny), out=str(self.tmp / 'x'))
        bad = write_rows(self.tmp / 'bad.csv', [['1', 'a'], ['oops', 'b']])
        error = self.assertExitCode(2, 'run_experiment', dataset=str(bad), out=str(self.tmp / 'x'))
        self.assertIn('row 2', str(error))

    def test_label_column_out_of_range(self):
        error = self.assertExitCode(2, 'run_experiment', dataset=str(self.blobs), label_column=3,
                                    out=str(self.tmp / 'x'))
        self.assertIn('out of range', str(error))

    def test_divergence_exit_code(self):
        with np.errstate(all='ignore'):
            self.assertExitCode(3, 'run_experiment', dataset=str(self.blobs), algo='sgd', runs=2, epochs=2,
                                eta=1e308, out=str(self.tmp / 'diverged'))
        summary = read_key_values(self.tmp / 'diverged' / 'summary.txt')
        self.assertEqual(summary['divergent_runs'], '0 1')
        self.assertEqual(read_key_values(self.tmp / 'diverged' / 'run_00.txt')['diverged'], 'true')


class BenchTests(CommandTestCase):

    def test_two_datasets_two_algorithms(self):
        second = write_blobs_csv(self.tmp / 'second.csv', n_per_class=40, seed=5)
        self.call('bench', datasets=[str(self.blobs), f'{second},filtered'], algos=['sgd', 'gsgd'],
                  runs=3, epochs=2, out=str(self.tmp / 'bench'))
        lines = (self.tmp / 'bench' / 'results.csv').read_text(encoding='utf-8').splitlines()
        self.assertEqual(len(lines), 1 + 4)
        header = lines[0].split(',')
        rows = [dict(zip(header, line.split(','))) for line in lines[1:]]
        self.assertEqual([row['dataset'] for row in rows], ['blobs', 'blobs', 'second (filtered)', 'second (filtered)'])
        self.assertTrue(all(row['status'] == 'ok' and row['p_value'] for row in rows))
        # three paired runs can never reach p <= 0.05
        self.assertTrue(all(row['insignificant'] == '†' for row in rows))
        wins = (self.tmp / 'bench' / 'wins.csv').read_text().splitlines()
        self.assertEqual(wins[0], 'guided,naive,guided_wins,datasets')
        self.assertTrue(wins[1].startswith('gsgd,sgd,'))
        self.assertTrue(wins[1].endswith(',2'))

    def test_missing_dataset_is_a_partial_failure(self):
        missing = str(self.tmp / 'absent.csv')
        self.assertExitCode(4, 'bench', datasets=[missing, str(self.blobs)], algos=['ssgd', 'gssgd'],
                            runs=2, epochs=1, workers=2, out=str(self.tmp / 'bench'))
        lines = (self.tmp / 'bench' / 'results.csv').read_text(encoding='utf-8').splitlines()
        self.assertEqual(len(lines), 1 + 4)
        self.assertTrue(lines[1].startswith(f'{missing},ssgd,failed'))
        self.assertIn(',ok,', lines[3])

    def test_list_datasets(self):
        output = self.call('bench', list_datasets=True)
        self.assertIn('pima.csv', output)
        self.assertIn('phishing.csv', output)
        self.assertIn('[IQR filtered]', output)

    def test_bad_inputs(self):
        self.assertExitCode(2, 'bench', out=str(self.tmp / 'bench'))
        self.assertExitCode(2, 'bench', datasets=[f'{self.blobs},label=x'], out=str(self.tmp / 'bench'))
        self.assertExitCode(2, 'bench', datasets=[str(self.blobs)], algos=['adam'], out=str(self.tmp / 'bench'))


class SweepRhoTests(CommandTestCase):

    def sweep(self, out, rhos):
        self.call('sweep_rho', dataset=str(self.blobs), algo='gssgd', rhos=rhos, runs=2, epochs=2, out=str(out))
        return (out / 'sweep.csv').read_text().splitlines()

    def test_rows_per_rho(self):
        lines = self.sweep(self.tmp / 'sweep', ['0', '4', '10%'])
        self.assertEqual(len(lines), 4)
        self.assertTrue(lines[1].startswith('0,sgd,1,0%,'))
        self.assertTrue(lines[2].startswith('4,gssgd,4,'))
        # 10% of the 64 training examples
        self.assertTrue(lines[3].startswith('6,gssgd,6,'))
        self.assertEqual(lines[0].split(',')[-2:], ['p_vs_sequential', 'p_sequential_greater'])
        self.assertEqual(lines[1].split(',')[-2:], ['', ''])
        for line in lines[2:]:
            two_sided, one_sided = (float(value) for value in line.split(',')[-2:])
            self.assertTrue(0.0 < two_sided <= 1.0)
            self.assertTrue(0.0 < one_sided <= 1.0)

    def test_one_sided_column_matches_paired_test(self):
        config = ExperimentConfig(dataset=str(self.blobs), algorithm='gssgd', runs=4, epochs=2)
        rows, outcomes = sweep_rho(config, load_dataset(config), ['0', '8'])
        sequential_acc, rho_acc = paired_accuracies(outcomes[0], outcomes[1])
        expected = wilcoxon_signed_rank(sequential_acc, rho_acc, 'greater').p_value if sequential_acc else None
        self.assertEqual(rows[1][-1], expected)
        self.assertIsNone(rows[0][-1])

    def test_sequential_sentinel_only(self):
        self.assertEqual(len(self.sweep(self.tmp / 'zero', ['0'])), 2)

    def test_deterministic(self):
        first = self.sweep(self.tmp / 'a', ['0', '5'])
        second = self.sweep(self.tmp / 'b', ['0', '5'])
        self.assertEqual(first, second)

    def test_bad_rho(self):
        self.assertExitCode(2, 'sweep_rho', dataset=str(self.blobs), rhos=['-1'], out=str(self.tmp / 'x'))
        self.assertExitCode(2, 'sweep_rho', dataset=str(self.blobs), rhos=['many'], out=str(self.tmp / 'x'))


class FilterOutliersTests(CommandTestCase):

    def setUp(self):
        super().setUp()
        self.source = write_rows(self.tmp / 'outlier.csv', OUTLIER_ROWS)

    def test_removes_hand_built_outlier(self):
        output = self.call('filter_outliers', input=str(self.source), output=str(self.tmp / 'clean.csv'))
        self.assertIn('Removed 1 of 10 rows', output)
        self.assertEqual((self.tmp / 'clean.csv').read_text().splitlines(),
                         [','.join(row) for row in OUTLIER_ROWS[:9]])

    def test_huge_factor_removes_nothing(self):
        output = self.call('filter_outliers', input=str(self.source), output=str(self.tmp / 'same.csv'),
                           factor=1e9)
        self.assertIn('Removed 0 of 10 rows', output)

    def test_unreadable_input(self):
        self.assertExitCode(2, 'filter_outliers', input=str(self.tmp / 'absent.csv'),
                            output=str(self.tmp / 'x.csv'))
