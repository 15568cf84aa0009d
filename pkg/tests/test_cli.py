# Copyright (c) 2024 by the hawe authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

from contextlib import redirect_stderr, redirect_stdout
from io import StringIO
import os
import shutil
import tempfile
import unittest

from hetero.hawe.__main__ import main, read_labels
from hetero.hawe.exceptions import GraphFormatError

SMALL = ['--samples', '24', '--walk-length', '3']
TRAIN = ['--dim', '8', '--window', '3', '--epochs', '3']


class CLITestCase(unittest.TestCase):
    def setUp(self):
        self.dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.dir)

    def path(self, name):
        return os.path.join(self.dir, name)

    def run_main(self, *argv):
        out, err = StringIO(), StringIO()
        with redirect_stdout(out), redirect_stderr(err):
            code = main(['--out-dir', self.dir] + list(argv))
        return code, out.getvalue(), err.getvalue()

    def manifest(self, command):
        with open(self.path(command + '.manifest')) as f:
            return dict(line.rstrip('\n').split('=', 1) for line in f)

    def generate(self, *extra):
        code, _, err = self.run_main('generate', 'pinwheel', '--hetero', *extra)
        self.assertEqual(code, 0, err)

    def graph_args(self):
        return ['--nodes-file', self.path('nodes.tsv'), '--edges-file', self.path('edges.tsv')]


class TestGenerate(CLITestCase):
    def test_pinwheel(self):
        self.generate()
        roles = read_labels(self.path('roles.tsv'))
        self.assertEqual(len(roles), 24)
        self.assertEqual(len(set(roles.values())), 6)
        manifest = self.manifest('generate')
        self.assertEqual(manifest['subcommand'], 'generate')
        self.assertEqual(manifest['config.seed'], '0')
        self.assertEqual(manifest['result.num_roles'], '6')
        self.assertEqual(len(manifest['artifact.edges.tsv.sha256']), 64)
        self.assertEqual(list(manifest), sorted(manifest))

    def test_er(self):
        code, _, err = self.run_main('generate', 'er', '--nodes', '50', '--types', '3')
        self.assertEqual(code, 0, err)
        manifest = self.manifest('generate')
        self.assertEqual(manifest['config.edge_prob'], '0.2')
        self.assertEqual(manifest['result.num_nodes'], '50')

    def test_invalid_pinwheel(self):
        code, _, err = self.run_main('generate', 'pinwheel', '--hetero', '--blades', '7')
        self.assertEqual(code, 3)
        self.assertTrue(err.startswith('error: ValidationError: '))

    def test_flags_after_subcommand(self):
        code, _, err = self.run_main('generate', 'pinwheel', '--blades', '8', '--blade-len', '2',
                '--hetero', '--seed', '1')
        self.assertEqual(code, 0, err)
        manifest = self.manifest('generate')
        self.assertEqual(manifest['config.seed'], '1')
        self.assertEqual(manifest['result.num_roles'], '6')
        code, _, err = self.run_main('sample', *self.graph_args(), *SMALL, '--mode', 'haw',
                '--seed', '2', '--threads', '2')
        self.assertEqual(code, 0, err)
        self.assertEqual(self.manifest('sample')['config.seed'], '2')

    def test_top_level_seed_kept(self):
        self.generate()
        code, _, err = self.run_main('--seed', '5', 'sample', *self.graph_args(), *SMALL)
        self.assertEqual(code, 0, err)
        self.assertEqual(self.manifest('sample')['config.seed'], '5')

    def test_wl_roles(self):
        self.generate()
        os.remove(self.path('roles.tsv'))
        code, _, err = self.run_main('wl-roles', *self.graph_args())
        self.assertEqual(code, 0, err)
        self.assertEqual(len(set(read_labels(self.path('roles.tsv')).values())), 6)


class TestPipeline(CLITestCase):
    def test_sample_train_classify_search(self):
        self.generate()
        code, _, err = self.run_main('sample', *self.graph_args(), *SMALL, '--tsv')
        self.assertEqual(code, 0, err)
        for name in ('corpus.bin', 'lexicon.tsv', 'corpus.tsv'):
            self.assertTrue(os.path.exists(self.path(name)), name)
        self.assertEqual(self.manifest('sample')['result.contexts'], '24')

        code, _, err = self.run_main('train', '--corpus', self.path('corpus.bin'), *TRAIN)
        self.assertEqual(code, 0, err)
        with open(self.path('embeddings.tsv')) as f:
            lines = f.read().splitlines()
        self.assertTrue(lines[0].startswith('# '))
        self.assertEqual(len(lines), 25)
        self.assertEqual(len(lines[1].split('\t')), 9)
        self.assertEqual(self.manifest('train')['config.epochs'], '3')

        code, out, err = self.run_main('--seed', '1', 'classify',
                '--embeddings', self.path('embeddings.tsv'),
                '--labels', self.path('roles.tsv'), '--repeats', '4')
        self.assertEqual(code, 0, err)
        self.assertIn('mean accuracy', out)
        manifest = self.manifest('classify')
        self.assertEqual(manifest['config.repeats'], '4')
        self.assertEqual(manifest['config.seed'], '1')
        self.assertTrue(0.0 <= float(manifest['result.mean_accuracy']) <= 1.0)

        raw = lines[1].split('\t')[0]
        code, out, err = self.run_main('search', '--embeddings', self.path('embeddings.tsv'),
                '--target', raw, '-k', '3')
        self.assertEqual(code, 0, err)
        self.assertEqual(len(out.splitlines()), 4)
        self.assertNotIn('\t{}\t'.format(raw), out)

        code, _, err = self.run_main('search', '--embeddings', self.path('embeddings.tsv'),
                '--target', 'nope')
        self.assertEqual(code, 3)

    def test_reproducible_corpus(self):
        self.generate()
        self.run_main('sample', *self.graph_args(), *SMALL)
        first = self.manifest('sample')['artifact.corpus.bin.sha256']
        self.run_main('--threads', '3', 'sample', *self.graph_args(), *SMALL)
        self.assertEqual(self.manifest('sample')['artifact.corpus.bin.sha256'], first)

    def test_walk_dist(self):
        self.generate()
        code, _, err = self.run_main('walk-dist', *self.graph_args(), '--start', '0',
                '--walk-length', '3')
        self.assertEqual(code, 0, err)
        with open(self.path('distribution.tsv')) as f:
            probs = [float(line.split('\t')[1]) for line in f]
        self.assertAlmostEqual(sum(probs), 1.0)
        code, _, err = self.run_main('walk-dist', *self.graph_args(), '--start', '0',
                '--walk-length', '3', '--sampled', '--samples', '500')
        self.assertEqual(code, 0, err)

    def test_sweep(self):
        self.generate()
        code, out, err = self.run_main('sweep', *self.graph_args(), *SMALL, *TRAIN,
                '--param', 'd', '--values', '4', '8', '--metric', 'nn')
        self.assertEqual(code, 0, err)
        self.assertEqual(out.splitlines()[0], 'd\tmean_accuracy')
        self.assertEqual(len(out.splitlines()), 3)

    def test_bench(self):
        code, out, err = self.run_main('bench', '--sizes', '30', '60', '--runs', '1',
                '--samples', '12', '--walk-length', '3', '--dim', '4', '--window', '2',
                '--epochs', '1')
        self.assertEqual(code, 0, err)
        self.assertEqual(len(out.splitlines()), 3)
        self.assertIn('result.loglog_slope', self.manifest('bench'))


class TestCount(CLITestCase):
    def test_count(self):
        code, out, _ = self.run_main('count', '--length', '2', '3', '--types', '2')
        self.assertEqual(code, 0)
        self.assertEqual(out.splitlines(), [
            'length\tbell\thaw_exact\thaw_bound',
            '2\t2\t12\t8',
            '3\t5\t{}\t40'.format(4 + 8 + 8 + 8 + 16),
            ])

    def test_count_manifest(self):
        code, out, err = self.run_main('count', '--length', '3', '--types', '2')
        self.assertEqual(code, 0, err)
        with open(self.path('count.tsv')) as f:
            self.assertEqual(f.read(), out)
        manifest = self.manifest('count')
        self.assertEqual(manifest['config.length'], '3')
        self.assertEqual(manifest['config.types'], '2')
        self.assertEqual(len(manifest['artifact.count.tsv.sha256']), 64)

    def test_limit(self):
        code, _, err = self.run_main('count', '--length', '12')
        self.assertEqual(code, 4)
        self.assertTrue(err.startswith('error: EnumerationLimitExceeded: '))


class TestConfig(CLITestCase):
    def write_config(self, text):
        path = self.path('hawe.conf')
        with open(path, 'w') as f:
            f.write(text)
        return path

    def test_config_file_and_flags(self):
        self.generate()
        config = self.write_config('samples: 20\nwalk-length: 2\nmode: aw\n')
        code, _, err = self.run_main('--config', config, 'sample', *self.graph_args())
        self.assertEqual(code, 0, err)
        manifest = self.manifest('sample')
        self.assertEqual(manifest['config.samples'], '20')
        self.assertEqual(manifest['config.mode'], 'aw')
        code, _, err = self.run_main('--config', config, 'sample', *self.graph_args(),
                '--samples', '30')
        self.assertEqual(code, 0, err)
        self.assertEqual(self.manifest('sample')['config.samples'], '30')

    def test_invalid_config(self):
        config = self.write_config('samples: 0\n')
        code, _, err = self.run_main('--config', config, 'count', '--length', '2')
        self.assertEqual(code, 3)
        self.assertIn('samples', err)

    def test_missing_config(self):
        code, _, err = self.run_main('--config', self.path('absent.conf'), 'count', '--length', '2')
        self.assertEqual(code, 3)


class TestErrors(CLITestCase):
    def test_usage(self):
        for argv in (['frobnicate'], ['sample'], ['generate', 'pinwheel', '--bogus']):
            code, out, err = self.run_main(*argv)
            self.assertEqual(code, 2)
            self.assertEqual(out, '')
            self.assertEqual(len(err.splitlines()), 1, err)
            self.assertTrue(err.startswith('error: usage: hawe'), err)

    def test_bad_edge_file(self):
        with open(self.path('nodes.tsv'), 'w') as f:
            f.write('a\tA\nb\tA\n')
        with open(self.path('edges.tsv'), 'w') as f:
            f.write('a\tb\na\tzz\n')
        code, _, err = self.run_main('sample', *self.graph_args())
        self.assertEqual(code, 3)
        self.assertEqual(err.splitlines()[-1],
                "error: GraphFormatError: {}:2: unknown node id 'zz'".format(self.path('edges.tsv')))

    def test_missing_file(self):
        code, _, err = self.run_main('sample', '--nodes-file', self.path('x'),
                '--edges-file', self.path('y'))
        self.assertEqual(code, 3)
        self.assertTrue(err.startswith('error: FileNotFoundError: '))

    def test_debug_reraises(self):
        with open(self.path('nodes.tsv'), 'w') as f:
            f.write('a\n')
        with open(self.path('edges.tsv'), 'w') as f:
            f.write('')
        with self.assertRaises(GraphFormatError):
            self.run_main('--debug', 'sample', *self.graph_args())

    def test_corrupt_corpus(self):
        with open(self.path('corpus.bin'), 'wb') as f:
            f.write(b'garbage garbage garbage')
        code, _, err = self.run_main('train', '--corpus', self.path('corpus.bin'))
        self.assertEqual(code, 3)
        self.assertTrue(err.startswith('error: CorpusVersionError: '))
