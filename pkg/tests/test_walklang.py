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

from io import StringIO
import unittest

import numpy as np

from hetero.hawe.exceptions import EnumerationLimitExceeded, GraphError, ValidationError
from hetero.hawe.hetgraph import HeteroGraph, gen_er, gen_pinwheel
from hetero.hawe.walklang import (AnonWalk, Walk, WalkDistribution, anonymize, anonymize_batch,
        bell, check_mode, count_haws, decode_token, empirical_distribution, encode_walks,
        enumerate_aws, exact_walk_distribution, node_rng, sample_walk, sample_walks, to_chaw,
        to_haw, tokenize, tv_distance, write_distribution)


def aba_path():
    # 0(A) - 1(B) - 2(A), plus an isolated node 3
    return HeteroGraph.from_edges(4, [(0, 1), (1, 2)], [0, 1, 0, 0], ['A', 'B'])


class TestAnonymize(unittest.TestCase):
    def test_aw(self):
        self.assertEqual(anonymize(Walk((7, 3, 9, 7))).positions, (0, 1, 2, 0))
        self.assertEqual(anonymize(Walk((5, 2, 5, 2, 8))).token(), '0-1-0-1-2')

    def test_haw(self):
        g = aba_path()
        haw = to_haw(Walk((0, 1, 2, 1)), g)
        self.assertEqual(haw.entries, ((0, 0), (1, 1), (2, 0), (1, 1)))
        self.assertEqual(haw.token(g.type_names), '0A-1B-2A-1B')
        self.assertEqual(haw.positions(), (0, 1, 2, 1))

    def test_chaw(self):
        g = aba_path()
        chaw = to_chaw(to_haw(Walk((1, 0, 1, 2)), g))
        self.assertEqual(chaw.aw, AnonWalk((0, 1, 0, 2)))
        self.assertEqual(chaw.type_counts, ((1, 2), (0, 2)))
        self.assertEqual(chaw.token(g.type_names), '0-1-0-2|B:2,A:2')

    def test_chaw_coarser_than_haw(self):
        g = HeteroGraph.from_edges(6, [(i, i + 1) for i in range(5)], [0, 1, 1, 0, 1, 0], ['A', 'B'])
        a, b = Walk((0, 1, 2, 3)), Walk((5, 4, 3, 2))
        self.assertNotEqual(to_haw(a, g).token(), to_haw(b, g).token())
        self.assertEqual(tokenize(a, g, 'chaw').token(g.type_names),
                '0-1-2-3|A:2,B:2')
        self.assertEqual(tokenize(b, g, 'chaw').token(g.type_names),
                '0-1-2-3|A:2,B:2')

    def test_tokenize_modes(self):
        g = aba_path()
        w = Walk((0, 1, 0))
        self.assertEqual(tokenize(w, g, 'aw').token(), '0-1-0')
        self.assertEqual(tokenize(w, g, 'HAW').token(g.type_names), '0A-1B-0A')
        with self.assertRaises(ValidationError):
            tokenize(w, g, 'walk')

    def test_check_mode(self):
        self.assertEqual(check_mode('Chaw'), 'chaw')
        with self.assertRaises(ValidationError):
            check_mode('')


class TestCounting(unittest.TestCase):
    def test_bell(self):
        self.assertEqual([bell(l) for l in range(11)],
                [1, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975])
        self.assertEqual(bell(20), 51724158235372)
        with self.assertRaises(ValidationError):
            bell(-1)

    def test_enumerate_aws(self):
        aws = enumerate_aws(3)
        self.assertEqual([aw.token() for aw in aws],
                ['0-1-0-1', '0-1-0-2', '0-1-2-0', '0-1-2-1', '0-1-2-3'])
        for l in range(1, 9):
            aws = enumerate_aws(l)
            self.assertEqual(len(aws), bell(l))
            self.assertEqual(aws, sorted(aws, key=lambda aw: aw.positions))

    def test_enumeration_guard(self):
        with self.assertRaises(EnumerationLimitExceeded):
            enumerate_aws(11)
        with self.assertRaises(EnumerationLimitExceeded):
            enumerate_aws(0)

    def test_count_haws(self):
        self.assertEqual(count_haws(2, 2), (12, 8))
        self.assertEqual(count_haws(1, 3), (9, 3))
        for l in range(1, 7):
            self.assertEqual(count_haws(l, 1), (bell(l), bell(l)))
        with self.assertRaises(ValidationError):
            count_haws(3, 0)


class TestDistributions(unittest.TestCase):
    def test_exact_path(self):
        g = aba_path()
        dist = exact_walk_distribution(g, 0, 2, 'haw')
        self.assertEqual(dict(dist.items()), {'0A-1B-0A': 0.5, '0A-1B-2A': 0.5})
        self.assertAlmostEqual(dist.total(), 1.0)
        dist = exact_walk_distribution(g, 1, 2, 'aw')
        self.assertEqual(dict(dist.items()), {'0-1-0': 1.0})

    def test_exact_chaw(self):
        dist = exact_walk_distribution(aba_path(), 0, 2, 'chaw')
        self.assertEqual(sorted(dist.support), ['0-1-0|A:2,B:1', '0-1-2|A:2,B:1'])

    def test_exact_sums_to_one(self):
        g = gen_pinwheel(6, 2, heterogeneous=True)
        for mode in ('aw', 'haw', 'chaw'):
            dist = exact_walk_distribution(g, 0, 5, mode)
            self.assertAlmostEqual(dist.total(), 1.0, places=12)

    def test_structural_equivalence(self):
        # hubs of a homogeneous pinwheel are automorphic
        g = gen_pinwheel(6, 2)
        a = exact_walk_distribution(g, 0, 4, 'haw')
        b = exact_walk_distribution(g, 3, 4, 'haw')
        self.assertTrue(a.isclose(b))

    def test_types_distinguish(self):
        g = gen_pinwheel(6, 2, heterogeneous=True)
        a = exact_walk_distribution(g, 0, 3, 'haw')
        b = exact_walk_distribution(g, 1, 3, 'haw')
        self.assertGreater(tv_distance(a, b), 0.0)
        self.assertTrue(a.isclose(exact_walk_distribution(g, 2, 3, 'haw')))
        self.assertTrue(exact_walk_distribution(g, 0, 3, 'aw').isclose(
                exact_walk_distribution(g, 1, 3, 'aw')))

    def test_budget(self):
        g = gen_er(60, 0.3, seed=4)
        with self.assertRaises(EnumerationLimitExceeded):
            exact_walk_distribution(g, 0, 6, 'aw', budget=1000)

    def test_isolated_start(self):
        with self.assertRaises(GraphError):
            exact_walk_distribution(aba_path(), 3, 2, 'aw')
        with self.assertRaises(GraphError):
            sample_walk(aba_path(), 3, 2, np.random.default_rng(0))
        with self.assertRaises(GraphError):
            empirical_distribution(aba_path(), 3, 2, 'aw', 10, np.random.default_rng(0))

    def test_empirical_converges(self):
        g = gen_pinwheel(6, 2, heterogeneous=True)
        exact = exact_walk_distribution(g, 0, 4, 'haw')
        sampled = empirical_distribution(g, 0, 4, 'haw', 20000, node_rng(0, 0))
        self.assertAlmostEqual(sampled.total(), 1.0)
        self.assertLess(tv_distance(exact, sampled), 0.05)
        self.assertLessEqual(set(sampled.support), set(exact.support))

    def test_tv_distance(self):
        p = WalkDistribution({'a': 0.5, 'b': 0.5}, 'aw')
        q = WalkDistribution({'a': 1.0}, 'aw')
        self.assertAlmostEqual(tv_distance(p, q), 0.5)
        self.assertEqual(tv_distance(p, p), 0.0)

    def test_write_distribution(self):
        f = StringIO()
        write_distribution(WalkDistribution({'0-1-2': 0.25, '0-1-0': 0.75}, 'aw'), f)
        self.assertEqual(f.getvalue(), '0-1-0\t0.75\n0-1-2\t0.25\n')


class TestBatchKernels(unittest.TestCase):
    def test_sample_walks_are_walks(self):
        g = gen_er(50, 0.1, seed=2)
        start = int(np.flatnonzero(g.degrees)[0])
        walks = sample_walks(g, start, 6, 200, node_rng(1, start))
        self.assertEqual(walks.shape, (200, 7))
        self.assertTrue(np.all(walks[:, 0] == start))
        adj = g.adjacency
        for w in walks[:20]:
            for u, v in zip(w[:-1], w[1:]):
                self.assertIn(int(v), adj[u])

    def test_node_rng_reproducible(self):
        g = gen_pinwheel(4, 2)
        a = sample_walks(g, 0, 5, 10, node_rng(7, 0))
        b = sample_walks(g, 0, 5, 10, node_rng(7, 0))
        np.testing.assert_array_equal(a, b)

    def test_anonymize_batch(self):
        walks = np.array([[7, 3, 9, 7], [1, 2, 1, 2]])
        self.assertEqual(anonymize_batch(walks).tolist(), [[0, 1, 2, 0], [0, 1, 0, 1]])

    def test_encode_matches_tokenize(self):
        g = gen_pinwheel(6, 2, heterogeneous=True)
        walks = sample_walks(g, 0, 5, 100, node_rng(0, 0))
        for mode in ('aw', 'haw', 'chaw'):
            rows = encode_walks(walks, g.node_types, mode)
            for w, row in zip(walks, rows):
                self.assertEqual(decode_token(row, mode, g.type_names),
                        tokenize(Walk(tuple(w)), g, mode).token(g.type_names))


class TestWorkedExamples(unittest.TestCase):
    def test_forced_walk(self):
        g = HeteroGraph.from_edges(2, [(0, 1)], [0, 0], ['A'])
        self.assertEqual(dict(exact_walk_distribution(g, 0, 2, 'aw').items()), {'0-1-0': 1.0})

    def test_triangle(self):
        g = HeteroGraph.from_edges(3, [(0, 1), (1, 2), (0, 2)], [0, 0, 0], ['A'])
        for start in range(3):
            dist = exact_walk_distribution(g, start, 2, 'aw')
            self.assertEqual(dict(dist.items()), {'0-1-0': 0.5, '0-1-2': 0.5})

    def test_typed_neighborhoods(self):
        # A-centered stars: one with B leaves, one with mixed leaves
        g = HeteroGraph.from_edges(8, [(0, 1), (0, 2), (0, 3), (4, 5), (4, 6), (4, 7)],
                [0, 1, 1, 1, 0, 1, 0, 1], ['A', 'B'])
        self.assertTrue(exact_walk_distribution(g, 0, 2, 'aw').isclose(
                exact_walk_distribution(g, 4, 2, 'aw')))
        self.assertGreater(tv_distance(exact_walk_distribution(g, 0, 2, 'haw'),
                exact_walk_distribution(g, 4, 2, 'haw')), 0.1)

    def all_walks(self, graph, max_length):
        walks = [(v,) for v in range(graph.num_nodes) if graph.degree(v)]
        out = []
        for _ in range(max_length):
            walks = [w + (int(v),) for w in walks for v in graph.neighbors(w[-1])]
            out.extend(walks)
        return [Walk(w) for w in out]

    def test_projection_and_hierarchy(self):
        g = HeteroGraph.from_edges(6, [(0, 1), (1, 2), (2, 3), (3, 0), (2, 4), (4, 5)],
                [0, 1, 0, 1, 1, 0], ['A', 'B'])
        walks = self.all_walks(g, 4)
        tokens = {}
        for w in walks:
            aw, haw = anonymize(w), to_haw(w, g)
            chaw = to_chaw(haw)
            self.assertEqual(haw.positions(), aw.positions)
            self.assertEqual(chaw.aw, aw)
            self.assertEqual(sum(c for _, c in chaw.type_counts), len(w.nodes))
            self.assertLessEqual(len(chaw.type_counts), min(g.num_types, w.length + 1))
            tokens.setdefault(haw, set()).add((chaw, aw))
        for haw, coarser in tokens.items():
            self.assertEqual(len(coarser), 1)
        by_chaw = {}
        for w in walks:
            by_chaw.setdefault(to_chaw(to_haw(w, g)), set()).add(anonymize(w))
        self.assertTrue(all(len(s) == 1 for s in by_chaw.values()))

    def test_label_invariance(self):
        g = gen_er(30, 0.2, num_types=2, seed=6)
        perm = np.random.default_rng(3).permutation(30)
        h = g.permuted(perm)
        rng = np.random.default_rng(0)
        start = int(np.flatnonzero(g.degrees)[0])
        for _ in range(20):
            w = sample_walk(g, start, 5, rng)
            moved = Walk(tuple(int(perm[v]) for v in w.nodes))
            self.assertEqual(anonymize(moved), anonymize(w))
            self.assertEqual(to_haw(moved, h), to_haw(w, g))

    def test_single_type_bijection(self):
        g = gen_pinwheel(6, 2)
        for start in (0, 6, 7):
            aw = exact_walk_distribution(g, start, 4, 'aw')
            haw = exact_walk_distribution(g, start, 4, 'haw')
            self.assertEqual(len(aw), len(haw))
            self.assertEqual(sorted(aw.support.values()), sorted(haw.support.values()))

    def test_random_graphs_sum_to_one(self):
        rng = np.random.default_rng(11)
        checked = 0
        for seed in range(50):
            n = int(rng.integers(5, 13))
            g = gen_er(n, 0.35, num_types=int(rng.integers(1, 4)), seed=seed)
            if not g.degrees.any():
                g = HeteroGraph.from_edges(n, [(0, 1)], g.node_types, g.type_names)
            start = int(rng.choice(np.flatnonzero(g.degrees)))
            for mode in ('aw', 'haw', 'chaw'):
                self.assertAlmostEqual(exact_walk_distribution(g, start, 4, mode).total(), 1.0,
                        delta=1e-9)
            checked += 1
        self.assertEqual(checked, 50)

    def test_tv_shrinks_with_samples(self):
        g = gen_pinwheel(6, 2, heterogeneous=True)
        exact = exact_walk_distribution(g, 0, 4, 'haw')
        medians = []
        for samples in (2 ** k for k in range(8, 15)):
            tvs = [tv_distance(exact, empirical_distribution(g, 0, 4, 'haw', samples,
                    node_rng(seed, 0))) for seed in range(20)]
            medians.append(float(np.median(tvs)))
        self.assertEqual(medians, sorted(medians, reverse=True))


class TestSampleWalk(unittest.TestCase):
    def test_forced_walk(self):
        g = HeteroGraph.from_edges(2, [(0, 1)], [0, 0], ['A'])
        self.assertEqual(sample_walk(g, 0, 3, np.random.default_rng(0)).nodes, (0, 1, 0, 1))
        walks = sample_walks(g, 0, 3, 5, node_rng(0, 0))
        self.assertEqual(walks.tolist(), [[0, 1, 0, 1]] * 5)

    def star(self):
        return HeteroGraph.from_edges(4, [(0, 1), (0, 2), (0, 3)], [0, 1, 1, 1], ['A', 'B'])

    def test_uniform_transition(self):
        walks = sample_walks(self.star(), 0, 1, 10 ** 5, node_rng(3, 0))
        freq = np.bincount(walks[:, 1], minlength=4)[1:] / 10 ** 5
        for f in freq:
            self.assertAlmostEqual(f, 1 / 3, delta=0.02)

    def test_uniform_transition_reference(self):
        g = self.star()
        rng = np.random.default_rng(4)
        steps = [sample_walk(g, 0, 1, rng).nodes[1] for _ in range(20000)]
        freq = np.bincount(steps, minlength=4)[1:] / len(steps)
        for f in freq:
            self.assertAlmostEqual(f, 1 / 3, delta=0.02)

    def test_leaf_returns_to_center(self):
        walks = sample_walks(self.star(), 2, 2, 200, node_rng(5, 2))
        self.assertTrue(np.all(walks[:, 1] == 0))
        self.assertTrue(set(walks[:, 2].tolist()) <= {1, 2, 3})

    def test_preconditions(self):
        g = aba_path()
        with self.assertRaises(GraphError):
            sample_walk(g, 3, 2, np.random.default_rng(0))
        with self.assertRaises(ValidationError):
            sample_walk(g, 0, 0, np.random.default_rng(0))
        with self.assertRaises(ValidationError):
            sample_walks(g, 0, 0, 4, np.random.default_rng(0))
