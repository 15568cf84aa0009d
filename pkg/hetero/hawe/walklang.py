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

'''
Walks and their anonymized forms.

A walk ``(v_0, ..., v_l)`` of length ``l`` (edges) is mapped to

* an anonymous walk (AW): each entry replaced by the number of distinct
  nodes seen before its first occurrence, 0-based;
* a heterogeneous anonymous walk (HAW): the AW with each entry paired with
  the node's type;
* a coarse HAW (CHAW): the AW plus the ordered list of (type, count) over
  walk positions, types ordered by first occurrence.

Canonical token strings are ``0-1-2-0`` (AW), ``0A-1B-2A-0A`` (HAW) and
``0-1-2-0|A:3,B:1`` (CHAW).  Besides the per-walk objects, the module
provides batch kernels that sample and encode many walks at once as integer
rows; the corpus builder works on those rows and only renders strings for
lexicon entries.
'''

import logging
import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from ._jit import jit
from .exceptions import EnumerationLimitExceeded, GraphError, ValidationError
from .hetgraph import default_type_names

logger = logging.getLogger(__name__)

MODES = ('aw', 'haw', 'chaw')
MAX_ENUM_LENGTH = 10
DEFAULT_BRANCH_BUDGET = 10 ** 7


def check_mode(mode):
    mode = str(mode).lower()
    if mode not in MODES:
        raise ValidationError('unknown walk mode {!r}; expected one of {}'.format(mode, ', '.join(MODES)))
    return mode


@dataclass(frozen=True)
class Walk:
    nodes: tuple

    @property
    def length(self):
        return len(self.nodes) - 1


@dataclass(frozen=True)
class AnonWalk:
    positions: tuple

    def token(self, type_names=None):
        return '-'.join(str(p) for p in self.positions)


@dataclass(frozen=True)
class Haw:
    entries: tuple

    def positions(self):
        return tuple(p for p, _ in self.entries)

    def token(self, type_names=None):
        names = type_names or _names_for(t for _, t in self.entries)
        return '-'.join('{}{}'.format(p, names[t]) for p, t in self.entries)


@dataclass(frozen=True)
class Chaw:
    aw: AnonWalk
    type_counts: tuple

    def token(self, type_names=None):
        names = type_names or _names_for(t for t, _ in self.type_counts)
        return '{}|{}'.format(self.aw.token(),
                ','.join('{}:{}'.format(names[t], c) for t, c in self.type_counts))


def _names_for(type_ids):
    return default_type_names(max(type_ids, default=0) + 1)


class WalkDistribution:
    '''
    Probability of each anonymized token among walks from one start node.
    '''
    def __init__(self, support, mode):
        self.support = dict(support)
        self.mode = mode

    def total(self):
        return math.fsum(self.support.values())

    def items(self):
        'Items sorted by descending probability, ties by token.'
        return sorted(self.support.items(), key=lambda kv: (-kv[1], kv[0]))

    def __getitem__(self, token):
        return self.support[token]

    def __len__(self):
        return len(self.support)

    def __eq__(self, other):
        return isinstance(other, WalkDistribution) and self.support == other.support

    def isclose(self, other, tol=1e-12):
        return tv_distance(self, other) <= tol


def node_rng(seed, node):
    '''
    Generator for one node's walks, independent of scheduling order.
    '''
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(int(node),)))


def sample_walk(graph, start, length, rng):
    '''
    Uniform random walk of ``length`` edges from ``start``.

    Raises:
        GraphError: the start node is isolated
    '''
    if length < 1:
        raise ValidationError('walk length must be at least 1')
    if graph.degree(start) == 0:
        raise GraphError('cannot walk from isolated node {}'.format(graph.raw_ids[start]))
    nodes = [int(start)]
    for _ in range(length):
        nbrs = graph.neighbors(nodes[-1])
        nodes.append(int(nbrs[rng.integers(len(nbrs))]))
    return Walk(tuple(nodes))


def anonymize(walk):
    first = {}
    return AnonWalk(tuple(first.setdefault(v, len(first)) for v in walk.nodes))


def to_haw(walk, graph):
    aw = anonymize(walk)
    return Haw(tuple((p, int(graph.node_types[v])) for p, v in zip(aw.positions, walk.nodes)))


def to_chaw(haw):
    counts = {}
    for _, t in haw.entries:
        counts[t] = counts.get(t, 0) + 1
    return Chaw(AnonWalk(haw.positions()), tuple(counts.items()))


def tokenize(walk, graph, mode):
    'Anonymizes a walk according to mode (aw, haw or chaw).'
    mode = check_mode(mode)
    if mode == 'aw':
        return anonymize(walk)
    haw = to_haw(walk, graph)
    return haw if mode == 'haw' else to_chaw(haw)


def bell(l):
    '''
    The l-th Bell number via B_l = sum_k C(l-1, k) B_k, exact.
    '''
    if l < 0:
        raise ValidationError('bell() needs l >= 0')
    b = [1]
    for n in range(1, l + 1):
        b.append(sum(math.comb(n - 1, k) * b[k] for k in range(n)))
    return b[l]


def _check_enum_length(l):
    if not 1 <= l <= MAX_ENUM_LENGTH:
        raise EnumerationLimitExceeded(
                'walk length {} outside enumerable range 1..{}'.format(l, MAX_ENUM_LENGTH))


def enumerate_aws(l):
    '''
    Every anonymous walk of length l, lexicographically sorted.
    '''
    _check_enum_length(l)
    out = []
    seq = [0]

    def extend(top):
        if len(seq) == l + 1:
            out.append(AnonWalk(tuple(seq)))
            return
        for v in range(top + 2):
            if v == seq[-1]:
                continue
            seq.append(v)
            extend(max(top, v))
            seq.pop()

    extend(0)
    return out


def count_haws(l, num_types):
    '''
    Returns ``(exact, bound)``: the exact number of HAW patterns of length l
    over num_types types (each distinct AW position typed independently) and
    the closed-form ``num_types**l * bell(l)``.  Neither is asserted against
    the other.
    '''
    if num_types < 1:
        raise ValidationError('num_types must be positive')
    exact = sum(num_types ** (max(aw.positions) + 1) for aw in enumerate_aws(l))
    return exact, num_types ** l * bell(l)


def exact_walk_distribution(graph, start, length, mode, budget=DEFAULT_BRANCH_BUDGET):
    '''
    Exhaustive depth-first enumeration of the walks of ``length`` edges from
    ``start``.  Each walk contributes the product of 1/degree along its path
    to its token.

    Raises:
        EnumerationLimitExceeded: more than ``budget`` branchings
        GraphError: isolated start node
    '''
    mode = check_mode(mode)
    if length < 1:
        raise ValidationError('walk length must be at least 1')
    if graph.degree(start) == 0:
        raise GraphError('cannot walk from isolated node {}'.format(graph.raw_ids[start]))
    names = graph.type_names
    acc = defaultdict(float)
    path = [int(start)]
    spent = 0

    def descend(prob):
        nonlocal spent
        if len(path) == length + 1:
            acc[tokenize(Walk(tuple(path)), graph, mode).token(names)] += prob
            return
        nbrs = graph.neighbors(path[-1])
        spent += len(nbrs)
        if spent > budget:
            raise EnumerationLimitExceeded('walk tree exceeds {} branchings'.format(budget))
        step = prob / len(nbrs)
        for v in nbrs:
            path.append(int(v))
            descend(step)
            path.pop()

    descend(1.0)
    return WalkDistribution(acc, mode)


def tv_distance(p, q):
    'Total-variation distance between two WalkDistributions.'
    keys = set(p.support) | set(q.support)
    return 0.5 * math.fsum(abs(p.support.get(k, 0.0) - q.support.get(k, 0.0)) for k in keys)


def empirical_distribution(graph, start, length, mode, samples, rng):
    '''
    Token frequencies among ``samples`` sampled walks from ``start``.
    '''
    mode = check_mode(mode)
    if graph.degree(start) == 0:
        raise GraphError('cannot walk from isolated node {}'.format(graph.raw_ids[start]))
    walks = sample_walks(graph, start, length, samples, rng)
    rows = encode_walks(walks, graph.node_types, mode)
    uniq, counts = np.unique(rows, axis=0, return_counts=True)
    return WalkDistribution(
            {decode_token(r, mode, graph.type_names): c / samples for r, c in zip(uniq, counts)},
            mode)


def write_distribution(dist, f):
    for token, p in dist.items():
        f.write('{}\t{:.12g}\n'.format(token, p))


@jit(nopython=True, nogil=True, cache=True)
def _walk_kernel(indptr, indices, start, uniforms, out):
    for r in range(out.shape[0]):
        v = start
        out[r, 0] = v
        for s in range(uniforms.shape[1]):
            lo = indptr[v]
            deg = indptr[v + 1] - lo
            k = int(uniforms[r, s] * deg)
            if k >= deg:
                k = deg - 1
            v = indices[lo + k]
            out[r, s + 1] = v


def sample_walks(graph, start, length, count, rng):
    '''
    ``count`` walks of ``length`` edges from ``start`` as a (count, length+1)
    array.  Uses one uniform draw per step from ``rng``.
    '''
    if length < 1:
        raise ValidationError('walk length must be at least 1')
    out = np.empty((count, length + 1), dtype=np.int64)
    _walk_kernel(graph.indptr, graph.indices, int(start), rng.random((count, length)), out)
    return out


@jit(nopython=True, nogil=True, cache=True)
def _anonymize_kernel(walks, out):
    width = walks.shape[1]
    for r in range(walks.shape[0]):
        nxt = 0
        for i in range(width):
            pos = -1
            for j in range(i):
                if walks[r, j] == walks[r, i]:
                    pos = out[r, j]
                    break
            if pos < 0:
                pos = nxt
                nxt += 1
            out[r, i] = pos


@jit(nopython=True, nogil=True, cache=True)
def _type_count_kernel(types, out):
    # out rows: (type, count) pairs in first-occurrence order, padded with -1
    width = types.shape[1]
    for r in range(types.shape[0]):
        used = 0
        for i in range(width):
            t = types[r, i]
            slot = -1
            for k in range(used):
                if out[r, 2 * k] == t:
                    slot = k
                    break
            if slot < 0:
                out[r, 2 * used] = t
                out[r, 2 * used + 1] = 1
                used += 1
            else:
                out[r, 2 * slot + 1] += 1


def anonymize_batch(walks):
    out = np.empty(walks.shape, dtype=np.int64)
    _anonymize_kernel(np.ascontiguousarray(walks, dtype=np.int64), out)
    return out


def encode_walks(walks, node_types, mode):
    '''
    Encodes walks as fixed-width integer rows, one per walk.  Two walks get
    equal rows iff they map to the same token under ``mode``.

    aw:   positions
    haw:  position, type interleaved
    chaw: positions followed by (type, count) pairs padded with -1
    '''
    positions = anonymize_batch(walks)
    if mode == 'aw':
        return positions
    types = np.asarray(node_types, dtype=np.int64)[walks]
    if mode == 'haw':
        return np.stack([positions, types], axis=2).reshape(len(walks), -1)
    counts = np.full((len(walks), 2 * walks.shape[1]), -1, dtype=np.int64)
    _type_count_kernel(np.ascontiguousarray(types), counts)
    return np.concatenate([positions, counts], axis=1)


def decode_token(row, mode, type_names):
    'Canonical token string for one encoded row.'
    row = [int(x) for x in row]
    if mode == 'aw':
        return AnonWalk(tuple(row)).token()
    if mode == 'haw':
        return Haw(tuple(zip(row[0::2], row[1::2]))).token(type_names)
    width = len(row) // 3
    pairs = tuple((t, c) for t, c in zip(row[width::2], row[width + 1::2]) if t >= 0)
    return Chaw(AnonWalk(tuple(row[:width])), pairs).token(type_names)
