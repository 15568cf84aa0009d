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
Heterogeneous networks: an undirected simple graph whose nodes carry a type,
plus file IO, the synthetic families used for experiments (pinwheel,
Erdos-Renyi, Barabasi-Albert) and a typed Weisfeiler-Lehman oracle that
provides ground-truth structural roles.

Edge types are not stored.

Example usage:

```python
from hetero.hawe.hetgraph import gen_pinwheel, wl_roles
g = gen_pinwheel(8, 2, heterogeneous=True)
print(wl_roles(g).num_roles)    # 6
```
'''

import logging
from dataclasses import dataclass

import networkx as nx
import numpy as np
from scipy import sparse

from .exceptions import GraphError, GraphFormatError, ValidationError

logger = logging.getLogger(__name__)


def default_type_names(num_types):
    return [chr(ord('A') + i) if i < 26 else 'T{}'.format(i) for i in range(num_types)]


class HeteroGraph:
    '''
    Undirected simple graph with dense node ids ``0..num_nodes-1``.

    Adjacency is kept in CSR form: the neighbors of ``u`` are
    ``indices[indptr[u]:indptr[u+1]]``, sorted ascending.  All arrays are
    frozen after construction, so a graph can be shared by many workers.
    '''
    def __init__(self, indptr, indices, node_types, type_names,
            labels=None, label_names=None, raw_ids=None):
        '''
        Args:
            indptr (array[int]): CSR row pointers, length num_nodes + 1
            indices (array[int]): concatenated sorted neighbor lists
            node_types (array[int]): type id per node
            type_names (list[str]): type id -> name
            labels (array[int]): optional class id per node, -1 if unlabeled
            label_names (list[str]): class id -> name
            raw_ids (list[str]): node id -> identifier used in files
        Raises:
            GraphError
        '''
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.node_types = np.asarray(node_types, dtype=np.int64)
        self.type_names = list(type_names)
        self.labels = None if labels is None else np.asarray(labels, dtype=np.int64)
        self.label_names = None if label_names is None else list(label_names)
        n = len(self.indptr) - 1
        self.raw_ids = [str(i) for i in range(n)] if raw_ids is None else [str(r) for r in raw_ids]
        self.validate()
        for a in (self.indptr, self.indices, self.node_types, self.labels):
            if a is not None:
                a.setflags(write=False)
        self._id_map = None

    @classmethod
    def from_edges(cls, num_nodes, edges, node_types, type_names=None, **kwargs):
        '''
        Builds a graph from an edge list, symmetrizing and deduplicating it.
        Self-loops are dropped with a warning.
        '''
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges.min() < 0 or edges.max() >= num_nodes):
            raise GraphError('unknown node id in edge list')
        loops = edges[:, 0] == edges[:, 1]
        if loops.any():
            logger.warning('dropping %i self-loops', int(loops.sum()))
            edges = edges[~loops]
        rows = np.concatenate([edges[:, 0], edges[:, 1]])
        cols = np.concatenate([edges[:, 1], edges[:, 0]])
        adj = sparse.coo_matrix((np.ones(len(rows), dtype=np.int32), (rows, cols)),
                shape=(num_nodes, num_nodes)).tocsr()
        adj.sum_duplicates()
        adj.sort_indices()
        node_types = np.asarray(node_types, dtype=np.int64)
        if type_names is None:
            type_names = default_type_names(int(node_types.max()) + 1 if len(node_types) else 1)
        return cls(adj.indptr, adj.indices, node_types, type_names, **kwargs)

    @property
    def num_nodes(self):
        return len(self.indptr) - 1

    @property
    def num_types(self):
        return len(self.type_names)

    @property
    def num_edges(self):
        return len(self.indices) // 2

    @property
    def degrees(self):
        return np.diff(self.indptr)

    @property
    def adjacency(self):
        return [self.neighbors(u).tolist() for u in range(self.num_nodes)]

    def degree(self, u):
        return int(self.indptr[u + 1] - self.indptr[u])

    def neighbors(self, u):
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def edges(self):
        'Yields each undirected edge once as (u, v) with u < v.'
        for u in range(self.num_nodes):
            for v in self.neighbors(u):
                if u < v:
                    yield u, int(v)

    def edge_array(self):
        rows = np.repeat(np.arange(self.num_nodes, dtype=np.int64), self.degrees)
        keep = rows < self.indices
        return np.stack([rows[keep], self.indices[keep]], axis=1)

    def node_id(self, raw_id):
        'Maps a raw identifier back to its dense node id.'
        if self._id_map is None:
            self._id_map = {r: i for i, r in enumerate(self.raw_ids)}
        try:
            return self._id_map[str(raw_id)]
        except KeyError:
            raise GraphError('unknown node id {!r}'.format(raw_id))

    def validate(self):
        '''
        Full scan of the structural invariants: symmetric, simple, ids in
        range, one type per node.
        '''
        n = self.num_nodes
        if n < 0 or self.indptr[0] != 0 or self.indptr[-1] != len(self.indices):
            raise GraphError('malformed adjacency pointers')
        if np.any(np.diff(self.indptr) < 0):
            raise GraphError('malformed adjacency pointers')
        if len(self.node_types) != n:
            raise GraphError('expected {} node types, got {}'.format(n, len(self.node_types)))
        if n and (self.node_types.min() < 0 or self.node_types.max() >= self.num_types):
            raise GraphError('node type id out of range')
        if self.labels is not None and len(self.labels) != n:
            raise GraphError('expected {} labels, got {}'.format(n, len(self.labels)))
        if len(self.raw_ids) != n:
            raise GraphError('expected {} raw ids, got {}'.format(n, len(self.raw_ids)))
        if len(self.indices) == 0:
            return
        if self.indices.min() < 0 or self.indices.max() >= n:
            raise GraphError('unknown node id in adjacency')
        rows = np.repeat(np.arange(n, dtype=np.int64), self.degrees)
        if np.any(rows == self.indices):
            raise GraphError('self-loop in adjacency')
        step = np.diff(self.indices)
        same_row = rows[1:] == rows[:-1]
        if np.any(step[same_row] <= 0):
            raise GraphError('adjacency lists must be sorted and free of duplicates')
        adj = sparse.csr_matrix((np.ones(len(self.indices), dtype=np.int8),
                self.indices, self.indptr), shape=(n, n))
        if (adj != adj.T).nnz:
            raise GraphError('adjacency is not symmetric')

    def permuted(self, perm):
        '''
        Returns a copy with node ``u`` renamed to ``perm[u]``.
        '''
        perm = np.asarray(perm, dtype=np.int64)
        n = self.num_nodes
        if sorted(perm.tolist()) != list(range(n)):
            raise ValidationError('not a permutation of 0..{}'.format(n - 1))
        inv = np.empty(n, dtype=np.int64)
        inv[perm] = np.arange(n)
        edges = perm[self.edge_array()]
        return HeteroGraph.from_edges(n, edges, self.node_types[inv], self.type_names,
                labels=None if self.labels is None else self.labels[inv],
                label_names=self.label_names,
                raw_ids=[self.raw_ids[i] for i in inv])

    def to_networkx(self):
        g = nx.Graph()
        for u in range(self.num_nodes):
            g.add_node(u, type=self.type_names[self.node_types[u]])
        g.add_edges_from(self.edges())
        return g

    def __repr__(self):
        return 'HeteroGraph(num_nodes={}, num_edges={}, num_types={})'.format(
                self.num_nodes, self.num_edges, self.num_types)


@dataclass
class RoleLabeling:
    roles: np.ndarray
    num_roles: int
    iterations: int = 0


def _data_lines(f):
    for lineno, line in enumerate(f, 1):
        line = line.rstrip('\r\n')
        if not line.strip() or line.lstrip().startswith('#'):
            continue
        yield lineno, line


def load_graph(node_file, edge_file):
    '''
    Reads a graph from a node TSV (raw_id, type_name[, class_label]) and an
    edge file (raw_src_id, raw_dst_id).  Node ids are densified in file order;
    type ids and class ids in order of first appearance.

    Raises:
        GraphFormatError
    '''
    raw_ids, node_types, labels = [], [], []
    type_ids, label_ids, index = {}, {}, {}
    with open(node_file, encoding='utf-8') as f:
        for lineno, line in _data_lines(f):
            fields = line.split('\t')
            if len(fields) not in (2, 3) or not fields[0] or not fields[1]:
                raise GraphFormatError(node_file, lineno,
                        'expected raw_id<TAB>type_name[<TAB>class_label]')
            raw, tname = fields[0], fields[1]
            label = fields[2] if len(fields) == 3 and fields[2] != '' else None
            tid = type_ids.setdefault(tname, len(type_ids))
            lid = -1 if label is None else label_ids.setdefault(label, len(label_ids))
            if raw in index:
                u = index[raw]
                if node_types[u] != tid:
                    raise GraphFormatError(node_file, lineno,
                            'node {!r} listed twice with conflicting type'.format(raw))
                if labels[u] != lid:
                    raise GraphFormatError(node_file, lineno,
                            'node {!r} listed twice with conflicting label'.format(raw))
                continue
            index[raw] = len(raw_ids)
            raw_ids.append(raw)
            node_types.append(tid)
            labels.append(lid)

    edges = []
    with open(edge_file, encoding='utf-8') as f:
        for lineno, line in _data_lines(f):
            # whitespace-separated edge lists are accepted when no tab is present
            fields = line.split('\t') if '\t' in line else line.split()
            if len(fields) != 2 or not fields[0] or not fields[1]:
                raise GraphFormatError(edge_file, lineno, 'expected raw_src_id<TAB>raw_dst_id')
            try:
                edges.append((index[fields[0]], index[fields[1]]))
            except KeyError as e:
                raise GraphFormatError(edge_file, lineno, 'unknown node id {!r}'.format(e.args[0]))

    has_labels = bool(label_ids)
    graph = HeteroGraph.from_edges(len(raw_ids), edges, node_types,
            sorted(type_ids, key=type_ids.get),
            labels=labels if has_labels else None,
            label_names=sorted(label_ids, key=label_ids.get) if has_labels else None,
            raw_ids=raw_ids)
    logger.info('loaded %r from %s and %s', graph, node_file, edge_file)
    isolated = int(np.sum(graph.degrees == 0))
    if isolated:
        logger.info('%i isolated nodes will receive no embedding', isolated)
    return graph


def write_graph(graph, node_file, edge_file):
    'Writes the node and edge files read by load_graph.'
    with open(node_file, 'w', encoding='utf-8') as f:
        for u in range(graph.num_nodes):
            fields = [graph.raw_ids[u], graph.type_names[graph.node_types[u]]]
            if graph.labels is not None and graph.labels[u] >= 0:
                names = graph.label_names
                fields.append(names[graph.labels[u]] if names else str(graph.labels[u]))
            f.write('\t'.join(fields) + '\n')
    with open(edge_file, 'w', encoding='utf-8') as f:
        for u, v in graph.edges():
            f.write('{}\t{}\n'.format(graph.raw_ids[u], graph.raw_ids[v]))


def write_roles(graph, roles, path):
    with open(path, 'w', encoding='utf-8') as f:
        for u in range(graph.num_nodes):
            f.write('{}\t{}\n'.format(graph.raw_ids[u], int(roles.roles[u])))


def gen_pinwheel(num_blades, blade_len, heterogeneous=False, seed=None):
    '''
    A ring of ``num_blades`` hub nodes, each carrying a pendant path of
    ``blade_len`` nodes.

    In heterogeneous mode hubs are type A and blade ``i`` node ``j``
    (counted outward from the hub) has type ``(i + j) % 2``, so neighboring
    blades carry opposite patterns and every underlying position splits
    into two typed roles.  Labels are the typed WL roles.  A non-None
    ``seed`` shuffles node ids.

    Raises:
        ValidationError
    '''
    if num_blades < 3 or blade_len < 1:
        raise ValidationError('pinwheel needs num_blades >= 3 and blade_len >= 1')
    if heterogeneous and num_blades % 2:
        raise ValidationError('heterogeneous pinwheel needs an even number of blades')
    n = num_blades * (1 + blade_len)
    types = np.zeros(n, dtype=np.int64)
    edges = []
    for i in range(num_blades):
        edges.append((i, (i + 1) % num_blades))
        prev = i
        for j in range(blade_len):
            v = num_blades + i * blade_len + j
            edges.append((prev, v))
            if heterogeneous:
                types[v] = (i + j) % 2
            prev = v
    names = ['A', 'B'] if heterogeneous else ['A']
    graph = HeteroGraph.from_edges(n, edges, types, names)
    if seed is not None:
        graph = graph.permuted(np.random.default_rng(seed).permutation(n))
    roles = wl_roles(graph)
    return HeteroGraph(graph.indptr, graph.indices, graph.node_types, graph.type_names,
            labels=roles.roles, label_names=[str(r) for r in range(roles.num_roles)],
            raw_ids=graph.raw_ids)


def _type_names(num_types, type_names):
    if type_names is None:
        return default_type_names(num_types)
    if len(type_names) != num_types:
        raise ValidationError('expected {} type names, got {}'.format(num_types, len(type_names)))
    return list(type_names)


def _random_types(num_nodes, num_types, seed):
    return np.random.default_rng([seed, 1]).integers(0, num_types, size=num_nodes)


def gen_er(num_nodes, edge_prob, num_types=2, seed=0, type_names=None):
    '''
    Erdos-Renyi G(n, p) with node types drawn uniformly at random.
    '''
    if not 0 <= edge_prob <= 1:
        raise ValidationError('edge_prob must lie in [0, 1]')
    if num_types < 1 or num_nodes < 1:
        raise ValidationError('num_nodes and num_types must be positive')
    g = nx.fast_gnp_random_graph(num_nodes, edge_prob, seed=seed)
    return HeteroGraph.from_edges(num_nodes, list(g.edges()),
            _random_types(num_nodes, num_types, seed), _type_names(num_types, type_names))


def gen_ba(num_nodes, edges_per_node=1, num_types=2, seed=0, type_names=None):
    '''
    Barabasi-Albert preferential attachment.  With ``edges_per_node=1`` the
    result is a tree.
    '''
    if edges_per_node < 1 or num_nodes <= edges_per_node:
        raise ValidationError('need 1 <= edges_per_node < num_nodes')
    if num_types < 1:
        raise ValidationError('num_types must be positive')
    g = nx.barabasi_albert_graph(num_nodes, edges_per_node, seed=seed)
    return HeteroGraph.from_edges(num_nodes, list(g.edges()),
            _random_types(num_nodes, num_types, seed), _type_names(num_types, type_names))


def wl_roles(graph, max_iters=None):
    '''
    Typed 1-dimensional Weisfeiler-Lehman color refinement.

    The initial color is the node type; each round a node's new color is
    its own color together with the sorted multiset of its neighbors'
    colors.  Refinement stops once a round no longer splits any class, or
    after ``max_iters`` rounds.  Role ids are numbered by first occurrence
    in node order.
    '''
    if max_iters is None:
        max_iters = max(graph.num_nodes, 1)
    if max_iters < 1:
        raise ValidationError('max_iters must be at least 1')
    first = {}
    colors = np.array([first.setdefault(int(t), len(first)) for t in graph.node_types],
            dtype=np.int64)
    num = len(first)
    it = 0
    for it in range(1, max_iters + 1):
        signatures = {}
        refined = np.empty_like(colors)
        for u in range(graph.num_nodes):
            around = tuple(sorted(colors[graph.neighbors(u)].tolist()))
            refined[u] = signatures.setdefault((int(colors[u]), around), len(signatures))
        logger.debug('wl round %i: %i classes', it, len(signatures))
        stable = len(signatures) == num
        colors, num = refined, len(signatures)
        if stable:
            break
    return RoleLabeling(roles=colors, num_roles=num, iterations=it)
