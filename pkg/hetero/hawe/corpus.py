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
Per-node walk corpora.

Every non-isolated node ``v`` gets a context of ``T`` anonymized walk
tokens, sampled independently with replacement.  Tokens are interned into
a Lexicon whose ids follow first occurrence when scanning contexts in node
order, so the result does not depend on how sampling was scheduled.
'''

import json
import logging
import struct
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .exceptions import CorpusFormatError, CorpusVersionError, GraphError, ValidationError
from .schemas import gen_validate
from .walklang import check_mode, decode_token, encode_walks, node_rng, sample_walks

logger = logging.getLogger(__name__)

MAGIC = b'HAWECORP'
VERSION = 1
_PREAMBLE = struct.Struct('<8sII')
_NODE_CHUNK = 512

_validate_header = gen_validate('corpus-header-schema.yaml', error=CorpusFormatError)


class Lexicon:
    '''
    Distinct tokens in id order with their occurrence counts.
    '''
    def __init__(self, tokens, frequencies):
        self.tokens = list(tokens)
        self.frequencies = np.asarray(frequencies, dtype=np.int64)
        if len(self.tokens) != len(self.frequencies):
            raise ValidationError('lexicon tokens and frequencies differ in length')
        self._index = None

    @property
    def token_to_id(self):
        if self._index is None:
            self._index = {t: i for i, t in enumerate(self.tokens)}
        return self._index

    def id_of(self, token):
        return self.token_to_id[token]

    def __len__(self):
        return len(self.tokens)

    def __eq__(self, other):
        return (isinstance(other, Lexicon) and self.tokens == other.tokens
                and np.array_equal(self.frequencies, other.frequencies))

    def write_tsv(self, f):
        for i, (token, count) in enumerate(zip(self.tokens, self.frequencies)):
            f.write('{}\t{}\t{}\n'.format(token, i, int(count)))


class Corpus:
    '''
    Args:
        nodes (array[int]): graph node id of each context row
        contexts (array[int]): (len(nodes), samples) token ids
        samples (int): T, tokens per context
        walk_length (int): L, edges per walk
        mode (str): aw, haw or chaw
        seed (int): sampling seed
        num_nodes (int): node count of the source graph
        isolated (array[int]): nodes excluded for having no neighbor
        type_names (list[str]): type names used to render tokens
        raw_ids (list[str]): raw identifier of every graph node
    '''
    def __init__(self, nodes, contexts, samples, walk_length, mode, seed,
            num_nodes, isolated=(), type_names=('A',), raw_ids=None):
        self.nodes = np.asarray(nodes, dtype=np.int64)
        self.contexts = np.asarray(contexts, dtype=np.int64).reshape(len(self.nodes), samples)
        self.samples = int(samples)
        self.walk_length = int(walk_length)
        self.mode = check_mode(mode)
        self.seed = int(seed)
        self.num_nodes = int(num_nodes)
        self.isolated = np.asarray(isolated, dtype=np.int64)
        self.type_names = list(type_names)
        self.raw_ids = ([str(i) for i in range(self.num_nodes)] if raw_ids is None
                else [str(r) for r in raw_ids])
        self._rows = None

    def row_of(self, node):
        'Context row of a graph node.'
        if self._rows is None:
            self._rows = {int(v): i for i, v in enumerate(self.nodes)}
        try:
            return self._rows[int(node)]
        except KeyError:
            raise GraphError('node {} has no context'.format(node))

    def __len__(self):
        return len(self.nodes)

    def __eq__(self, other):
        return (isinstance(other, Corpus)
                and (self.samples, self.walk_length, self.mode, self.seed, self.num_nodes,
                    self.type_names, self.raw_ids)
                == (other.samples, other.walk_length, other.mode, other.seed, other.num_nodes,
                    other.type_names, other.raw_ids)
                and np.array_equal(self.nodes, other.nodes)
                and np.array_equal(self.contexts, other.contexts)
                and np.array_equal(self.isolated, other.isolated))


def build_corpus(graph, samples, walk_length, mode, seed=0, threads=1):
    '''
    Samples ``samples`` walks of ``walk_length`` edges from every
    non-isolated node and anonymizes them per ``mode``.

    Workers sample disjoint nodes with per-node generators; interning is a
    sequential post-pass, so output is identical for any thread count.

    Returns:
        (Corpus, Lexicon)
    Raises:
        GraphError: no node has a neighbor
        ValidationError
    '''
    mode = check_mode(mode)
    if samples < 1 or walk_length < 1:
        raise ValidationError('samples and walk_length must be at least 1')
    degrees = graph.degrees
    active = np.flatnonzero(degrees > 0)
    isolated = np.flatnonzero(degrees == 0)
    if not len(active):
        raise GraphError('graph has no node with a neighbor')
    if len(isolated):
        logger.warning('%i isolated nodes excluded from the corpus', len(isolated))

    def sample_node(v):
        walks = sample_walks(graph, v, walk_length, samples, node_rng(seed, v))
        return encode_walks(walks, graph.node_types, mode)

    contexts = np.empty((len(active), samples), dtype=np.int64)
    interned, token_rows = {}, []
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        for lo in range(0, len(active), _NODE_CHUNK):
            chunk = active[lo:lo + _NODE_CHUNK]
            logger.debug('sampling nodes %i..%i', lo, lo + len(chunk) - 1)
            for i, rows in enumerate(pool.map(sample_node, chunk), lo):
                uniq, first, inverse = np.unique(rows, axis=0,
                        return_index=True, return_inverse=True)
                ids = np.empty(len(uniq), dtype=np.int64)
                for k in np.argsort(first, kind='stable'):
                    key = uniq[k].tobytes()
                    if key not in interned:
                        interned[key] = len(interned)
                        token_rows.append(uniq[k])
                    ids[k] = interned[key]
                contexts[i] = ids[inverse.reshape(-1)]

    tokens = [decode_token(r, mode, graph.type_names) for r in token_rows]
    lexicon = Lexicon(tokens, np.bincount(contexts.ravel(), minlength=len(tokens)))
    corpus = Corpus(active, contexts, samples, walk_length, mode, seed,
            graph.num_nodes, isolated, graph.type_names, graph.raw_ids)
    logger.info('built %s corpus: %i contexts x %i walks, lexicon of %i tokens',
            mode, len(active), samples, len(lexicon))
    return corpus, lexicon


def save_corpus(corpus, lexicon, path):
    '''
    Versioned binary: magic, version, JSON header length, JSON header
    (metadata and lexicon tokens), then little-endian int64 arrays for
    nodes, isolated nodes, contexts and frequencies.
    '''
    header = json.dumps({
        'samples': corpus.samples,
        'walk_length': corpus.walk_length,
        'mode': corpus.mode,
        'seed': corpus.seed,
        'num_nodes': corpus.num_nodes,
        'num_contexts': len(corpus.nodes),
        'num_isolated': len(corpus.isolated),
        'type_names': corpus.type_names,
        'raw_ids': corpus.raw_ids,
        'tokens': lexicon.tokens,
    }, sort_keys=True, ensure_ascii=False).encode('utf-8')
    with open(path, 'wb') as f:
        f.write(_PREAMBLE.pack(MAGIC, VERSION, len(header)))
        f.write(header)
        for a in (corpus.nodes, corpus.isolated, corpus.contexts, lexicon.frequencies):
            f.write(np.ascontiguousarray(a, dtype='<i8').tobytes())


def load_corpus(path):
    '''
    Raises:
        CorpusVersionError: wrong magic or version
        CorpusFormatError: truncated or inconsistent file
    '''
    with open(path, 'rb') as f:
        data = f.read()
    if len(data) < _PREAMBLE.size:
        raise CorpusFormatError('{}: truncated preamble'.format(path))
    magic, version, header_len = _PREAMBLE.unpack_from(data)
    if magic != MAGIC:
        raise CorpusVersionError('{}: not a corpus file (bad magic {!r})'.format(path, magic))
    if version != VERSION:
        raise CorpusVersionError('{}: unsupported corpus version {}'.format(path, version))
    offset = _PREAMBLE.size
    if len(data) < offset + header_len:
        raise CorpusFormatError('{}: truncated header'.format(path))
    try:
        header = json.loads(data[offset:offset + header_len].decode('utf-8'))
    except ValueError as e:
        raise CorpusFormatError('{}: unreadable header: {}'.format(path, e))
    _validate_header(header)
    offset += header_len

    n, iso, samples = header['num_contexts'], header['num_isolated'], header['samples']
    sizes = (n, iso, n * samples, len(header['tokens']))
    if len(data) != offset + 8 * sum(sizes):
        raise CorpusFormatError('{}: truncated body, expected {} bytes'.format(
            path, offset + 8 * sum(sizes)))
    arrays = []
    for size in sizes:
        arrays.append(np.frombuffer(data, dtype='<i8', count=size, offset=offset).astype(np.int64))
        offset += 8 * size
    nodes, isolated, contexts, frequencies = arrays
    corpus = Corpus(nodes, contexts.reshape(n, samples), samples, header['walk_length'],
            header['mode'], header['seed'], header['num_nodes'], isolated, header['type_names'],
            header.get('raw_ids'))
    return corpus, Lexicon(header['tokens'], frequencies)


def export_corpus_tsv(corpus, lexicon, f):
    'Debug dump: raw node id, then the context tokens space-separated.'
    for v, row in zip(corpus.nodes, corpus.contexts):
        f.write('{}\t{}\n'.format(corpus.raw_ids[v], ' '.join(lexicon.tokens[t] for t in row)))
