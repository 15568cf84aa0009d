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
Distributed-memory paragraph-vector training over walk corpora.

Each node ``v`` has a vector ``z_v`` and each lexicon token ``h`` a vector
``w_h``.  For every interior position ``t`` of a context, the token at ``t``
is predicted from ``x = [w_hat, z_v]`` where ``w_hat`` is the sum of the
token vectors at positions ``t-window .. t+window`` other than ``t``.

The prediction is a hierarchical softmax over a Huffman tree of the
lexicon.  Internal node ``n`` scores

    s_n = (b + b_n) + (u + u_n) . x

where ``(u, b)`` is the shared linear predictor and ``(u_n, b_n)`` the
node's own binary classifier.  Code bit 0 takes ``sigmoid(s_n)``, bit 1
``sigmoid(-s_n)``; the token's probability is the product along its path.
'''

import heapq
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._jit import jit
from .exceptions import GraphError, TrainingError, ValidationError

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    dim: int = 128
    window: int = 5
    epochs: int = 100
    lr_start: float = 0.025
    lr_end: float = 0.0001
    seed: int = 0
    threads: int = 1
    deterministic: bool = True

    def validate(self):
        if self.dim < 1:
            raise ValidationError('dim must be at least 1')
        if self.window < 1:
            raise ValidationError('window must be at least 1')
        if self.epochs < 1:
            raise ValidationError('epochs must be at least 1')
        if not self.lr_start >= self.lr_end > 0:
            raise ValidationError('need lr_start >= lr_end > 0')
        if self.threads < 1:
            raise ValidationError('threads must be at least 1')
        return self


class HuffmanTree:
    '''
    Binary codes and internal-node paths for every leaf (token).

    ``codes[i, :lengths[i]]`` are the bits from the root down to leaf ``i``
    and ``points[i, :lengths[i]]`` the internal nodes visited, numbered
    ``0 .. num_leaves-2`` with the root last.
    '''
    def __init__(self, codes, points, lengths):
        self.codes = np.asarray(codes, dtype=np.int8)
        self.points = np.asarray(points, dtype=np.int64)
        self.lengths = np.asarray(lengths, dtype=np.int64)

    @property
    def num_leaves(self):
        return len(self.lengths)

    @property
    def num_inner(self):
        return max(self.num_leaves - 1, 0)

    def code(self, i):
        return self.codes[i, :self.lengths[i]].tolist()

    def path(self, i):
        return self.points[i, :self.lengths[i]].tolist()


def build_huffman(lexicon):
    '''
    Frequency-weighted Huffman tree.  Ties pop the lower token id first and
    leaves before internal nodes, so the tree is fully deterministic.

    Args:
        lexicon: a Lexicon, or a sequence of token frequencies
    Raises:
        ValidationError: empty lexicon
    '''
    counts = [int(c) for c in getattr(lexicon, 'frequencies', lexicon)]
    n = len(counts)
    if n == 0:
        raise ValidationError('cannot build a huffman tree over an empty lexicon')
    logger.info('constructing a huffman tree from %i tokens', n)
    heap = [(c, i, i) for i, c in enumerate(counts)]
    heapq.heapify(heap)
    children = {}
    for i in range(n - 1):
        c1, _, left = heapq.heappop(heap)
        c2, _, right = heapq.heappop(heap)
        children[n + i] = (left, right)
        heapq.heappush(heap, (c1 + c2, n + i, n + i))

    codes = [[] for _ in range(n)]
    points = [[] for _ in range(n)]
    stack = [(heap[0][2], [], [])]
    while stack:
        node, code, path = stack.pop()
        if node < n:
            codes[node], points[node] = code, path
            continue
        left, right = children[node]
        path = path + [node - n]
        stack.append((left, code + [0], path))
        stack.append((right, code + [1], path))

    lengths = np.array([len(c) for c in codes], dtype=np.int64)
    width = max(int(lengths.max()), 1)
    code_arr = np.zeros((n, width), dtype=np.int8)
    point_arr = np.zeros((n, width), dtype=np.int64)
    for i in range(n):
        code_arr[i, :lengths[i]] = codes[i]
        point_arr[i, :lengths[i]] = points[i]
    logger.info('built huffman tree with maximum node depth %i', int(lengths.max()))
    return HuffmanTree(code_arr, point_arr, lengths)


class EmbeddingModel:
    '''
    Trainable parameters plus the tree they are organized by.

    Attributes:
        node_vectors: (num_contexts, dim) node embeddings ``z_v``
        token_vectors: (num_tokens, dim) token embeddings ``w_h``
        u: (2*dim,) shared predictor weights
        b: (1,) shared predictor bias
        inner_u: (num_tokens-1, 2*dim) per internal node classifier weights
        inner_b: (num_tokens-1,) per internal node classifier biases
        nodes: graph node id of each node_vectors row
        meta: provenance (mode, walk_length, samples, window, ...)
    '''
    def __init__(self, node_vectors, token_vectors, u, b, inner_u, inner_b, tree, nodes,
            window, meta=None):
        self.node_vectors = node_vectors
        self.token_vectors = token_vectors
        self.u = u
        self.b = b
        self.inner_u = inner_u
        self.inner_b = inner_b
        self.tree = tree
        self.nodes = np.asarray(nodes, dtype=np.int64)
        self.window = int(window)
        self.meta = dict(meta or {})
        self._rows = {int(v): i for i, v in enumerate(self.nodes)}

    @property
    def dim(self):
        return self.node_vectors.shape[1]

    def row_of(self, node):
        try:
            return self._rows[int(node)]
        except KeyError:
            raise GraphError('node {} has no embedding'.format(node))

    def blocks(self):
        return {'Z': self.node_vectors, 'W': self.token_vectors, 'u': self.u, 'b': self.b,
                'inner_u': self.inner_u, 'inner_b': self.inner_b}

    def is_finite(self):
        return all(np.isfinite(a).all() for a in self.blocks().values())

    def copy(self):
        return EmbeddingModel(*(a.copy() for a in (self.node_vectors, self.token_vectors,
                self.u, self.b, self.inner_u, self.inner_b)), self.tree, self.nodes,
                self.window, self.meta)


def init_model(corpus, lexicon, cfg, tree=None, zero=False):
    '''
    Node and token vectors uniform in [-0.5/dim, 0.5/dim]; predictor
    parameters zero.
    '''
    d = cfg.dim
    tree = tree if tree is not None else build_huffman(lexicon)
    rng = np.random.default_rng(cfg.seed)
    if zero:
        z = np.zeros((len(corpus.nodes), d))
        w = np.zeros((len(lexicon), d))
    else:
        z = (rng.random((len(corpus.nodes), d)) - 0.5) / d
        w = (rng.random((len(lexicon), d)) - 0.5) / d
    meta = {'dim': d, 'mode': corpus.mode, 'walk_length': corpus.walk_length,
            'samples': corpus.samples, 'window': cfg.window}
    return EmbeddingModel(z, w, np.zeros(2 * d), np.zeros(1),
            np.zeros((tree.num_inner, 2 * d)), np.zeros(tree.num_inner),
            tree, corpus.nodes, cfg.window, meta)


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def _check_ids(model, ids):
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= len(model.token_vectors)):
        raise ValidationError('token id out of range')
    return ids


def _features(model, context_token_ids, row):
    ids = _check_ids(model, context_token_ids)
    w_hat = model.token_vectors[ids].sum(axis=0)
    return np.concatenate([w_hat, model.node_vectors[row]])


def score(model, context_token_ids, node, target):
    '''
    Shared predictor output ``b + u . [w_hat, z_v]``; ``target`` is only
    range-checked.  The context must not contain the predicted position.
    '''
    if len(context_token_ids) == 0:
        raise ValidationError('empty context')
    _check_ids(model, [target])
    x = _features(model, context_token_ids, model.row_of(node))
    return float(model.b[0] + model.u @ x)


def log_prob(model, context_token_ids, node, target):
    'log p(target | context, z_node) through the tree.'
    target = int(_check_ids(model, [target])[0])
    x = _features(model, context_token_ids, model.row_of(node))
    path = model.tree.path(target)
    if not path:
        return 0.0
    code = np.array(model.tree.code(target))
    s = model.b[0] + model.inner_b[path] + (model.u + model.inner_u[path]) @ x
    return float(np.sum(_log_sigmoid((1 - 2 * code) * s)))


def _window(corpus, row, t, window):
    if not window <= t <= corpus.samples - window - 1:
        raise ValidationError('position {} outside interior range {}..{}'.format(
            t, window, corpus.samples - window - 1))
    ctx = corpus.contexts[row]
    return np.concatenate([ctx[t - window:t], ctx[t + 1:t + window + 1]]), int(ctx[t])


def window_log_prob(model, corpus, node, t):
    context, target = _window(corpus, corpus.row_of(node), t, model.window)
    return log_prob(model, context, node, target)


def window_gradients(model, corpus, node, t):
    '''
    Analytic gradient of window_log_prob with respect to every parameter it
    touches.

    Returns:
        (log_prob, dict) where the dict maps a block name to
        ``(index, gradient)`` pairs: ``Z`` row, ``W`` token ids (one entry
        per distinct token), ``u``, ``b``, ``inner_u`` / ``inner_b`` path.
    '''
    row = model.row_of(node)
    context, target = _window(corpus, corpus.row_of(node), t, model.window)
    d = model.dim
    x = _features(model, context, row)
    path = model.tree.path(target)
    code = np.array(model.tree.code(target), dtype=np.float64)
    weights = model.u + model.inner_u[path]
    s = model.b[0] + model.inner_b[path] + weights @ x
    g = 1.0 - code - 1.0 / (1.0 + np.exp(-s))
    logp = float(np.sum(_log_sigmoid((1 - 2 * code) * s))) if path else 0.0
    gx = g @ weights if path else np.zeros(2 * d)
    tokens, mult = np.unique(context, return_counts=True)
    grads = {
        'Z': (row, gx[d:]),
        'W': (tokens, np.outer(mult, gx[:d])),
        'u': (slice(None), g.sum() * x),
        'b': (slice(None), np.array([g.sum()])),
        'inner_u': (np.array(path, dtype=np.int64), np.outer(g, x)),
        'inner_b': (np.array(path, dtype=np.int64), g),
    }
    return logp, grads


@jit(nopython=True, nogil=True, cache=True)
def _sgd_kernel(order, contexts, window, z, w, u, b, inner_u, inner_b,
        points, codes, lengths, lr_start, lr_end, total, offset, learn):
    d = z.shape[1]
    span = contexts.shape[1] - 2 * window
    x = np.empty(2 * d)
    gx = np.empty(2 * d)
    loglik = 0.0
    denom = max(total - 1, 1)
    for k in range(order.shape[0]):
        pair = order[k]
        row = pair // span
        t = window + pair % span
        lr = lr_start - (lr_start - lr_end) * (offset + k) / denom
        for i in range(d):
            x[i] = 0.0
        for j in range(t - window, t + window + 1):
            if j != t:
                tok = contexts[row, j]
                for i in range(d):
                    x[i] += w[tok, i]
        for i in range(d):
            x[d + i] = z[row, i]
        for i in range(2 * d):
            gx[i] = 0.0
        target = contexts[row, t]
        gsum = 0.0
        for j in range(lengths[target]):
            p = points[target, j]
            s = b[0] + inner_b[p]
            for i in range(2 * d):
                s += (u[i] + inner_u[p, i]) * x[i]
            y = s if codes[target, j] == 0 else -s
            if y > 0:
                loglik -= math.log1p(math.exp(-y))
            else:
                loglik += y - math.log1p(math.exp(y))
            if s >= 0:
                sig = 1.0 / (1.0 + math.exp(-s))
            else:
                e = math.exp(s)
                sig = e / (1.0 + e)
            g = 1.0 - codes[target, j] - sig
            for i in range(2 * d):
                gx[i] += g * (u[i] + inner_u[p, i])
            if learn:
                for i in range(2 * d):
                    inner_u[p, i] += lr * g * x[i]
                inner_b[p] += lr * g
            gsum += g
        if learn:
            for i in range(2 * d):
                u[i] += lr * gsum * x[i]
            b[0] += lr * gsum
            for j in range(t - window, t + window + 1):
                if j != t:
                    tok = contexts[row, j]
                    for i in range(d):
                        w[tok, i] += lr * gx[i]
            for i in range(d):
                z[row, i] += lr * gx[d + i]
    return loglik


def _run_kernel(model, corpus, order, lr_start, lr_end, total, offset, learn, threads=1):
    tree = model.tree
    args = (corpus.contexts, model.window, model.node_vectors, model.token_vectors,
            model.u, model.b, model.inner_u, model.inner_b,
            tree.points, tree.codes, tree.lengths, lr_start, lr_end, total)
    if threads <= 1:
        return _sgd_kernel(order, *(args + (offset, learn)))
    # hogwild: shards update the shared arrays without locking
    shards = np.array_split(np.arange(len(order)), threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(_sgd_kernel, order[s[0]:s[-1] + 1], *(args + (offset + int(s[0]), learn)))
                for s in shards if len(s)]
        return sum(f.result() for f in futures)


def _num_windows(corpus, window):
    return len(corpus.nodes) * (corpus.samples - 2 * window)


def objective(model, corpus):
    '''
    Mean log-likelihood over all (node, interior position) windows.
    '''
    n = _num_windows(corpus, model.window)
    if n <= 0:
        raise TrainingError('corpus has no interior positions for window {}'.format(model.window))
    order = np.arange(n, dtype=np.int64)
    return _run_kernel(model, corpus, order, 0.0, 0.0, n, 0, False) / n


def _check_trainable(corpus, lexicon, cfg):
    cfg.validate()
    if not len(corpus.nodes) or not len(lexicon):
        raise TrainingError('empty corpus')
    if corpus.samples <= 2 * cfg.window:
        raise TrainingError('samples per node ({}) must exceed twice the window ({})'.format(
            corpus.samples, cfg.window))


def train(corpus, lexicon, cfg, model=None):
    '''
    Stochastic gradient ascent on the mean window log-likelihood.

    One epoch visits every (node, interior position) pair once in a fresh
    random order; the learning rate decays linearly from ``lr_start`` to
    ``lr_end`` over all updates.  With ``deterministic`` (or one thread) the
    run is bit-reproducible; otherwise shards of each epoch are processed by
    ``threads`` workers racing on the shared parameters.

    Raises:
        TrainingError
    '''
    _check_trainable(corpus, lexicon, cfg)
    model = model if model is not None else init_model(corpus, lexicon, cfg)
    threads = 1 if cfg.deterministic else cfg.threads
    if cfg.deterministic and cfg.threads > 1:
        logger.warning('deterministic training ignores threads=%i', cfg.threads)
    rng = np.random.default_rng([cfg.seed, 2])
    per_epoch = _num_windows(corpus, cfg.window)
    total = per_epoch * cfg.epochs
    logger.info('training %s model: dim=%i window=%i epochs=%i windows/epoch=%i threads=%i',
            corpus.mode, cfg.dim, cfg.window, cfg.epochs, per_epoch, threads)
    started = time.perf_counter()
    for epoch in range(cfg.epochs):
        order = rng.permutation(per_epoch).astype(np.int64)
        loglik = _run_kernel(model, corpus, order, cfg.lr_start, cfg.lr_end, total,
                epoch * per_epoch, True, threads)
        if not model.is_finite():
            raise TrainingError('non-finite parameters after epoch {}'.format(epoch + 1))
        done = (epoch + 1) * per_epoch - 1
        logger.info('epoch %i/%i: mean log-likelihood %.6f, lr %.6g', epoch + 1, cfg.epochs,
                loglik / per_epoch, cfg.lr_start - (cfg.lr_start - cfg.lr_end) * done / max(total - 1, 1))
    logger.info('trained in %.2fs', time.perf_counter() - started)
    return model


def full_batch_gradient(model, corpus):
    '''
    Gradient of ``objective`` accumulated over every window, as a dict of
    arrays shaped like ``model.blocks()``.
    '''
    total = {k: np.zeros_like(v) for k, v in model.blocks().items()}
    span = corpus.samples - 2 * model.window
    n = len(corpus.nodes) * span
    for row, node in enumerate(corpus.nodes):
        for t in range(model.window, model.window + span):
            _, grads = window_gradients(model, corpus, node, t)
            for name, (index, g) in grads.items():
                np.add.at(total[name], index, g)
    return {k: v / n for k, v in total.items()}


def full_batch_step(model, corpus, lr):
    'One deterministic gradient-ascent step on ``objective``.'
    grads = full_batch_gradient(model, corpus)
    for name, block in model.blocks().items():
        block += lr * grads[name]
    return model


def _entries(model, name, index):
    block = model.blocks()[name]
    if name in ('u', 'b'):
        return [(block, i) for i in range(len(block))]
    if name == 'Z':
        return [(block, (index, i)) for i in range(block.shape[1])]
    if name == 'inner_b':
        return [(block, p) for p in index]
    return [(block, (r, i)) for r in index for i in range(block.shape[1])]


def grad_check_blocks(model, corpus, node, t, epsilon=1e-5):
    '''
    Maximum relative error between analytic and central-difference
    gradients of window_log_prob, per parameter block.
    '''
    if not 1e-7 <= epsilon <= 1e-3:
        raise ValidationError('epsilon must lie in [1e-7, 1e-3]')
    _, grads = window_gradients(model, corpus, node, t)
    errors = {}
    for name, (index, g) in grads.items():
        g = np.atleast_1d(np.asarray(g, dtype=np.float64)).ravel()
        numeric = []
        for block, at in _entries(model, name, index):
            saved = block[at]
            block[at] = saved + epsilon
            up = window_log_prob(model, corpus, node, t)
            block[at] = saved - epsilon
            down = window_log_prob(model, corpus, node, t)
            block[at] = saved
            numeric.append((up - down) / (2 * epsilon))
        numeric = np.array(numeric)
        if not len(numeric):
            errors[name] = 0.0
            continue
        scale = np.maximum(np.maximum(np.abs(g), np.abs(numeric)), 1e-6)
        errors[name] = float(np.max(np.abs(g - numeric) / scale))
    return errors


def grad_check(model, corpus, node, t, epsilon=1e-5):
    return max(grad_check_blocks(model, corpus, node, t, epsilon).values())


def export_embeddings(model, raw_ids, path):
    '''
    TSV: a ``#`` provenance header, then raw node id and ``dim`` values with
    9 significant digits.
    '''
    meta = dict(model.meta, dim=model.dim)
    with open(path, 'w', encoding='utf-8') as f:
        f.write('# ' + ' '.join('{}={}'.format(k, meta[k]) for k in sorted(meta)) + '\n')
        for node, vec in zip(model.nodes, model.node_vectors):
            f.write(raw_ids[node] + '\t' + '\t'.join('{:.9g}'.format(x) for x in vec) + '\n')


def import_embeddings(path):
    '''
    Returns:
        (raw_ids, matrix, meta)
    '''
    raw_ids, rows, meta = [], [], {}
    with open(path, encoding='utf-8') as f:
        for line in f:
            line = line.rstrip('\r\n')
            if line.startswith('#'):
                meta.update(kv.split('=', 1) for kv in line[1:].split() if '=' in kv)
                continue
            if not line:
                continue
            fields = line.split('\t')
            raw_ids.append(fields[0])
            rows.append([float(x) for x in fields[1:]])
    width = int(meta['dim']) if 'dim' in meta else (len(rows[0]) if rows else 0)
    return raw_ids, np.array(rows, dtype=np.float64).reshape(len(rows), width), meta


def save_model(model, path):
    with open(path, 'wb') as f:
        np.savez(f, codes=model.tree.codes, points=model.tree.points, lengths=model.tree.lengths,
                nodes=model.nodes, window=np.array([model.window]),
                meta=np.array(json.dumps(model.meta, sort_keys=True)),
                **model.blocks())


def load_model(path):
    with np.load(path) as data:
        tree = HuffmanTree(data['codes'], data['points'], data['lengths'])
        return EmbeddingModel(data['Z'], data['W'], data['u'], data['b'],
                data['inner_u'], data['inner_b'], tree, data['nodes'],
                int(data['window'][0]), json.loads(str(data['meta'])))
