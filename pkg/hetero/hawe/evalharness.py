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
Downstream evaluation of node embeddings: role classification with
repeated random splits, Euclidean nearest-neighbor search, parameter
sweeps and runtime benchmarks.
'''

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import softmax

from .corpus import build_corpus
from .exceptions import EvaluationError, ValidationError
from .hetgraph import gen_ba, gen_er
from .pvdm import TrainConfig, train

logger = logging.getLogger(__name__)

MAX_SPLIT_ATTEMPTS = 10


@dataclass
class EvalReport:
    task: str
    accuracies: list
    config: dict = field(default_factory=dict)

    @property
    def mean(self):
        return math.fsum(self.accuracies) / len(self.accuracies) if self.accuracies else float('nan')

    @property
    def repeats(self):
        return len(self.accuracies)

    def write_tsv(self, f):
        f.write('repeat\taccuracy\n')
        for i, acc in enumerate(self.accuracies):
            f.write('{}\t{:.6f}\n'.format(i, acc))
        f.write('mean\t{:.6f}\n'.format(self.mean))

    def summary(self):
        lines = ['task: {}'.format(self.task),
                'repeats: {}'.format(self.repeats),
                'mean accuracy: {:.4f}'.format(self.mean)]
        if self.repeats > 1:
            lines.append('std: {:.4f}'.format(float(np.std(self.accuracies))))
        lines.extend('{}: {}'.format(k, self.config[k]) for k in sorted(self.config))
        return '\n'.join(lines)


@dataclass
class NeighborList:
    target: str
    neighbors: list

    def write_tsv(self, f):
        f.write('rank\traw_id\tdistance\n')
        for rank, (raw, dist) in enumerate(self.neighbors, 1):
            f.write('{}\t{}\t{:.9g}\n'.format(rank, raw, dist))


class SoftmaxRegression:
    '''
    Multinomial logistic regression fit by full-batch gradient descent.

    Features are standardized with training statistics; the step size is
    the inverse of the loss's gradient Lipschitz bound.
    '''
    def __init__(self, l2=1e-4, max_iter=500, tol=1e-6):
        self.l2 = l2
        self.max_iter = max_iter
        self.tol = tol

    def _design(self, x):
        return np.hstack([(x - self.mean_) / self.scale_, np.ones((len(x), 1))])

    def fit(self, x, y, num_classes):
        x = np.asarray(x, dtype=np.float64)
        self.mean_ = x.mean(axis=0)
        scale = x.std(axis=0)
        self.scale_ = np.where(scale > 1e-12, scale, 1.0)
        xb = self._design(x)
        m = len(xb)
        onehot = np.zeros((m, num_classes))
        onehot[np.arange(m), y] = 1.0
        step = 1.0 / (0.5 * np.linalg.norm(xb, 2) ** 2 / m + self.l2)
        penalty = np.ones((xb.shape[1], 1))
        penalty[-1] = 0.0
        weights = np.zeros((xb.shape[1], num_classes))
        self.iterations_ = self.max_iter
        for it in range(self.max_iter):
            probs = softmax(xb @ weights, axis=1)
            grad = xb.T @ (probs - onehot) / m + self.l2 * penalty * weights
            if np.linalg.norm(grad) < self.tol:
                self.iterations_ = it
                break
            weights -= step * grad
        self.weights_ = weights
        return self

    def predict(self, x):
        return np.argmax(self._design(np.asarray(x, dtype=np.float64)) @ self.weights_, axis=1)


def _split_rng(seed, repeat):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(int(repeat),)))


def _stratified_split(y, train_frac, rng):
    train_idx = []
    for c in np.unique(y):
        members = rng.permutation(np.flatnonzero(y == c))
        k = min(max(int(round(train_frac * len(members))), 1), len(members) - 1)
        train_idx.append(members[:k])
    train_idx = np.sort(np.concatenate(train_idx))
    mask = np.zeros(len(y), dtype=bool)
    mask[train_idx] = True
    return train_idx, np.flatnonzero(~mask)


def _random_split(y, train_frac, rng, num_classes):
    k = min(max(int(round(train_frac * len(y))), 1), len(y) - 1)
    for _ in range(MAX_SPLIT_ATTEMPTS):
        perm = rng.permutation(len(y))
        if len(np.unique(y[perm[:k]])) == num_classes:
            return np.sort(perm[:k]), np.sort(perm[k:])
    raise EvaluationError('a class was absent from the training split {} times'.format(
        MAX_SPLIT_ATTEMPTS))


def classify(embeddings, labels, train_frac=0.7, repeats=50, seed=0, stratified=True,
        threads=1, l2=1e-4, max_iter=500, tol=1e-6):
    '''
    Repeated train/test role classification with softmax regression.

    Unlabeled nodes (label < 0) are ignored.  Repeat ``r`` draws its split
    from a generator seeded by (seed, r), so repeats may run concurrently.

    Returns:
        EvalReport
    Raises:
        EvaluationError
    '''
    x = np.asarray(embeddings, dtype=np.float64)
    y_all = np.asarray(labels, dtype=np.int64)
    if len(x) != len(y_all):
        raise EvaluationError('{} embeddings but {} labels'.format(len(x), len(y_all)))
    if not 0 < train_frac < 1:
        raise EvaluationError('train_frac must lie strictly between 0 and 1')
    if repeats < 1:
        raise EvaluationError('repeats must be at least 1')
    keep = y_all >= 0
    x, y_all = x[keep], y_all[keep]
    classes, y, counts = np.unique(y_all, return_inverse=True, return_counts=True)
    y = y.reshape(-1)
    if len(classes) < 2:
        raise EvaluationError('classification needs at least 2 classes')
    if counts.min() < 2:
        raise EvaluationError('class {} has fewer than 2 labeled nodes'.format(
            classes[np.argmin(counts)]))

    def run(repeat):
        rng = _split_rng(seed, repeat)
        if stratified:
            tr, te = _stratified_split(y, train_frac, rng)
        else:
            tr, te = _random_split(y, train_frac, rng, len(classes))
        clf = SoftmaxRegression(l2=l2, max_iter=max_iter, tol=tol).fit(x[tr], y[tr], len(classes))
        return float(np.mean(clf.predict(x[te]) == y[te]))

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        accuracies = list(pool.map(run, range(repeats)))
    report = EvalReport('classify', accuracies, {
        'train_frac': train_frac, 'repeats': repeats, 'seed': seed,
        'stratified': stratified, 'classes': len(classes), 'nodes': len(y)})
    logger.info('classification over %i repeats: mean accuracy %.4f', repeats, report.mean)
    return report


def topk_search(embeddings, target, k, raw_ids=None):
    '''
    The ``k`` rows nearest to row ``target`` by Euclidean distance, target
    excluded, ties broken by ascending row id.
    '''
    x = np.asarray(embeddings, dtype=np.float64)
    n = len(x)
    if not 0 <= target < n:
        raise EvaluationError('unknown target {}'.format(target))
    if not 1 <= k < n:
        raise EvaluationError('k must lie in 1..{}'.format(n - 1))
    raw_ids = raw_ids if raw_ids is not None else [str(i) for i in range(n)]
    dist = np.linalg.norm(x - x[target], axis=1)
    others = np.delete(np.arange(n), target)
    ranked = others[np.lexsort((others, dist[others]))][:k]
    return NeighborList(raw_ids[target], [(raw_ids[i], float(dist[i])) for i in ranked])


def nearest_neighbor_accuracy(embeddings, labels):
    '''
    Leave-one-out 1-nearest-neighbor accuracy.
    '''
    x = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray(labels)
    if len(x) < 2:
        raise EvaluationError('need at least 2 embeddings')
    dist = cdist(x, x)
    np.fill_diagonal(dist, np.inf)
    return float(np.mean(labels[np.argmin(dist, axis=1)] == labels))


@dataclass
class PipelineConfig:
    samples: int = 1024
    walk_length: int = 6
    mode: str = 'haw'
    seed: int = 0
    threads: int = 1
    train: TrainConfig = field(default_factory=TrainConfig)
    train_frac: float = 0.7
    repeats: int = 50
    metric: str = 'logreg'

    def echo(self):
        d = asdict(self)
        d.update(('train.' + k, v) for k, v in d.pop('train').items())
        return d


SWEEP_PARAMS = {
    'L': 'walk_length', 'walk_length': 'walk_length',
    'T': 'samples', 'samples': 'samples',
    'd': 'dim', 'dim': 'dim',
    'window': 'window', 'delta': 'window', 'Δ': 'window',
}


def run_pipeline(graph, labels, cfg):
    '''
    Corpus, training and evaluation for one configuration.
    '''
    corpus, lexicon = build_corpus(graph, cfg.samples, cfg.walk_length, cfg.mode,
            seed=cfg.seed, threads=cfg.threads)
    model = train(corpus, lexicon, cfg.train)
    y = np.asarray(labels)[corpus.nodes]
    if cfg.metric == 'nn':
        report = EvalReport('nearest-neighbor', [nearest_neighbor_accuracy(model.node_vectors, y)])
    elif cfg.metric == 'logreg':
        report = classify(model.node_vectors, y, cfg.train_frac, cfg.repeats, cfg.seed,
                threads=cfg.threads)
    else:
        raise ValidationError('unknown metric {!r}'.format(cfg.metric))
    report.config.update(cfg.echo(), lexicon_size=len(lexicon))
    return report


def sweep(param, values, base, graph, labels):
    '''
    Runs the pipeline once per value of ``param`` (L, T, d or window) with
    everything else fixed.

    Returns:
        list of (value, mean accuracy)
    '''
    if not values:
        raise ValidationError('sweep needs at least one value')
    try:
        attr = SWEEP_PARAMS[param]
    except KeyError:
        raise ValidationError('cannot sweep {!r}; choose L, T, d or window'.format(param))
    rows = []
    for value in values:
        if attr in ('dim', 'window'):
            cfg = replace(base, train=replace(base.train, **{attr: value}))
        else:
            cfg = replace(base, **{attr: value})
        report = run_pipeline(graph, labels, cfg)
        logger.info('sweep %s=%s: mean accuracy %.4f', param, value, report.mean)
        rows.append((value, report.mean))
    return rows


def write_table(rows, header, f):
    f.write('\t'.join(header) + '\n')
    for row in rows:
        f.write('\t'.join('{:.6g}'.format(v) if isinstance(v, float) else str(v) for v in row) + '\n')


def bench_runtime(sizes, family, cfg, runs=5, degree_factor=10.0, edges_per_node=1, num_types=2):
    '''
    End-to-end (corpus plus training) wall time per graph size.

    ER graphs use p = degree_factor / n; BA graphs attach
    ``edges_per_node`` edges per new node.

    Returns:
        list of (n, edges, seconds, lexicon_size)
    '''
    sizes = list(sizes)
    if sizes != sorted(sizes) or not sizes:
        raise ValidationError('sizes must be non-empty and ascending')
    family = family.lower()
    if family not in ('er', 'ba'):
        raise ValidationError('unknown graph family {!r}'.format(family))
    rows = []
    for n in sizes:
        if family == 'er':
            graph = gen_er(n, min(degree_factor / n, 1.0), num_types, seed=cfg.seed)
        else:
            graph = gen_ba(n, edges_per_node, num_types, seed=cfg.seed)
        elapsed = []
        for _ in range(runs):
            started = time.perf_counter()
            corpus, lexicon = build_corpus(graph, cfg.samples, cfg.walk_length, cfg.mode,
                    seed=cfg.seed, threads=cfg.threads)
            train(corpus, lexicon, cfg.train)
            elapsed.append(time.perf_counter() - started)
        seconds = math.fsum(elapsed) / len(elapsed)
        logger.info('bench %s n=%i edges=%i: %.3fs', family, n, graph.num_edges, seconds)
        rows.append((n, graph.num_edges, seconds, len(lexicon)))
    return rows


def loglog_slope(rows):
    'Least-squares slope of log(seconds) against log(n).'
    n = np.log([r[0] for r in rows])
    t = np.log([r[2] for r in rows])
    return float(np.polyfit(n, t, 1)[0])
