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

import argparse
import errno
import hashlib
import logging
import os
import sys
from dataclasses import asdict

from . import __version__
from .corpus import build_corpus, export_corpus_tsv, load_corpus, save_corpus
from .evalharness import (PipelineConfig, bench_runtime, classify, loglog_slope, sweep,
        topk_search, write_table)
from .exceptions import CorpusFormatError, GraphError, HAWEException, ValidationError
from .hetgraph import gen_ba, gen_er, gen_pinwheel, load_graph, wl_roles, write_graph, write_roles
from .pvdm import TrainConfig, export_embeddings, import_embeddings, save_model, train
from .schemas import gen_validate
from .walklang import (bell, count_haws, empirical_distribution, exact_walk_distribution,
        node_rng, write_distribution)
import collections
import collections.abc
if not hasattr(collections, 'Mapping'):  # option_merge imports collections.Mapping (removed in 3.10)
    collections.Mapping = collections.abc.Mapping
import option_merge
import yaml

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_RUNTIME = 0, 2, 3, 4

_default_config_files = (
    '/etc/hawe.conf',
    os.path.expanduser('~/.hawe.conf'),
)
_default_config = {
    'samples': 1024,
    'walk-length': 6,
    'mode': 'haw',
    'seed': 0,
    'dim': 128,
    'window': 5,
    'epochs': 100,
    'lr-start': 0.025,
    'lr-end': 0.0001,
    'threads': 1,
    'deterministic': True,
    'repeats': 50,
    'train-frac': 0.7,
    'top-k': 5,
    'wl-iters': 100,
}

_validate_config = gen_validate('hawe-config-schema.yaml')

# flag dest -> config key
_overridable = {
    'samples': 'samples', 'walk_length': 'walk-length', 'mode': 'mode', 'seed': 'seed',
    'dim': 'dim', 'window': 'window', 'epochs': 'epochs', 'lr_start': 'lr-start',
    'lr_end': 'lr-end', 'threads': 'threads', 'deterministic': 'deterministic',
    'repeats': 'repeats', 'train_frac': 'train-frac', 'top_k': 'top-k', 'wl_iters': 'wl-iters',
}


def _load_config(filename=None, allow_exceptions=True):
    configs = [_default_config]
    config_files = [f for f in _default_config_files if os.path.isfile(f)]
    if filename:
        config_files.append(filename)

    for config_filename in config_files:
        try:
            with open(config_filename) as f:
                new_config = yaml.safe_load(f)
        except IOError as e:
            if allow_exceptions and e.errno in (errno.EPERM, errno.EACCES) \
                    and config_filename != filename:
                logger.error('{}: {}'.format(config_filename, e.strerror))
                continue
            raise
        if new_config is None:
            continue
        if not isinstance(new_config, dict):
            raise ValidationError('{}: configuration must be a mapping'.format(config_filename))
        configs.append(new_config)

    config = option_merge.MergedOptions.using(*configs).as_dict()
    _validate_config(config)
    return config


def _effective_config(args):
    config = _load_config(args.config)
    for dest, key in _overridable.items():
        value = getattr(args, dest, None)
        if value is not None:
            config[key] = value
    _validate_config(config)
    return config


def _train_config(config):
    return TrainConfig(dim=config['dim'], window=config['window'], epochs=config['epochs'],
            lr_start=config['lr-start'], lr_end=config['lr-end'], seed=config['seed'],
            threads=config['threads'], deterministic=config['deterministic']).validate()


def _pipeline_config(config, metric='logreg'):
    return PipelineConfig(samples=config['samples'], walk_length=config['walk-length'],
            mode=config['mode'], seed=config['seed'], threads=config['threads'],
            train=_train_config(config), train_frac=config['train-frac'],
            repeats=config['repeats'], metric=metric)


def _sha256(path):
    h = hashlib.sha256()
    with open(path, 'rb') as f:
        for block in iter(lambda: f.read(1 << 20), b''):
            h.update(block)
    return h.hexdigest()


def write_manifest(path, subcommand, settings, artifacts, results=None):
    '''
    Flat ``key=value`` lines in sorted order: the effective settings, a
    sha256 per artifact and any result values.
    '''
    entries = {'subcommand': subcommand, 'version': __version__}
    entries.update(('config.{}'.format(k), v) for k, v in settings.items())
    entries.update(('artifact.{}.sha256'.format(os.path.basename(p)), _sha256(p)) for p in artifacts)
    entries.update(('result.{}'.format(k), v) for k, v in (results or {}).items())
    with open(path, 'w', encoding='utf-8') as f:
        for key in sorted(entries):
            f.write('{}={}\n'.format(key, entries[key]))
    return path


def read_labels(path, column=1):
    '''
    Reads ``raw_id`` and a class label from a TSV (by default the roles
    file).  Lines without the label column are unlabeled.
    '''
    labels = {}
    with open(path, encoding='utf-8') as f:
        for line in f:
            line = line.rstrip('\r\n')
            if not line or line.startswith('#'):
                continue
            fields = line.split('\t')
            if len(fields) > column and fields[column] != '':
                labels[fields[0]] = fields[column]
    return labels


def _label_vector(raw_ids, labels):
    names = {}
    for name in sorted(set(labels.values())):
        names[name] = len(names)
    return [names[labels[r]] if r in labels else -1 for r in raw_ids]


def _out(args, name):
    os.makedirs(args.out_dir, exist_ok=True)
    return os.path.join(args.out_dir, name)


def _manifest(args, settings, artifacts, results=None):
    path = write_manifest(_out(args, '{}.manifest'.format(args.command)), args.command,
            settings, artifacts, results)
    logger.info('wrote %s', path)


def cmd_generate(args, config):
    if args.family == 'pinwheel':
        graph = gen_pinwheel(args.blades, args.blade_len, args.hetero, seed=config['seed'])
    elif args.family == 'er':
        graph = gen_er(args.nodes, args.edge_prob, args.types, seed=config['seed'])
    else:
        graph = gen_ba(args.nodes, args.edges_per_node, args.types, seed=config['seed'])
    roles = wl_roles(graph, config['wl-iters'])
    nodes, edges, roles_path = _out(args, 'nodes.tsv'), _out(args, 'edges.tsv'), _out(args, 'roles.tsv')
    write_graph(graph, nodes, edges)
    write_roles(graph, roles, roles_path)
    settings = {'family': args.family, 'seed': config['seed'], 'wl-iters': config['wl-iters']}
    if args.family == 'pinwheel':
        settings.update(blades=args.blades, blade_len=args.blade_len, hetero=args.hetero)
    else:
        settings.update(nodes=args.nodes, types=args.types)
        settings.update({'edge_prob': args.edge_prob} if args.family == 'er'
                else {'edges_per_node': args.edges_per_node})
    _manifest(args, settings, [nodes, edges, roles_path],
            {'num_nodes': graph.num_nodes, 'num_edges': graph.num_edges,
                'num_roles': roles.num_roles})


def cmd_wl_roles(args, config):
    graph = load_graph(args.nodes_file, args.edges_file)
    roles = wl_roles(graph, config['wl-iters'])
    path = _out(args, 'roles.tsv')
    write_roles(graph, roles, path)
    _manifest(args, {'wl-iters': config['wl-iters']}, [path],
            {'num_roles': roles.num_roles, 'iterations': roles.iterations})


def cmd_sample(args, config):
    graph = load_graph(args.nodes_file, args.edges_file)
    corpus, lexicon = build_corpus(graph, config['samples'], config['walk-length'],
            config['mode'], seed=config['seed'], threads=config['threads'])
    path, lex_path = _out(args, 'corpus.bin'), _out(args, 'lexicon.tsv')
    save_corpus(corpus, lexicon, path)
    with open(lex_path, 'w', encoding='utf-8') as f:
        lexicon.write_tsv(f)
    artifacts = [path, lex_path]
    if args.tsv:
        tsv = _out(args, 'corpus.tsv')
        with open(tsv, 'w', encoding='utf-8') as f:
            export_corpus_tsv(corpus, lexicon, f)
        artifacts.append(tsv)
    settings = {k: config[k] for k in ('samples', 'walk-length', 'mode', 'seed')}
    _manifest(args, settings, artifacts,
            {'lexicon_size': len(lexicon), 'contexts': len(corpus), 'isolated': len(corpus.isolated)})


def cmd_train(args, config):
    corpus, lexicon = load_corpus(args.corpus)
    cfg = _train_config(config)
    model = train(corpus, lexicon, cfg)
    emb, model_path = _out(args, 'embeddings.tsv'), _out(args, 'model.npz')
    export_embeddings(model, corpus.raw_ids, emb)
    save_model(model, model_path)
    _manifest(args, asdict(cfg), [args.corpus, emb, model_path])


def cmd_classify(args, config):
    raw_ids, x, meta = import_embeddings(args.embeddings)
    y = _label_vector(raw_ids, read_labels(args.labels, args.label_column))
    report = classify(x, y, config['train-frac'], config['repeats'], config['seed'],
            threads=config['threads'])
    report.config.update(('embedding.' + k, v) for k, v in meta.items())
    path, summary = _out(args, 'report.tsv'), _out(args, 'report.txt')
    with open(path, 'w', encoding='utf-8') as f:
        report.write_tsv(f)
    with open(summary, 'w', encoding='utf-8') as f:
        f.write(report.summary() + '\n')
    print(report.summary())
    settings = {k: config[k] for k in ('train-frac', 'repeats', 'seed')}
    _manifest(args, settings, [args.embeddings, path, summary],
            {'mean_accuracy': '{:.6f}'.format(report.mean)})


def cmd_search(args, config):
    raw_ids, x, _ = import_embeddings(args.embeddings)
    try:
        target = raw_ids.index(args.target)
    except ValueError:
        raise ValidationError('unknown target {!r}'.format(args.target))
    result = topk_search(x, target, config['top-k'], raw_ids)
    path = _out(args, 'neighbors.tsv')
    with open(path, 'w', encoding='utf-8') as f:
        result.write_tsv(f)
    result.write_tsv(sys.stdout)
    _manifest(args, {'top-k': config['top-k'], 'target': args.target}, [args.embeddings, path])


def cmd_count(args, config):
    rows = []
    for length in args.length:
        exact, bound = count_haws(length, args.types)
        rows.append((length, bell(length), exact, bound))
    header = ('length', 'bell', 'haw_exact', 'haw_bound')
    path = _out(args, 'count.tsv')
    with open(path, 'w', encoding='utf-8') as f:
        write_table(rows, header, f)
    write_table(rows, header, sys.stdout)
    _manifest(args, {'length': ','.join(str(l) for l in args.length), 'types': args.types},
            [path])


def cmd_walk_dist(args, config):
    graph = load_graph(args.nodes_file, args.edges_file)
    start = graph.node_id(args.start)
    if args.sampled:
        dist = empirical_distribution(graph, start, config['walk-length'], config['mode'],
                config['samples'], node_rng(config['seed'], start))
    else:
        dist = exact_walk_distribution(graph, start, config['walk-length'], config['mode'])
    path = _out(args, 'distribution.tsv')
    with open(path, 'w', encoding='utf-8') as f:
        write_distribution(dist, f)
    settings = {k: config[k] for k in ('walk-length', 'mode', 'seed', 'samples')}
    settings.update(start=args.start, sampled=args.sampled)
    _manifest(args, settings, [path], {'support': len(dist)})


def cmd_sweep(args, config):
    graph = load_graph(args.nodes_file, args.edges_file)
    labels = graph.labels
    if args.labels:
        labels = _label_vector(graph.raw_ids, read_labels(args.labels, args.label_column))
    if labels is None:
        raise ValidationError('sweep needs class labels (nodes file column 3 or --labels)')
    base = _pipeline_config(config, args.metric)
    rows = sweep(args.param, args.values, base, graph, labels)
    path = _out(args, 'sweep.tsv')
    with open(path, 'w', encoding='utf-8') as f:
        write_table(rows, (args.param, 'mean_accuracy'), f)
    write_table(rows, (args.param, 'mean_accuracy'), sys.stdout)
    _manifest(args, dict(base.echo(), param=args.param), [path])


def cmd_bench(args, config):
    base = _pipeline_config(config)
    rows = bench_runtime(args.sizes, args.family, base, runs=args.runs,
            degree_factor=args.degree_factor)
    path = _out(args, 'bench.tsv')
    with open(path, 'w', encoding='utf-8') as f:
        write_table(rows, ('n', 'edges', 'seconds', 'lexicon_size'), f)
    write_table(rows, ('n', 'edges', 'seconds', 'lexicon_size'), sys.stdout)
    results = {'loglog_slope': '{:.4f}'.format(loglog_slope(rows))} if len(rows) > 1 else {}
    _manifest(args, dict(base.echo(), family=args.family, runs=args.runs), [path], results)


class _ArgumentParser(argparse.ArgumentParser):
    'Usage errors as one ``error: usage: ...`` line on stderr.'
    def error(self, message):
        self.exit(EXIT_USAGE, 'error: usage: {}: {}\n'.format(self.prog, message))


def _add_run_flags(p):
    # SUPPRESS keeps the top-level spelling when the subcommand omits the flag
    p.add_argument('--seed', type=int, default=argparse.SUPPRESS,
            help='Seed for every random choice')
    p.add_argument('--threads', type=int, default=argparse.SUPPRESS, help='Worker threads')


def _add_pipeline_flags(p, training=True):
    p.add_argument('--samples', '-T', type=int, help='Walks sampled per node')
    p.add_argument('--walk-length', '-L', type=int, help='Edges per walk')
    p.add_argument('--mode', choices=('aw', 'haw', 'chaw'), help='Walk anonymization')
    if training:
        p.add_argument('--dim', '-d', type=int, help='Embedding dimension')
        p.add_argument('--window', type=int, help='Context window half-width')
        p.add_argument('--epochs', type=int, help='Training epochs')
        p.add_argument('--lr-start', type=float, help='Initial learning rate')
        p.add_argument('--lr-end', type=float, help='Final learning rate')
        p.add_argument('--deterministic', action='store_true', default=None,
                help='Single-threaded bit-reproducible training')
        p.add_argument('--no-deterministic', dest='deterministic', action='store_false',
                help='Hogwild training on --threads workers')


def _add_graph_flags(p):
    p.add_argument('--nodes-file', required=True, help='Node TSV: raw_id, type[, class]')
    p.add_argument('--edges-file', required=True, help='Edge TSV: raw_src, raw_dst')


def build_parser():
    parser = _ArgumentParser(prog='hawe',
            description='Structural role embeddings on heterogeneous networks')
    parser.add_argument('--config', '-c', help='Path to config file')
    parser.add_argument('--seed', type=int, help='Seed for every random choice')
    parser.add_argument('--threads', type=int, help='Worker threads')
    parser.add_argument('--out-dir', '-o', default='.', help='Directory for output artifacts')
    parser.add_argument('--verbose', '-v', action='store_true', help='Log progress')
    parser.add_argument('--debug', action='store_true', help='Debug mode')
    parser.add_argument('--version', '-V', action='version', version='%(prog)s ({})'.format(__version__))
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True

    p = sub.add_parser('generate', help='Write a synthetic graph with its WL roles')
    p.add_argument('family', choices=('pinwheel', 'er', 'ba'))
    p.add_argument('--blades', type=int, default=8, help='Pinwheel blades')
    p.add_argument('--blade-len', type=int, default=2, help='Pinwheel blade length')
    p.add_argument('--hetero', action='store_true', help='Two-typed pinwheel')
    p.add_argument('--nodes', type=int, default=1000, help='ER/BA node count')
    p.add_argument('--edge-prob', type=float, help='ER edge probability (default 10/n)')
    p.add_argument('--edges-per-node', type=int, default=1, help='BA attachment edges')
    p.add_argument('--types', type=int, default=2, help='ER/BA node types')
    p.add_argument('--wl-iters', type=int, help='Maximum WL rounds')
    _add_run_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser('wl-roles', help='Typed WL roles of a graph')
    _add_graph_flags(p)
    p.add_argument('--wl-iters', type=int, help='Maximum WL rounds')
    p.set_defaults(func=cmd_wl_roles)

    p = sub.add_parser('sample', help='Build the walk corpus of a graph')
    _add_graph_flags(p)
    _add_pipeline_flags(p, training=False)
    p.add_argument('--tsv', action='store_true', help='Also write a readable corpus.tsv')
    _add_run_flags(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser('train', help='Train embeddings on a corpus')
    p.add_argument('--corpus', required=True, help='corpus.bin written by sample')
    _add_pipeline_flags(p)
    _add_run_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser('classify', help='Repeated-split role classification')
    p.add_argument('--embeddings', required=True, help='embeddings.tsv written by train')
    p.add_argument('--labels', required=True, help='TSV with raw_id and class label')
    p.add_argument('--label-column', type=int, default=1, help='0-based label column')
    p.add_argument('--repeats', type=int, help='Random splits')
    p.add_argument('--train-frac', type=float, help='Training fraction')
    _add_run_flags(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser('search', help='Euclidean top-k similarity search')
    p.add_argument('--embeddings', required=True, help='embeddings.tsv written by train')
    p.add_argument('--target', required=True, help='Raw id of the query node')
    p.add_argument('--top-k', '-k', type=int, help='Neighbors to return')
    _add_run_flags(p)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser('count', help='Bell numbers and HAW counts')
    p.add_argument('--length', '-l', type=int, nargs='+', required=True, help='Walk lengths')
    p.add_argument('--types', type=int, default=2, help='Number of node types')
    p.set_defaults(func=cmd_count)

    p = sub.add_parser('walk-dist', help='Token distribution of walks from one node')
    _add_graph_flags(p)
    p.add_argument('--start', required=True, help='Raw id of the start node')
    p.add_argument('--walk-length', '-L', type=int, help='Edges per walk')
    p.add_argument('--mode', choices=('aw', 'haw', 'chaw'), help='Walk anonymization')
    p.add_argument('--samples', '-T', type=int, help='Walks drawn with --sampled')
    p.add_argument('--sampled', action='store_true', help='Estimate instead of enumerating')
    _add_run_flags(p)
    p.set_defaults(func=cmd_walk_dist)

    p = sub.add_parser('sweep', help='Parameter sensitivity sweep')
    _add_graph_flags(p)
    _add_pipeline_flags(p)
    p.add_argument('--param', required=True, choices=('L', 'T', 'd', 'window'))
    p.add_argument('--values', type=int, nargs='+', required=True)
    p.add_argument('--labels', help='TSV with raw_id and class label')
    p.add_argument('--label-column', type=int, default=1, help='0-based label column')
    p.add_argument('--metric', choices=('logreg', 'nn'), default='logreg')
    p.add_argument('--repeats', type=int, help='Random splits')
    p.add_argument('--train-frac', type=float, help='Training fraction')
    _add_run_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser('bench', help='Runtime benchmark on ER or BA graphs')
    p.add_argument('--family', choices=('er', 'ba'), default='er')
    p.add_argument('--sizes', type=int, nargs='+', required=True)
    p.add_argument('--runs', type=int, default=5)
    p.add_argument('--degree-factor', type=float, default=10.0, help='ER p = factor / n')
    _add_pipeline_flags(p)
    _add_run_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code

    level = logging.DEBUG if args.debug else logging.INFO if args.verbose else logging.WARNING
    logging.basicConfig(level=level, stream=sys.stderr,
            format='%(asctime)s %(name)s %(levelname)s %(message)s')

    if args.command == 'generate' and args.family == 'er' and args.edge_prob is None:
        args.edge_prob = min(10.0 / args.nodes, 1.0)

    try:
        config = _effective_config(args)
        args.func(args, config)
    except (ValidationError, GraphError, CorpusFormatError, OSError) as e:
        if args.debug:
            raise
        print('error: {}: {}'.format(e.__class__.__name__, str(e).replace('\n', ' ')), file=sys.stderr)
        return EXIT_INPUT
    except HAWEException as e:
        if args.debug:
            raise
        print('error: {}: {}'.format(e.__class__.__name__, str(e).replace('\n', ' ')), file=sys.stderr)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        return EXIT_RUNTIME
    except Exception as e:
        if args.debug:
            raise
        print('error: {}: {}'.format(e.__class__.__name__, str(e).replace('\n', ' ')), file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
