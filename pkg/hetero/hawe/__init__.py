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
Structural role embeddings on heterogeneous networks.

Walks are sampled from every node, anonymized into type-aware tokens and
the per-node bags of tokens are embedded with a PV-DM style trainer.

    >>> from hetero.hawe import gen_pinwheel, build_corpus, train, TrainConfig
    >>> graph = gen_pinwheel(8, 2, heterogeneous=True)
    >>> corpus, lexicon = build_corpus(graph, samples=64, walk_length=4, mode='haw')
    >>> model = train(corpus, lexicon, TrainConfig(dim=16, window=2, epochs=5))
'''

__all__ = ['HeteroGraph', 'RoleLabeling', 'load_graph', 'write_graph',
        'gen_pinwheel', 'gen_er', 'gen_ba', 'wl_roles',
        'anonymize', 'to_haw', 'to_chaw', 'tokenize', 'bell', 'enumerate_aws',
        'count_haws', 'exact_walk_distribution', 'tv_distance',
        'Corpus', 'Lexicon', 'build_corpus', 'save_corpus', 'load_corpus',
        'TrainConfig', 'EmbeddingModel', 'train', 'grad_check', 'export_embeddings',
        'EvalReport', 'classify', 'topk_search', 'sweep', 'bench_runtime',
        'HAWEException', 'ValidationError', 'GraphError', 'GraphFormatError',
        'EnumerationLimitExceeded', 'CorpusFormatError', 'CorpusVersionError',
        'TrainingError', 'EvaluationError',
        '__title__', '__description__', '__version__',
        '__author__', '__author_email__',
        '__uri__', '__license__', '__copyright__', '__classifiers__',
        ]

from .__about__ import (__title__, __version__, __description__,
        __author__, __author_email__,
        __uri__, __license__, __copyright__, __classifiers__,
        )
from .exceptions import (HAWEException, ValidationError, GraphError, GraphFormatError,
        EnumerationLimitExceeded, CorpusFormatError, CorpusVersionError,
        TrainingError, EvaluationError)
from .hetgraph import (HeteroGraph, RoleLabeling, load_graph, write_graph,
        gen_pinwheel, gen_er, gen_ba, wl_roles)
from .walklang import (anonymize, to_haw, to_chaw, tokenize, bell, enumerate_aws,
        count_haws, exact_walk_distribution, tv_distance)
from .corpus import Corpus, Lexicon, build_corpus, save_corpus, load_corpus
from .pvdm import TrainConfig, EmbeddingModel, train, grad_check, export_embeddings
from .evalharness import EvalReport, classify, topk_search, sweep, bench_runtime
