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

__all__ = [
        '__title__', '__version__', '__description__',
        '__author__', '__author_email__',
        '__uri__', '__license__', '__copyright__', '__classifiers__',
        ]

__title__ = 'hetero.hawe'
__version__ = '0.3.0'
__description__ = 'Structural role embeddings on heterogeneous networks via heterogeneous anonymous walks'
__author__ = 'The hawe authors'
__author_email__ = 'hawe-dev@users.noreply.github.com'
__uri__ = 'https://github.com/hetero-hawe/hawe'
__license__ = 'Apache License, Version 2.0'
__copyright__ = 'Copyright 2024 {}'.format(__author__)
__classifiers__ = [
    'License :: OSI Approved :: Apache Software License',
    'Programming Language :: Python :: 3',
    'Topic :: Scientific/Engineering :: Information Analysis',
]
