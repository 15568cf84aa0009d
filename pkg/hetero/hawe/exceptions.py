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

class HAWEException(Exception):
    'Any exception raised by hetero.hawe.'

class ValidationError(HAWEException):
    'Raised when configuration or call parameters fail to validate'

class GraphError(HAWEException):
    'Raised when a graph is inconsistent or unusable for the requested operation.'

class GraphFormatError(GraphError):
    '''
    A malformed line in a node or edge file.

    Carries the offending file path and 1-based line number so the CLI can
    emit a single machine-parsable error line.
    '''
    def __init__(self, path, lineno, message):
        self.path = path
        self.lineno = lineno
        self.message = message
        super(GraphFormatError, self).__init__(str(self))

    def __str__(self):
        return '{}:{}: {}'.format(self.path, self.lineno, self.message)

class EnumerationLimitExceeded(HAWEException):
    'Raised when an exact enumeration would exceed its combinatorial guard.'

class CorpusFormatError(HAWEException):
    'Raised when a corpus file is truncated or otherwise unreadable.'

class CorpusVersionError(CorpusFormatError):
    'Raised when a corpus file has the wrong magic header or version.'

class TrainingError(HAWEException):
    'Raised when the embedding trainer cannot run or diverges.'

class EvaluationError(HAWEException):
    'Raised when an evaluation task\'s preconditions do not hold.'
