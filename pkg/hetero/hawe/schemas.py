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
Packaged YAML JSON-schemas and validators that raise this package's
ValidationError.
'''

import functools
from importlib import resources

import jsonschema
import yaml

from .exceptions import ValidationError


@functools.lru_cache(maxsize=None)
def load_schema(resource_name):
    with resources.files(__package__).joinpath(resource_name).open('rb') as f:
        return yaml.safe_load(f)


def gen_validate(resource_name, error=ValidationError):
    schema = load_schema(resource_name)

    def _validate(instance):
        try:
            jsonschema.validate(instance, schema)
        except jsonschema.ValidationError as e:
            raise error('{}: {}'.format(
                '/'.join(str(p) for p in e.absolute_path) or '<root>', e.message)) from e
    return _validate
