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
numba's ``jit`` when available, otherwise a pass-through decorator so the
package still imports (and runs, slowly) without a compiler.
'''

import functools
import logging

logger = logging.getLogger(__name__)

try:
    from numba import jit

    NUMBA_OK = True
except ImportError:
    NUMBA_OK = False
    logger.debug('numba unavailable; kernels run as plain Python')

    def jit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def jit_decorator(f):
            @functools.wraps(f)
            def wrapper(*a, **kw):
                return f(*a, **kw)

            return wrapper

        return jit_decorator


__all__ = ['jit', 'NUMBA_OK']
