"""
bilevelcuts : Worker pools
==========================

Copyright MET Norway

Licensed under the GNU GENERAL PUBLIC LICENSE, Version 3; you may not
use this file except in compliance with the License. You may obtain a
copy of the License at

    https://www.gnu.org/licenses/gpl-3.0.en.html

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
implied. See the License for the specific language governing
permissions and limitations under the License.
"""

import itertools
import logging

from concurrent.futures import ThreadPoolExecutor
from concurrent.futures import ProcessPoolExecutor
from concurrent import futures as Futures

logger = logging.getLogger(__name__)


def _bounded(executor, fn, inputs, max_concurrency, capture):
    # Keep at most max_concurrency calls in flight and refill as they finish.
    fn_inputs = iter(inputs)
    futures = {
        executor.submit(fn, item): item
        for item in itertools.islice(fn_inputs, max_concurrency)
    }
    while futures:
        done, _ = Futures.wait(futures, return_when=Futures.FIRST_COMPLETED, timeout=None)
        for fut in done:
            item = futures.pop(fut)
            if capture:
                error = fut.exception()
                if error is not None:
                    logger.error("Worker call failed: %s", error)
                    yield item, error
                    continue
            yield item, fut.result()
        for item in itertools.islice(fn_inputs, len(done)):
            futures[executor.submit(fn, item)] = item


def concurrently(fn, inputs, *, max_concurrency=5, capture=False):
    """
    Call ``fn`` on every value of ``inputs`` in a thread pool.

    Generates (input, output) tuples in completion order. With
    ``capture`` an exception raised by ``fn`` is yielded in place of the
    output instead of propagating.
    """
    with ThreadPoolExecutor(max_workers=max_concurrency) as executor:
        yield from _bounded(executor, fn, inputs, max_concurrency, capture)


def multiprocess(fn, inputs, *, max_concurrency=5, capture=False):
    """
    Process pool variant of ``concurrently``; ``fn`` and its inputs must
    be picklable, so ``fn`` has to be a module level function.
    """
    with ProcessPoolExecutor(max_workers=max_concurrency) as executor:
        yield from _bounded(executor, fn, inputs, max_concurrency, capture)
