"""
bilevelcuts : Instance file IO
==============================

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

import logging

from dataclasses import replace
from pathlib import Path

from bilevelcuts.model import InstanceFormatError, InstanceValidationError, parse_instance
from bilevelcuts.multithread.threads import concurrently

logger = logging.getLogger(__name__)


def load_file(filename):
    """
    Read and parse one instance file. Returns None after logging the
    problem when the file cannot be read or parsed. An instance without
    a name is named after the file.
    """
    filename = str(filename).strip()
    path = Path(filename)
    try:
        with open(path, encoding="utf-8") as fd:
            text = fd.read()
    except OSError as e:
        logger.error("Could not read file %s error was %s", filename, e)
        return None
    try:
        inst = parse_instance(text)
    except InstanceFormatError as e:
        logger.error("Could not parse %s: %s", filename, e)
        return None
    except InstanceValidationError as e:
        logger.error("Invalid instance in %s: %s", filename, e)
        return None
    if not inst.name:
        inst = replace(inst, name=path.stem)
    return inst


def _load_indexed(item):
    return load_file(item[1])


def load_files(filelist, threads=10):
    """
    Threaded ``load_file`` over a list of paths; the result keeps the
    order of ``filelist`` with None for files that failed.
    """
    filelist = list(filelist)
    out = [None] * len(filelist)
    for (index, _), inst in concurrently(_load_indexed, enumerate(filelist),
                                         max_concurrency=max(1, threads)):
        out[index] = inst
    return out
