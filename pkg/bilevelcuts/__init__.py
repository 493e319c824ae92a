"""
bilevelcuts : Main Package Init
===============================

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

import os
import logging
import sys

__package__ = "bilevelcuts"
__version__ = "1.0.0"
__date__ = "2026-10-18"
__all__ = ["BilevelInstance", "SolveConfig", "parse_instance", "write_instance",
           "solve", "branch_and_cut", "cutting_plane", "brute_force", "separate"]


_BRIEF_FORMAT = "[{asctime:}] [{processName:s}] {message:}"
_LEVEL_FORMAT = "[{asctime:}] [{processName:s}] {levelname:8s} {message:}"
_SOURCE_FORMAT = ("[{asctime:}] [{processName:s}]"
                  " {name:>24}:{lineno:<4d} {levelname:8s} {message:}")


class InfoFilter(logging.Filter):
    def filter(self, rec):
        return rec.levelno == logging.INFO


def _make_handler(handler, level, fmt, only_info=False):
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(fmt=fmt, style="{"))
    if only_info:
        handler.addFilter(InfoFilter())
    return handler


def _init_logging(log_obj):
    """Set up the package logger from BILEVELCUTS_LOGLEVEL and
    BILEVELCUTS_LOGFILE.

    Solver progress goes to stdout at INFO. Warnings and errors always go
    to stderr with their source location. At DEBUG, stdout carries every
    record with its source location.
    """
    want_level = os.environ.get("BILEVELCUTS_LOGLEVEL", "INFO").upper()
    log_file = os.environ.get("BILEVELCUTS_LOGFILE", None)

    log_level = getattr(logging, want_level, None)
    if not isinstance(log_level, int):
        sys.stderr.write(
            "Invalid logging level '%s' in BILEVELCUTS_LOGLEVEL, using INFO\n" % want_level)
        log_level = logging.INFO
    log_obj.setLevel(log_level)

    verbose = log_level < logging.INFO
    if log_file is not None:
        log_obj.addHandler(_make_handler(
            logging.FileHandler(log_file, encoding="utf-8"), log_level,
            _SOURCE_FORMAT if verbose else _LEVEL_FORMAT))

    if verbose:
        log_obj.addHandler(_make_handler(
            logging.StreamHandler(sys.stdout), log_level, _SOURCE_FORMAT))
    elif log_level == logging.INFO:
        log_obj.addHandler(_make_handler(
            logging.StreamHandler(sys.stdout), logging.INFO, _BRIEF_FORMAT, only_info=True))
    log_obj.addHandler(_make_handler(
        logging.StreamHandler(sys.stderr), logging.WARNING, _SOURCE_FORMAT))


# Logging Setup
logger = logging.getLogger(__name__)
_init_logging(logger)

from .model import BilevelInstance, parse_instance, write_instance  # noqa: E402
from .cutgen import separate  # noqa: E402
from .bilevel import SolveConfig, solve, branch_and_cut, cutting_plane  # noqa: E402
from .bilevel import brute_force  # noqa: E402
