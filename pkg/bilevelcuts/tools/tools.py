"""
bilevelcuts : Tools
===================

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
import fnmatch
import logging

import yaml

logger = logging.getLogger(__name__)

INSTANCE_PATTERN = "*.bil"
CFG_SECTIONS = ("solver", "tolerances", "benchmark")


def parse_cfg(cfgfile):
    """Read a YAML configuration file into a dict; an empty file gives {}."""
    logger.debug("Reading %s", cfgfile)
    with open(cfgfile, "r", encoding="utf-8") as ymlfile:
        cfg = yaml.safe_load(ymlfile)
    if cfg is None:
        return {}
    if not isinstance(cfg, dict):
        raise ValueError("configuration %s must be a mapping" % cfgfile)
    unknown = sorted(set(cfg) - set(CFG_SECTIONS))
    if unknown:
        logger.warning("Ignoring unknown configuration sections: %s", ", ".join(unknown))
    return cfg


def getListOfFiles(dirName, pattern=INSTANCE_PATTERN):
    """
    Sorted list of files below dirName whose names match pattern, or
    None when there are none.
    """
    logger.debug("Creating list of files traversing %s", dirName)
    listOfFiles = list()
    for (dirpath, dirnames, filenames) in os.walk(dirName):
        for filename in fnmatch.filter(filenames, pattern):
            listOfFiles.append(os.path.join(dirpath, filename))
    logger.debug("Found %d files.", len(listOfFiles))
    if len(listOfFiles) == 0:
        return None
    return sorted(listOfFiles)


def read_manifest(path):
    """
    Instance paths of a benchmark. ``path`` is either a directory, which
    is searched for instance files, or a text file with one path per
    line (relative paths resolve against the manifest's directory, '#'
    starts a comment).
    """
    if os.path.isdir(path):
        return getListOfFiles(path) or []
    base = os.path.dirname(os.path.abspath(path))
    files = []
    with open(path, encoding="utf-8") as fd:
        for line in fd:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            files.append(line if os.path.isabs(line) else os.path.join(base, line))
    return files


def flatten(mylist):
    """Flatten a list of lists"""
    return [item for sublist in mylist for item in sublist]
