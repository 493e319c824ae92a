"""
bilevelcuts : Benchmark runner
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

PURPOSE:
    Solve every instance with every setting, fill in the gaps against
    the best value found by any setting and build empirical cumulative
    distribution functions (ECDF) of runtime and Gap* per setting.

    Only instances where at least one setting found a feasible point or
    proved infeasibility enter the ECDFs.
"""

import csv
import logging
import os

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

from bilevelcuts.bilevel import SolveConfig, compute_gaps, solve
from bilevelcuts.model import RUN_RECORD_COLUMNS, BilevelInstance, RunRecord, SolveStatus
from bilevelcuts.multithread import multiprocess
from bilevelcuts.tools import flatten

logger = logging.getLogger(__name__)

# Named settings of the method comparison.
SETTINGS = {
    "BC-base": {"method": "bc", "separation": "IO", "removal": "RN", "normalization": "S2"},
    "BC-best": {"method": "bc", "separation": "IFG", "removal": "RO", "normalization": "S1"},
    "CP-base": {"method": "cp", "separation": "O", "removal": "RN", "normalization": "S2"},
    "CP-best": {"method": "cp", "separation": "G", "removal": "RO", "normalization": "S1"},
}
ECDF_METRICS = ("runtime", "gap_star")
SETTING_KEYS = ("method", "separation", "removal", "normalization")


@dataclass
class BenchmarkLimits:
    time_limit: Optional[float] = 600.0
    subproblem_time_limit: Optional[float] = None
    workers: int = 1


def resolve_setting(name: str, cfg: Optional[dict] = None) -> Tuple[str, SolveConfig]:
    """
    A setting by label: one from the ``benchmark: settings`` section of
    the configuration, one of the named SETTINGS, or an inline
    "method:separation:removal:normalization" string.
    """
    cfg = cfg or {}
    custom = (cfg.get("benchmark") or {}).get("settings") or {}
    if name in custom:
        keys = dict(custom[name])
    elif name in SETTINGS:
        keys = dict(SETTINGS[name])
    else:
        parts = name.split(":")
        if len(parts) != len(SETTING_KEYS):
            raise ValueError("unknown setting %r" % name)
        keys = dict(zip(SETTING_KEYS, parts))
    unknown = set(keys) - set(SETTING_KEYS)
    if unknown:
        raise ValueError("setting %s has unknown keys %s" % (name, ", ".join(sorted(unknown))))
    return name, SolveConfig.from_cfg(cfg, **keys)


@dataclass(frozen=True)
class EcdfSeries:
    """Sorted metric values and the share of instances at or below each."""

    label: str
    metric: str
    values: Tuple[float, ...]
    fractions: Tuple[float, ...]
    total: int

    def __post_init__(self):
        if len(self.values) != len(self.fractions):
            raise ValueError("ECDF values and fractions differ in length")
        if any(b < a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("ECDF values must be sorted")
        if any(b < a for a, b in zip(self.fractions, self.fractions[1:])):
            raise ValueError("ECDF fractions must be non-decreasing")
        if self.fractions and self.fractions[-1] > 1.0 + 1e-12:
            raise ValueError("ECDF fractions must end at or below 1")

    @classmethod
    def from_values(cls, label: str, metric: str, values: Sequence[float], total: int,
                    limit: float) -> "EcdfSeries":
        """With nothing solved the series is the single point (limit, 0)."""
        values = sorted(float(v) for v in values)
        if not values or total == 0:
            return cls(label, metric, (float(limit),), (0.0,), total)
        fractions = tuple((k + 1) / total for k in range(len(values)))
        return cls(label, metric, tuple(values), fractions, total)

    @property
    def solved_fraction(self) -> float:
        return self.fractions[-1]

    def rows(self) -> List[Tuple[float, float]]:
        return list(zip(self.values, self.fractions))


@dataclass(frozen=True)
class BenchmarkTask:
    instance: BilevelInstance
    label: str
    config: SolveConfig


def run_task(task: BenchmarkTask) -> RunRecord:
    """Solve one (instance, setting) pair; failures become an Unknown record."""
    name = task.instance.name
    try:
        result = solve(task.instance, task.config)
    except Exception as e:
        logger.error("Setting %s failed on %s: %s", task.label, name, e)
        return RunRecord(name, task.label, status=SolveStatus.UNKNOWN)
    record = result.record or RunRecord(name, task.label, status=result.status)
    record.instance = name
    record.setting = task.label
    logger.info("%s %s: %s value %s in %.1fs", name, task.label, record.status,
                record.objective, record.runtime)
    return record


@dataclass
class BenchmarkReport:
    records: List[RunRecord]
    instances: List[str]
    settings: List[str]
    kept: List[str]
    best_known: Dict[str, Optional[float]]
    ecdf: Dict[str, List[EcdfSeries]] = field(default_factory=dict)

    def records_for(self, label: str) -> List[RunRecord]:
        return [r for r in self.records if r.setting == label]

    def summary(self) -> Dict[str, Tuple[int, int]]:
        """Per setting: (#solved, #instances) over the kept instances."""
        kept = set(self.kept)
        return {label: (sum(r.solved for r in self.records_for(label) if r.instance in kept),
                        len(kept))
                for label in self.settings}

    def total_runtime(self, label: str) -> float:
        return sum(r.runtime for r in self.records_for(label))

    def write(self, out_dir: str) -> List[str]:
        """Write results.csv and one ecdf-<metric>-<setting>.csv per series."""
        os.makedirs(out_dir, exist_ok=True)
        written = []
        path = os.path.join(out_dir, "results.csv")
        with open(path, "w", newline="", encoding="utf-8") as fd:
            writer = csv.DictWriter(fd, fieldnames=RUN_RECORD_COLUMNS)
            writer.writeheader()
            for record in self.records:
                writer.writerow(record.as_row())
        written.append(path)
        for series in flatten(self.ecdf.values()):
            path = os.path.join(out_dir, "ecdf-%s-%s.csv" % (series.metric, series.label))
            with open(path, "w", newline="", encoding="utf-8") as fd:
                writer = csv.writer(fd)
                writer.writerow(("value", "fraction"))
                for value, fraction in series.rows():
                    writer.writerow(("%.6g" % value, "%.6f" % fraction))
            written.append(path)
        logger.info("Wrote %d report files to %s", len(written), out_dir)
        return written


def _has_outcome(record: RunRecord) -> bool:
    return record.objective is not None or record.status is SolveStatus.INFEASIBLE


def _ecdf_value(record: RunRecord, metric: str) -> Optional[float]:
    if metric == "runtime":
        return record.runtime if record.solved else None
    if record.status is SolveStatus.INFEASIBLE and record.solved:
        return 0.0
    return record.gap_star


def run_benchmark(instances: Sequence[BilevelInstance],
                  settings: Sequence[Union[str, Tuple[str, SolveConfig]]],
                  limits: Optional[BenchmarkLimits] = None,
                  cfg: Optional[dict] = None) -> BenchmarkReport:
    limits = limits or BenchmarkLimits()
    named = []
    for k, inst in enumerate(instances):
        if not inst.name:
            inst = replace(inst, name="instance%d" % (k + 1))
        named.append(inst)
    names = [inst.name for inst in named]
    if len(set(names)) != len(names):
        raise ValueError("benchmark instance names must be unique")

    resolved = []
    for setting in settings:
        label, config = resolve_setting(setting, cfg) if isinstance(setting, str) else setting
        config = replace(config, time_limit=limits.time_limit,
                         subproblem_time_limit=(limits.subproblem_time_limit
                                                or config.subproblem_time_limit))
        resolved.append((label, config))
    labels = [label for label, _ in resolved]
    if len(set(labels)) != len(labels):
        raise ValueError("benchmark setting labels must be unique")

    tasks = [BenchmarkTask(inst, label, config) for inst in named for label, config in resolved]
    logger.info("Benchmark of %d instances with %d settings", len(named), len(resolved))
    by_key: Dict[Tuple[str, str], RunRecord] = {}
    if limits.workers > 1:
        for task, outcome in multiprocess(run_task, tasks, max_concurrency=limits.workers,
                                          capture=True):
            if isinstance(outcome, Exception):
                outcome = RunRecord(task.instance.name, task.label, status=SolveStatus.UNKNOWN)
            by_key[(task.instance.name, task.label)] = outcome
    else:
        for task in tasks:
            by_key[(task.instance.name, task.label)] = run_task(task)
    records = [by_key[(name, label)] for name in names for label in labels]

    best_known: Dict[str, Optional[float]] = {}
    for name in names:
        values = [by_key[(name, label)].objective for label in labels
                  if by_key[(name, label)].objective is not None]
        best_known[name] = min(values) if values else None
    for record in records:
        _, record.gap_star, _, record.rgap_star = compute_gaps(
            record.objective, record.bound, record.root_objective, record.root_bound,
            best_known[record.instance])

    kept = [name for name in names
            if any(_has_outcome(by_key[(name, label)]) for label in labels)]
    if len(kept) < len(names):
        logger.info("Dropped %d instances without a feasible point or infeasibility proof",
                    len(names) - len(kept))
    report = BenchmarkReport(records, names, labels, kept, best_known)
    limit_for = {"runtime": limits.time_limit or 0.0, "gap_star": 100.0}
    for metric in ECDF_METRICS:
        report.ecdf[metric] = []
        for label in labels:
            values = [_ecdf_value(by_key[(name, label)], metric) for name in kept]
            report.ecdf[metric].append(EcdfSeries.from_values(
                label, metric, [v for v in values if v is not None], len(kept),
                limit_for[metric]))
    for label, (solved, total) in report.summary().items():
        logger.info("%s: %d/%d solved, %.1fs total", label, solved, total,
                    report.total_runtime(label))
    return report
