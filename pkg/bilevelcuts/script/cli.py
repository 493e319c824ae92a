#!/usr/bin/env python3
# -*- coding: UTF-8 -*-
"""
bilevelcuts : Main script
=========================

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

Sub-commands:
    gen          generate QBCov / QBMKP instances
    solve        solve one instance
    bench        run a benchmark and write result and ECDF CSVs
    export-milp  write the McCormick linearization of a binary instance
"""

import os
import sys
import logging
import argparse

from bilevelcuts.bilevel import METHODS, SEPARATIONS, SolveConfig, solve
from bilevelcuts.cutgen import REMOVAL_STRATEGIES
from bilevelcuts.harness import BenchmarkLimits, GeneratorSpec, export_mccormick
from bilevelcuts.harness import run_benchmark
from bilevelcuts.model import SolutionRecord, write_instance, write_solution
from bilevelcuts.multithread import load_file, load_files
from bilevelcuts.tools import parse_cfg, read_manifest

logger = logging.getLogger(__name__)

NORMALIZATIONS = ("S1", "S2", "U1", "U2", "C1", "C2")


def parse_arguments(argv=None):
    parser = argparse.ArgumentParser(prog="bilevelcuts")
    parser.add_argument('-c', '--cfg', dest='cfgfile', required=False,
                        help='YAML configuration file')
    sub = parser.add_subparsers(dest='command')

    gen = sub.add_parser('gen', help='Generate benchmark instances')
    gen.add_argument('--family', choices=('QBCov', 'QBMKP'), required=True)
    gen.add_argument('-n', type=int, help='Number of variables (QBCov, even)')
    gen.add_argument('--m1', type=int, default=0, help='Leader rows (QBCov)')
    gen.add_argument('--m2', type=int, default=1, help='Linking rows')
    gen.add_argument('--share', type=float, default=0.5,
                     help='Share of MKP items given to the leader (QBMKP)')
    gen.add_argument('--integer', action='store_true',
                     help='Integer domain {0..5} with doubled covering rows (QBMKP)')
    gen.add_argument('--mkp', help='Source MKP file (QBMKP)')
    gen.add_argument('--items', type=int, help='Synthetic MKP items (QBMKP)')
    gen.add_argument('--constraints', type=int, help='Synthetic MKP constraints (QBMKP)')
    gen.add_argument('--seed', type=int, nargs='+', default=[0])
    gen.add_argument('-o', '--out', required=True,
                     help='Output file, or directory when several seeds are given')

    slv = sub.add_parser('solve', help='Solve one instance')
    slv.add_argument('instance')
    slv.add_argument('--method', choices=METHODS)
    slv.add_argument('--sep', choices=SEPARATIONS)
    slv.add_argument('--removal', choices=REMOVAL_STRATEGIES)
    slv.add_argument('--norm', choices=NORMALIZATIONS)
    slv.add_argument('--time-limit', type=float, dest='time_limit')
    slv.add_argument('-o', '--solution', help='Write the solution to this file')

    bench = sub.add_parser('bench', help='Run a benchmark')
    bench.add_argument('manifest', help='Instance directory or list file')
    bench.add_argument('--settings', nargs='+',
                       help='Setting labels, e.g. BC-base BC-best or bc:IFG:RO:S1')
    bench.add_argument('--out-dir', dest='out_dir', required=True)
    bench.add_argument('--time-limit', type=float, dest='time_limit')
    bench.add_argument('--workers', type=int)

    exp = sub.add_parser('export-milp', help='Write the McCormick MILP of a binary instance')
    exp.add_argument('instance')
    exp.add_argument('-o', '--out', required=True, help='Output stem for .lp and .aux')

    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        parser.exit()
    return args


def _gen(args, cfg):
    specs = [GeneratorSpec(args.family, seed, n=args.n, m1=args.m1, m2=args.m2,
                           leader_share=args.share, integer=args.integer,
                           mkp_path=args.mkp, items=args.items,
                           constraints=args.constraints)
             for seed in args.seed]
    if len(specs) == 1 and not os.path.isdir(args.out):
        targets = [args.out]
    else:
        os.makedirs(args.out, exist_ok=True)
        targets = [None] * len(specs)
    for spec, target in zip(specs, targets):
        inst = spec.build()
        target = target or os.path.join(args.out, inst.name + ".bil")
        with open(target, "w", encoding="utf-8") as fd:
            fd.write(write_instance(inst))
        logger.info("Wrote %s (n1=%d n2=%d m1=%d m2=%d)", target, inst.n1, inst.n2,
                    inst.m1, inst.m2)
    return 0


def _solve(args, cfg):
    inst = load_file(args.instance)
    if inst is None:
        return 1
    overrides = {"method": args.method, "separation": args.sep, "removal": args.removal,
                 "normalization": args.norm, "time_limit": args.time_limit}
    config = SolveConfig.from_cfg(cfg, **{k: v for k, v in overrides.items() if v is not None})
    logger.info("Solving %s with %s", inst.name, config.label)
    result = solve(inst, config)
    logger.info("Status %s objective %s bound %s", result.status, result.value, result.bound)
    if args.solution:
        record = SolutionRecord(result.status, result.value,
                                result.point.x if result.point else (),
                                result.point.y if result.point else ())
        with open(args.solution, "w", encoding="utf-8") as fd:
            fd.write(write_solution(record))
    return 0


def _bench(args, cfg):
    bcfg = cfg.get("benchmark") or {}
    files = read_manifest(args.manifest)
    instances = [inst for inst in load_files(files) if inst is not None]
    if len(instances) < len(files):
        logger.warning("Skipping %d unreadable instance files", len(files) - len(instances))
    if not instances:
        logger.error("No instances found in %s", args.manifest)
        return 1
    settings = args.settings or list((bcfg.get("settings") or {}).keys())
    settings = settings or ["BC-base", "BC-best"]
    time_limit = args.time_limit if args.time_limit is not None else bcfg.get("time-limit", 600)
    limits = BenchmarkLimits(time_limit=time_limit,
                             subproblem_time_limit=bcfg.get("subproblem-time-limit"),
                             workers=args.workers or bcfg.get("workers", 1))
    report = run_benchmark(instances, settings, limits, cfg)
    report.write(args.out_dir)
    for label, (solved, total) in report.summary().items():
        print("%-12s %d/%d solved  %.1fs" % (label, solved, total, report.total_runtime(label)))
    return 0


def _export(args, cfg):
    inst = load_file(args.instance)
    if inst is None:
        return 1
    export_mccormick(inst).write(args.out)
    return 0


COMMANDS = {"gen": _gen, "solve": _solve, "bench": _bench, "export-milp": _export}


def main(argv=None):
    logger.debug("-- DEBUG LogLevel --")
    args = parse_arguments(argv)
    cfg = parse_cfg(args.cfgfile) if args.cfgfile else {}
    return COMMANDS[args.command](args, cfg)


def _main():  # pragma: no cover
    try:
        status = main()  # entry point in setup.cfg
    except (ValueError, OSError) as e:
        logger.error("%s", e)
        status = 1
    sys.exit(status)


if __name__ == "__main__":  # pragma: no cover
    _main()
