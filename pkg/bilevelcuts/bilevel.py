"""
bilevelcuts : Bilevel solution methods
======================================

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
    Branch-and-cut and cutting-plane methods on the high point relaxation
    (HPR), separating bilevel-infeasible points with disjunctive cuts,
    plus an enumeration oracle and the gap measures used in reports.
"""

import itertools
import logging
import math
import time

from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np

from bilevelcuts.cutgen import NormalizationSpec, REMOVAL_STRATEGIES, SeparationContext
from bilevelcuts.cutgen import SeparationOutcome, build_polyhedron
from bilevelcuts.follower import FollowerContext
from bilevelcuts.mip import BnbConfig, BranchAndBound, ConicRelaxation, LinearRow
from bilevelcuts.mip import LpRelaxation, Relaxation, RelaxationResult, Verdict
from bilevelcuts.model import BilevelInstance, Cut, Point, RunRecord, SolveStatus, satisfies_hpr

logger = logging.getLogger(__name__)

METHODS = ("bc", "cp", "brute")
SEPARATIONS = ("IO", "IFO", "IG", "IFG")
LEADER_GRID_LIMIT = 10 ** 6
FOLLOWER_GRID_LIMIT = 2 * 10 ** 6


class BruteForceLimitError(ValueError):
    pass


class NotBinaryError(ValueError):
    pass


@dataclass
class SolveConfig:
    method: str = "bc"
    separation: str = "IO"
    removal: str = "RN"
    normalization: NormalizationSpec = NormalizationSpec("S", 2)
    time_limit: Optional[float] = 600.0
    violation_tol: float = 1e-6
    zero_threshold: float = 5e-6
    subproblem_time_limit: Optional[float] = None
    root_cut_rounds: int = 200
    lp_tol: float = 1e-7
    conic_tol: float = 1e-8
    conic_max_iterations: int = 200
    int_tol: float = 1e-6

    def __post_init__(self):
        if isinstance(self.normalization, str):
            self.normalization = NormalizationSpec.parse(self.normalization)
        self.separation = self.separation.upper()
        if self.method not in METHODS:
            raise ValueError("unknown method %r" % self.method)
        if self.separation in ("O", "G"):
            self.separation = "I" + self.separation
        if self.separation not in SEPARATIONS:
            raise ValueError("unknown separation setting %r" % self.separation)
        if self.removal not in REMOVAL_STRATEGIES:
            raise ValueError("unknown removal strategy %r" % self.removal)

    @property
    def strategy(self) -> str:
        return self.separation[-1]

    @property
    def fractional(self) -> bool:
        return "F" in self.separation

    @property
    def label(self) -> str:
        return "%s-%s-%s-%s" % (self.method, self.separation, self.removal,
                                self.normalization.label)

    @classmethod
    def from_cfg(cls, cfg: dict, **overrides) -> "SolveConfig":
        """Build from the ``solver`` and ``tolerances`` sections of a config dict."""
        solver = dict(cfg.get("solver") or {})
        tols = dict(cfg.get("tolerances") or {})
        keys = {
            "method": solver.get("method"),
            "separation": solver.get("separation"),
            "removal": solver.get("removal"),
            "normalization": solver.get("normalization"),
            "time_limit": solver.get("time-limit"),
            "violation_tol": solver.get("violation-tol"),
            "zero_threshold": solver.get("zero-threshold"),
            "subproblem_time_limit": solver.get("subproblem-time-limit"),
            "root_cut_rounds": solver.get("root-cut-rounds"),
            "lp_tol": tols.get("lp"),
            "conic_tol": tols.get("conic"),
            "conic_max_iterations": tols.get("conic-max-iterations"),
            "int_tol": tols.get("integrality"),
        }
        keys.update(overrides)
        return cls(**{k: v for k, v in keys.items() if v is not None})

    def separation_context(self, inst: BilevelInstance,
                           follower: Optional[FollowerContext] = None) -> SeparationContext:
        return SeparationContext(inst, self.strategy, self.normalization, self.removal,
                                 self.violation_tol, self.zero_threshold,
                                 self.subproblem_time_limit, self.conic_tol,
                                 self.conic_max_iterations, follower)


@dataclass(frozen=True, eq=False)
class CutRecord:
    """
    A cut as added, with the incumbent value its removal step relied on.

    ``point`` is the separated point. ``lower`` and ``upper`` are the box
    of the node the cut was generated at; a local cut is only required to
    keep the bilevel-feasible points inside it.
    """

    cut: Cut
    node: Optional[int]
    ub: Optional[float]
    fractional: bool
    point: Optional[Tuple[np.ndarray, np.ndarray]] = None
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None

    def in_scope(self, x, y) -> bool:
        if self.lower is None:
            return True
        z = np.concatenate([np.asarray(x, float), np.asarray(y, float)])
        return bool(np.all(z >= self.lower - 1e-9) and np.all(z <= self.upper + 1e-9))


@dataclass(eq=False)
class BilevelResult:
    status: SolveStatus
    point: Optional[Point] = None
    value: Optional[Fraction] = None
    bound: Optional[float] = None
    root_bound: Optional[float] = None
    root_value: Optional[float] = None
    record: Optional[RunRecord] = None
    cuts: List[CutRecord] = field(default_factory=list)
    iterations: int = 0
    bound_trace: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def objective(self) -> Optional[float]:
        return None if self.value is None else float(self.value)


# High point relaxation

def _hpr_rows(inst: BilevelInstance):
    n1 = inst.n1
    G = np.vstack([
        np.hstack([inst.as_array("M"), inst.as_array("N")]),
        np.hstack([inst.as_array("A"), inst.as_array("B")]),
        np.hstack([np.zeros((inst.nY, n1)), inst.as_array("CY")]),
    ])
    b = np.concatenate([inst.as_array("h"), inst.as_array("f"), inst.as_array("UY")])
    return G, b


class OuterApprox(Relaxation):
    """
    LP vertices for a conic HPR.

    The conic relaxation is solved first; supporting hyperplanes of each
    cone block at its optimum and at every cone-violating LP vertex are
    accumulated (valid everywhere) and the LP over them is re-solved
    until its vertex satisfies the cones.
    """

    def __init__(self, c, G, b, lower, upper, Mt, ht, cones, lp_tol=1e-7, conic_tol=1e-8,
                 max_rounds: int = 50, cone_tol: float = 1e-7):
        self.lp = LpRelaxation(c, G, b, lower, upper, lp_tol)
        self.conic = ConicRelaxation(c, G, b, lower, upper, Mt=Mt, ht=ht, cones=cones,
                                     tol=conic_tol)
        self.num_vars = self.lp.num_vars
        self.lower = self.lp.lower
        self.upper = self.lp.upper
        self.max_rounds = max_rounds
        self.cone_tol = cone_tol
        self.oa_rows: List[LinearRow] = []

    def supports(self, z) -> List[LinearRow]:
        conic = self.conic
        s = conic.Mt @ z - conic.ht
        out = []
        start = 0
        for k in conic.cones:
            sl = slice(start, start + k)
            start += k
            tail = s[sl][1:]
            norm = float(np.linalg.norm(tail))
            if norm <= 1e-12:
                continue
            u = tail / norm
            rows = conic.Mt[sl]
            out.append(LinearRow(rows[0] - u @ rows[1:], conic.ht[sl][0] - u @ conic.ht[sl][1:]))
        return out

    def solve(self, lower, upper, rows=(), hint=None) -> RelaxationResult:
        conic = self.conic.solve(lower, upper, rows)
        if conic.status == "infeasible":
            return conic
        bound = -math.inf
        if conic.is_optimal:
            bound = conic.bound
            self.oa_rows.extend(self.supports(conic.z))
        for _ in range(self.max_rounds):
            res = self.lp.solve(lower, upper, tuple(self.oa_rows) + tuple(rows), hint)
            if not res.is_optimal:
                return res
            if self.conic.cone_feasible(res.z, self.cone_tol):
                return RelaxationResult("optimal", res.z, max(res.bound, bound), res.hint)
            new = [row for row in self.supports(res.z) if row.violation(res.z) > 1e-9]
            if not new:
                break
            self.oa_rows.extend(new)
            hint = res.hint
        logger.debug("outer approximation did not reach a cone-feasible vertex")
        return RelaxationResult("failed")

    def objective(self, z) -> float:
        return self.lp.objective(z)

    def is_feasible(self, z, rows=(), tol=1e-6) -> bool:
        return self.conic.is_feasible(z, rows, tol)


def hpr_relaxation(inst: BilevelInstance, cfg: Optional[SolveConfig] = None) -> Relaxation:
    cfg = cfg or SolveConfig()
    c = np.concatenate([inst.as_array("c"), inst.as_array("d")])
    G, b = _hpr_rows(inst)
    if inst.has_cones:
        Mt = np.hstack([inst.as_array("Mt"), inst.as_array("Nt")])
        return OuterApprox(c, G, b, inst.lower, inst.upper, Mt, inst.as_array("ht"),
                           inst.cones, cfg.lp_tol, cfg.conic_tol)
    return LpRelaxation(c, G, b, inst.lower, inst.upper, cfg.lp_tol)


# Gaps

def _gap(value, bound) -> Optional[float]:
    if value is None or bound is None or not math.isfinite(float(bound)):
        return None
    value, bound = float(value), float(bound)
    diff = value - bound
    if abs(value) < 1e-12:
        return 0.0 if abs(diff) < 1e-9 else None
    return min(100.0, max(0.0, 100.0 * diff / abs(value)))


def compute_gaps(value=None, bound=None, root_value=None, root_bound=None,
                 best_known=None) -> Tuple[Optional[float], ...]:
    """
    (Gap, Gap*, RGap, RGap*) in percent, None where undefined.

    Gap relates the final incumbent to the final bound, RGap the root
    incumbent to the root bound; starred variants use ``best_known``
    in place of the run's own incumbent.
    """
    return (_gap(value, bound), _gap(best_known, bound),
            _gap(root_value, root_bound), _gap(best_known, root_bound))


# Branch-and-cut

class BranchAndCut(object):

    def __init__(self, inst: BilevelInstance, cfg: SolveConfig):
        self.inst = inst
        self.cfg = cfg
        self.follower = FollowerContext(inst, tol=cfg.conic_tol)
        self.sep = cfg.separation_context(inst, self.follower)
        self.cuts: List[CutRecord] = []
        self.engine: Optional[BranchAndBound] = None
        self.icuts = 0
        self.fcuts = 0
        self.nred = 0
        self.t_sep = 0.0
        self.t_follower = 0.0

    @property
    def ub(self) -> Optional[float]:
        if self.engine is None or self.engine.incumbent is None:
            return None
        return self.engine.value

    def _separate(self, node, z):
        x, y = self.inst.split(z)
        P = build_polyhedron(self.inst, node.lower, node.upper)
        ub = self.ub
        res = self.sep.separate(P, (x, y), ub)
        self.nred += res.removed
        self.t_follower += res.follower_seconds
        self.t_sep += res.seconds - res.follower_seconds
        return res, ub

    def _row(self, node, z, cut: Cut, ub, fractional: bool) -> LinearRow:
        scope = None if node.is_root else node.id
        cut = cut.with_scope(scope)
        x, y = self.inst.split(np.array(z, dtype=float))
        self.cuts.append(CutRecord(cut, scope, ub, fractional, (x, y),
                                   np.array(node.lower, dtype=float),
                                   np.array(node.upper, dtype=float)))
        return LinearRow(cut.coefficients, cut.tau, scope)

    def on_integer(self, node, z, heuristic):
        res, ub = self._separate(node, z)
        if res.has_cut:
            self.icuts += 1
            return Verdict.cuts([self._row(node, z, res.cut, ub, False)])
        if res.outcome is SeparationOutcome.NO_IMPROVING:
            return Verdict.accept()
        if not heuristic:
            logger.warning("no violated cut for bilevel-infeasible point at node %d (%s)",
                           node.id, res.outcome.value)
        return Verdict.reject()

    def on_fractional(self, node, z):
        if not self.cfg.fractional or (not node.is_root and node.cut_rounds >= 1):
            return None
        res, ub = self._separate(node, z)
        if not res.has_cut:
            return None
        self.fcuts += 1
        return [self._row(node, z, res.cut, ub, True)]

    def solve(self) -> BilevelResult:
        inst, cfg = self.inst, self.cfg
        bnb_cfg = BnbConfig(int_tol=cfg.int_tol, time_limit=cfg.time_limit,
                            integral_objective=inst.integral_leader_objective,
                            max_cut_rounds=cfg.root_cut_rounds)
        self.engine = BranchAndBound(hpr_relaxation(inst, cfg), bnb_cfg, self.on_integer,
                                     self.on_fractional)
        result = self.engine.solve()
        stats = result.stats
        out = BilevelResult(result.status, cuts=self.cuts, bound=result.bound,
                            root_bound=stats.root_bound, root_value=stats.root_incumbent,
                            bound_trace=stats.bound_trace)
        if result.incumbent is not None:
            x, y = inst.split(np.rint(result.incumbent))
            out.point = Point(tuple(int(v) for v in x), tuple(int(v) for v in y))
            out.value = inst.leader_objective(out.point.x, out.point.y)
        if out.status is SolveStatus.INFEASIBLE:
            out.bound = None
        out.record = RunRecord(inst.name, cfg.label, stats.elapsed, nodes=stats.nodes,
                               icuts=self.icuts, fcuts=self.fcuts, nred=self.nred,
                               t_follower=self.t_follower, t_separation=self.t_sep,
                               solved=int(out.status in (SolveStatus.OPTIMAL,
                                                         SolveStatus.INFEASIBLE)),
                               status=out.status, objective=out.objective, bound=out.bound,
                               root_objective=out.root_value, root_bound=out.root_bound)
        out.record.gap, _, out.record.rgap, _ = compute_gaps(out.objective, out.bound,
                                                             out.root_value, out.root_bound)
        logger.info("branch-and-cut %s: %s value %s bound %s nodes %d cuts %d/%d",
                    inst.name or "-", out.status, out.objective, out.bound, stats.nodes,
                    self.icuts, self.fcuts)
        return out


def branch_and_cut(inst: BilevelInstance, cfg: Optional[SolveConfig] = None) -> BilevelResult:
    return BranchAndCut(inst, cfg or SolveConfig()).solve()


# Cutting plane

def no_good_cut(inst: BilevelInstance, z) -> Cut:
    """Cut excluding exactly the binary point z."""
    z = np.rint(np.asarray(z, dtype=float))
    coef = np.where(z > 0.5, -1.0, 1.0)
    tau = 1.0 - float(np.sum(z > 0.5))
    return Cut(coef[:inst.n1], coef[inst.n1:], tau)


def cutting_plane(inst: BilevelInstance, cfg: Optional[SolveConfig] = None) -> BilevelResult:
    """
    Resolve the HPR with all cuts so far to optimality and separate its
    optimum until the optimum is bilevel feasible. Binary instances only.
    """
    if not inst.is_binary:
        raise NotBinaryError("the cutting-plane method needs a binary instance")
    cfg = cfg or SolveConfig(method="cp")
    start = time.monotonic()
    relax = hpr_relaxation(inst, cfg)
    P = build_polyhedron(inst)
    sep = cfg.separation_context(inst, FollowerContext(inst, tol=cfg.conic_tol))
    rows: List[LinearRow] = []
    out = BilevelResult(SolveStatus.UNKNOWN)
    nodes = icuts = nred = 0
    t_sep = t_follower = 0.0
    max_iterations = 2 ** inst.n + 1
    while True:
        remaining = None
        if cfg.time_limit is not None:
            remaining = cfg.time_limit - (time.monotonic() - start)
            if remaining <= 0.0:
                out.status = SolveStatus.TIME_LIMIT
                break
        if out.iterations >= max_iterations:
            logger.error("cutting plane exceeded %d iterations", max_iterations)
            break
        out.iterations += 1
        bnb_cfg = BnbConfig(int_tol=cfg.int_tol, time_limit=remaining,
                            integral_objective=inst.integral_leader_objective)
        engine = BranchAndBound(relax, bnb_cfg, rows=rows)
        result = engine.solve()
        nodes += result.stats.nodes
        if out.iterations == 1:
            out.root_bound = result.stats.root_bound
        if result.status is SolveStatus.INFEASIBLE:
            out.status = SolveStatus.INFEASIBLE
            break
        if result.status is not SolveStatus.OPTIMAL:
            out.status = SolveStatus.TIME_LIMIT
            if math.isfinite(result.bound):
                out.bound = result.bound
            break
        out.bound = result.value
        out.bound_trace.append((time.monotonic() - start, result.value))
        z = np.rint(result.incumbent)
        x, y = inst.split(z)
        res = sep.separate(P, (x, y))
        nred += res.removed
        t_follower += res.follower_seconds
        t_sep += res.seconds - res.follower_seconds
        if res.outcome is SeparationOutcome.NO_IMPROVING:
            out.status = SolveStatus.OPTIMAL
            out.point = Point(tuple(int(v) for v in x), tuple(int(v) for v in y))
            out.value = inst.leader_objective(out.point.x, out.point.y)
            break
        cut = res.cut
        if cut is None or cut.violation(x, y) <= cfg.violation_tol:
            logger.warning("separation failed at iteration %d (%s), adding a no-good cut",
                           out.iterations, res.outcome.value)
            cut = no_good_cut(inst, z)
        icuts += 1
        out.cuts.append(CutRecord(cut, None, None, False, (x, y)))
        rows.append(LinearRow(cut.coefficients, cut.tau))
        logger.debug("cutting plane iteration %d: bound %.6g, cut %r", out.iterations,
                     result.value, cut)

    if out.status is SolveStatus.INFEASIBLE:
        out.bound = None
    elapsed = time.monotonic() - start
    out.record = RunRecord(inst.name, cfg.label, elapsed, nodes=nodes, icuts=icuts, nred=nred,
                           t_follower=t_follower, t_separation=t_sep,
                           solved=int(out.status in (SolveStatus.OPTIMAL,
                                                     SolveStatus.INFEASIBLE)),
                           status=out.status, objective=out.objective, bound=out.bound,
                           root_bound=out.root_bound)
    out.record.gap, _, out.record.rgap, _ = compute_gaps(out.objective, out.bound)
    logger.info("cutting plane %s: %s value %s after %d iterations", inst.name or "-",
                out.status, out.objective, out.iterations)
    return out


# Enumeration oracle

def _grid(lower, upper) -> Tuple[int, List[range]]:
    ranges = [range(int(lo), int(hi) + 1) for lo, hi in zip(lower, upper)]
    return int(np.prod([len(r) for r in ranges], dtype=float)), ranges


def brute_force(inst: BilevelInstance) -> BilevelResult:
    """
    Exact optimistic optimum by enumerating leader points and solving the
    follower over a precomputed grid of follower points.
    """
    start = time.monotonic()
    n1 = inst.n1
    size_x, ranges_x = _grid(inst.lb[:n1], inst.ub[:n1])
    size_y, ranges_y = _grid(inst.lb[n1:], inst.ub[n1:])
    if size_x > LEADER_GRID_LIMIT:
        raise BruteForceLimitError("%d leader points exceed the limit %d"
                                   % (size_x, LEADER_GRID_LIMIT))
    if size_y > FOLLOWER_GRID_LIMIT:
        raise BruteForceLimitError("%d follower points exceed the limit %d"
                                   % (size_y, FOLLOWER_GRID_LIMIT))
    Y = np.array(list(itertools.product(*ranges_y)), dtype=float).reshape(-1, inst.n2)
    qY = inst.follower_quadratic.values(Y)
    in_Y = np.ones(len(Y), dtype=bool)
    if inst.nY:
        in_Y &= np.all(Y @ inst.as_array("CY").T >= inst.as_array("UY") - 1e-9, axis=1)
    BY = Y @ inst.as_array("B").T
    NY = Y @ inst.as_array("N").T
    dY = Y @ inst.as_array("d")
    A, f = inst.as_array("A"), inst.as_array("f")
    M, h = inst.as_array("M"), inst.as_array("h")
    c = inst.as_array("c")

    best_value = None
    best_point = None
    for x in itertools.product(*ranges_x):
        xa = np.array(x, dtype=float)
        feasible = in_Y & np.all(BY >= f - A @ xa - 1e-9, axis=1)
        if not np.any(feasible):
            continue
        phi = qY[feasible].min()
        optimal = feasible & (qY <= phi + 1e-9 * (1.0 + abs(phi)))
        if inst.m1:
            optimal &= np.all(NY >= h - M @ xa - 1e-9, axis=1)
        candidates = np.flatnonzero(optimal)
        if inst.has_cones:
            candidates = [k for k in candidates if satisfies_hpr(inst, x, Y[k].astype(int))]
        if len(candidates) == 0:
            continue
        k = min(candidates, key=lambda k: (dY[k], k))
        value_f = float(c @ xa + dY[k])
        if best_value is not None and value_f > float(best_value) + 1e-6:
            continue
        y = tuple(int(v) for v in Y[k])
        value = inst.leader_objective(x, y)
        if best_value is None or value < best_value:
            best_value = value
            best_point = Point(tuple(int(v) for v in x), y)

    elapsed = time.monotonic() - start
    status = SolveStatus.INFEASIBLE if best_point is None else SolveStatus.OPTIMAL
    out = BilevelResult(status, best_point, best_value,
                        None if best_value is None else float(best_value))
    out.record = RunRecord(inst.name, "brute", elapsed, solved=1, status=status,
                           objective=out.objective, bound=out.bound,
                           gap=None if best_value is None else 0.0)
    return out


def solve(inst: BilevelInstance, cfg: Optional[SolveConfig] = None) -> BilevelResult:
    cfg = cfg or SolveConfig()
    if cfg.method == "cp":
        return cutting_plane(inst, cfg)
    if cfg.method == "brute":
        return brute_force(inst)
    return branch_and_cut(inst, cfg)
