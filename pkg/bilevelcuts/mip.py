"""
bilevelcuts : Branch-and-bound engine
=====================================

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
    Best-bound branch-and-bound over pluggable continuous relaxations
    (LP through linsolve, SOCP through conic). Callers steer the search
    through three callbacks:

      on_integer(node, z, heuristic)  -> Verdict (accept, reject or cuts)
      on_fractional(node, z)          -> list of LinearRow or None
      on_new_incumbent(z, value)      -> truthy to stop the search

    Rows added by callbacks are either global or local to the node they
    were produced at; local rows are inherited by the node's children
    only.
"""

import enum
import heapq
import logging
import math
import time

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from bilevelcuts.conic import ConicOptimal, ConicPrimalInfeasible, ConicProblem
from bilevelcuts.conic import conic_solve, nonneg, soc
from bilevelcuts.linsolve import LpInfeasible, LpIterationLimitError, LpNumericalError
from bilevelcuts.linsolve import LpOptimal, LpProblem, lp_solve
from bilevelcuts.model import SolveStatus

logger = logging.getLogger(__name__)

POOL_CAPACITY = 64
FEAS_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class LinearRow:
    """Row a'z >= b; ``local_to`` is the owning node id, None when global."""

    a: np.ndarray
    b: float
    local_to: Optional[int] = None

    def __post_init__(self):
        a = np.array(self.a, dtype=float).ravel()
        a.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", float(self.b))

    def violation(self, z) -> float:
        return float(self.b - self.a @ z)


class VerdictKind(enum.Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    CUTS = "cuts"


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    rows: Tuple[LinearRow, ...] = ()

    @classmethod
    def accept(cls) -> "Verdict":
        return cls(VerdictKind.ACCEPT)

    @classmethod
    def reject(cls) -> "Verdict":
        return cls(VerdictKind.REJECT)

    @classmethod
    def cuts(cls, rows: Iterable[LinearRow]) -> "Verdict":
        rows = tuple(rows)
        if not rows:
            raise ValueError("a cut verdict needs at least one row")
        return cls(VerdictKind.CUTS, rows)


@dataclass
class BnbConfig:
    int_tol: float = 1e-6
    gap_tol: float = 0.0
    time_limit: Optional[float] = None
    solution_limit: Optional[int] = None
    node_limit: Optional[int] = None
    cutoff: Optional[float] = None
    integral_objective: bool = False
    heuristic: bool = True
    max_cut_rounds: int = 200
    pool_capacity: int = POOL_CAPACITY

    def __post_init__(self):
        if self.int_tol <= 0.0 or self.gap_tol < 0.0:
            raise ValueError("tolerances must be positive")


@dataclass(eq=False)
class BnbNode:
    id: int
    parent: Optional[int]
    depth: int
    lower: np.ndarray
    upper: np.ndarray
    rows: Tuple[LinearRow, ...] = ()
    bound: float = -math.inf
    hint: object = None
    path: Tuple[int, ...] = ()
    cut_rounds: int = 0

    @property
    def is_root(self) -> bool:
        return self.parent is None


@dataclass(frozen=True, eq=False)
class RelaxationResult:
    status: str
    z: Optional[np.ndarray] = None
    bound: float = math.inf
    hint: object = None

    @property
    def is_optimal(self) -> bool:
        return self.status == "optimal"


class SolutionPool(object):
    """Integer points in discovery order, FIFO eviction beyond capacity."""

    def __init__(self, capacity: int = POOL_CAPACITY):
        self.capacity = capacity
        self._points = deque()
        self._keys = set()

    def add(self, z) -> bool:
        key = tuple(int(v) for v in np.rint(np.asarray(z, dtype=float)))
        if key in self._keys:
            return False
        if len(self._points) == self.capacity:
            self._keys.discard(self._points.popleft())
        self._points.append(key)
        self._keys.add(key)
        return True

    def points(self) -> List[np.ndarray]:
        return [np.array(key, dtype=float) for key in self._points]

    def __contains__(self, z) -> bool:
        return tuple(int(v) for v in np.rint(np.asarray(z, dtype=float))) in self._keys

    def __len__(self):
        return len(self._points)


class Relaxation(object):
    """Continuous relaxation min objective(z) over base rows, added rows and bounds."""

    num_vars = 0
    lower: np.ndarray
    upper: np.ndarray

    def solve(self, lower, upper, rows: Sequence[LinearRow], hint=None) -> RelaxationResult:
        raise NotImplementedError

    def objective(self, z) -> float:
        raise NotImplementedError

    def is_feasible(self, z, rows: Sequence[LinearRow] = (), tol: float = FEAS_TOL) -> bool:
        raise NotImplementedError

    def rows_feasible(self, z, rows: Sequence[LinearRow], tol: float) -> bool:
        return all(row.violation(z) <= tol * (1.0 + abs(row.b)) for row in rows)


class LpRelaxation(Relaxation):
    """min c'z s.t. G z >= b within bounds, solved to a vertex by the simplex."""

    def __init__(self, c, G, b, lower, upper, tol: float = 1e-7):
        self.base = LpProblem(c, G, b, lower, upper)
        self.num_vars = self.base.num_vars
        self.lower = self.base.lower
        self.upper = self.base.upper
        self.tol = tol

    def problem(self, lower, upper, rows: Sequence[LinearRow]) -> LpProblem:
        base = self.base
        if rows:
            G = np.vstack([base.G] + [row.a.reshape(1, -1) for row in rows])
            b = np.concatenate([base.b, [row.b for row in rows]])
        else:
            G, b = base.G, base.b
        return LpProblem(base.c, G, b, lower, upper)

    def solve(self, lower, upper, rows=(), hint=None) -> RelaxationResult:
        p = self.problem(lower, upper, rows)
        try:
            outcome = lp_solve(p, self.tol, start=hint)
        except (LpIterationLimitError, LpNumericalError) as e:
            logger.warning("LP relaxation failed: %s", e)
            return RelaxationResult("failed")
        if isinstance(outcome, LpOptimal):
            return RelaxationResult("optimal", outcome.z, outcome.objective, outcome.basis)
        if isinstance(outcome, LpInfeasible):
            return RelaxationResult("infeasible")
        logger.warning("bounded LP reported unbounded")
        return RelaxationResult("failed")

    def objective(self, z) -> float:
        return float(self.base.c @ z)

    def is_feasible(self, z, rows=(), tol=FEAS_TOL) -> bool:
        base = self.base
        z = np.asarray(z, dtype=float)
        if base.num_rows and np.any(base.G @ z < base.b - tol * (1.0 + np.abs(base.b))):
            return False
        return self.rows_feasible(z, rows, tol)


class ConicRelaxation(Relaxation):
    """
    min c'z + ||V z||^2  s.t.  G z >= b,  Mt z - ht in K,  lower <= z <= upper.

    The quadratic enters through the epigraph block ((1+t)/2, V z, (t-1)/2)
    in a second-order cone. Fixed variables are substituted out before the
    conic solve.
    """

    def __init__(self, c, G, b, lower, upper, V=None, Mt=None, ht=None, cones=(),
                 tol: float = 1e-8, max_iterations: int = 200):
        self.c = np.asarray(c, dtype=float)
        n = self.c.size
        self.num_vars = n
        self.G = np.asarray(G, dtype=float).reshape(-1, n)
        self.b = np.asarray(b, dtype=float).ravel()
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        self.V = np.zeros((0, n)) if V is None else np.asarray(V, dtype=float).reshape(-1, n)
        self.Mt = np.zeros((0, n)) if Mt is None else np.asarray(Mt, dtype=float).reshape(-1, n)
        self.ht = np.zeros(0) if ht is None else np.asarray(ht, dtype=float).ravel()
        self.cones = tuple(int(k) for k in cones)
        self.tol = tol
        self.max_iterations = max_iterations

    def objective(self, z) -> float:
        z = np.asarray(z, dtype=float)
        vz = self.V @ z
        return float(self.c @ z + vz @ vz)

    def cone_feasible(self, z, tol=FEAS_TOL) -> bool:
        s = self.Mt @ np.asarray(z, dtype=float) - self.ht
        start = 0
        for k in self.cones:
            block = s[start:start + k]
            start += k
            slack = tol * (1.0 + abs(block[0]))
            if block[0] < -tol or np.linalg.norm(block[1:]) > block[0] + slack:
                return False
        return True

    def is_feasible(self, z, rows=(), tol=FEAS_TOL) -> bool:
        z = np.asarray(z, dtype=float)
        if self.b.size and np.any(self.G @ z < self.b - tol * (1.0 + np.abs(self.b))):
            return False
        return self.rows_feasible(z, rows, tol) and self.cone_feasible(z, tol)

    def conic_problem(self, lower, upper, rows=()):
        """Build the reduced conic program; returns (problem, free mask, fixed values)."""
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        free = upper - lower > 0.0
        v = np.where(free, 0.0, lower)
        G = np.vstack([self.G] + [row.a.reshape(1, -1) for row in rows]) if rows else self.G
        b = np.concatenate([self.b, [row.b for row in rows]]) if rows else self.b
        nf = int(free.sum())
        if nf == 0:
            return None, free, v
        Gf, Vf, Mtf = G[:, free], self.V[:, free], self.Mt[:, free]
        k = self.V.shape[0]
        idx = np.flatnonzero(free)
        # variables: (z_free, t)
        blocks_G, blocks_h, cones = [], [], []
        lin_rows = G.shape[0] + 2 * nf
        Glin = np.zeros((lin_rows, nf + 1))
        hlin = np.zeros(lin_rows)
        Glin[:G.shape[0], :nf] = -Gf
        hlin[:G.shape[0]] = -(b - G @ v)
        Glin[G.shape[0] + np.arange(nf), np.arange(nf)] = -1.0
        hlin[G.shape[0]:G.shape[0] + nf] = -lower[idx]
        Glin[G.shape[0] + nf + np.arange(nf), np.arange(nf)] = 1.0
        hlin[G.shape[0] + nf:] = upper[idx]
        blocks_G.append(Glin)
        blocks_h.append(hlin)
        cones.append(nonneg(lin_rows))
        Gq = np.zeros((k + 2, nf + 1))
        hq = np.zeros(k + 2)
        Gq[0, nf] = -0.5
        hq[0] = 0.5
        Gq[1:k + 1, :nf] = -Vf
        hq[1:k + 1] = self.V @ v
        Gq[k + 1, nf] = -0.5
        hq[k + 1] = -0.5
        blocks_G.append(Gq)
        blocks_h.append(hq)
        cones.append(soc(k + 2))
        if self.cones:
            Gc = np.zeros((self.Mt.shape[0], nf + 1))
            Gc[:, :nf] = -Mtf
            blocks_G.append(Gc)
            blocks_h.append(self.Mt @ v - self.ht)
            cones.extend(soc(size) for size in self.cones)
        c = np.concatenate([self.c[free], [1.0]])
        problem = ConicProblem(c, np.zeros((0, nf + 1)), np.zeros(0), np.vstack(blocks_G),
                               np.concatenate(blocks_h), tuple(cones))
        return problem, free, v

    def solve(self, lower, upper, rows=(), hint=None) -> RelaxationResult:
        problem, free, v = self.conic_problem(lower, upper, rows)
        if problem is None:
            if self.is_feasible(v, rows):
                return RelaxationResult("optimal", v.copy(), self.objective(v))
            return RelaxationResult("infeasible")
        outcome = conic_solve(problem, self.tol, self.max_iterations)
        if isinstance(outcome, ConicOptimal):
            z = v.copy()
            z[free] = outcome.x[:-1]
            offset = float(self.c[~free] @ v[~free])
            slack = 1e-6 * (1.0 + abs(outcome.pcost)) if outcome.reduced_accuracy else 0.0
            bound = min(outcome.pcost, outcome.dcost) + offset - slack
            return RelaxationResult("optimal", z, bound)
        if isinstance(outcome, ConicPrimalInfeasible):
            return RelaxationResult("infeasible")
        logger.debug("conic relaxation returned %s", type(outcome).__name__)
        return RelaxationResult("failed")


@dataclass
class BnbStats:
    nodes: int = 0
    relaxations: int = 0
    integer_candidates: int = 0
    heuristic_candidates: int = 0
    rejected: int = 0
    accepted: int = 0
    global_rows: int = 0
    local_rows: int = 0
    failures: int = 0
    root_bound: Optional[float] = None
    root_incumbent: Optional[float] = None
    bound_trace: List[Tuple[float, float]] = field(default_factory=list)
    aborted: bool = False
    elapsed: float = 0.0


@dataclass(eq=False)
class BnbResult:
    status: SolveStatus
    incumbent: Optional[np.ndarray]
    value: float
    bound: float
    stats: BnbStats
    global_rows: Tuple[LinearRow, ...] = ()

    @property
    def has_incumbent(self) -> bool:
        return self.incumbent is not None


class BranchAndBound(object):
    """Best-bound branch-and-bound with most-fractional branching."""

    def __init__(self, relaxation: Relaxation, cfg: Optional[BnbConfig] = None,
                 on_integer: Optional[Callable] = None, on_fractional: Optional[Callable] = None,
                 on_new_incumbent: Optional[Callable] = None,
                 pool: Optional[SolutionPool] = None, rows: Sequence[LinearRow] = ()):
        self.relaxation = relaxation
        self.cfg = cfg or BnbConfig()
        self.on_integer = on_integer
        self.on_fractional = on_fractional
        self.on_new_incumbent = on_new_incumbent
        self.pool = pool if pool is not None else SolutionPool(self.cfg.pool_capacity)
        self.incumbent = None
        self.value = math.inf
        self.global_rows: List[LinearRow] = list(rows)
        self.stats = BnbStats()
        self._next_id = 0
        self._stop = False
        self._start = 0.0

    # Bookkeeping

    def _new_node(self, parent: Optional[BnbNode], lower, upper, bound, hint) -> BnbNode:
        node_id = self._next_id
        self._next_id += 1
        if parent is None:
            return BnbNode(node_id, None, 0, lower, upper, (), bound, hint, (node_id,))
        return BnbNode(node_id, parent.id, parent.depth + 1, lower, upper, parent.rows, bound,
                       hint, parent.path + (node_id,))

    def _effective(self, bound: float) -> float:
        if self.cfg.integral_objective and math.isfinite(bound):
            return math.ceil(bound - 1e-6)
        return bound

    def _prunable(self, bound: float) -> bool:
        eff = self._effective(bound)
        cfg = self.cfg
        if cfg.cutoff is not None and eff > cfg.cutoff + 1e-9 * (1.0 + abs(cfg.cutoff)):
            return True
        if self.incumbent is not None:
            margin = max(cfg.gap_tol * abs(self.value), 1e-9 * (1.0 + abs(self.value)))
            return eff >= self.value - margin
        return False

    def _time_up(self) -> bool:
        limit = self.cfg.time_limit
        return limit is not None and time.monotonic() - self._start >= limit

    def _record_bound(self, bound: float):
        bound = min(bound, self.value)
        trace = self.stats.bound_trace
        if trace:
            bound = max(bound, trace[-1][1])
        trace.append((time.monotonic() - self._start, bound))

    def _add_rows(self, node: BnbNode, rows: Iterable[LinearRow]):
        for row in rows:
            if row.local_to is None:
                self.global_rows.append(row)
                self.stats.global_rows += 1
            else:
                if row.local_to not in node.path:
                    raise ValueError("local row for node %d added at node %d"
                                     % (row.local_to, node.id))
                node.rows = node.rows + (row,)
                self.stats.local_rows += 1

    def _accept(self, z: np.ndarray, value: float):
        self.incumbent = z.copy()
        self.value = value
        self.stats.accepted += 1
        logger.debug("new incumbent %.6g after %d nodes", value, self.stats.nodes)
        if self.on_new_incumbent is not None and self.on_new_incumbent(z.copy(), value):
            self.stats.aborted = True
            self._stop = True
        limit = self.cfg.solution_limit
        if limit is not None and self.stats.accepted >= limit:
            self._stop = True

    def _candidate(self, node: BnbNode, z: np.ndarray, heuristic: bool) -> Verdict:
        """Run an integer point through the callback; returns the verdict."""
        if heuristic:
            self.stats.heuristic_candidates += 1
        else:
            self.stats.integer_candidates += 1
        self.pool.add(z)
        verdict = Verdict.accept()
        if self.on_integer is not None:
            verdict = self.on_integer(node, z.copy(), heuristic)
        if verdict.kind is VerdictKind.ACCEPT:
            self._accept(z, self.relaxation.objective(z))
        elif verdict.kind is VerdictKind.CUTS:
            self._add_rows(node, verdict.rows)
        else:
            self.stats.rejected += 1
        return verdict

    def _improves(self, z: np.ndarray) -> bool:
        value = self.relaxation.objective(z)
        cfg = self.cfg
        if cfg.cutoff is not None and value > cfg.cutoff + 1e-9 * (1.0 + abs(cfg.cutoff)):
            return False
        return self.incumbent is None or value < self.value - 1e-9 * (1.0 + abs(self.value))

    def _seed_from_pool(self, root: BnbNode):
        relax = self.relaxation
        for z in self.pool.points():
            if self._stop:
                return
            if np.any(z < root.lower) or np.any(z > root.upper):
                continue
            if relax.is_feasible(z, self.global_rows) and self._improves(z):
                self._candidate(root, z, heuristic=True)

    def _round(self, node: BnbNode, z: np.ndarray) -> Optional[np.ndarray]:
        zr = np.clip(np.rint(z), node.lower, node.upper)
        if self.relaxation.is_feasible(zr, tuple(self.global_rows) + node.rows):
            return zr
        return None

    # Branching

    def _fractional(self, z: np.ndarray) -> np.ndarray:
        return np.abs(z - np.rint(z)) > self.cfg.int_tol

    def _children_fractional(self, node, z, frac):
        score = np.where(frac, np.minimum(z - np.floor(z), np.ceil(z) - z), -1.0)
        j = int(np.argmax(score))
        return self._split(node, j, math.floor(z[j]), math.floor(z[j]) + 1)

    def _children_rejected(self, node, z):
        free = np.flatnonzero(node.upper > node.lower)
        if free.size == 0:
            return []
        j = int(free[0])
        lo, hi, v = node.lower[j], node.upper[j], round(z[j])
        if v - lo < hi - v:
            return self._split(node, j, v, v + 1)
        return self._split(node, j, v - 1, v)

    def _children_midpoint(self, node):
        free = np.flatnonzero(node.upper > node.lower)
        if free.size == 0:
            return []
        width = node.upper[free] - node.lower[free]
        j = int(free[np.argmax(width)])
        mid = math.floor((node.lower[j] + node.upper[j]) / 2.0)
        return self._split(node, j, mid, mid + 1)

    def _split(self, node, j, left_upper, right_lower):
        lu = node.upper.copy()
        lu[j] = left_upper
        rl = node.lower.copy()
        rl[j] = right_lower
        return [(node.lower, lu), (rl, node.upper)]

    # Main loop

    def _process(self, node: BnbNode):
        """Solve a node with its cut loop; returns the list of child boxes."""
        relax = self.relaxation
        while True:
            rows = tuple(self.global_rows) + node.rows
            result = relax.solve(node.lower, node.upper, rows, node.hint)
            self.stats.relaxations += 1
            if result.status == "infeasible":
                return []
            if result.status == "failed":
                self.stats.failures += 1
                children = self._children_midpoint(node)
                if not children and relax.is_feasible(node.lower, rows) \
                        and self._improves(node.lower):
                    self._candidate(node, node.lower.copy(), heuristic=False)
                return children
            node.hint = result.hint
            node.bound = max(node.bound, result.bound)
            if self._prunable(node.bound):
                return []
            z = result.z
            frac = self._fractional(z)
            can_cut = node.cut_rounds < self.cfg.max_cut_rounds
            if not np.any(frac):
                zr = np.rint(z)
                verdict = self._candidate(node, zr, heuristic=False)
                if verdict.kind is VerdictKind.ACCEPT:
                    return []
                if verdict.kind is VerdictKind.CUTS and can_cut:
                    node.cut_rounds += 1
                    continue
                return self._children_rejected(node, zr)
            if self.on_fractional is not None and can_cut:
                rows_out = self.on_fractional(node, z.copy())
                if rows_out:
                    self._add_rows(node, rows_out)
                    node.cut_rounds += 1
                    continue
            if self.cfg.heuristic:
                zr = self._round(node, z)
                if zr is not None and self._improves(zr):
                    verdict = self._candidate(node, zr, heuristic=True)
                    if self._stop:
                        return []
                    if verdict.kind is VerdictKind.CUTS and can_cut:
                        node.cut_rounds += 1
                        continue
                    if self._prunable(node.bound):
                        return []
            return self._children_fractional(node, z, frac)

    def solve(self) -> BnbResult:
        relax = self.relaxation
        self._start = time.monotonic()
        root = self._new_node(None, relax.lower.copy(), relax.upper.copy(), -math.inf, None)
        self._seed_from_pool(root)
        heap = [(root.bound, root.id, root)]
        timed_out = False
        unfinished = []
        while heap and not self._stop:
            if self._time_up():
                timed_out = True
                break
            if self.cfg.node_limit is not None and self.stats.nodes >= self.cfg.node_limit:
                break
            bound, _, node = heapq.heappop(heap)
            if self._prunable(bound):
                continue
            self.stats.nodes += 1
            self._record_bound(bound)
            children = self._process(node)
            if node.is_root:
                self.stats.root_bound = node.bound
                self.stats.root_incumbent = self.value if self.incumbent is not None else None
            if self._stop:
                unfinished.append(node.bound)
                break
            for lower, upper in children:
                child = self._new_node(node, lower, upper, node.bound, node.hint)
                heapq.heappush(heap, (child.bound, child.id, child))
            if self.stats.nodes % 100 == 0:
                logger.debug("%d nodes, %d open, incumbent %.6g", self.stats.nodes, len(heap),
                             self.value)

        open_bounds = [b for b in [b for b, _, _ in heap] + unfinished if not self._prunable(b)]
        if open_bounds or timed_out:
            bound = min(open_bounds + [self.value])
            if timed_out:
                status = SolveStatus.TIME_LIMIT
            elif self.incumbent is not None:
                status = SolveStatus.FEASIBLE
            else:
                status = SolveStatus.UNKNOWN
        else:
            bound = self.value
            status = SolveStatus.OPTIMAL if self.incumbent is not None else SolveStatus.INFEASIBLE
        self._record_bound(bound)
        self.stats.elapsed = time.monotonic() - self._start
        if self.stats.root_bound is None:
            self.stats.root_bound = root.bound
        return BnbResult(status, None if self.incumbent is None else self.incumbent.copy(),
                         self.value, bound, self.stats, tuple(self.global_rows))


def bnb_solve(relaxation: Relaxation, cfg: Optional[BnbConfig] = None, on_integer=None,
              on_fractional=None, on_new_incumbent=None,
              pool: Optional[SolutionPool] = None) -> BnbResult:
    engine = BranchAndBound(relaxation, cfg, on_integer, on_fractional, on_new_incumbent, pool)
    return engine.solve()


def bnb_solution_pool(engine: BranchAndBound) -> List[np.ndarray]:
    return engine.pool.points()


def bnb_enumerate_improving(engine: BranchAndBound, incumbent_value: float,
                            yield_fn: Callable) -> BnbResult:
    """
    Search for points strictly better than ``incumbent_value`` and hand
    each improving incumbent to ``yield_fn(z, value)`` as it is found.
    A truthy return from ``yield_fn`` ends the search.
    """
    cutoff = incumbent_value
    if engine.cfg.cutoff is not None:
        cutoff = min(cutoff, engine.cfg.cutoff)
    engine.cfg = replace(engine.cfg, cutoff=cutoff)
    inner = engine.on_new_incumbent
    margin = 1e-9 * (1.0 + abs(incumbent_value))

    def relay(z, value):
        if value >= incumbent_value - margin:
            return False
        if inner is not None and inner(z, value):
            return True
        return yield_fn(z, value)

    engine.on_new_incumbent = relay
    try:
        return engine.solve()
    finally:
        engine.on_new_incumbent = inner
