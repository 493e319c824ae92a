"""
bilevelcuts : Follower problem
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
    The follower problem for a fixed leader decision x:

        Phi(x) = min { q(y) : B y >= f - A x,  CY y >= UY,  y in [lb, ub] integer }

    solved by branch-and-bound over conic (epigraph) relaxations. Two
    entry points are offered: the optimal value with an argmin, and a
    stream of follower points improving on a given value.
"""

import logging
import math

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from bilevelcuts.mip import BnbConfig, BranchAndBound, ConicRelaxation, SolutionPool
from bilevelcuts.mip import bnb_enumerate_improving, POOL_CAPACITY
from bilevelcuts.model import BilevelInstance, SolveStatus, eval_follower_objective, to_fraction

logger = logging.getLogger(__name__)

CUTOFF_RELIEF = 1e-5


@dataclass(frozen=True)
class FollowerSolution:
    value: Fraction
    y: Tuple[int, ...]


@dataclass(eq=False)
class FollowerProblem:
    """Follower problem at a fixed x with exact right-hand sides f - A x."""

    inst: BilevelInstance
    x: Tuple[Fraction, ...]
    rhs: Tuple[Fraction, ...] = ()
    cutoff: Optional[float] = None
    mode: str = "O"

    def __post_init__(self):
        self.x = tuple(to_fraction(v) for v in self.x)
        if len(self.x) != self.inst.n1:
            raise ValueError("leader point of length %d, expected %d"
                             % (len(self.x), self.inst.n1))
        if self.mode not in ("O", "G"):
            raise ValueError("follower mode must be 'O' or 'G'")
        self.rhs = tuple(fi - sum((a * xj for a, xj in zip(row, self.x)), Fraction(0))
                         for row, fi in zip(self.inst.A, self.inst.f))
        if self.cutoff is not None and not math.isfinite(self.cutoff):
            raise ValueError("follower cutoff must be finite")

    def relaxation(self, tol: float = 1e-8) -> ConicRelaxation:
        inst = self.inst
        n1 = inst.n1
        G = np.vstack([inst.as_array("B"), inst.as_array("CY")])
        b = np.array([float(v) for v in self.rhs] + [float(v) for v in inst.UY])
        return ConicRelaxation(inst.as_array("g"), G, b, inst.lower[n1:], inst.upper[n1:],
                               V=inst.as_array("V"), tol=tol)

    def is_feasible(self, y: Sequence[int]) -> bool:
        """Exact test of B y >= f - A x, CY y >= UY and the y bounds."""
        inst = self.inst
        yq = [Fraction(int(v)) for v in y]
        for lo, hi, v in zip(inst.lb[inst.n1:], inst.ub[inst.n1:], yq):
            if v < lo or v > hi:
                return False
        for row, rhs in zip(inst.B, self.rhs):
            if sum((a * v for a, v in zip(row, yq)), Fraction(0)) < rhs:
                return False
        for row, rhs in zip(inst.CY, inst.UY):
            if sum((a * v for a, v in zip(row, yq)), Fraction(0)) < rhs:
                return False
        return True


def follower_cutoff(inst: BilevelInstance, q_star) -> float:
    """Largest follower value still counted as a strict improvement on q_star."""
    q_star = float(q_star)
    if inst.integral_follower_objective:
        return float(math.ceil(q_star - 1e-6) - 1)
    return q_star - CUTOFF_RELIEF


@dataclass
class FollowerStats:
    solves: int = 0
    nodes: int = 0
    yielded: int = 0
    seconds: float = 0.0


@dataclass(eq=False)
class FollowerContext:
    """Follower solves of one instance sharing a solution pool."""

    inst: BilevelInstance
    pool: SolutionPool = None
    time_limit: Optional[float] = None
    tol: float = 1e-8
    stats: FollowerStats = field(default_factory=FollowerStats)
    engine: Optional[BranchAndBound] = None

    def __post_init__(self):
        if self.pool is None:
            self.pool = SolutionPool(POOL_CAPACITY)

    def _engine(self, problem: FollowerProblem) -> BranchAndBound:
        cfg = BnbConfig(cutoff=problem.cutoff, time_limit=self.time_limit,
                        integral_objective=self.inst.integral_follower_objective)
        self.engine = BranchAndBound(problem.relaxation(self.tol), cfg, pool=self.pool)
        return self.engine

    def _solution(self, problem: FollowerProblem, z) -> Optional[FollowerSolution]:
        y = tuple(int(v) for v in np.rint(z))
        if not problem.is_feasible(y):
            logger.warning("follower point %s fails the exact feasibility test", y)
            return None
        return FollowerSolution(eval_follower_objective(self.inst, y), y)

    def solve_optimal(self, x) -> Optional[FollowerSolution]:
        problem = FollowerProblem(self.inst, x)
        engine = self._engine(problem)
        result = engine.solve()
        self.stats.solves += 1
        self.stats.nodes += result.stats.nodes
        self.stats.seconds += result.stats.elapsed
        if result.incumbent is None:
            if result.status is not SolveStatus.INFEASIBLE:
                logger.warning("follower solve ended with %s and no solution", result.status)
            return None
        if result.status is not SolveStatus.OPTIMAL:
            logger.warning("follower solve ended with %s, value may not be optimal",
                           result.status)
        return self._solution(problem, result.incumbent)

    def stream_improving(self, x, q_star, yield_fn: Callable) -> "FollowerStream":
        problem = FollowerProblem(self.inst, x, cutoff=follower_cutoff(self.inst, q_star),
                                  mode="G")
        engine = self._engine(problem)
        q_star = to_fraction(q_star)
        found: List[FollowerSolution] = []

        def relay(z, value):
            solution = self._solution(problem, z)
            if solution is None or solution.value >= q_star:
                return False
            found.append(solution)
            self.stats.yielded += 1
            return yield_fn(solution)

        result = bnb_enumerate_improving(engine, float(q_star), relay)
        self.stats.solves += 1
        self.stats.nodes += result.stats.nodes
        self.stats.seconds += result.stats.elapsed
        complete = result.status in (SolveStatus.OPTIMAL, SolveStatus.INFEASIBLE)
        return FollowerStream(tuple(found), complete and not result.stats.aborted,
                              result.stats.aborted)


@dataclass(frozen=True)
class FollowerStream:
    """Improving follower points in discovery order; the last is the best."""

    solutions: Tuple[FollowerSolution, ...]
    complete: bool
    aborted: bool

    @property
    def best(self) -> Optional[FollowerSolution]:
        return self.solutions[-1] if self.solutions else None


def follower_solve_optimal(inst: BilevelInstance, x,
                           context: Optional[FollowerContext] = None
                           ) -> Optional[FollowerSolution]:
    """Phi(x) with an argmin, or None when no follower point exists."""
    context = context or FollowerContext(inst)
    return context.solve_optimal(x)


def follower_stream_improving(inst: BilevelInstance, x, q_star, yield_fn: Callable,
                              context: Optional[FollowerContext] = None) -> FollowerStream:
    """
    Hand every improving follower point found for x to ``yield_fn``.

    A point improves when q(y) < q_star. ``yield_fn(solution)`` returning a
    truthy value stops the stream.
    """
    context = context or FollowerContext(inst)
    return context.stream_improving(x, q_star, yield_fn)
