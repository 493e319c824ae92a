"""
bilevelcuts : Bounded-variable primal simplex
=============================================

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
    Solve  min c'z  s.t.  G z >= b,  l <= z <= u  (finite bounds) with a
    dense revised simplex. Rows are turned into equalities G z - s = b
    with s >= 0; rows violated by the starting point get an artificial
    column and a phase one minimizing their sum.

    Infeasibility is certified by a Farkas multiplier r >= 0 on the rows
    together with multipliers on the bound rows z >= l and -z >= -u:

        r'G + r_l - r_u = 0   and   r'b + r_l'l - r_u'u > 0
"""

from __future__ import annotations

import logging

from dataclasses import dataclass
from typing import FrozenSet, Optional, Tuple, Union

import numpy as np

from scipy.linalg import lu_factor, lu_solve

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-7
PIVOT_TOL = 1e-9


class LpIterationLimitError(RuntimeError):
    pass


class LpNumericalError(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class LpProblem:
    """min c'z s.t. G z >= b, lower <= z <= upper."""

    c: np.ndarray
    G: np.ndarray
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=float).ravel()
        n = c.size
        G = np.array(self.G, dtype=float).reshape(-1, n)
        b = np.array(self.b, dtype=float).ravel()
        lower = np.array(self.lower, dtype=float).ravel()
        upper = np.array(self.upper, dtype=float).ravel()
        if b.size != G.shape[0]:
            raise ValueError("dimension mismatch: %d rows, %d rhs entries" % (G.shape[0], b.size))
        if lower.size != n or upper.size != n:
            raise ValueError("dimension mismatch in variable bounds")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("variable bounds must be finite")
        if np.any(lower > upper):
            raise ValueError("lower bound above upper bound")
        for name, arr in (("c", c), ("G", G), ("b", b), ("lower", lower), ("upper", upper)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def num_rows(self) -> int:
        return self.G.shape[0]

    @property
    def num_vars(self) -> int:
        return self.c.size


@dataclass(frozen=True)
class LpBasis:
    """
    Basis tag usable as a warm start.

    ``basic`` indexes columns of [G, -I]: j < n is a structural variable,
    n + i is the slack of row i. ``rows`` is the row count it was taken at.
    """

    basic: Tuple[int, ...]
    at_upper: FrozenSet[int]
    rows: int


@dataclass(frozen=True, eq=False)
class LpOptimal:
    z: np.ndarray
    objective: float
    duals: np.ndarray
    reduced_costs: np.ndarray
    basis: LpBasis
    iterations: int
    problem: LpProblem

    @property
    def dual_objective(self) -> float:
        d = self.reduced_costs
        p = self.problem
        return float(self.duals @ p.b + np.maximum(d, 0.0) @ p.lower
                     + np.minimum(d, 0.0) @ p.upper)


@dataclass(frozen=True, eq=False)
class LpInfeasible:
    farkas: np.ndarray
    farkas_lower: np.ndarray
    farkas_upper: np.ndarray
    iterations: int

    def certificate_value(self, p: LpProblem) -> float:
        return float(self.farkas @ p.b + self.farkas_lower @ p.lower
                     - self.farkas_upper @ p.upper)


@dataclass(frozen=True, eq=False)
class LpUnbounded:
    ray: np.ndarray
    iterations: int


LpOutcome = Union[LpOptimal, LpInfeasible, LpUnbounded]


def lp_add_rows(p: LpProblem, rows, rhs) -> LpProblem:
    rows = np.array(rows, dtype=float)
    if rows.ndim == 1:
        rows = rows.reshape(1, -1)
    rhs = np.atleast_1d(np.array(rhs, dtype=float))
    if rows.shape[1] != p.num_vars or rows.shape[0] != rhs.size:
        raise ValueError("dimension mismatch in added rows")
    return LpProblem(p.c, np.vstack([p.G, rows]), np.concatenate([p.b, rhs]),
                     p.lower, p.upper)


def lp_change_bounds(p: LpProblem, lower=None, upper=None) -> LpProblem:
    lower = p.lower if lower is None else np.array(lower, dtype=float)
    upper = p.upper if upper is None else np.array(upper, dtype=float)
    if lower.shape != p.lower.shape or upper.shape != p.upper.shape:
        raise ValueError("dimension mismatch in bounds")
    return LpProblem(p.c, p.G, p.b, lower, upper)


def lp_solve(p: LpProblem, tol: float = DEFAULT_TOL, start: Optional[LpBasis] = None,
             max_iterations: Optional[int] = None) -> LpOutcome:
    """Solve an LP to an optimal vertex, or certify infeasibility/unboundedness."""
    return _BoundedSimplex(p, tol, max_iterations).run(start)


class _BoundedSimplex(object):

    def __init__(self, p: LpProblem, tol: float, max_iterations: Optional[int]):
        self.p = p
        self.tol = tol
        self.n = p.num_vars
        self.m = p.num_rows
        self.max_iterations = max_iterations or 50 * (self.m + self.n) + 1000
        self.iterations = 0

    def run(self, start: Optional[LpBasis]) -> LpOutcome:
        p, n, m = self.p, self.n, self.m
        if m == 0:
            z = np.where(p.c >= 0.0, p.lower, p.upper)
            at_upper = frozenset(int(j) for j in np.flatnonzero(p.c < 0.0))
            return LpOptimal(z, float(p.c @ z), np.zeros(0), p.c.copy(),
                             LpBasis((), at_upper, 0), 0, p)
        if start is not None:
            outcome = self._warm(start)
            if outcome is not None:
                return outcome
            logger.debug("warm start basis not primal feasible, cold start")
        return self._cold(start)

    def _columns(self, n_art_rows):
        p, m = self.p, self.m
        k = len(n_art_rows)
        E = np.zeros((m, k))
        E[n_art_rows, np.arange(k)] = 1.0
        A = np.hstack([p.G, -np.eye(m), E])
        lo = np.concatenate([p.lower, np.zeros(m), np.zeros(k)])
        hi = np.concatenate([p.upper, np.full(m, np.inf), np.full(k, np.inf)])
        return A, lo, hi

    def _warm(self, start: LpBasis) -> Optional[LpOutcome]:
        p, n, m = self.p, self.n, self.m
        basic = [j for j in start.basic if j < n + start.rows]
        basic += [n + i for i in range(start.rows, m)]
        if len(basic) != m or len(set(basic)) != m:
            return None
        A, lo, hi = self._columns([])
        at_upper = np.zeros(n + m, dtype=bool)
        for j in start.at_upper:
            if j < n and j not in basic:
                at_upper[j] = True
        w = np.where(at_upper, hi, lo)
        w[np.isinf(w)] = 0.0
        lu = self._factor(A[:, basic], fail=False)
        if lu is None:
            return None
        nonbasic = np.ones(n + m, dtype=bool)
        nonbasic[basic] = False
        xB = lu_solve(lu, p.b - A[:, nonbasic] @ w[nonbasic], check_finite=False)
        scale = self.tol * (1.0 + np.abs(xB))
        if np.any(xB < lo[basic] - scale) or np.any(xB > hi[basic] + scale):
            return None
        w[basic] = xB
        cost = np.concatenate([p.c, np.zeros(m)])
        return self._phase_two(A, lo, hi, w, basic, at_upper, cost)

    def _cold(self, start: Optional[LpBasis]) -> LpOutcome:
        p, n, m = self.p, self.n, self.m
        z0 = p.lower.copy()
        if start is not None:
            for j in start.at_upper:
                if j < n:
                    z0[j] = p.upper[j]
        r = p.G @ z0 - p.b
        art_rows = np.flatnonzero(r < 0.0)
        k = art_rows.size
        A, lo, hi = self._columns(art_rows)
        total = n + m + k
        w = np.zeros(total)
        w[:n] = z0
        at_upper = np.zeros(total, dtype=bool)
        at_upper[:n] = z0 > p.lower
        basic = [n + i for i in range(m)]
        w[n:n + m] = np.maximum(r, 0.0)
        for pos, i in enumerate(art_rows):
            basic[i] = n + m + pos
            w[n + m + pos] = -r[i]

        if k:
            cost1 = np.zeros(total)
            cost1[n + m:] = 1.0
            y, _ = self._simplex(A, lo, hi, w, basic, at_upper, cost1)
            infeas = float(w[n + m:].sum())
            if infeas > self.tol * (1.0 + np.abs(p.b).max()):
                return self._farkas(y)
            logger.debug("phase one done after %d pivots", self.iterations)
            hi[n + m:] = 0.0
        cost = np.concatenate([p.c, np.zeros(m + k)])
        return self._phase_two(A, lo, hi, w, basic, at_upper, cost)

    def _phase_two(self, A, lo, hi, w, basic, at_upper, cost) -> LpOutcome:
        p, n, m = self.p, self.n, self.m
        result = self._simplex(A, lo, hi, w, basic, at_upper, cost)
        if isinstance(result, LpUnbounded):
            return result
        y, d = result
        z = w[:n].copy()
        tag = LpBasis(tuple(int(j) for j in basic if j < n + m),
                      frozenset(int(j) for j in np.flatnonzero(at_upper[:n])), m)
        return LpOptimal(z, float(p.c @ z), y, d[:n].copy(), tag, self.iterations, p)

    def _farkas(self, y) -> LpInfeasible:
        p = self.p
        r = np.maximum(y, 0.0)
        g = p.G.T @ r
        r_lower = np.maximum(-g, 0.0)
        r_upper = np.maximum(g, 0.0)
        outcome = LpInfeasible(r, r_lower, r_upper, self.iterations)
        if outcome.certificate_value(p) <= 0.0:
            logger.warning("weak Farkas certificate (value %.3g)", outcome.certificate_value(p))
        return outcome

    def _factor(self, B, fail=True):
        try:
            lu = lu_factor(B, check_finite=False)
        except (ValueError, np.linalg.LinAlgError) as e:
            if fail:
                raise LpNumericalError("basis factorization failed: %s" % e)
            return None
        diag = np.abs(np.diag(lu[0]))
        if diag.size and diag.min() <= 1e-11 * max(1.0, diag.max()):
            if fail:
                raise LpNumericalError("singular basis")
            return None
        return lu

    def _simplex(self, A, lo, hi, w, basic, at_upper, cost):
        """
        Primal simplex iterations in place on (w, basic, at_upper).

        Returns (duals, reduced costs) at optimality or an LpUnbounded.
        """
        m = len(basic)
        total = A.shape[1]
        tol = self.tol
        degenerate = 0
        while True:
            self.iterations += 1
            if self.iterations > self.max_iterations:
                raise LpIterationLimitError(
                    "simplex iteration cap %d exceeded" % self.max_iterations)
            basis_idx = np.array(basic)
            lu = self._factor(A[:, basis_idx])
            nonbasic = np.ones(total, dtype=bool)
            nonbasic[basis_idx] = False
            xB = lu_solve(lu, self.p.b - A[:, nonbasic] @ w[nonbasic], check_finite=False)
            w[basis_idx] = xB
            y = lu_solve(lu, cost[basis_idx], trans=1, check_finite=False)
            d = cost - A.T @ y
            d[basis_idx] = 0.0

            movable = nonbasic & (hi - lo > 0.0)
            increase = movable & ~at_upper & (d < -tol)
            decrease = movable & at_upper & (d > tol)
            candidates = np.flatnonzero(increase | decrease)
            if candidates.size == 0:
                return y, d

            bland = degenerate > 3 * m
            if bland:
                j = int(candidates[0])
            else:
                j = int(candidates[np.argmax(np.abs(d[candidates]))])
            direction = 1.0 if increase[j] else -1.0
            alpha = lu_solve(lu, A[:, j], check_finite=False)
            rate = -direction * alpha

            lo_B, hi_B = lo[basis_idx], hi[basis_idx]
            steps = np.full(m, np.inf)
            down = rate < -PIVOT_TOL
            up = (rate > PIVOT_TOL) & np.isfinite(hi_B)
            steps[down] = (xB[down] - lo_B[down]) / -rate[down]
            steps[up] = (hi_B[up] - xB[up]) / rate[up]
            steps = np.maximum(steps, 0.0)
            t_min = steps.min() if m else np.inf
            flip = hi[j] - lo[j]

            if not np.isfinite(t_min) and not np.isfinite(flip):
                ray = np.zeros(total)
                ray[j] = direction
                ray[basis_idx] = rate
                logger.debug("unbounded direction on column %d", j)
                return LpUnbounded(ray[:self.n], self.iterations)

            if flip <= t_min:
                step = flip
                w[j] = hi[j] if direction > 0 else lo[j]
                at_upper[j] = direction > 0
            else:
                step = t_min
                ties = np.flatnonzero(steps <= t_min + 1e-12)
                if bland:
                    r = int(ties[np.argmin(basis_idx[ties])])
                else:
                    r = int(ties[np.argmax(np.abs(rate[ties]))])
                leaving = basic[r]
                to_upper = rate[r] > 0
                w[j] = w[j] + direction * step
                w[leaving] = hi[leaving] if to_upper else lo[leaving]
                at_upper[leaving] = to_upper
                at_upper[j] = False
                basic[r] = j

            if abs(d[j]) * step > 1e-12:
                degenerate = 0
            else:
                degenerate += 1
