"""
bilevelcuts : Disjunctive cut generation
========================================

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
    Separation of points that are not bilevel feasible.

    For a follower point yh that improves on the follower value at the
    point (x*, y*), every bilevel-feasible point lies in one of

        D0:  q(y) <= q(yh)                         (second-order cone)
        Di:  A^i x <= f_i - B^i yh - 1,  i = 1..m2 (linear)

    A cut valid for the convex hull of the union of P n Dk is found by a
    second-order cone program over the cut coefficients (alpha, beta, tau)
    and one set of multipliers per disjunction. The program is bounded
    by one of three normalizations:

      S   ||(pi_bar, pi_tilde, sigma, rho)||_p <= 1
      U   ||(pi_bar, pi_tilde)||_p <= 1
      C   ||(alpha, beta)||_p <= 1

    with p in {1, 2}.
"""

import enum
import logging
import math
import time

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from bilevelcuts.conic import ConicDualInfeasible, ConicOptimal, ConicPrimalInfeasible
from bilevelcuts.conic import ConicProblem, conic_solve, nonneg, soc
from bilevelcuts.follower import FollowerContext, FollowerSolution
from bilevelcuts.mip import BnbConfig, BranchAndBound, ConicRelaxation, LpRelaxation
from bilevelcuts.model import BilevelInstance, Cut, SolveStatus, eval_follower_objective

logger = logging.getLogger(__name__)

VIOLATION_TOL = 1e-6
ZERO_COEFFICIENT = 5e-6
CUTOFF_OFFSET = 1e-5
REMOVAL_STRATEGIES = ("RN", "RB", "RR", "RI", "RO")
SEPARATION_STRATEGIES = ("O", "G")


class SeparationError(RuntimeError):
    pass


@dataclass(frozen=True)
class NormalizationSpec:
    family: str
    p: int

    def __post_init__(self):
        if self.family not in ("S", "U", "C") or self.p not in (1, 2):
            raise ValueError("normalization must be one of S1, S2, U1, U2, C1, C2")

    @classmethod
    def parse(cls, label: str) -> "NormalizationSpec":
        label = str(label).strip().upper()
        if len(label) != 2 or not label[1].isdigit():
            raise ValueError("invalid normalization label %r" % label)
        return cls(label[0], int(label[1]))

    @property
    def label(self) -> str:
        return "%s%d" % (self.family, self.p)


@dataclass(frozen=True, eq=False)
class PolyhedronP:
    """
    Continuous set the disjunctions are intersected with:

        Mbar x + Nbar y >= hbar,   Mt x + Nt y - ht in K,   lower <= (x, y) <= upper

    The linear block stacks leader rows, linking rows, optional extra cut
    rows, follower rows and the variable bounds as rows.
    """

    n1: int
    n2: int
    Mbar: np.ndarray
    Nbar: np.ndarray
    hbar: np.ndarray
    Mt: np.ndarray
    Nt: np.ndarray
    ht: np.ndarray
    cones: Tuple[int, ...]
    lower: np.ndarray
    upper: np.ndarray

    @property
    def num_rows(self) -> int:
        return self.hbar.size

    @property
    def num_cone_rows(self) -> int:
        return self.ht.size

    @property
    def G(self) -> np.ndarray:
        return np.hstack([self.Mbar, self.Nbar])

    @property
    def Gt(self) -> np.ndarray:
        return np.hstack([self.Mt, self.Nt])


def build_polyhedron(inst: BilevelInstance, lower=None, upper=None,
                     cuts: Sequence[Cut] = ()) -> PolyhedronP:
    n1, n2 = inst.n1, inst.n2
    lower = inst.lower.copy() if lower is None else np.asarray(lower, dtype=float).copy()
    upper = inst.upper.copy() if upper is None else np.asarray(upper, dtype=float).copy()
    blocks_M = [inst.as_array("M"), inst.as_array("A")]
    blocks_N = [inst.as_array("N"), inst.as_array("B")]
    blocks_h = [inst.as_array("h"), inst.as_array("f")]
    if cuts:
        blocks_M.append(np.array([cut.alpha for cut in cuts]).reshape(-1, n1))
        blocks_N.append(np.array([cut.beta for cut in cuts]).reshape(-1, n2))
        blocks_h.append(np.array([cut.tau for cut in cuts]))
    blocks_M.append(np.zeros((inst.nY, n1)))
    blocks_N.append(inst.as_array("CY"))
    blocks_h.append(inst.as_array("UY"))
    eye = np.eye(n1 + n2)
    bounds = np.vstack([eye, -eye])
    blocks_M.append(bounds[:, :n1])
    blocks_N.append(bounds[:, n1:])
    blocks_h.append(np.concatenate([lower, -upper]))
    return PolyhedronP(n1, n2, np.vstack(blocks_M), np.vstack(blocks_N),
                       np.concatenate(blocks_h), inst.as_array("Mt"), inst.as_array("Nt"),
                       inst.as_array("ht"), inst.cones, lower, upper)


@dataclass(frozen=True, eq=False)
class ObjectiveDisjunction:
    """D0: Dt y - ct in Q, equivalent to q(y) <= q_hat."""

    Dt: np.ndarray
    ct: np.ndarray
    q_hat: Fraction

    index = 0

    def contains(self, inst: BilevelInstance, y) -> bool:
        return eval_follower_objective(inst, y) <= self.q_hat


@dataclass(frozen=True, eq=False)
class LinearDisjunction:
    """Di: A^i x <= rhs with rhs = f_i - B^i yh - 1."""

    index: int
    a: np.ndarray
    rhs: Fraction

    def contains(self, x) -> bool:
        return sum((Fraction(float(aj)) * Fraction(xj) for aj, xj in zip(self.a, x)),
                   Fraction(0)) <= self.rhs

    def box_minimum(self, lower, upper) -> float:
        return float(np.sum(np.minimum(self.a * lower, self.a * upper)))


Disjunction = Union[ObjectiveDisjunction, LinearDisjunction]


def build_disjunctions(inst: BilevelInstance, y_hat) -> List[Disjunction]:
    """The objective disjunction followed by the m2 linear ones."""
    y = []
    for v in y_hat:
        fv = float(v)
        if abs(fv - round(fv)) > 1e-9:
            raise ValueError("follower point %s is not integral" % (tuple(y_hat),))
        y.append(Fraction(int(round(fv))))
    if len(y) != inst.n2:
        raise ValueError("follower point of length %d, expected %d" % (len(y), inst.n2))
    q_hat = eval_follower_objective(inst, y)
    g = inst.as_array("g")
    V = inst.as_array("V")
    Dt = np.vstack([-g / 2.0, V, g / 2.0])
    ct = np.concatenate([[(-1.0 - float(q_hat)) / 2.0], np.zeros(inst.n3),
                         [(-1.0 + float(q_hat)) / 2.0]])
    out: List[Disjunction] = [ObjectiveDisjunction(Dt, ct, q_hat)]
    for i, (arow, brow, fi) in enumerate(zip(inst.A, inst.B, inst.f), start=1):
        rhs = fi - sum((b * v for b, v in zip(brow, y)), Fraction(0)) - 1
        out.append(LinearDisjunction(i, inst.as_array("A")[i - 1].copy(), rhs))
    return out


# Redundancy removal

def _subproblem_relaxation(inst: BilevelInstance, P: PolyhedronP, d: LinearDisjunction):
    c = np.concatenate([inst.as_array("c"), inst.as_array("d")])
    row = np.concatenate([-d.a, np.zeros(P.n2)])
    G = np.vstack([P.G, row])
    b = np.concatenate([P.hbar, [-float(d.rhs)]])
    if P.cones:
        return ConicRelaxation(c, G, b, P.lower, P.upper, Mt=P.Gt, ht=P.ht, cones=P.cones)
    return LpRelaxation(c, G, b, P.lower, P.upper)


def _empty_by_bounds(P: PolyhedronP, d: LinearDisjunction) -> bool:
    return d.box_minimum(P.lower[:P.n1], P.upper[:P.n1]) > float(d.rhs) + 1e-9


def _empty_relaxation(inst, P, d) -> bool:
    relax = _subproblem_relaxation(inst, P, d)
    return relax.solve(relax.lower, relax.upper).status == "infeasible"


def _empty_integer(inst, P, d, cutoff: Optional[float], time_limit: Optional[float]) -> bool:
    relax = _subproblem_relaxation(inst, P, d)
    cfg = BnbConfig(solution_limit=1, cutoff=cutoff, time_limit=time_limit,
                    integral_objective=inst.integral_leader_objective)
    result = BranchAndBound(relax, cfg).solve()
    if result.status is SolveStatus.TIME_LIMIT:
        logger.debug("redundancy subproblem for D%d timed out, kept", d.index)
    return result.status is SolveStatus.INFEASIBLE


def remove_redundant(inst: BilevelInstance, disjunctions: Sequence[Disjunction],
                     P: PolyhedronP, strategy: str = "RN", ub: Optional[float] = None,
                     time_limit: Optional[float] = None) -> Tuple[List[Disjunction], int]:
    """
    Drop linear disjunctions that cannot hold a point the cut must keep.

    Tests run cheap-first: RB is the box test, RR adds the continuous
    emptiness test, RI the integer one and RO the integer test restricted
    to leader values below ``ub`` - 1e-5. The objective disjunction is
    always kept.
    """
    if strategy not in REMOVAL_STRATEGIES:
        raise ValueError("unknown removal strategy %r" % strategy)
    if strategy == "RN":
        return list(disjunctions), 0
    level = REMOVAL_STRATEGIES.index(strategy)
    cutoff = None
    if strategy == "RO" and ub is not None and math.isfinite(ub):
        cutoff = ub - CUTOFF_OFFSET
    kept: List[Disjunction] = []
    for d in disjunctions:
        if isinstance(d, ObjectiveDisjunction):
            kept.append(d)
            continue
        if _empty_by_bounds(P, d):
            continue
        if level >= 2 and _empty_relaxation(inst, P, d):
            continue
        if level >= 3 and _empty_integer(inst, P, d, cutoff, time_limit):
            continue
        kept.append(d)
    removed = len(disjunctions) - len(kept)
    if removed:
        logger.debug("%s removed %d of %d disjunctions", strategy, removed, len(disjunctions))
    return kept, removed


# Cut-generating program

class _Layout(object):
    def __init__(self):
        self.size = 0
        self.parts: Dict[str, slice] = {}

    def add(self, name: str, size: int) -> slice:
        sl = slice(self.size, self.size + size)
        self.parts[name] = sl
        self.size += size
        return sl


@dataclass(frozen=True, eq=False)
class CgsocpProblem:
    problem: ConicProblem
    layout: Dict[str, slice]
    disjunctions: Tuple[Disjunction, ...]
    norm: NormalizationSpec
    n1: int
    n2: int


def build_cgsocp(P: PolyhedronP, disjunctions: Sequence[Disjunction], point,
                 norm: NormalizationSpec) -> CgsocpProblem:
    """
    min alpha'x* + beta'y* - tau over cuts valid for every P n Dk.

    For each disjunction k, with multipliers pi_bar >= 0, pi_tilde in K
    and either u = -sigma >= 0 (linear) or rho in Q (objective):

        alpha = Mbar'pi_bar + Mt'pi_tilde - u A^i'
        beta  = Nbar'pi_bar + Nt'pi_tilde (+ Dt'rho)
        tau  <= hbar'pi_bar + ht'pi_tilde - u rhs_i (+ ct'rho)
    """
    if not disjunctions:
        raise SeparationError("all disjunctions removed")
    x_star, y_star = point
    x_star = np.asarray(x_star, dtype=float)
    y_star = np.asarray(y_star, dtype=float)
    n1, n2 = P.n1, P.n2
    mp, mt = P.num_rows, P.num_cone_rows
    lay = _Layout()
    s_alpha = lay.add("alpha", n1)
    s_beta = lay.add("beta", n2)
    s_tau = lay.add("tau", 1)
    for k, d in enumerate(disjunctions):
        lay.add("pi_bar_%d" % k, mp)
        lay.add("pi_tilde_%d" % k, mt)
        if isinstance(d, ObjectiveDisjunction):
            lay.add("rho_%d" % k, d.ct.size)
        else:
            lay.add("u_%d" % k, 1)

    # Normalized vector: (name, nonnegative?) pieces
    if norm.family == "C":
        pieces = [("alpha", False), ("beta", False)]
    else:
        pieces = []
        for k, d in enumerate(disjunctions):
            pieces += [("pi_bar_%d" % k, True), ("pi_tilde_%d" % k, False)]
            if norm.family == "S":
                pieces.append(("rho_%d" % k, False) if isinstance(d, ObjectiveDisjunction)
                              else ("u_%d" % k, True))
    pieces = [(name, nn) for name, nn in pieces if lay.parts[name].stop > lay.parts[name].start]
    if norm.p == 1:
        for name, nn in pieces:
            if not nn:
                size = lay.parts[name].stop - lay.parts[name].start
                lay.add("plus_" + name, size)
                lay.add("minus_" + name, size)
    nv = lay.size
    parts = lay.parts

    c = np.zeros(nv)
    c[s_alpha] = x_star
    c[s_beta] = y_star
    c[s_tau] = -1.0

    A_rows, b_eq = [], []
    G_lin, h_lin = [], []
    G_cone, h_cone, cones = [], [], []
    G_bar = P.Mbar, P.Nbar
    for k, d in enumerate(disjunctions):
        pb, pt = parts["pi_bar_%d" % k], parts["pi_tilde_%d" % k]
        E = np.zeros((n1 + n2, nv))
        E[:n1, s_alpha] = np.eye(n1)
        E[n1:, s_beta] = np.eye(n2)
        E[:n1, pb] = -G_bar[0].T
        E[n1:, pb] = -G_bar[1].T
        if mt:
            E[:n1, pt] = -P.Mt.T
            E[n1:, pt] = -P.Nt.T
        T = np.zeros(nv)
        T[s_tau] = 1.0
        T[pb] = -P.hbar
        if mt:
            T[pt] = -P.ht
        if isinstance(d, ObjectiveDisjunction):
            r = parts["rho_%d" % k]
            E[n1:, r] = -d.Dt.T
            T[r] = -d.ct
            Gr = np.zeros((d.ct.size, nv))
            Gr[:, r] = -np.eye(d.ct.size)
            G_cone.append(Gr)
            h_cone.append(np.zeros(d.ct.size))
            cones.append(soc(d.ct.size))
        else:
            u = parts["u_%d" % k]
            E[:n1, u] = d.a.reshape(-1, 1)
            T[u] = float(d.rhs)
            Gu = np.zeros((1, nv))
            Gu[0, u] = -1.0
            G_lin.append(Gu)
            h_lin.append(np.zeros(1))
        A_rows.append(E)
        b_eq.append(np.zeros(n1 + n2))
        G_lin.append(T.reshape(1, -1))
        h_lin.append(np.zeros(1))
        if mp:
            Gp = np.zeros((mp, nv))
            Gp[:, pb] = -np.eye(mp)
            G_lin.append(Gp)
            h_lin.append(np.zeros(mp))
        start = pt.start
        for size in P.cones:
            Gt = np.zeros((size, nv))
            Gt[:, start:start + size] = -np.eye(size)
            G_cone.append(Gt)
            h_cone.append(np.zeros(size))
            cones.append(soc(size))
            start += size

    sel = np.concatenate([np.arange(parts[name].start, parts[name].stop)
                          for name, _ in pieces]).astype(int)
    if norm.p == 2:
        Gn = np.zeros((sel.size + 1, nv))
        Gn[np.arange(1, sel.size + 1), sel] = -1.0
        hn = np.zeros(sel.size + 1)
        hn[0] = 1.0
        G_cone.append(Gn)
        h_cone.append(hn)
        cones.append(soc(sel.size + 1))
    else:
        total = np.zeros(nv)
        for name, nn in pieces:
            if nn:
                total[parts[name]] = 1.0
            else:
                sl, pl, mi = parts[name], parts["plus_" + name], parts["minus_" + name]
                size = sl.stop - sl.start
                E = np.zeros((size, nv))
                E[:, sl] = np.eye(size)
                E[:, pl] = -np.eye(size)
                E[:, mi] = np.eye(size)
                A_rows.append(E)
                b_eq.append(np.zeros(size))
                split = np.zeros((2 * size, nv))
                split[:size, pl] = -np.eye(size)
                split[size:, mi] = -np.eye(size)
                G_lin.append(split)
                h_lin.append(np.zeros(2 * size))
                total[pl] = 1.0
                total[mi] = 1.0
        G_lin.append(total.reshape(1, -1))
        h_lin.append(np.ones(1))

    G_all = np.vstack(G_lin + G_cone)
    h_all = np.concatenate(h_lin + h_cone)
    m_lin = sum(block.shape[0] for block in G_lin)
    problem = ConicProblem(c, np.vstack(A_rows), np.concatenate(b_eq), G_all, h_all,
                           (nonneg(m_lin),) + tuple(cones))
    return CgsocpProblem(problem, dict(parts), tuple(disjunctions), norm, n1, n2)


class CgsocpStatus(enum.Enum):
    CUT = "cut"
    NO_CUT = "no-cut"
    RAY_CUT = "ray-cut"
    ALWAYS_VIOLATED = "always-violated"
    FAILED = "failed"


@dataclass(frozen=True, eq=False)
class CgsocpSolution:
    status: CgsocpStatus
    cut: Optional[Cut] = None
    violation: float = 0.0
    multipliers: Tuple[Dict[str, np.ndarray], ...] = ()
    iterations: int = 0
    warning: Optional[str] = None

    @property
    def has_cut(self) -> bool:
        return self.cut is not None


def _multipliers(cg: CgsocpProblem, v: np.ndarray) -> Tuple[Dict[str, np.ndarray], ...]:
    out = []
    for k, d in enumerate(cg.disjunctions):
        rec = {"index": d.index,
               "pi_bar": v[cg.layout["pi_bar_%d" % k]].copy(),
               "pi_tilde": v[cg.layout["pi_tilde_%d" % k]].copy()}
        if isinstance(d, ObjectiveDisjunction):
            rec["rho"] = v[cg.layout["rho_%d" % k]].copy()
        else:
            rec["sigma"] = -v[cg.layout["u_%d" % k]].copy()
        out.append(rec)
    return tuple(out)


def solve_cgsocp(cg: CgsocpProblem, tol: float = 1e-8, max_iterations: int = 200,
                 violation_tol: float = VIOLATION_TOL) -> CgsocpSolution:
    outcome = conic_solve(cg.problem, tol, max_iterations)
    lay, n1, n2 = cg.layout, cg.n1, cg.n2
    if isinstance(outcome, ConicOptimal):
        v = outcome.x
        violation = -outcome.pcost
        multipliers = _multipliers(cg, v)
        alpha, beta = v[lay["alpha"]], v[lay["beta"]]
        if violation <= violation_tol or not (np.any(alpha) or np.any(beta)):
            return CgsocpSolution(CgsocpStatus.NO_CUT, None, violation, multipliers,
                                  outcome.iterations)
        cut = Cut(alpha, beta, float(v[lay["tau"]][0]))
        return CgsocpSolution(CgsocpStatus.CUT, cut, violation, multipliers, outcome.iterations)
    if isinstance(outcome, ConicDualInfeasible):
        ray = outcome.x
        alpha, beta = ray[lay["alpha"]], ray[lay["beta"]]
        tau = float(ray[lay["tau"]][0])
        scale = float(np.linalg.norm(np.concatenate([alpha, beta])))
        if cg.norm.family == "C" or scale <= 1e-7 * max(1.0, abs(tau)):
            return CgsocpSolution(CgsocpStatus.ALWAYS_VIOLATED, Cut.always_violated(n1, n2),
                                  math.inf, (), outcome.iterations)
        cut = Cut(alpha / scale, beta / scale, tau / scale)
        return CgsocpSolution(CgsocpStatus.RAY_CUT, cut, 1.0 / scale, (), outcome.iterations)
    if isinstance(outcome, ConicPrimalInfeasible):
        message = "cut-generating program reported infeasible"
    else:
        message = "cut-generating program failed: %s" % getattr(outcome, "reason", "")
    logger.warning(message)
    return CgsocpSolution(CgsocpStatus.FAILED, None, 0.0, (), outcome.iterations, message)


def postprocess_cut(cut: Cut, lower, upper, threshold: float = ZERO_COEFFICIENT
                    ) -> Optional[Cut]:
    """
    Zero out tiny coefficients, relaxing tau by the worst case over the box.

    Returns None when nothing is left of the cut.
    """
    if cut.is_always_violated:
        return cut
    coef = cut.coefficients.copy()
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    small = (np.abs(coef) < threshold) & (coef != 0.0)
    if not np.any(small):
        return cut
    tau = cut.tau - float(np.sum(np.maximum(coef[small] * lower[small],
                                            coef[small] * upper[small])))
    coef[small] = 0.0
    n1 = cut.alpha.size
    if not np.any(coef):
        if tau > 0.0:
            return Cut.always_violated(n1, coef.size - n1, cut.local_to)
        return None
    return Cut(coef[:n1], coef[n1:], tau, cut.local_to)


# Separation

class SeparationOutcome(enum.Enum):
    CUT = "cut"
    NO_IMPROVING = "no-improving"
    FOLLOWER_INFEASIBLE = "follower-infeasible"
    NO_CUT = "no-cut"
    FAILED = "failed"


@dataclass(eq=False)
class SeparationResult:
    outcome: SeparationOutcome
    cut: Optional[Cut] = None
    violation: float = 0.0
    y_hat: Optional[Tuple[int, ...]] = None
    removed: int = 0
    solves: int = 0
    follower_seconds: float = 0.0
    seconds: float = 0.0
    improving_found: bool = False
    attempts: List[CgsocpSolution] = field(default_factory=list)

    @property
    def has_cut(self) -> bool:
        return self.cut is not None


@dataclass(eq=False)
class SeparationContext:
    """Separation settings and the follower solves they share."""

    inst: BilevelInstance
    strategy: str = "O"
    norm: NormalizationSpec = NormalizationSpec("S", 2)
    removal: str = "RN"
    violation_tol: float = VIOLATION_TOL
    zero_threshold: float = ZERO_COEFFICIENT
    subproblem_time_limit: Optional[float] = None
    conic_tol: float = 1e-8
    conic_max_iterations: int = 200
    follower: Optional[FollowerContext] = None

    def __post_init__(self):
        if self.strategy not in SEPARATION_STRATEGIES:
            raise ValueError("unknown separation strategy %r" % self.strategy)
        if self.removal not in REMOVAL_STRATEGIES:
            raise ValueError("unknown removal strategy %r" % self.removal)
        if self.follower is None:
            self.follower = FollowerContext(self.inst)

    def cut_for(self, P: PolyhedronP, point, y_hat, ub: Optional[float],
                result: SeparationResult) -> Optional[Tuple[Cut, float]]:
        """Run removal, CG-SOCP and post-processing for one follower point."""
        disjunctions = build_disjunctions(self.inst, y_hat)
        kept, removed = remove_redundant(self.inst, disjunctions, P, self.removal, ub,
                                         self.subproblem_time_limit)
        result.removed += removed
        cg = build_cgsocp(P, kept, point, self.norm)
        solution = solve_cgsocp(cg, self.conic_tol, self.conic_max_iterations,
                                self.violation_tol)
        result.solves += 1
        result.attempts.append(solution)
        if solution.cut is None:
            return None
        cut = postprocess_cut(solution.cut, P.lower, P.upper, self.zero_threshold)
        if cut is None:
            return None
        violation = cut.violation(*point)
        if violation <= self.violation_tol:
            logger.debug("cut lost its violation in post-processing (%.3g)", violation)
            return None
        return cut, violation

    def separate(self, P: PolyhedronP, point, ub: Optional[float] = None) -> SeparationResult:
        inst = self.inst
        start = time.monotonic()
        x_star = np.asarray(point[0], dtype=float)
        y_star = np.asarray(point[1], dtype=float)
        point = (x_star, y_star)
        q_star = inst.follower_quadratic.value(y_star)
        result = SeparationResult(SeparationOutcome.NO_CUT)
        f_start = self.follower.stats.seconds

        if self.strategy == "O":
            solution = self.follower.solve_optimal(x_star)
            result.follower_seconds = self.follower.stats.seconds - f_start
            if solution is None:
                result.outcome = SeparationOutcome.FOLLOWER_INFEASIBLE
            elif float(solution.value) >= q_star - 1e-9 * (1.0 + abs(q_star)):
                result.outcome = SeparationOutcome.NO_IMPROVING
            else:
                result.improving_found = True
                self._record(result, self.cut_for(P, point, solution.y, ub, result),
                             solution)
        else:
            def attempt(solution: FollowerSolution):
                result.improving_found = True
                found = self.cut_for(P, point, solution.y, ub, result)
                if found is not None:
                    self._record(result, found, solution)
                    return True
                return False

            stream = self.follower.stream_improving(x_star, q_star, attempt)
            result.follower_seconds = self.follower.stats.seconds - f_start
            if not stream.solutions:
                result.outcome = (SeparationOutcome.NO_IMPROVING if stream.complete
                                  else SeparationOutcome.FAILED)
        if result.outcome is SeparationOutcome.NO_CUT and any(
                a.status is CgsocpStatus.FAILED for a in result.attempts):
            result.outcome = SeparationOutcome.FAILED
        result.seconds = time.monotonic() - start
        return result

    def _record(self, result: SeparationResult, found, solution: FollowerSolution):
        result.y_hat = solution.y
        if found is not None:
            result.cut, result.violation = found
            result.outcome = SeparationOutcome.CUT


def separate(inst: BilevelInstance, P: PolyhedronP, point, strategy: str = "O",
             norm: Union[str, NormalizationSpec] = "S2", removal: str = "RN",
             ub: Optional[float] = None,
             context: Optional[SeparationContext] = None) -> SeparationResult:
    """Separate (x*, y*) from the bilevel-feasible set, or report why not."""
    if isinstance(norm, str):
        norm = NormalizationSpec.parse(norm)
    if context is None:
        context = SeparationContext(inst, strategy, norm, removal)
    return context.separate(P, point, ub)
