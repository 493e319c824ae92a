import functools
import itertools
import os

from fractions import Fraction

import numpy as np
import pytest

from bilevelcuts.cutgen import CgsocpStatus, LinearDisjunction, NormalizationSpec
from bilevelcuts.cutgen import ObjectiveDisjunction, SeparationError, SeparationOutcome
from bilevelcuts.cutgen import build_cgsocp, build_disjunctions, build_polyhedron
from bilevelcuts.cutgen import postprocess_cut, remove_redundant, separate, solve_cgsocp
from bilevelcuts.follower import follower_solve_optimal
from bilevelcuts.harness import gen_qbcov
from bilevelcuts.model import Cut, Point, eval_follower_objective, is_bilevel_feasible
from bilevelcuts.model import parse_instance, satisfies_hpr

""" Global test variables"""
datadir = os.path.join(os.path.dirname(__file__), "data")
infile = os.path.join(datadir, "moore_bard.bil")
modfile = os.path.join(datadir, "moore_bard_modified.bil")


def load(path):
    with open(path, encoding="utf-8") as fd:
        return parse_instance(fd.read())


def cutFor(inst, y_hat, point, norm="C1", removal="RN", ub=None, P=None):
    P = P if P is not None else build_polyhedron(inst)
    kept, _ = remove_redundant(inst, build_disjunctions(inst, y_hat), P, removal, ub)
    return solve_cgsocp(build_cgsocp(P, kept, point, NormalizationSpec.parse(norm)))


def assertSameCut(cut, coefficients, tau, tol=1e-4):
    got, got_tau = cut.normalized()
    want = np.asarray(coefficients, dtype=float)
    scale = np.linalg.norm(want)
    np.testing.assert_allclose(got, want / scale, atol=tol)
    assert got_tau == pytest.approx(tau / scale, abs=tol)


def bilevelFeasiblePoints(inst):
    cache = {}

    def oracle(inst, x):
        key = tuple(x)
        if key not in cache:
            cache[key] = follower_solve_optimal(inst, x)
        return cache[key]

    out = []
    for x in range(-10, 11):
        for y in range(-10, 11):
            if not satisfies_hpr(inst, [x], [y]):
                continue
            if is_bilevel_feasible(inst, Point((x,), (y,)), oracle):
                out.append((x, y))
    return out


@pytest.mark.cutgen
def testNormalizationLabels():
    assert NormalizationSpec.parse("c1") == NormalizationSpec("C", 1)
    assert NormalizationSpec.parse("S2").label == "S2"
    for label in ["S3", "X1", "S", ""]:
        with pytest.raises(ValueError):
            NormalizationSpec.parse(label)


@pytest.mark.cutgen
def testDisjunctionsAtTwo():
    inst = load(infile)
    d0, d1, d2, d3, d4 = build_disjunctions(inst, [2])
    assert isinstance(d0, ObjectiveDisjunction)
    assert d0.q_hat == 4
    assert d0.contains(inst, [2]) and d0.contains(inst, [-2])
    assert not d0.contains(inst, [3])
    # x <= 9/25, x >= 7, x >= 7/2, x <= -3
    assert [d.index for d in (d1, d2, d3, d4)] == [1, 2, 3, 4]
    assert (d1.a[0], d1.rhs) == (25, Fraction(9))
    assert (d2.a[0], d2.rhs) == (-1, Fraction(-7))
    assert (d3.a[0], d3.rhs) == (-2, Fraction(-7))
    assert (d4.a[0], d4.rhs) == (2, Fraction(-6))
    assert d1.contains([Fraction(9, 25)]) and not d1.contains([1])
    assert d3.contains([Fraction(7, 2)]) and not d3.contains([3])


@pytest.mark.cutgen
def testDisjunctionsRejectBadPoints():
    inst = load(infile)
    with pytest.raises(ValueError):
        build_disjunctions(inst, [2.5])
    with pytest.raises(ValueError):
        build_disjunctions(inst, [2, 2])


@pytest.mark.cutgen
def testRemovalOnMooreBard():
    inst = load(infile)
    P = build_polyhedron(inst)
    disjunctions = build_disjunctions(inst, [3])
    kept, removed = remove_redundant(inst, disjunctions, P, "RN")
    assert (len(kept), removed) == (5, 0)
    # D2: x >= 5, D3: x >= 4 and D4: x <= -8 miss the relaxation
    kept, removed = remove_redundant(inst, disjunctions, P, "RR")
    assert [d.index for d in kept] == [0, 1]
    assert removed == 3
    with pytest.raises(ValueError):
        remove_redundant(inst, disjunctions, P, "RX")


@pytest.mark.cutgen
def testBoxRemoval():
    inst = load(infile)
    P = build_polyhedron(inst, lower=[0, -10], upper=[10, 10])
    kept, removed = remove_redundant(inst, build_disjunctions(inst, [2]), P, "RB")
    # only x <= -3 is empty over the box
    assert [d.index for d in kept] == [0, 1, 2, 3]
    assert removed == 1


@pytest.mark.cutgen
def testRemovalOnModifiedInstance():
    inst = load(modfile)
    P = build_polyhedron(inst)
    disjunctions = build_disjunctions(inst, [2])
    kept, _ = remove_redundant(inst, disjunctions, P, "RR")
    assert [d.index for d in kept] == [0, 1, 3]
    # D1 only holds (0, 3/2)
    kept, _ = remove_redundant(inst, disjunctions, P, "RI")
    assert [d.index for d in kept] == [0, 3]
    # (4, 3) in D3 has leader value 1, not below the upper bound 0
    kept, _ = remove_redundant(inst, disjunctions, P, "RO", ub=0)
    assert [d.index for d in kept] == [0]
    kept, _ = remove_redundant(inst, disjunctions, P, "RO", ub=2)
    assert [d.index for d in kept] == [0, 3]


@pytest.mark.cutgen
def testCutFromThree():
    inst = load(infile)
    solution = cutFor(inst, [3], ([2.0], [4.0]), norm="C1", removal="RR")
    assert solution.status is CgsocpStatus.CUT
    # y <= 3
    assertSameCut(solution.cut, [0, -1], -3)
    assert solution.violation == pytest.approx(1.0, abs=1e-5)
    assert len(solution.multipliers) == 2
    assert all(np.all(m["pi_bar"] >= -1e-7) for m in solution.multipliers)


@pytest.mark.cutgen
@pytest.mark.parametrize("norm", ["C1", "S2"])
def testCutFromTwoIsValid(norm):
    inst = load(infile)
    solution = cutFor(inst, [2], ([2.0], [4.0]), norm=norm)
    assert solution.status is CgsocpStatus.CUT
    cut = solution.cut
    assert cut.violation([2], [4]) > 1e-6
    feasible = bilevelFeasiblePoints(inst)
    assert {(1, 2), (2, 2), (3, 2)} <= set(feasible)
    for x, y in feasible:
        assert cut.is_satisfied([x], [y], tol=1e-4)


@pytest.mark.cutgen
def testCutOnModifiedInstance():
    inst = load(modfile)
    solution = cutFor(inst, [2], ([2.0], [4.0]), norm="C1", removal="RO", ub=0)
    assert solution.status is CgsocpStatus.CUT
    # y <= 2
    assertSameCut(solution.cut, [0, -1], -2)


@pytest.mark.cutgen
def testUnitBoxNormalization():
    inst = load(infile)
    solution = cutFor(inst, [3], ([2.0], [4.0]), norm="U2", removal="RR")
    assert solution.status is CgsocpStatus.CUT
    assert solution.violation > 1e-6
    assert solution.cut.violation([2], [4]) > 1e-6


@pytest.mark.cutgen
def testNoCutInsideHull():
    inst = load(infile)
    # (1, 2) lies in P n D0 for y_hat = 2
    solution = cutFor(inst, [2], ([1.0], [2.0]), norm="S2")
    assert solution.status is CgsocpStatus.NO_CUT
    assert solution.cut is None


@pytest.mark.cutgen
def testAlwaysViolated():
    inst = load(infile)
    # every disjunction is empty over this box
    P = build_polyhedron(inst, lower=[-10, 3], upper=[3, 10])
    solution = cutFor(inst, [2], ([2.0], [4.0]), norm="C2", P=P)
    assert solution.status is CgsocpStatus.ALWAYS_VIOLATED
    assert solution.cut.is_always_violated
    kept, removed = remove_redundant(inst, build_disjunctions(inst, [2]), P, "RR")
    assert removed == 4
    assert all(isinstance(d, ObjectiveDisjunction) for d in kept)


@pytest.mark.cutgen
@pytest.mark.parametrize("norm", ["S1", "S2"])
def testStandardNormalizationNeverFails(norm):
    inst = load(infile)
    P = build_polyhedron(inst)
    rng = np.random.default_rng(7)
    vertices = np.array([[0.0, 1.5], [2.0, 4.0], [3.6, 3.2], [2.5, 1.0]])
    for _ in range(20):
        weights = rng.dirichlet(np.ones(4))
        x, y = weights @ vertices
        y_hat = [int(rng.integers(-2, 4))]
        solution = cutFor(inst, y_hat, ([x], [y]), norm=norm, P=P)
        assert solution.status in (CgsocpStatus.CUT, CgsocpStatus.NO_CUT)


@functools.lru_cache(maxsize=None)
def coveringCase(seed):
    """
    Binary HPR points of a small covering instance, split into bilevel
    feasible ones and the rest, the latter with an optimal follower reply.
    """
    inst = gen_qbcov(8, m1=1, m2=2, seed=seed)
    optimum = {}
    feasible, infeasible = [], []
    for z in itertools.product((0, 1), repeat=inst.n):
        x, y = z[:inst.n1], z[inst.n1:]
        if not satisfies_hpr(inst, x, y):
            continue
        if x not in optimum:
            optimum[x] = follower_solve_optimal(inst, x)
        if eval_follower_objective(inst, y) <= optimum[x].value:
            feasible.append((x, y))
        else:
            infeasible.append((x, y, optimum[x].y))
    return inst, feasible, infeasible


def separationTargets(seed, count=9):
    """Bilevel-infeasible HPR points, every other one pulled towards another HPR point."""
    _, feasible, infeasible = coveringCase(seed)
    hpr = feasible + [(x, y) for x, y, _ in infeasible]
    rng = np.random.default_rng(seed)
    out = []
    for k in rng.permutation(len(infeasible))[:count]:
        x, y, y_hat = infeasible[k]
        x, y = np.array(x, dtype=float), np.array(y, dtype=float)
        if len(out) % 2:
            ox, oy = hpr[int(rng.integers(len(hpr)))]
            w = rng.uniform(0.6, 0.9)
            x, y = w * x + (1 - w) * np.array(ox), w * y + (1 - w) * np.array(oy)
        out.append(((x, y), y_hat))
    return out


@pytest.mark.cutgen
@pytest.mark.parametrize("norm", ["S1", "S2", "U1", "U2", "C1", "C2"])
def testSeparationOverCoveringInstances(norm):
    spec = NormalizationSpec.parse(norm)
    calls = 0
    for seed in range(4):
        inst, feasible, infeasible = coveringCase(seed)
        P = build_polyhedron(inst)
        hpr = feasible + [(x, y) for x, y, _ in infeasible]
        for point, y_hat in separationTargets(seed):
            disjunctions = build_disjunctions(inst, y_hat)
            solution = solve_cgsocp(build_cgsocp(P, disjunctions, point, spec))
            calls += 1
            if spec.family == "S":
                assert solution.status in (CgsocpStatus.CUT, CgsocpStatus.NO_CUT)
            assert solution.status is not CgsocpStatus.FAILED, solution.warning

            if spec.family == "C":
                kept, _ = remove_redundant(inst, disjunctions, P, "RR")
                q_hat = eval_follower_objective(inst, y_hat)
                in_objective = any(eval_follower_objective(inst, y) <= q_hat for _, y in hpr)
                if len(kept) > 1 or in_objective:
                    assert solution.status is not CgsocpStatus.ALWAYS_VIOLATED
            if solution.status not in (CgsocpStatus.CUT, CgsocpStatus.RAY_CUT):
                continue
            cut = solution.cut
            if solution.status is CgsocpStatus.CUT:
                assert cut.violation(*point) == pytest.approx(solution.violation, abs=1e-6)
            else:
                assert cut.violation(*point) > 1e-6
            tol = 1e-6 * (1.0 + np.abs(cut.coefficients).sum())
            for x, y in feasible:
                assert cut.is_satisfied(x, y, tol=tol), (seed, x, y)
    assert calls >= 24


@pytest.mark.cutgen
def testRayCutFromSingleDisjunction():
    inst = load(infile)
    P = build_polyhedron(inst)
    d1 = build_disjunctions(inst, [2])[1]
    point = ([2.0], [4.0])
    # no objective disjunction: 25x <= 9 alone leaves the cut unbounded
    solution = solve_cgsocp(build_cgsocp(P, [d1], point, NormalizationSpec("U", 1)))
    assert solution.status is CgsocpStatus.RAY_CUT
    cut = solution.cut
    assert cut.alpha[0] == pytest.approx(-1.0, abs=1e-5)
    assert abs(cut.beta[0]) <= 1e-5
    assert cut.tau <= -9 / 25 + 1e-6
    assert cut.violation(*point) > 1e-6
    for x, y in [(0, 1), (Fraction(9, 25), 2), (-3, 0)]:
        assert cut.is_satisfied([x], [y], tol=1e-4)

    # the same disjunction meets P, so the C program stays bounded
    solution = solve_cgsocp(build_cgsocp(P, [d1], point, NormalizationSpec("C", 1)))
    assert solution.status is CgsocpStatus.CUT
    assert solution.cut.violation(*point) > 1e-6


@pytest.mark.cutgen
def testEmptyDisjunctionList():
    inst = load(infile)
    with pytest.raises(SeparationError):
        build_cgsocp(build_polyhedron(inst), [], ([2.0], [4.0]), NormalizationSpec("S", 2))


@pytest.mark.cutgen
def testPostprocessCut():
    lower, upper = np.zeros(3), np.ones(3)
    cut = Cut([1e-7, 1.0], [1.0], 0.5)
    out = postprocess_cut(cut, lower, upper)
    assert out.alpha[0] == 0.0
    assert out.tau == pytest.approx(0.5 - 1e-7)

    tidy = Cut([2.0, 1.0], [1.0], 0.5)
    assert postprocess_cut(tidy, lower, upper) is tidy

    # negative tiny coefficient: worst case over the box is at the lower bound
    out = postprocess_cut(Cut([-1e-7, 1.0], [0.0], 0.5), lower, upper)
    assert out.tau == pytest.approx(0.5)

    assert postprocess_cut(Cut([1e-7, 0.0], [0.0], -1.0), lower, upper) is None


@pytest.mark.cutgen
def testPostprocessKeepsValidity():
    rng = np.random.default_rng(3)
    lower, upper = -np.ones(3), 2 * np.ones(3)
    cut = Cut([3e-6, -0.7], [1.2], 0.1)
    out = postprocess_cut(cut, lower, upper)
    for z in rng.uniform(lower, upper, size=(200, 3)):
        if cut.is_satisfied(z[:2], z[2:]):
            assert out.is_satisfied(z[:2], z[2:])


@pytest.mark.cutgen
@pytest.mark.parametrize("strategy", ["O", "G"])
def testSeparate(strategy):
    inst = load(infile)
    P = build_polyhedron(inst)
    result = separate(inst, P, ([2.0], [4.0]), strategy=strategy, norm="S2")
    assert result.outcome is SeparationOutcome.CUT
    assert result.improving_found
    assert result.violation > 1e-6
    if strategy == "O":
        assert result.y_hat == (2,)
    else:
        assert result.y_hat in [(2,), (3,)]
    for x, y in [(1, 2), (2, 2), (3, 2)]:
        assert result.cut.is_satisfied([x], [y], tol=1e-6)


@pytest.mark.cutgen
@pytest.mark.parametrize("strategy", ["O", "G"])
def testSeparateBilevelFeasible(strategy):
    inst = load(infile)
    result = separate(inst, build_polyhedron(inst), ([2.0], [2.0]), strategy=strategy)
    assert result.outcome is SeparationOutcome.NO_IMPROVING
    assert not result.has_cut


@pytest.mark.cutgen
def testSeparateFollowerInfeasible():
    inst = load(infile)
    result = separate(inst, build_polyhedron(inst), ([0.0], [1.5]), strategy="O")
    assert result.outcome is SeparationOutcome.FOLLOWER_INFEASIBLE


@pytest.mark.cutgen
def testLinearDisjunctionBox():
    d = LinearDisjunction(1, np.array([2.0, -1.0]), Fraction(0))
    assert d.box_minimum(np.array([0.0, 0.0]), np.array([1.0, 3.0])) == -3.0
