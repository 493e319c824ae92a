import dataclasses
import itertools
import os

from fractions import Fraction

import numpy as np
import pytest

from bilevelcuts.bilevel import BruteForceLimitError, NotBinaryError, SolveConfig
from bilevelcuts.bilevel import branch_and_cut, brute_force, compute_gaps, cutting_plane
from bilevelcuts.bilevel import no_good_cut, solve
from bilevelcuts.cutgen import NormalizationSpec
from bilevelcuts.harness import gen_qbcov
from bilevelcuts.model import Point, SolveStatus, is_bilevel_feasible, parse_instance

""" Global test variables"""
infile = os.path.join(os.path.dirname(__file__), "data", "moore_bard.bil")


def loadMooreBard():
    with open(infile, encoding="utf-8") as fd:
        return parse_instance(fd.read())


def assertSameOptimum(result, oracle):
    assert result.status is oracle.status
    if oracle.status is SolveStatus.OPTIMAL:
        assert result.value == oracle.value


def bilevelFeasibleSet(inst):
    """Every bilevel-feasible point of a binary instance with its leader value."""
    Z = np.array(list(itertools.product((0.0, 1.0), repeat=inst.n)))
    X, Y = Z[:, :inst.n1], Z[:, inst.n1:]
    follower_ok = np.all(X @ inst.as_array("A").T + Y @ inst.as_array("B").T
                         >= inst.as_array("f") - 1e-9, axis=1)
    if inst.nY:
        follower_ok &= np.all(Y @ inst.as_array("CY").T >= inst.as_array("UY") - 1e-9, axis=1)
    leader_ok = np.ones(len(Z), dtype=bool)
    if inst.m1:
        leader_ok &= np.all(X @ inst.as_array("M").T + Y @ inst.as_array("N").T
                            >= inst.as_array("h") - 1e-9, axis=1)
    q = inst.follower_quadratic.values(Y)
    grid = (2 ** inst.n1, 2 ** inst.n2)
    phi = np.where(follower_ok, q, np.inf).reshape(grid).min(axis=1)
    keep = follower_ok & leader_ok & (q <= np.repeat(phi, grid[1]) + 1e-9)
    c = np.concatenate([inst.as_array("c"), inst.as_array("d")])
    return Z[keep], Z[keep] @ c


def assertCutsKeepFeasiblePoints(inst, result, relies_on_incumbent):
    """
    No recorded cut removes a bilevel-feasible point inside its node box,
    except one at least as bad as the incumbent the removal step used.
    """
    points, values = bilevelFeasibleSet(inst)
    for record in result.cuts:
        cut = record.cut
        tol = 1e-6 * (1.0 + np.abs(cut.coefficients).sum())
        violated = points @ cut.coefficients < cut.tau - tol
        for z, value in zip(points[violated], values[violated]):
            if not record.in_scope(z[:inst.n1], z[inst.n1:]):
                continue
            assert relies_on_incumbent and record.ub is not None, \
                "cut %r removes bilevel-feasible %s" % (cut, z)
            assert value >= record.ub - 1e-5 - 1e-9


def assertCuttingPlaneConverges(inst, result):
    for record in result.cuts:
        assert record.cut.violation(*record.point) > 1e-6
    separated = {tuple(np.concatenate(record.point)) for record in result.cuts}
    assert len(separated) == len(result.cuts)
    assert result.iterations <= 2 ** inst.n
    if result.status is SolveStatus.OPTIMAL:
        assert len(result.cuts) == result.iterations - 1


@pytest.mark.bilevel
def testBruteForceMooreBard():
    result = brute_force(loadMooreBard())
    assert result.status is SolveStatus.OPTIMAL
    assert result.point == Point((1,), (2,))
    assert result.value == -1
    assert result.record.solved == 1
    assert result.record.gap == 0.0


@pytest.mark.bilevel
def testBruteForceLimit():
    inst = loadMooreBard()
    wide = dataclasses.replace(inst, ub=(Fraction(10), Fraction(10 ** 7)))
    with pytest.raises(BruteForceLimitError):
        brute_force(wide)


@pytest.mark.bilevel
@pytest.mark.parametrize("separation, removal, norm", [
    ("IO", "RN", "S2"),
    ("IFG", "RO", "S1"),
    ("IO", "RR", "C1"),
    ("IG", "RI", "U2"),
    ("IFO", "RB", "C2"),
])
def testBranchAndCutMooreBard(separation, removal, norm):
    inst = loadMooreBard()
    cfg = SolveConfig("bc", separation, removal, norm, time_limit=60)
    result = branch_and_cut(inst, cfg)
    assert result.status is SolveStatus.OPTIMAL
    assert result.point == Point((1,), (2,))
    assert result.value == -1
    assert is_bilevel_feasible(inst, result.point)
    # (2, 4) is the optimum of the high point relaxation
    assert result.record.icuts + result.record.fcuts >= 1
    assert result.record.solved == 1
    assert result.record.gap == pytest.approx(0.0, abs=1e-4)
    assert result.record.setting == cfg.label


@pytest.mark.bilevel
def testCutsAreValid():
    inst = loadMooreBard()
    result = solve(inst, SolveConfig(time_limit=60))
    assert result.cuts
    for record in result.cuts:
        if record.cut.is_global:
            for x, y in [(1, 2), (2, 2), (3, 2)]:
                assert record.cut.is_satisfied([x], [y], tol=1e-6)


@pytest.mark.bilevel
def testCuttingPlaneNeedsBinary():
    with pytest.raises(NotBinaryError):
        cutting_plane(loadMooreBard())


@pytest.mark.bilevel
def testNoGoodCut():
    inst = gen_qbcov(4, seed=1)
    z = [1, 0, 1, 1]
    cut = no_good_cut(inst, z)
    assert cut.violation(z[:2], z[2:]) > 0
    assert cut.is_satisfied([1, 1], [1, 1])
    assert cut.is_satisfied([0, 0], [1, 1])


@pytest.mark.bilevel
@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("m2", [1, 2])
def testBranchAndCutMatchesOracle(seed, m2):
    inst = gen_qbcov(4, m1=1, m2=m2, seed=seed)
    oracle = brute_force(inst)
    assertSameOptimum(branch_and_cut(inst, SolveConfig(time_limit=60)), oracle)
    best = SolveConfig("bc", "IFG", "RO", "S1", time_limit=60)
    assertSameOptimum(branch_and_cut(inst, best), oracle)


@pytest.mark.bilevel
@pytest.mark.parametrize("seed", range(5))
def testCuttingPlaneMatchesOracle(seed):
    inst = gen_qbcov(4, m2=2, seed=seed)
    oracle = brute_force(inst)
    for cfg in [SolveConfig("cp", "O", "RN", "S2", time_limit=60),
                SolveConfig("cp", "G", "RO", "S1", time_limit=60)]:
        result = cutting_plane(inst, cfg)
        assertSameOptimum(result, oracle)
        assert result.iterations >= 1
        assertCuttingPlaneConverges(inst, result)
        assertCutsKeepFeasiblePoints(inst, result, False)


@pytest.mark.bilevel
@pytest.mark.parametrize("seed", range(5))
def testBranchAndCutKeepsFeasiblePoints(seed):
    inst = gen_qbcov(6, m1=1, m2=2, seed=seed)
    for cfg in [SolveConfig("bc", "IFO", "RN", "S2", time_limit=60),
                SolveConfig("bc", "IFG", "RO", "S1", time_limit=60),
                SolveConfig("bc", "IO", "RR", "C2", time_limit=60)]:
        result = branch_and_cut(inst, cfg)
        assertCutsKeepFeasiblePoints(inst, result, cfg.removal == "RO")


QBCOV_SUITE = [(n, m1, m2, seed)
               for n, seeds in [(12, range(3)), (16, range(2))]
               for m1, m2 in [(0, 1), (0, 2), (1, 1), (1, 2)]
               for seed in seeds]


@pytest.mark.bilevel
@pytest.mark.parametrize("n, m1, m2, seed", QBCOV_SUITE)
def testLargerInstancesMatchOracle(n, m1, m2, seed):
    inst = gen_qbcov(n, m1=m1, m2=m2, seed=seed)
    oracle = brute_force(inst)
    for cfg in [SolveConfig("bc", time_limit=60),
                SolveConfig("bc", "IFG", "RO", "S1", time_limit=60)]:
        result = branch_and_cut(inst, cfg)
        assertSameOptimum(result, oracle)
        if result.point is not None:
            assert is_bilevel_feasible(inst, result.point)
        assertCutsKeepFeasiblePoints(inst, result, cfg.removal == "RO")
    result = cutting_plane(inst, SolveConfig("cp", time_limit=60))
    assertSameOptimum(result, oracle)
    assertCuttingPlaneConverges(inst, result)
    assertCutsKeepFeasiblePoints(inst, result, False)


@pytest.mark.bilevel
def testComputeGaps():
    assert compute_gaps() == (None, None, None, None)
    gap, gap_star, rgap, rgap_star = compute_gaps(10, 9, 12, 6, best_known=10)
    assert gap == pytest.approx(10.0)
    assert gap_star == pytest.approx(10.0)
    assert rgap == pytest.approx(50.0)
    assert rgap_star == pytest.approx(40.0)
    # relative to |value|
    assert compute_gaps(-10, -11)[0] == pytest.approx(10.0)
    assert compute_gaps(0, 0)[0] == 0.0
    assert compute_gaps(0, -1)[0] is None
    assert compute_gaps(1, -1000)[0] == 100.0
    assert compute_gaps(5, float("-inf"))[0] is None


@pytest.mark.bilevel
def testSolveConfig():
    cfg = SolveConfig.from_cfg({
        "solver": {"method": "cp", "separation": "g", "time-limit": 5,
                   "normalization": "C1"},
        "tolerances": {"lp": 1e-6, "conic-max-iterations": 50},
    }, removal="RO")
    assert cfg.method == "cp"
    assert cfg.separation == "IG"
    assert cfg.strategy == "G"
    assert not cfg.fractional
    assert cfg.time_limit == 5
    assert cfg.lp_tol == 1e-6
    assert cfg.conic_max_iterations == 50
    assert cfg.normalization == NormalizationSpec("C", 1)
    assert cfg.label == "cp-IG-RO-C1"
    assert SolveConfig.from_cfg({}).label == "bc-IO-RN-S2"
    assert SolveConfig(separation="IFO").fractional


@pytest.mark.bilevel
@pytest.mark.parametrize("kwargs", [
    {"method": "dual"},
    {"separation": "IX"},
    {"removal": "RZ"},
    {"normalization": "S5"},
])
def testSolveConfigRejects(kwargs):
    with pytest.raises(ValueError):
        SolveConfig(**kwargs)
