import numpy as np
import pytest

from bilevelcuts.mip import BnbConfig, BranchAndBound, ConicRelaxation, LinearRow
from bilevelcuts.mip import LpRelaxation, SolutionPool, Verdict
from bilevelcuts.mip import bnb_enumerate_improving, bnb_solution_pool, bnb_solve
from bilevelcuts.model import SolveStatus


def knapsack():
    # max 10a + 13b + 7c s.t. 4a + 6b + 3c <= 9, binary; optimum 20 at (0, 1, 1)
    return LpRelaxation([-10.0, -13.0, -7.0], [[-4.0, -6.0, -3.0]], [-9.0],
                        np.zeros(3), np.ones(3))


@pytest.mark.mip
def testKnapsackOptimum():
    result = bnb_solve(knapsack())
    assert result.status is SolveStatus.OPTIMAL
    assert result.value == pytest.approx(-20.0)
    assert np.allclose(result.incumbent, [0, 1, 1])
    assert result.bound == pytest.approx(-20.0)
    assert result.stats.root_bound <= -20.0 + 1e-9


@pytest.mark.mip
def testIntegerInfeasible():
    # 2x = 1 has no integer solution
    relax = LpRelaxation([1.0], [[2.0], [-2.0]], [1.0, -1.0], [0.0], [3.0])
    result = bnb_solve(relax)
    assert result.status is SolveStatus.INFEASIBLE
    assert result.incumbent is None


@pytest.mark.mip
def testRejectedCandidateIsExcluded():
    def on_integer(node, z, heuristic):
        if np.allclose(z, [0, 1, 1]):
            return Verdict.reject()
        return Verdict.accept()

    result = bnb_solve(knapsack(), on_integer=on_integer)
    assert result.status is SolveStatus.OPTIMAL
    assert result.value == pytest.approx(-17.0)
    assert np.allclose(result.incumbent, [1, 0, 1])
    assert result.stats.rejected >= 1


@pytest.mark.mip
def testCutVerdictAddsGlobalRow():
    def on_integer(node, z, heuristic):
        if z[1] + z[2] > 1.5:
            # b + c <= 1
            return Verdict.cuts([LinearRow([0.0, -1.0, -1.0], -1.0)])
        return Verdict.accept()

    engine = BranchAndBound(knapsack(), BnbConfig(), on_integer)
    result = engine.solve()
    assert result.value == pytest.approx(-17.0)
    assert len(result.global_rows) >= 1
    assert result.stats.global_rows >= 1


@pytest.mark.mip
def testLocalRowMustBelongToPath():
    def on_fractional(node, z):
        return [LinearRow([1.0, 0.0, 0.0], 0.0, local_to=node.id + 1000)]

    engine = BranchAndBound(knapsack(), BnbConfig(), on_fractional=on_fractional)
    with pytest.raises(ValueError):
        engine.solve()


@pytest.mark.mip
def testFractionalRoundsAreLimited():
    calls = []

    def on_fractional(node, z):
        calls.append(node.id)
        # redundant row, the loop re-solves the same relaxation
        return [LinearRow([0.0, 0.0, 0.0], -1.0)]

    cfg = BnbConfig(max_cut_rounds=3)
    result = bnb_solve(knapsack(), cfg, on_fractional=on_fractional)
    assert result.value == pytest.approx(-20.0)
    assert calls.count(0) == 3


@pytest.mark.mip
def testCutoffMakesProblemInfeasible():
    result = bnb_solve(knapsack(), BnbConfig(cutoff=-21.0))
    assert result.status is SolveStatus.INFEASIBLE


@pytest.mark.mip
def testSolutionLimitStopsEarly():
    result = bnb_solve(knapsack(), BnbConfig(solution_limit=1))
    assert result.incumbent is not None
    assert result.stats.accepted == 1
    assert result.status in (SolveStatus.FEASIBLE, SolveStatus.OPTIMAL)


@pytest.mark.mip
def testIntegralObjectivePrunes():
    plain = bnb_solve(knapsack())
    rounded = bnb_solve(knapsack(), BnbConfig(integral_objective=True))
    assert rounded.value == plain.value
    assert rounded.stats.nodes <= plain.stats.nodes


@pytest.mark.mip
def testEnumerateImproving():
    found = []

    def yield_fn(z, value):
        found.append(value)
        return False

    engine = BranchAndBound(knapsack(), BnbConfig())
    result = bnb_enumerate_improving(engine, -17.0, yield_fn)
    assert found
    assert all(v < -17.0 for v in found)
    assert min(found) == pytest.approx(-20.0)
    assert result.status is SolveStatus.OPTIMAL


@pytest.mark.mip
def testEnumerateImprovingStopsOnRequest():
    engine = BranchAndBound(knapsack(), BnbConfig())
    result = bnb_enumerate_improving(engine, 0.0, lambda z, value: True)
    assert result.stats.aborted
    assert result.status is not SolveStatus.INFEASIBLE


@pytest.mark.mip
def testSolutionPoolFifo():
    pool = SolutionPool(2)
    assert pool.add([0, 1])
    assert not pool.add([0.0, 1.0])
    assert pool.add([1, 1])
    assert pool.add([2, 2])
    assert len(pool) == 2
    assert [0, 1] not in pool
    assert [2, 2] in pool


@pytest.mark.mip
def testPoolSharedBetweenSolves():
    pool = SolutionPool()
    engine = BranchAndBound(knapsack(), BnbConfig(), pool=pool)
    engine.solve()
    assert any(np.allclose(z, [0, 1, 1]) for z in bnb_solution_pool(engine))
    again = bnb_solve(knapsack(), pool=pool)
    assert again.value == pytest.approx(-20.0)
    assert again.stats.heuristic_candidates >= 1


@pytest.mark.mip
def testConvexQuadraticInteger():
    # min y^2 - 5.2 y over y in {0..5}: optimum y = 3 with value -6.6
    relax = ConicRelaxation([-5.2], [[1.0]], [0.0], [0.0], [5.0], V=[[1.0]])
    result = bnb_solve(relax)
    assert result.status is SolveStatus.OPTIMAL
    assert np.allclose(result.incumbent, [3.0])
    assert result.value == pytest.approx(-6.6)


@pytest.mark.mip
def testConicRelaxationBound():
    relax = ConicRelaxation([-5.2], [[1.0]], [0.0], [0.0], [5.0], V=[[1.0]])
    res = relax.solve(relax.lower, relax.upper)
    assert res.is_optimal
    # continuous minimum at y = 2.6
    assert res.z[0] == pytest.approx(2.6, abs=1e-3)
    assert res.bound == pytest.approx(-6.76, abs=1e-6)


@pytest.mark.mip
def testFixedVariablesAreSubstituted():
    relax = ConicRelaxation([1.0, -5.2], [[1.0, 1.0]], [1.0], [0.0, 0.0], [1.0, 5.0],
                            V=[[0.0, 1.0]])
    res = relax.solve(np.array([1.0, 0.0]), np.array([1.0, 5.0]))
    assert res.is_optimal
    assert res.z[0] == 1.0
    assert res.bound == pytest.approx(1.0 - 6.76, abs=1e-6)
