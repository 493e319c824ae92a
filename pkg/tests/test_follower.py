import os

from fractions import Fraction

import pytest

from bilevelcuts.follower import FollowerContext, FollowerProblem, follower_cutoff
from bilevelcuts.follower import follower_solve_optimal, follower_stream_improving
from bilevelcuts.model import BilevelInstance, parse_instance

""" Global test variables"""
infile = os.path.join(os.path.dirname(__file__), "data", "moore_bard.bil")


def loadMooreBard():
    with open(infile, encoding="utf-8") as fd:
        return parse_instance(fd.read())


@pytest.mark.follower
@pytest.mark.parametrize("x", [1, 2, 3])
def testValueFunction(x):
    inst = loadMooreBard()
    solution = follower_solve_optimal(inst, [x])
    assert solution.value == 4
    assert solution.y == (2,)


@pytest.mark.follower
def testFollowerInfeasible():
    # at x = 0 only y = 3/2 satisfies the linking rows
    assert follower_solve_optimal(loadMooreBard(), [0]) is None


@pytest.mark.follower
def testExactFeasibility():
    problem = FollowerProblem(loadMooreBard(), [2])
    assert problem.rhs == (Fraction(-80), Fraction(-8), Fraction(0), Fraction(11))
    assert problem.is_feasible([4])
    assert not problem.is_feasible([5])
    assert not problem.is_feasible([1])


@pytest.mark.follower
def testProblemValidation():
    inst = loadMooreBard()
    with pytest.raises(ValueError):
        FollowerProblem(inst, [1, 2])
    with pytest.raises(ValueError):
        FollowerProblem(inst, [1], mode="X")


@pytest.mark.follower
def testCutoffRelief():
    inst = loadMooreBard()
    assert follower_cutoff(inst, 16) == 15.0
    assert follower_cutoff(inst, 15.5) == 15.0
    fractional = BilevelInstance(0, 1, [], [1], A=[[]], B=[[1]], f=[0], V=[[1]],
                                 g=[Fraction(1, 2)], lb=[0], ub=[3])
    assert follower_cutoff(fractional, 2.0) == pytest.approx(2.0 - 1e-5)


@pytest.mark.follower
def testStreamImproving():
    inst = loadMooreBard()
    stream = follower_stream_improving(inst, [2], 16, lambda solution: False)
    assert stream.complete
    assert stream.solutions
    assert all(s.value < 16 for s in stream.solutions)
    assert stream.best.value == 4
    assert stream.best.y == (2,)


@pytest.mark.follower
def testStreamStopsOnFirst():
    inst = loadMooreBard()
    stream = follower_stream_improving(inst, [2], 16, lambda solution: True)
    assert len(stream.solutions) == 1
    assert stream.aborted
    assert not stream.complete
    assert stream.solutions[0].y in ((2,), (3,))


@pytest.mark.follower
def testStreamWithoutImprovement():
    inst = loadMooreBard()
    stream = follower_stream_improving(inst, [2], 4, lambda solution: False)
    assert stream.solutions == ()
    assert stream.complete
    assert stream.best is None


@pytest.mark.follower
def testContextSharesPool():
    inst = loadMooreBard()
    context = FollowerContext(inst)
    context.solve_optimal([2])
    context.solve_optimal([3])
    assert context.stats.solves == 2
    assert len(context.pool) >= 1
