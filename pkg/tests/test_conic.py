import numpy as np
import pytest

from scipy.optimize import linprog

from bilevelcuts.conic import ConicDualInfeasible, ConicOptimal, ConicPrimalInfeasible
from bilevelcuts.conic import ConicProblem, ConicSolveError
from bilevelcuts.conic import conic_extract_duals, conic_solve, kkt_residuals, nonneg, soc


def randomSocp(seed):
    """Strictly primal and dual feasible SOCP built from interior points."""
    rng = np.random.default_rng(seed)
    cones = (nonneg(3), soc(3), soc(4))
    n, m, p = 4, 10, 1

    def interior():
        v = np.empty(m)
        v[:3] = rng.uniform(0.5, 2.0, 3)
        start = 3
        for size in (3, 4):
            tail = rng.normal(size=size - 1)
            v[start] = np.linalg.norm(tail) + rng.uniform(0.5, 2.0)
            v[start + 1:start + size] = tail
            start += size
        return v

    G = rng.normal(size=(m, n))
    A = rng.normal(size=(p, n))
    x0 = rng.normal(size=n)
    h = G @ x0 + interior()
    b = A @ x0
    c = -G.T @ interior() - A.T @ rng.normal(size=p)
    return ConicProblem(c, A, b, G, h, cones)


@pytest.mark.conic
def testSecondOrderConeNorm():
    # min t s.t. (t, 3, 4) in Q
    p = ConicProblem([1.0], np.zeros((0, 1)), [], [[-1.0], [0.0], [0.0]], [0.0, 3.0, 4.0],
                     (soc(3),))
    out = conic_solve(p)
    assert isinstance(out, ConicOptimal)
    assert out.pcost == pytest.approx(5.0, abs=1e-6)


@pytest.mark.conic
def testDistanceToHyperplane():
    # min t s.t. ||a - x|| <= t, x1 + x2 + x3 = 1 with a = (1, 1, 1)
    G = np.zeros((4, 4))
    G[0, 0] = -1.0
    G[1:, 1:] = np.eye(3)
    p = ConicProblem([1.0, 0.0, 0.0, 0.0], [[0.0, 1.0, 1.0, 1.0]], [1.0], G,
                     [0.0, 1.0, 1.0, 1.0], (soc(4),))
    out = conic_solve(p)
    assert isinstance(out, ConicOptimal)
    assert out.pcost == pytest.approx(2.0 / np.sqrt(3.0), abs=1e-6)
    assert np.allclose(out.x[1:], [1 / 3, 1 / 3, 1 / 3], atol=1e-5)


@pytest.mark.conic
@pytest.mark.parametrize("seed", range(50))
def testRandomSocpKkt(seed):
    p = randomSocp(seed)
    out = conic_solve(p)
    assert isinstance(out, ConicOptimal)
    res = kkt_residuals(p, out)
    assert res["primal"] <= 1e-6
    assert res["dual"] <= 1e-6
    assert res["relative_gap"] <= 1e-6
    assert res["cone"] <= 1e-8


@pytest.mark.conic
@pytest.mark.parametrize("seed", range(10))
def testLinearAgreesWithSimplexReference(seed):
    rng = np.random.default_rng(100 + seed)
    m, n = 7, 4
    G = rng.integers(-5, 6, size=(m, n)).astype(float)
    x0 = rng.uniform(-1.0, 1.0, n)
    h = G @ x0 + rng.uniform(0.5, 2.0, m)
    # box rows keep the problem bounded
    G = np.vstack([G, np.eye(n), -np.eye(n)])
    h = np.concatenate([h, np.full(n, 3.0), np.full(n, 3.0)])
    c = rng.integers(-5, 6, size=n).astype(float)
    p = ConicProblem(c, np.zeros((0, n)), [], G, h, (nonneg(G.shape[0]),))
    out = conic_solve(p)
    ref = linprog(c, A_ub=G, b_ub=h, bounds=[(None, None)] * n, method="highs")
    assert isinstance(out, ConicOptimal)
    assert out.pcost == pytest.approx(ref.fun, abs=1e-6 * (1 + abs(ref.fun)))


@pytest.mark.conic
def testPrimalInfeasible():
    # x >= 1 and x <= 0
    p = ConicProblem([1.0], np.zeros((0, 1)), [], [[-1.0], [1.0]], [-1.0, 0.0], (nonneg(2),))
    out = conic_solve(p)
    assert isinstance(out, ConicPrimalInfeasible)
    assert float(p.h @ out.z) < 0.0
    with pytest.raises(ConicSolveError):
        conic_extract_duals(p, out)


@pytest.mark.conic
def testDualInfeasible():
    # min -x s.t. x >= 0
    p = ConicProblem([-1.0], np.zeros((0, 1)), [], [[-1.0]], [0.0], (nonneg(1),))
    out = conic_solve(p)
    assert isinstance(out, ConicDualInfeasible)
    assert out.x[0] > 0.0


@pytest.mark.conic
def testDualInfeasibleAtConeApex():
    # min -t s.t. t >= 0, (1, a) in Q, a = 0: along the ray the cone block stays put
    G = [[-1.0, 0.0], [0.0, 0.0], [0.0, -1.0]]
    p = ConicProblem([-1.0, 0.0], [[0.0, 1.0]], [0.0], G, [0.0, 1.0, 0.0],
                     (nonneg(1), soc(2)))
    out = conic_solve(p)
    assert isinstance(out, ConicDualInfeasible)
    assert out.x[0] == pytest.approx(1.0)
    assert abs(out.x[1]) <= 1e-4


@pytest.mark.conic
def testUnboundedOptimalFace():
    # min t s.t. (t, u) in Q, w >= 0: any w >= 0 is optimal
    G = [[0.0, 0.0, -1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]]
    p = ConicProblem([1.0, 0.0, 0.0], np.zeros((0, 3)), [], G, [0.0, 0.0, 0.0],
                     (nonneg(1), soc(2)))
    out = conic_solve(p)
    assert isinstance(out, ConicOptimal)
    assert out.pcost == pytest.approx(0.0, abs=1e-6)
    assert out.x[2] >= -1e-7


@pytest.mark.conic
def testDualBlocks():
    p = randomSocp(7)
    out = conic_solve(p)
    duals = conic_extract_duals(p, out)
    assert [b.size for b in duals.blocks] == [3, 3, 4]
    assert np.all(duals.blocks[0] >= -1e-9)
    for block in duals.blocks[1:]:
        assert block[0] >= np.linalg.norm(block[1:]) - 1e-7


@pytest.mark.conic
def testConeSizesMustMatchRows():
    with pytest.raises(ValueError):
        ConicProblem([1.0], np.zeros((0, 1)), [], [[1.0], [1.0]], [0.0, 0.0], (soc(3),))
