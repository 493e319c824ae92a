import numpy as np
import pytest

from scipy.optimize import linprog

from bilevelcuts.linsolve import LpInfeasible, LpOptimal, LpProblem
from bilevelcuts.linsolve import lp_add_rows, lp_change_bounds, lp_solve


def randomLp(seed, m=8, n=5):
    rng = np.random.default_rng(seed)
    G = rng.integers(-9, 10, size=(m, n)).astype(float)
    z0 = rng.uniform(-2.0, 2.0, size=n)
    b = G @ z0 - rng.uniform(0.0, 3.0, size=m)
    c = rng.integers(-9, 10, size=n).astype(float)
    return LpProblem(c, G, b, np.full(n, -5.0), np.full(n, 5.0))


def activeNormals(p, z, tol=1e-6):
    normals = [row for row, bi in zip(p.G, p.b) if abs(row @ z - bi) <= tol * (1 + abs(bi))]
    eye = np.eye(p.num_vars)
    for j in range(p.num_vars):
        if abs(z[j] - p.lower[j]) <= tol or abs(z[j] - p.upper[j]) <= tol:
            normals.append(eye[j])
    return np.array(normals).reshape(-1, p.num_vars)


@pytest.mark.linsolve
def testSmallLp():
    # max x + y s.t. x + 2y <= 4, 3x + y <= 6
    p = LpProblem([-1.0, -1.0], [[-1.0, -2.0], [-3.0, -1.0]], [-4.0, -6.0],
                  [0.0, 0.0], [10.0, 10.0])
    out = lp_solve(p)
    assert isinstance(out, LpOptimal)
    assert out.objective == pytest.approx(-2.8)
    assert np.allclose(out.z, [1.6, 1.2])
    assert out.dual_objective == pytest.approx(-2.8)
    assert np.all(out.duals >= -1e-9)


@pytest.mark.linsolve
def testNoRows():
    p = LpProblem([1.0, -2.0], np.zeros((0, 2)), [], [-1.0, 0.0], [3.0, 4.0])
    out = lp_solve(p)
    assert np.allclose(out.z, [-1.0, 4.0])
    assert out.objective == pytest.approx(-9.0)


@pytest.mark.linsolve
def testInfeasibleHasFarkasCertificate():
    p = LpProblem([1.0, 1.0], [[1.0, 1.0]], [3.0], [0.0, 0.0], [1.0, 1.0])
    out = lp_solve(p)
    assert isinstance(out, LpInfeasible)
    assert np.all(out.farkas >= 0.0)
    combo = p.G.T @ out.farkas + out.farkas_lower - out.farkas_upper
    assert np.allclose(combo, 0.0)
    assert out.certificate_value(p) > 0.0


@pytest.mark.linsolve
@pytest.mark.parametrize("seed", range(50))
def testRandomLpAgainstReference(seed):
    p = randomLp(seed)
    out = lp_solve(p)
    ref = linprog(p.c, A_ub=-p.G, b_ub=-p.b, bounds=list(zip(p.lower, p.upper)),
                  method="highs")
    assert ref.status == 0
    assert isinstance(out, LpOptimal)
    assert out.objective == pytest.approx(ref.fun, abs=1e-6 * (1 + abs(ref.fun)))
    # optimal vertex: feasible, n independent active constraints, zero duality gap
    assert np.all(p.G @ out.z >= p.b - 1e-7 * (1 + np.abs(p.b)))
    assert np.linalg.matrix_rank(activeNormals(p, out.z)) == p.num_vars
    assert out.dual_objective == pytest.approx(out.objective, abs=1e-6 * (1 + abs(ref.fun)))


@pytest.mark.linsolve
def testWarmStartAfterAddingRow():
    p = randomLp(3)
    first = lp_solve(p)
    # cut off the current optimum along the objective direction
    row = p.c.copy()
    rhs = float(row @ first.z) + 0.5
    q = lp_add_rows(p, row, rhs)
    warm = lp_solve(q, start=first.basis)
    cold = lp_solve(q)
    assert type(warm) is type(cold)
    if isinstance(cold, LpOptimal):
        assert warm.objective == pytest.approx(cold.objective, abs=1e-7)


@pytest.mark.linsolve
def testWarmStartAfterBoundChange():
    p = randomLp(11)
    first = lp_solve(p)
    j = int(np.argmax(np.abs(first.z)))
    upper = p.upper.copy()
    lower = p.lower.copy()
    if first.z[j] > 0:
        upper[j] = np.floor(first.z[j] - 0.5)
    else:
        lower[j] = np.ceil(first.z[j] + 0.5)
    q = lp_change_bounds(p, lower, upper)
    warm = lp_solve(q, start=first.basis)
    cold = lp_solve(q)
    assert type(warm) is type(cold)
    if isinstance(cold, LpOptimal):
        assert warm.objective == pytest.approx(cold.objective, abs=1e-7)


@pytest.mark.linsolve
def testDimensionChecks():
    p = randomLp(0)
    with pytest.raises(ValueError):
        lp_add_rows(p, [1.0, 2.0], 0.0)
    with pytest.raises(ValueError):
        LpProblem([1.0], [[1.0]], [0.0], [0.0], [np.inf])
    with pytest.raises(ValueError):
        LpProblem([1.0], [[1.0]], [0.0], [1.0], [0.0])
