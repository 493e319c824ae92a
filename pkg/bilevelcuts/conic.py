"""
bilevelcuts : Conic interior-point solver
=========================================

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
    Solve the conic program

        min  c'x   s.t.  A x = b,  G x + s = h,  s in K

    where K is a product of nonnegative orthants and second-order cones,
    together with its dual

        max  -b'y - h'z   s.t.  A'y + G'z + c = 0,  z in K.

    A homogeneous self-dual embedding is followed with Mehrotra
    predictor-corrector steps and Nesterov-Todd scaling, so the same
    iteration ends in an optimal pair or in a certificate of primal or
    dual infeasibility.
"""

from __future__ import annotations

import logging

from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from scipy.linalg import lu_factor, lu_solve

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITERATIONS = 200
REDUCED_TOL = 5e-5
STEP_FACTOR = 0.99
REGULARIZATION = 1e-10
NEIGHBORHOOD = 1e-6
BACKTRACK = 0.8
MIN_STEP = 1e-10
RAY_RATIO = 1e-6


class ConicSolveError(RuntimeError):
    pass


@dataclass(frozen=True)
class ConeBlock:
    kind: str
    size: int

    def __post_init__(self):
        if self.kind not in ("l", "q"):
            raise ValueError("cone kind must be 'l' (nonnegative) or 'q' (second-order)")
        if int(self.size) < 1:
            raise ValueError("cone blocks need size >= 1")
        object.__setattr__(self, "size", int(self.size))


def nonneg(k: int) -> ConeBlock:
    return ConeBlock("l", k)


def soc(k: int) -> ConeBlock:
    return ConeBlock("q", k)


@dataclass(frozen=True, eq=False)
class ConicProblem:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    G: np.ndarray
    h: np.ndarray
    cones: Tuple[ConeBlock, ...]

    def __post_init__(self):
        c = np.array(self.c, dtype=float).ravel()
        n = c.size
        if n < 1:
            raise ValueError("conic problem without variables")
        A = np.array(self.A, dtype=float).reshape(-1, n)
        b = np.array(self.b, dtype=float).ravel()
        G = np.array(self.G, dtype=float).reshape(-1, n)
        h = np.array(self.h, dtype=float).ravel()
        cones = tuple(self.cones)
        if b.size != A.shape[0] or h.size != G.shape[0]:
            raise ValueError("dimension mismatch between rows and right-hand sides")
        if sum(block.size for block in cones) != G.shape[0]:
            raise ValueError("cone block sizes must sum to the number of cone rows")
        for name, arr in (("c", c), ("A", A), ("b", b), ("G", G), ("h", h)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "cones", cones)


@dataclass(frozen=True, eq=False)
class ConicOptimal:
    x: np.ndarray
    s: np.ndarray
    y: np.ndarray
    z: np.ndarray
    pcost: float
    dcost: float
    gap: float
    iterations: int
    reduced_accuracy: bool = False


@dataclass(frozen=True, eq=False)
class ConicPrimalInfeasible:
    """Dual ray: A'y + G'z = 0, z in K, b'y + h'z = -1."""

    y: np.ndarray
    z: np.ndarray
    iterations: int
    reduced_accuracy: bool = False


@dataclass(frozen=True, eq=False)
class ConicDualInfeasible:
    """Primal ray: A x = 0, G x + s = 0, s in K, c'x = -1."""

    x: np.ndarray
    s: np.ndarray
    iterations: int
    reduced_accuracy: bool = False


@dataclass(frozen=True, eq=False)
class ConicNumericalFailure:
    reason: str
    iterations: int


ConicOutcome = Union[ConicOptimal, ConicPrimalInfeasible, ConicDualInfeasible,
                     ConicNumericalFailure]


@dataclass(frozen=True, eq=False)
class ConicDuals:
    equality: np.ndarray
    cone: np.ndarray
    blocks: Tuple[np.ndarray, ...]


class _Cones(object):
    """Vectorized cone algebra over a product of orthant and SOC blocks."""

    def __init__(self, cones: Sequence[ConeBlock]):
        lin: List[int] = []
        self.socs: List[slice] = []
        start = 0
        for block in cones:
            if block.kind == "l" or block.size == 1:
                lin.extend(range(start, start + block.size))
            else:
                self.socs.append(slice(start, start + block.size))
            start += block.size
        self.m = start
        self.lin = np.array(lin, dtype=int)
        self.degree = len(lin) + len(self.socs)

    def identity(self) -> np.ndarray:
        e = np.zeros(self.m)
        e[self.lin] = 1.0
        for sl in self.socs:
            e[sl.start] = 1.0
        return e

    def min_eig(self, v: np.ndarray) -> float:
        vals = [np.inf]
        if self.lin.size:
            vals.append(v[self.lin].min())
        for sl in self.socs:
            vals.append(self.min_eig_block(v[sl]))
        return float(min(vals))

    @staticmethod
    def min_eig_block(v: np.ndarray) -> float:
        return float(v[0] - np.linalg.norm(v[1:]))

    def product(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        out = np.empty(self.m)
        out[self.lin] = u[self.lin] * v[self.lin]
        for sl in self.socs:
            u0, u1 = u[sl.start], u[sl.start + 1:sl.stop]
            v0, v1 = v[sl.start], v[sl.start + 1:sl.stop]
            out[sl.start] = u0 * v0 + u1 @ v1
            out[sl.start + 1:sl.stop] = u0 * v1 + v0 * u1
        return out

    def divide(self, lam: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Solve lam o x = v for x."""
        out = np.empty(self.m)
        out[self.lin] = v[self.lin] / lam[self.lin]
        for sl in self.socs:
            l0, l1 = lam[sl.start], lam[sl.start + 1:sl.stop]
            v0, v1 = v[sl.start], v[sl.start + 1:sl.stop]
            x0 = (l0 * v0 - l1 @ v1) / (l0 * l0 - l1 @ l1)
            out[sl.start] = x0
            out[sl.start + 1:sl.stop] = (v1 - x0 * l1) / l0
        return out

    def step_length(self, v: np.ndarray, dv: np.ndarray) -> float:
        """Largest alpha with v + alpha dv in the cone (v interior)."""
        alpha = np.inf
        if self.lin.size:
            dl = dv[self.lin]
            neg = dl < 0.0
            if np.any(neg):
                alpha = min(alpha, float(np.min(-v[self.lin][neg] / dl[neg])))
        for sl in self.socs:
            alpha = min(alpha, _soc_step(v[sl], dv[sl]))
        return alpha


def _soc_step(x: np.ndarray, d: np.ndarray) -> float:
    a = d[0] * d[0] - d[1:] @ d[1:]
    b = 2.0 * (x[0] * d[0] - x[1:] @ d[1:])
    c = x[0] * x[0] - x[1:] @ x[1:]
    roots = []
    scale = max(abs(a), abs(b), abs(c), 1e-300)
    if abs(a) <= 1e-14 * scale:
        if b < 0.0:
            roots.append(-c / b)
    else:
        disc = b * b - 4.0 * a * c
        if disc >= 0.0:
            sq = np.sqrt(disc)
            q = -0.5 * (b + np.copysign(sq, b))
            for r in (q / a, c / q if q != 0.0 else np.inf):
                if r > 0.0:
                    roots.append(r)
    if d[0] < 0.0:
        roots.append(-x[0] / d[0])
    return float(min(roots)) if roots else np.inf


def _soc_det(v: np.ndarray) -> float:
    nrm = np.linalg.norm(v[1:])
    return float((v[0] - nrm) * (v[0] + nrm))


def _nt_block(s: np.ndarray, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Dense NT scaling of one second-order cone block and its inverse."""
    s_det, z_det = _soc_det(s), _soc_det(z)
    if not (s[0] > 0.0 and z[0] > 0.0 and s_det > 0.0 and z_det > 0.0):
        raise FloatingPointError("iterate left the cone interior")
    s_bar = s / np.sqrt(s_det)
    z_bar = z / np.sqrt(z_det)
    gamma = np.sqrt((1.0 + s_bar @ z_bar) / 2.0)
    w = (s_bar + np.concatenate([[z_bar[0]], -z_bar[1:]])) / (2.0 * gamma)
    eta = (s_det / z_det) ** 0.25
    k = s.size
    w0, w1 = w[0], w[1:]
    Wb = np.empty((k, k))
    Wb[0, 0] = w0
    Wb[0, 1:] = w1
    Wb[1:, 0] = w1
    Wb[1:, 1:] = np.eye(k - 1) + np.outer(w1, w1) / (1.0 + w0)
    Wb_inv = Wb.copy()
    Wb_inv[0, 1:] = -w1
    Wb_inv[1:, 0] = -w1
    return eta * Wb, Wb_inv / eta


class _Scaling(object):
    """
    Nesterov-Todd scaling W with W z = W^-T s = lam.

    Built once from (s, z), then updated from the scaled iterates so that
    lam is the master copy and s, z are recovered as W'lam and W^-1 lam.
    """

    def __init__(self, cones: _Cones, s: np.ndarray, z: np.ndarray):
        self.cones = cones
        lin = cones.lin
        if np.any(s[lin] <= 0.0) or np.any(z[lin] <= 0.0):
            raise FloatingPointError("iterate left the cone interior")
        self.d = np.sqrt(s[lin] / z[lin])
        self.lam = np.empty(cones.m)
        self.lam[lin] = np.sqrt(s[lin] * z[lin])
        self.blocks = []
        for sl in cones.socs:
            W, W_inv = _nt_block(s[sl], z[sl])
            self.blocks.append((sl, W, W_inv))
            self.lam[sl] = W @ z[sl]

    def update(self, s_hat: np.ndarray, z_hat: np.ndarray):
        """Move to the point whose scaled coordinates are (s_hat, z_hat)."""
        lin = self.cones.lin
        lam = np.empty_like(self.lam)
        d = self.d * np.sqrt(s_hat[lin] / z_hat[lin])
        lam[lin] = np.sqrt(s_hat[lin] * z_hat[lin])
        blocks = []
        for sl, W, W_inv in self.blocks:
            W_hat, W_hat_inv = _nt_block(s_hat[sl], z_hat[sl])
            blocks.append((sl, W_hat @ W, W_inv @ W_hat_inv))
            lam[sl] = W_hat @ z_hat[sl]
        self.d, self.blocks, self.lam = d, blocks, lam

    def _map(self, v: np.ndarray, inverse: bool, transpose: bool) -> np.ndarray:
        out = np.empty_like(v)
        lin = self.cones.lin
        out[lin] = v[lin] / self.d if inverse else v[lin] * self.d
        for sl, W, W_inv in self.blocks:
            M = W_inv if inverse else W
            out[sl] = (M.T if transpose else M) @ v[sl]
        return out

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self._map(v, False, False)

    def apply_transpose(self, v: np.ndarray) -> np.ndarray:
        return self._map(v, False, True)

    def apply_inverse(self, v: np.ndarray) -> np.ndarray:
        return self._map(v, True, False)

    def squared(self) -> np.ndarray:
        """W'W, the block diagonal of the reduced KKT system."""
        m = self.cones.m
        H = np.zeros((m, m))
        lin = self.cones.lin
        H[lin, lin] = self.d ** 2
        for sl, W, _ in self.blocks:
            H[sl, sl] = W.T @ W
        return H


class _Kkt(object):
    """Factorization of [[0, A', G'], [A, 0, 0], [G, 0, -H]] with refinement."""

    def __init__(self, p: ConicProblem, H: np.ndarray):
        n, pe, m = p.c.size, p.A.shape[0], p.G.shape[0]
        N = n + pe + m
        K = np.zeros((N, N))
        K[:n, n:n + pe] = p.A.T
        K[:n, n + pe:] = p.G.T
        K[n:n + pe, :n] = p.A
        K[n + pe:, :n] = p.G
        K[n + pe:, n + pe:] = -H
        self.K = K
        reg = np.concatenate([np.full(n, REGULARIZATION), np.full(pe + m, -REGULARIZATION)])
        self.lu = lu_factor(K + np.diag(reg), check_finite=False)
        self.sizes = (n, pe, m)

    def solve(self, rhs: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        sol = lu_solve(self.lu, rhs, check_finite=False)
        for _ in range(3):
            res = rhs - self.K @ sol
            if np.linalg.norm(res, np.inf) <= 1e-14 * (1.0 + np.linalg.norm(rhs, np.inf)):
                break
            sol = sol + lu_solve(self.lu, res, check_finite=False)
        n, pe, _ = self.sizes
        return sol[:n], sol[n:n + pe], sol[n + pe:]


def kkt_residuals(p: ConicProblem, outcome: ConicOptimal) -> dict:
    """Independent recomputation of the optimality measures of an outcome."""
    cones = _Cones(p.cones)
    x, s, y, z = outcome.x, outcome.s, outcome.y, outcome.z
    primal = max(np.linalg.norm(p.A @ x - p.b) if p.b.size else 0.0,
                 np.linalg.norm(p.G @ x + s - p.h)) / max(1.0, np.linalg.norm(p.b),
                                                           np.linalg.norm(p.h))
    dual = np.linalg.norm(p.A.T @ y + p.G.T @ z + p.c) / max(1.0, np.linalg.norm(p.c))
    pcost = float(p.c @ x)
    dcost = float(-(p.b @ y) - p.h @ z)
    gap = float(s @ z)
    return {
        "primal": float(primal),
        "dual": float(dual),
        "gap": gap,
        "relative_gap": abs(pcost - dcost) / max(1.0, abs(pcost)),
        "cone": max(0.0, -cones.min_eig(s), -cones.min_eig(z)) if cones.m else 0.0,
    }


def conic_extract_duals(p: ConicProblem, outcome: ConicOutcome) -> ConicDuals:
    if not isinstance(outcome, ConicOptimal):
        raise ConicSolveError("duals requested from a non-optimal outcome (%s)"
                              % type(outcome).__name__)
    blocks = []
    start = 0
    for block in p.cones:
        blocks.append(outcome.z[start:start + block.size].copy())
        start += block.size
    return ConicDuals(outcome.y.copy(), outcome.z.copy(), tuple(blocks))


def conic_solve(p: ConicProblem, tol: float = DEFAULT_TOL,
                max_iterations: int = DEFAULT_MAX_ITERATIONS) -> ConicOutcome:
    return _HomogeneousSolver(p, tol, max_iterations).solve()


@dataclass(frozen=True, eq=False)
class _Direction:
    dx: np.ndarray
    dy: np.ndarray
    dz: np.ndarray
    ds_scaled: np.ndarray
    dz_scaled: np.ndarray
    dtau: float
    dkappa: float


class _HomogeneousSolver(object):

    def __init__(self, p: ConicProblem, tol: float, max_iterations: int):
        self.p = p
        self.tol = tol
        self.max_iterations = max_iterations
        self.cones = _Cones(p.cones)
        self.norm_c = max(1.0, np.linalg.norm(p.c))
        self.norm_bh = max(1.0, np.linalg.norm(p.b), np.linalg.norm(p.h))

    def _initial_point(self):
        p, cones = self.p, self.cones
        kkt = _Kkt(p, np.eye(cones.m))
        n, pe, m = kkt.sizes
        x, _, zp = kkt.solve(np.concatenate([np.zeros(n), p.b, p.h]))
        s = -zp
        _, y, z = kkt.solve(np.concatenate([-p.c, np.zeros(pe + m)]))
        e = cones.identity()
        for v in (s, z):
            shift = -cones.min_eig(v)
            if cones.m and shift >= -1e-8 * max(1.0, np.linalg.norm(v)):
                v += (1.0 + shift) * e
        return x, y, s, z, 1.0, 1.0

    def _classify(self, x, y, s, z, tau, kappa, tol, iteration, reduced=False):
        p = self.p
        ry = p.A @ x - p.b * tau
        rz = p.G @ x + s - p.h * tau
        rx = p.A.T @ y + p.G.T @ z + p.c * tau
        pres = max(np.linalg.norm(ry), np.linalg.norm(rz)) / (tau * self.norm_bh)
        dres = np.linalg.norm(rx) / (tau * self.norm_c)
        pcost = float(p.c @ x) / tau
        dcost = -float(p.b @ y + p.h @ z) / tau
        gap = float(s @ z) / (tau * tau)
        if pcost < 0.0:
            relgap = gap / -pcost
        elif dcost > 0.0:
            relgap = gap / dcost
        else:
            relgap = np.inf
        if pres <= tol and dres <= tol and (gap <= tol or relgap <= tol):
            return ConicOptimal(x / tau, s / tau, y / tau, z / tau, pcost, dcost, gap,
                                iteration, reduced)

        # tau vanishing against kappa: the iterate follows a certificate ray
        if not reduced and tau <= RAY_RATIO * kappa:
            tol, reduced = max(tol, REDUCED_TOL), True
        hz = float(p.h @ z + p.b @ y)
        if hz < 0.0:
            pinf = np.linalg.norm(p.A.T @ y + p.G.T @ z) / self.norm_c / -hz
            if pinf <= tol:
                return ConicPrimalInfeasible(y / -hz, z / -hz, iteration, reduced)
        cx = float(p.c @ x)
        if cx < 0.0:
            dinf = max(np.linalg.norm(p.A @ x) / max(1.0, np.linalg.norm(p.b)),
                       np.linalg.norm(p.G @ x + s) / max(1.0, np.linalg.norm(p.h))) / -cx
            if dinf <= tol:
                return ConicDualInfeasible(x / -cx, s / -cx, iteration, reduced)
        return None

    def _centrality(self, s_hat, z_hat, tau, kappa) -> float:
        """Smallest complementarity product relative to mu, in scaled space."""
        cones = self.cones
        mu = (s_hat @ z_hat + tau * kappa) / (cones.degree + 1)
        worst = tau * kappa
        if cones.lin.size:
            worst = min(worst, float(np.min(s_hat[cones.lin] * z_hat[cones.lin])))
        for sl in cones.socs:
            worst = min(worst, cones.min_eig_block(s_hat[sl]) * cones.min_eig_block(z_hat[sl]))
        return worst / mu

    def _max_step(self, lam, d: _Direction, tau, kappa) -> float:
        cones = self.cones
        alpha = min(cones.step_length(lam, d.ds_scaled), cones.step_length(lam, d.dz_scaled))
        if d.dtau < 0.0:
            alpha = min(alpha, -tau / d.dtau)
        if d.dkappa < 0.0:
            alpha = min(alpha, -kappa / d.dkappa)
        return alpha

    def _step(self, lam, d: _Direction, tau, kappa) -> float:
        """
        Fraction of the longest step to the boundary, cut back until the new
        point is interior and not much less centred than the current one.
        """
        cones = self.cones
        alpha = min(1.0, STEP_FACTOR * self._max_step(lam, d, tau, kappa))
        if not np.isfinite(alpha):
            return 0.0
        floor = min(NEIGHBORHOOD, 0.5 * self._centrality(lam, lam, tau, kappa))
        while alpha >= MIN_STEP:
            s_hat = lam + alpha * d.ds_scaled
            z_hat = lam + alpha * d.dz_scaled
            t, k = tau + alpha * d.dtau, kappa + alpha * d.dkappa
            if (t > 0.0 and k > 0.0 and cones.min_eig(s_hat) > 0.0
                    and cones.min_eig(z_hat) > 0.0
                    and self._centrality(s_hat, z_hat, t, k) >= floor):
                return alpha
            alpha *= BACKTRACK
        return 0.0

    def solve(self) -> ConicOutcome:
        p, cones, tol = self.p, self.cones, self.tol
        try:
            x, y, s, z, tau, kappa = self._initial_point()
            W = _Scaling(cones, s, z)
        except (FloatingPointError, ValueError, np.linalg.LinAlgError) as e:
            return ConicNumericalFailure("initial point failed: %s" % e, 0)
        e = cones.identity()
        reason = "iteration limit %d reached" % self.max_iterations
        for iteration in range(self.max_iterations + 1):
            lam = W.lam
            s = W.apply_transpose(lam)
            z = W.apply_inverse(lam)
            outcome = self._classify(x, y, s, z, tau, kappa, tol, iteration)
            if outcome is not None:
                logger.debug("conic solve finished after %d iterations: %s", iteration,
                             type(outcome).__name__)
                return outcome
            if iteration == self.max_iterations:
                break
            rx = p.A.T @ y + p.G.T @ z + p.c * tau
            ry = p.A @ x - p.b * tau
            rz = p.G @ x + s - p.h * tau
            rt = kappa + p.c @ x + p.b @ y + p.h @ z
            mu = (lam @ lam + tau * kappa) / (cones.degree + 1)
            try:
                kkt = _Kkt(p, W.squared())
            except (ValueError, np.linalg.LinAlgError) as err:
                reason = "factorization failed: %s" % err
                break
            x1, y1, z1 = kkt.solve(np.concatenate([-p.c, p.b, p.h]))
            denom = kappa - tau * (p.c @ x1 + p.b @ y1 + p.h @ z1)

            def direction(d, target, dk) -> _Direction:
                t_scaled = cones.divide(lam, target)
                x2, y2, z2 = kkt.solve(np.concatenate(
                    [-d * rx, -d * ry, -d * rz - W.apply_transpose(t_scaled)]))
                dtau = (dk + tau * d * rt + tau * (p.c @ x2 + p.b @ y2 + p.h @ z2)) / denom
                dz = z2 + dtau * z1
                dz_scaled = W.apply(dz)
                return _Direction(x2 + dtau * x1, y2 + dtau * y1, dz, t_scaled - dz_scaled,
                                  dz_scaled, dtau, (dk - kappa * dtau) / tau)

            lam_sq = cones.product(lam, lam)
            aff = direction(1.0, -lam_sq, -tau * kappa)
            alpha_aff = min(1.0, self._max_step(lam, aff, tau, kappa))
            sigma = (1.0 - alpha_aff) ** 3
            corr = cones.product(aff.ds_scaled, aff.dz_scaled)
            step = direction(1.0 - sigma, -lam_sq - corr + sigma * mu * e,
                             -tau * kappa - aff.dtau * aff.dkappa + sigma * mu)
            alpha = self._step(lam, step, tau, kappa)
            if alpha < MIN_STEP:
                # pure centring step before giving up
                step = direction(0.0, -lam_sq + mu * e, -tau * kappa + mu)
                alpha = self._step(lam, step, tau, kappa)
            if alpha < MIN_STEP:
                reason = "step length collapsed at iteration %d" % iteration
                break
            try:
                W.update(lam + alpha * step.ds_scaled, lam + alpha * step.dz_scaled)
            except FloatingPointError as err:
                reason = "scaling update failed: %s" % err
                break
            x = x + alpha * step.dx
            y = y + alpha * step.dy
            tau = tau + alpha * step.dtau
            kappa = kappa + alpha * step.dkappa
            logger.debug("ipm it %3d  mu %.3e  tau %.3e  kappa %.3e  step %.3f",
                         iteration, mu, tau, kappa, alpha)

        lam = W.lam
        outcome = self._classify(x, y, W.apply_transpose(lam), W.apply_inverse(lam), tau,
                                 kappa, REDUCED_TOL, self.max_iterations, reduced=True)
        if outcome is not None:
            logger.debug("conic solve returns reduced accuracy result: %s", reason)
            return outcome
        logger.debug("conic solve failed: %s", reason)
        return ConicNumericalFailure(reason, self.max_iterations)
