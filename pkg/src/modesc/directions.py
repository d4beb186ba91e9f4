"""Steepest-descent direction subproblem on the tangent space.

At a point p with component gradients g_1..g_n the descent model is

    alpha_p(v) = max_i <g_i, v> + 0.5 ||v||^2,

whose unique minimiser is v(p) = -(minimum-norm point of conv{g_i}), with
optimal value alpha_p* = -0.5 ||v(p)||^2.  The dual problem -- minimise the
quadratic form lambda^T G lambda over the probability simplex, G the Gram
matrix of the gradients under the manifold metric -- is solved here:

* exactly, by Wolfe's minimum-norm-point algorithm (finite, machine-precision
  duality gaps at these sizes), and
* approximately, by Frank-Wolfe iterations that stop as soon as a
  sigma-relaxation certificate holds.  Frank-Wolfe iterates are convex
  combinations throughout, so every returned direction is s-compatible
  (the negated convex combination of the gradients given by ``weights``).

For any convex weights lambda, -0.5 ||sum lambda_i g_i||^2 is a weak-duality
lower bound on alpha_p*, which makes the certificate

    alpha_p(v) <= (1 - sigma) * (-0.5 ||v||^2)

sufficient for v to be a sigma-approximate direction without knowing
alpha_p* itself.

``brute_force_alpha_star`` is the independent test oracle: direct evaluation
of the dual objective over simplex grids, with no shared machinery with the
solvers above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractViolation, EvaluationError, UnsupportedProblem
from .manifolds import ManifoldPoint, TangentVector

ACTIVE_SET_TOL = 1e-10


@dataclass
class DirectionResult:
    """Solution of the direction subproblem at one point.

    ``v = -sum_i weights[i] * g_i`` holds by construction, ``alpha_value``
    is alpha_p(v), and ``alpha_star_lower = -0.5||v||^2`` is the weak-duality
    lower bound on the optimal value, so

        alpha_star_lower <= alpha_p* <= alpha_value.

    ``sigma_certified`` records the literal float inequality
    ``alpha_value <= (1 - sigma) * alpha_star_lower``.
    """

    v: TangentVector
    weights: np.ndarray
    alpha_value: float
    alpha_star_lower: float
    sigma_certified: bool
    active_set: tuple
    sigma: float = 0.0

    @property
    def norm_v(self) -> float:
        return self.v.base.manifold.norm(self.v)


def alpha(p: ManifoldPoint, gradients: Sequence[TangentVector], v: TangentVector) -> float:
    """Evaluate the descent model max_i <g_i, v> + 0.5 ||v||^2 at v."""
    m = p.manifold
    if not gradients:
        raise ContractViolation("at least one gradient required")
    best = max(m.inner(g, v) for g in gradients)
    return best + 0.5 * m.inner(v, v)


def _gram(p: ManifoldPoint, gradients: Sequence[TangentVector]) -> np.ndarray:
    m = p.manifold
    n = len(gradients)
    G = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            G[i, j] = G[j, i] = m.inner(gradients[i], gradients[j])
    if not np.all(np.isfinite(G)):
        raise EvaluationError("non-finite gradient inner products")
    return G


def _combine(p: ManifoldPoint, gradients: Sequence[TangentVector], weights: np.ndarray) -> TangentVector:
    c = -sum(w * g.coords for w, g in zip(weights, gradients))
    return p.manifold.tangent(p, c)


def _finalize(
    p: ManifoldPoint,
    gradients: Sequence[TangentVector],
    weights: np.ndarray,
    sigma: float,
) -> DirectionResult:
    m = p.manifold
    weights = np.clip(weights, 0.0, None)
    weights = weights / weights.sum()
    v = _combine(p, gradients, weights)
    products = np.array([m.inner(g, v) for g in gradients])
    vv = m.inner(v, v)
    alpha_value = float(products.max() + 0.5 * vv)
    alpha_star_lower = float(-0.5 * vv)
    certified = alpha_value <= (1.0 - sigma) * alpha_star_lower
    active = tuple(np.flatnonzero(products >= products.max() - ACTIVE_SET_TOL))
    return DirectionResult(
        v=v,
        weights=weights,
        alpha_value=alpha_value,
        alpha_star_lower=alpha_star_lower,
        sigma_certified=bool(certified),
        active_set=active,
        sigma=sigma,
    )


def _affine_min_norm(G_S: np.ndarray) -> np.ndarray:
    """Weights (summing to 1, sign-free) of the min-norm point in the affine
    hull of the support; least squares handles rank-deficient Grams."""
    k = G_S.shape[0]
    kkt = np.zeros((k + 1, k + 1))
    kkt[:k, :k] = G_S
    kkt[:k, k] = 1.0
    kkt[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
    w = sol[:k]
    s = w.sum()
    if abs(s) > 1e-12:
        w = w / s
    return w


def _wolfe_min_norm_weights(G: np.ndarray, tol: float) -> np.ndarray:
    """Wolfe's minimum-norm-point algorithm over the simplex, Gram-only.

    Returns convex weights lambda with duality gap
    lambda^T G lambda - min_i (G lambda)_i <= tol * max(1, lambda^T G lambda).
    """
    n = G.shape[0]
    support = [int(np.argmin(np.diag(G)))]
    lam_s = np.array([1.0])

    for _ in range(32 * n + 64):
        q = G[:, support] @ lam_s
        xx = float(lam_s @ q[support])
        gap_tol = tol * max(1.0, xx)
        j = int(np.argmin(q))
        if q[j] >= xx - gap_tol:
            break
        if j in support:
            break  # numerically optimal; adding j cannot improve
        support.append(j)
        lam_s = np.append(lam_s, 0.0)

        # minor cycles: move to the affine minimiser, trimming the support
        for _ in range(32 * n + 64):
            w = _affine_min_norm(G[np.ix_(support, support)])
            if np.all(w > -1e-14):
                lam_s = np.clip(w, 0.0, None)
                break
            neg = w < -1e-14
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = lam_s[neg] / (lam_s[neg] - w[neg])
            theta = float(np.min(ratios))
            theta = min(max(theta, 0.0), 1.0)
            lam_s = (1.0 - theta) * lam_s + theta * w
            lam_s[lam_s < 1e-15] = 0.0
            keep = [k for k in range(len(support)) if lam_s[k] > 0.0]
            if not keep:  # all mass vanished numerically; keep the best vertex
                keep = [int(np.argmin(np.diag(G[np.ix_(support, support)])))]
                lam_s[keep[0]] = 1.0
            support = [support[k] for k in keep]
            lam_s = lam_s[keep]
        s = lam_s.sum()
        lam_s = lam_s / s if s > 0 else np.full(len(support), 1.0 / len(support))

    lam = np.zeros(n)
    lam[support] = lam_s
    return lam


def solve_exact(
    p: ManifoldPoint,
    gradients: Sequence[TangentVector],
    tol: float = 1e-12,
) -> DirectionResult:
    """Exact steepest-descent direction: the negated minimum-norm point of
    the convex hull of the gradients, with simplex weights as certificate."""
    if not tol > 0:
        raise ContractViolation("tol must be positive")
    n = len(gradients)
    if n == 0:
        raise ContractViolation("at least one gradient required")
    G = _gram(p, gradients)
    if np.all(np.diag(G) <= 1e-300):
        return _finalize(p, gradients, np.full(n, 1.0 / n), sigma=0.0)
    lam = _wolfe_min_norm_weights(G, tol)
    return _finalize(p, gradients, lam, sigma=0.0)


def solve_sigma_approx(
    p: ManifoldPoint,
    gradients: Sequence[TangentVector],
    sigma: float,
    max_inner_iters: int = 100,
) -> DirectionResult:
    """s-compatible direction certified to lie in the sigma-relaxed descent set.

    Runs Frank-Wolfe on the dual and stops at the first iterate whose
    certificate holds; if the budget runs out (or sigma = 0, where only the
    exact minimiser can certify), falls back to :func:`solve_exact`.
    """
    if not (0.0 <= sigma < 1.0):
        raise ContractViolation("sigma must lie in [0, 1)")
    n = len(gradients)
    if n == 0:
        raise ContractViolation("at least one gradient required")
    G = _gram(p, gradients)
    if np.all(np.diag(G) <= 1e-300):
        return _finalize(p, gradients, np.full(n, 1.0 / n), sigma=sigma)

    if sigma > 0.0:
        lam = np.zeros(n)
        lam[int(np.argmin(np.diag(G)))] = 1.0
        for _ in range(max_inner_iters):
            q = G @ lam
            xx = float(lam @ q)
            alpha_gram = -float(q.min()) + 0.5 * xx
            if alpha_gram <= (1.0 - sigma) * (-0.5 * xx):
                result = _finalize(p, gradients, lam, sigma=sigma)
                if result.sigma_certified:
                    return result
            j = int(np.argmin(q))
            dGd = float(G[j, j] - 2.0 * q[j] + xx)
            if dGd <= 0.0:
                gamma = 1.0
            else:
                gamma = min(max((xx - float(q[j])) / dGd, 0.0), 1.0)
            if gamma == 0.0:
                break
            lam = (1.0 - gamma) * lam
            lam[j] += gamma

    exact = solve_exact(p, gradients)
    return _finalize(p, gradients, exact.weights, sigma=sigma)


def _quadratic_values(G: np.ndarray, lams: np.ndarray) -> np.ndarray:
    return np.einsum("pi,ij,pj->p", lams, G, lams)


def _row_quadratic_min(A, B, C, hi):
    """Vectorised min of A*j^2 + B*j + C over integers j in [0, hi].

    A convex 1-D quadratic restricted to an integer interval attains its
    minimum at the clamped floor/ceil of the vertex or at the endpoints, so
    checking those candidates gives the exact grid minimum of each row.
    """
    A = np.broadcast_to(np.asarray(A, dtype=float), np.shape(B))
    with np.errstate(divide="ignore", invalid="ignore"):
        vertex = np.where(A > 0.0, -B / (2.0 * np.where(A > 0.0, A, 1.0)), 0.0)
    cands = np.stack(
        [
            np.clip(np.floor(vertex), 0.0, hi),
            np.clip(np.ceil(vertex), 0.0, hi),
            np.zeros_like(vertex),
            np.asarray(hi, dtype=float) * np.ones_like(vertex),
        ]
    )
    vals = A * cands**2 + B * cands + C
    return vals.min(axis=0)


def _grid_min_two(G: np.ndarray, steps: int) -> float:
    """Exact min of ||lam*g0 + (1-lam)*g1||^2 over the 1/steps grid."""
    # in integer counts j of g0: Q(j) = A j^2 + B j + C, scaled by steps^2
    A = G[0, 0] - 2.0 * G[0, 1] + G[1, 1]
    B = 2.0 * steps * (G[0, 1] - G[1, 1])
    C = steps**2 * G[1, 1]
    return float(_row_quadratic_min(A, np.array([B]), np.array([C]), steps)[0]) / steps**2


def _grid_min_three(G: np.ndarray, steps: int) -> float:
    """Exact min of the Gram quadratic over the full 3-way simplex grid.

    For each count i of g0 the objective is quadratic in the count j of g1,
    so every row reduces to a handful of candidate evaluations.
    """
    i = np.arange(steps + 1, dtype=float)
    rest = steps - i
    A = G[1, 1] - 2.0 * G[1, 2] + G[2, 2]
    B = 2.0 * (i * (G[0, 1] - G[0, 2]) + rest * (G[1, 2] - G[2, 2]))
    C = i**2 * G[0, 0] + 2.0 * i * rest * G[0, 2] + rest**2 * G[2, 2]
    return float(_row_quadratic_min(A, B, C, rest).min()) / steps**2


def _box_simplex_grid(center: np.ndarray, half: float, divisions: int) -> np.ndarray:
    """4-component simplex points whose first three coordinates lie on a
    lattice inside the box [center +- half], filtered to the simplex."""
    axes = []
    for c in center[:3]:
        lo, hi = max(0.0, c - half), min(1.0, c + half)
        axes.append(np.linspace(lo, hi, divisions + 1))
    a, b, c3 = np.meshgrid(*axes, indexing="ij")
    lam123 = np.stack([a.ravel(), b.ravel(), c3.ravel()], axis=1)
    last = 1.0 - lam123.sum(axis=1)
    keep = last >= -1e-12
    lam = np.concatenate([lam123[keep], np.clip(last[keep], 0.0, None)[:, None]], axis=1)
    return lam


def brute_force_alpha_star(gradients: Sequence[TangentVector], grid_steps: int) -> float:
    """Grid-search oracle for the optimal value of the direction subproblem.

    Evaluates -0.5 * ||sum lambda_i g_i||^2 over simplex grids and returns the
    best value found.  For n <= 3 the full grid at the requested resolution is
    used; for n = 4 nested grids are refined around the incumbent until the
    lattice spacing drops below 1/grid_steps (a full four-way grid at that
    resolution would be ~1e8 points).  The objective is convex, so the
    refined value converges to the true optimum as the grid does.
    """
    n = len(gradients)
    if n == 0:
        raise ContractViolation("at least one gradient required")
    if n > 4:
        raise UnsupportedProblem("brute-force oracle supports n <= 4")
    if grid_steps < 100:
        raise ContractViolation("grid_steps must be >= 100")
    p = gradients[0].base
    G = _gram(p, gradients)
    if n == 1:
        return float(-0.5 * G[0, 0])

    if n == 2:
        return -0.5 * _grid_min_two(G, grid_steps)
    if n == 3:
        return -0.5 * _grid_min_three(G, grid_steps)

    # n == 4: coarse full grid, then shrinking boxes around the incumbent
    coarse = 60
    i, j = np.meshgrid(np.arange(coarse + 1), np.arange(coarse + 1), indexing="ij")
    best_val = math.inf
    best_lam = None
    for k in range(coarse + 1):
        mask = i + j <= coarse - k
        ii, jj = i[mask], j[mask]
        lam = np.stack([ii, jj, np.full_like(ii, k), coarse - k - ii - jj], axis=1) / coarse
        vals = _quadratic_values(G, lam)
        t = int(np.argmin(vals))
        if vals[t] < best_val:
            best_val = float(vals[t])
            best_lam = lam[t]
    spacing = 1.0 / coarse
    while spacing > 1.0 / grid_steps:
        divisions = 24
        half = 2.5 * spacing
        lam = _box_simplex_grid(best_lam, half, divisions)
        vals = _quadratic_values(G, lam)
        t = int(np.argmin(vals))
        if vals[t] < best_val:
            best_val = float(vals[t])
            best_lam = lam[t]
        spacing = 2.0 * half / divisions
    return float(-0.5 * best_val)
