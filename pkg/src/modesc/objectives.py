"""Vector objectives, their Riemannian gradients and the componentwise order.

A :class:`VectorObjective` bundles ``n`` scalar components, each with an
analytically supplied Riemannian gradient.  Finite differences are reserved
for test oracles; solver correctness never depends on them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ContractViolation, EvaluationError
from .manifolds import Manifold, ManifoldPoint, TangentVector


def leq(x, y) -> bool:
    """Componentwise partial order: every coordinate of x is <= that of y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ContractViolation(f"length mismatch: {x.shape} vs {y.shape}")
    return bool(np.all(x <= y))


def lt(x, y) -> bool:
    """Strict componentwise order: every coordinate of x is < that of y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ContractViolation(f"length mismatch: {x.shape} vs {y.shape}")
    return bool(np.all(x < y))


@dataclass(frozen=True)
class VectorObjective:
    """Vector function F = (f_1, ..., f_n) on a manifold.

    ``components`` holds ``(value, gradient)`` pairs: ``value(p) -> float``
    and ``gradient(p) -> TangentVector`` (the Riemannian gradient at p).
    The objective is immutable and safe to share across threads.
    """

    manifold: Manifold
    components: tuple
    name: str = ""
    gradient_lipschitz: Optional[float] = None

    @property
    def n(self) -> int:
        return len(self.components)

    def evaluate(self, p: ManifoldPoint) -> np.ndarray:
        """Value vector F(p); raises :class:`EvaluationError` on non-finite output."""
        self.manifold._check_point(p)
        out = np.empty(self.n)
        for i, (f, _) in enumerate(self.components):
            out[i] = f(p)
            if not np.isfinite(out[i]):
                raise EvaluationError(
                    f"component {i} of {self.name or 'objective'} returned {out[i]}",
                    component=i,
                )
        return out

    def gradient(self, p: ManifoldPoint, i: int) -> TangentVector:
        """Riemannian gradient of component ``i`` at ``p``."""
        self.manifold._check_point(p)
        g = self.components[i][1](p)
        if not np.all(np.isfinite(g.coords)):
            raise EvaluationError(f"gradient of component {i} is non-finite", component=i)
        return g

    def gradients(self, p: ManifoldPoint) -> list[TangentVector]:
        return [self.gradient(p, i) for i in range(self.n)]

    def jacobian_action(self, p: ManifoldPoint, v: TangentVector) -> np.ndarray:
        """Vector of directional derivatives (<grad f_i(p), v>)_i."""
        m = self.manifold
        return np.array([m.inner(g, v) for g in self.gradients(p)])


def is_pareto_critical(F: VectorObjective, p: ManifoldPoint, tol: float) -> bool:
    """True iff the minimum-norm direction at ``p`` has norm <= tol.

    The zero direction characterises Pareto criticality exactly; ``tol``
    is the numerical surrogate.
    """
    if not tol > 0:
        raise ContractViolation("tol must be positive")
    from .directions import solve_exact

    res = solve_exact(p, F.gradients(p))
    return F.manifold.norm(res.v) <= tol
