"""Shipped benchmark problems with declared, probe-verifiable structure.

Each problem packages a vector objective on one of the supported manifolds
together with the structural flags the theory checks rely on: convexity or
a quasi-convexity ball, a ball on which the Kurdyka-Lojasiewicz-style lower
bound holds (with the constant when it is known in closed form), a gradient
Lipschitz constant, a sampled Pareto reference set for the merit oracle, and
canonical start points.  The flags are declarations; the suite re-verifies
every one of them with the harness probes before trusting it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ContractViolation
from .harness import MeritOracle
from .manifolds import Euclidean, Hyperboloid, Manifold, ManifoldPoint, Sphere, SPDMatrices
from .objectives import VectorObjective


@dataclass(frozen=True)
class Ball:
    center: ManifoldPoint
    radius: float


@dataclass(frozen=True)
class KLBall:
    center: ManifoldPoint
    radius: float
    known_alpha: Optional[float] = None


@dataclass
class ProblemSpec:
    """A benchmark problem plus its declared structure."""

    id: str
    description: str
    manifold: Manifold
    objective: VectorObjective
    start: ManifoldPoint
    convex: bool = False
    coercive: bool = True
    quasi_convex_ball: Optional[Ball] = None
    kl_ball: Optional[KLBall] = None
    rate_start: Optional[ManifoldPoint] = None
    gradient_lipschitz: Optional[float] = None
    critical_tol: float = 1e-8
    reference_lipschitz: float = 1.0
    reference_exact: bool = False
    reference_count: int = 2001
    _reference_builder: Optional[Callable[[int], list]] = None

    def reference_points(self, count: Optional[int] = None) -> list:
        count = self.reference_count if count is None else count
        return self._reference_builder(count)

    def reference_resolution(self, count: Optional[int] = None) -> float:
        """Covering radius of the sampled reference set within the true set."""
        count = self.reference_count if count is None else count
        pts = self._reference_builder(count)
        if len(pts) < 2:
            return 0.0
        gaps = [self.manifold.dist(a, b) for a, b in zip(pts, pts[1:])]
        return max(gaps)

    def merit_oracle(self, count: Optional[int] = None) -> MeritOracle:
        pts = self.reference_points(count)
        return MeritOracle(
            self.objective,
            pts,
            resolution=self.reference_resolution(count) if len(pts) > 1 else 0.0,
            lipschitz=self.reference_lipschitz,
            exact=self.reference_exact,
        )


def _distance_pair(manifold, a1, a2, name, lipschitz):
    def make(anchor):
        return (
            lambda p: 0.5 * manifold.dist(p, anchor) ** 2,
            lambda p: manifold.tangent(p, -manifold.log(p, anchor).coords),
        )

    return VectorObjective(
        manifold, (make(a1), make(a2)), name=name, gradient_lipschitz=lipschitz
    )


def _segment_sample(manifold, a1, a2, count):
    w = manifold.log(a1, a2)
    return [manifold.exp(a1, w, s) for s in np.linspace(0.0, 1.0, count)]


def scalar_quadratic() -> ProblemSpec:
    """P0: half the squared norm on the line; every constant is closed form."""
    m = Euclidean(1)
    F = VectorObjective(
        m,
        ((lambda p: 0.5 * float(p.coords @ p.coords), lambda p: m.tangent(p, p.coords)),),
        name="P0",
        gradient_lipschitz=1.0,
    )
    origin = m.point([0.0])
    return ProblemSpec(
        id="P0",
        description="scalar quadratic on the line",
        manifold=m,
        objective=F,
        start=m.point([1.0]),
        convex=True,
        quasi_convex_ball=Ball(origin, 8.0),
        kl_ball=KLBall(origin, 1.0, known_alpha=2.0),
        rate_start=m.point([1.0]),
        gradient_lipschitz=1.0,
        reference_lipschitz=1.0,
        reference_exact=True,
        reference_count=1,
        _reference_builder=lambda count: [m.point([0.0])],
    )


def euclidean_bi_quadratic() -> ProblemSpec:
    """P1: 0.5||x||^2 and 0.5||x - 2e1||^2 on the plane.

    The efficient set is the segment [0, 2e1]; inside the strip 0 <= x1 <= 2
    the direction norm is |x2| and the merit value is x2^2/2, so the
    KL-style constant on the declared ball is exactly 2.
    """
    m = Euclidean(2)
    a = np.array([2.0, 0.0])
    F = VectorObjective(
        m,
        (
            (lambda p: 0.5 * float(p.coords @ p.coords), lambda p: m.tangent(p, p.coords)),
            (
                lambda p: 0.5 * float((p.coords - a) @ (p.coords - a)),
                lambda p: m.tangent(p, p.coords - a),
            ),
        ),
        name="P1",
        gradient_lipschitz=1.0,
    )
    return ProblemSpec(
        id="P1",
        description="convex bi-quadratic on the plane",
        manifold=m,
        objective=F,
        start=m.point([-0.8, 1.2]),
        convex=True,
        quasi_convex_ball=Ball(m.point([1.0, 0.0]), 8.0),
        kl_ball=KLBall(m.point([1.0, 0.0]), 0.9, known_alpha=2.0),
        rate_start=m.point([1.0, 0.5]),
        gradient_lipschitz=1.0,
        reference_lipschitz=2.0,
        _reference_builder=lambda count: [
            m.point([s, 0.0]) for s in np.linspace(0.0, 2.0, count)
        ],
    )


def sphere_linear_pair() -> ProblemSpec:
    """P2: negative inner products with two axes on the 2-sphere; the
    efficient set is the quarter arc between them, and both components are
    quasi-convex on the declared ball around its midpoint."""
    s = Sphere(2)
    a1, a2 = np.eye(3)[0], np.eye(3)[1]

    def make(anchor):
        return (
            lambda p: -float(anchor @ p.coords),
            lambda p: s.tangent(p, float(anchor @ p.coords) * p.coords - anchor),
        )

    F = VectorObjective(s, (make(a1), make(a2)), name="P2", gradient_lipschitz=1.0)
    mid = s.point(np.array([1.0, 1.0, 0.0]) / math.sqrt(2.0))
    start = s.exp(mid, s.tangent(mid, [0.0, 0.0, 1.0]), 0.3)
    arc_from = s.point(a1)
    arc_to = s.point(a2)
    return ProblemSpec(
        id="P2",
        description="linear pair on the sphere",
        manifold=s,
        objective=F,
        start=start,
        convex=False,
        quasi_convex_ball=Ball(mid, 0.45),
        gradient_lipschitz=1.0,
        critical_tol=1e-7,
        reference_lipschitz=1.0,
        _reference_builder=lambda count: _segment_sample(s, arc_from, arc_to, count),
    )


def hyperboloid_distance_pair() -> ProblemSpec:
    """P3: half squared distances to two anchors on the curvature -1
    hyperboloid; geodesically convex with the connecting segment as the
    efficient set."""
    h = Hyperboloid(2)
    o = h.point([1.0, 0.0, 0.0])
    a1 = h.exp(o, h.tangent(o, [0.0, 1.0, 0.0]), 0.4)
    a2 = h.exp(o, h.tangent(o, [0.0, -1.0, 0.0]), 0.4)
    F = _distance_pair(h, a1, a2, "P3", lipschitz=4.0)
    return ProblemSpec(
        id="P3",
        description="distance pair on the hyperboloid",
        manifold=h,
        objective=F,
        start=h.exp(o, h.tangent(o, [0.0, 0.0, 1.0]), 0.45),
        convex=True,
        quasi_convex_ball=Ball(o, 0.5),
        gradient_lipschitz=4.0,
        critical_tol=1e-7,
        reference_lipschitz=1.0,
        _reference_builder=lambda count: _segment_sample(h, a1, a2, count),
    )


def spd_distance_pair() -> ProblemSpec:
    """P4: half squared affine-invariant distances to two SPD anchors; a
    Hadamard problem whose efficient set is the connecting geodesic."""
    m = SPDMatrices(2)
    a1 = m.point(np.eye(2))
    a2 = m.point(np.diag([2.0, 0.5]))
    F = _distance_pair(m, a1, a2, "P4", lipschitz=4.0)
    mid = m.exp(a1, m.log(a1, a2), 0.5)
    return ProblemSpec(
        id="P4",
        description="distance pair on SPD(2)",
        manifold=m,
        objective=F,
        start=m.point([[1.5, 0.3], [0.3, 1.0]]),
        convex=True,
        quasi_convex_ball=Ball(mid, 0.7),
        gradient_lipschitz=4.0,
        critical_tol=1e-7,
        reference_lipschitz=1.0,
        _reference_builder=lambda count: _segment_sample(m, a1, a2, count),
    )


def nonconvex_kl_pair() -> ProblemSpec:
    """P5: quadratic bowls with cosine ripples, one rippling per coordinate.

    Neither component is quasi-convex at large scale (their sublevel sets
    dent where the ripple curvature dominates), yet both are strictly
    convex near the origin, the unique Pareto optimum.  Because both
    components are minimal at the origin, the merit supremum is attained
    there, so the single-point reference set is exact.
    """
    m = Euclidean(2)
    eps, omega = 0.5, 3.0

    def make(axis):
        def value(p):
            # 2 sin^2(wx/2) == 1 - cos(wx) without the cancellation that
            # would drown line-search comparisons near the optimum
            return 0.5 * float(p.coords @ p.coords) + 2.0 * eps * (
                math.sin(0.5 * omega * p.coords[axis]) ** 2
            )

        def grad(p):
            g = np.array(p.coords, dtype=float)
            g[axis] += eps * omega * math.sin(omega * p.coords[axis])
            return m.tangent(p, g)

        return value, grad

    F = VectorObjective(
        m, (make(0), make(1)), name="P5", gradient_lipschitz=1.0 + eps * omega**2
    )
    origin = m.point([0.0, 0.0])
    return ProblemSpec(
        id="P5",
        description="non-quasi-convex rippled pair with an isolated optimum",
        manifold=m,
        objective=F,
        start=m.point([0.25, 0.2]),
        convex=False,
        kl_ball=KLBall(origin, 0.4, known_alpha=None),
        rate_start=m.point([0.25, 0.2]),
        gradient_lipschitz=1.0 + eps * omega**2,
        reference_lipschitz=1.0,
        reference_exact=True,
        reference_count=1,
        _reference_builder=lambda count: [m.point([0.0, 0.0])],
    )


_BUILDERS = {
    "P0": scalar_quadratic,
    "P1": euclidean_bi_quadratic,
    "P2": sphere_linear_pair,
    "P3": hyperboloid_distance_pair,
    "P4": spd_distance_pair,
    "P5": nonconvex_kl_pair,
}


def shipped_problems() -> list:
    """All benchmark problems, in suite order."""
    return [build() for build in _BUILDERS.values()]


def get_problem(problem_id: str) -> ProblemSpec:
    try:
        return _BUILDERS[problem_id]()
    except KeyError:
        raise ContractViolation(
            f"unknown problem {problem_id!r}; shipped: {sorted(_BUILDERS)}"
        ) from None
