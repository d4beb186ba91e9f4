"""Shipped problem tests: declared structure is real (verified here through
oracles independent of the flags), reference sets behave, starts are valid."""

import math

import numpy as np
import pytest

from modesc.directions import solve_exact
from modesc.errors import ContractViolation
from modesc.harness import estimate_kl, probe_gradient_lipschitz, probe_quasi_convexity
from modesc.problems import get_problem, shipped_problems

from oracles import directional_derivative


class TestRegistry:
    def test_all_shipped(self):
        ids = [p.id for p in shipped_problems()]
        assert ids == ["P0", "P1", "P2", "P3", "P4", "P5"]

    def test_unknown_id(self):
        with pytest.raises(ContractViolation):
            get_problem("P99")

    def test_starts_and_references_valid(self):
        for p in shipped_problems():
            p.manifold._check_point(p.start)
            refs = p.reference_points(51)
            assert refs
            for q in refs[:: max(1, len(refs) // 5)]:
                p.manifold._check_point(q)

    def test_gradients_match_quotients_everywhere(self, rng):
        for p in shipped_problems():
            F = p.objective
            for _ in range(100):
                x = p.manifold.sample_ball(p.start, 0.3, rng)
                v = p.manifold.random_tangent(x, rng)
                i = int(rng.integers(0, F.n))
                fd = directional_derivative(F, x, v, i)
                an = F.jacobian_action(x, v)[i]
                assert abs(fd - an) <= 1e-5 * max(1.0, abs(an)), p.id


class TestParetoStructure:
    @pytest.mark.parametrize("pid", ["P1", "P3", "P4"])
    def test_segment_references_are_critical(self, pid):
        # the declared efficient set: the direction norm vanishes along it
        p = get_problem(pid)
        for q in p.reference_points(21):
            res = solve_exact(q, p.objective.gradients(q))
            assert p.manifold.norm(res.v) < 1e-6, pid

    def test_p2_arc_is_critical(self):
        p = get_problem("P2")
        for q in p.reference_points(21):
            res = solve_exact(q, p.objective.gradients(q))
            assert p.manifold.norm(res.v) < 1e-10

    def test_p5_origin_unique_optimum(self):
        p = get_problem("P5")
        m = p.manifold
        origin = m.point([0.0, 0.0])
        res = solve_exact(origin, p.objective.gradients(origin))
        assert m.norm(res.v) == 0.0
        rng = np.random.default_rng(5)
        for _ in range(200):
            x = m.point(rng.uniform(-2.0, 2.0, size=2))
            if np.linalg.norm(x.coords) < 1e-3:
                continue
            res = solve_exact(x, p.objective.gradients(x))
            assert m.norm(res.v) > 1e-8

    def test_p5_not_quasi_convex_at_scale(self):
        # the ripple dents the sublevel sets of the first component: a chord
        # between two same-level boundary points pops above the level at its
        # midpoint, so the component (hence the pair) is not quasi-convex
        p = get_problem("P5")
        m = p.manifold
        f0 = p.objective.components[0][0]
        c = 1.75

        def boundary_y(x):
            return math.sqrt(2.0 * c - x * x - 2.0 * math.sin(1.5 * x) ** 2)

        x1, x2 = math.pi / 3 - 0.25, math.pi / 3 + 0.25
        a = m.point([x1, boundary_y(x1)])
        b = m.point([x2, boundary_y(x2)])
        mid = m.point([(x1 + x2) / 2, (boundary_y(x1) + boundary_y(x2)) / 2])
        assert f0(a) == pytest.approx(c, abs=1e-12)
        assert f0(b) == pytest.approx(c, abs=1e-12)
        assert f0(mid) > max(f0(a), f0(b)) + 0.01

    def test_p1_merit_closed_form_in_strip(self):
        p = get_problem("P1")
        oracle = p.merit_oracle()
        m = p.manifold
        for x1, x2 in ((0.5, 0.3), (1.0, -0.7), (1.9, 0.05)):
            assert oracle.phi(m.point([x1, x2])) == pytest.approx(0.5 * x2 * x2, abs=2e-3)

    def test_weak_pareto_merit_vanishes(self):
        for p in shipped_problems():
            oracle = p.merit_oracle()
            for q in p.reference_points(11):
                assert oracle.phi(q) <= oracle.slack, p.id


class TestDeclaredFlags:
    def test_quasi_convex_flags_probe_clean(self):
        for p in shipped_problems():
            if p.quasi_convex_ball is None:
                continue
            b = p.quasi_convex_ball
            report = probe_quasi_convexity(p.objective, b.center, b.radius, seed=11)
            assert report.status == "PASS", p.id

    def test_lipschitz_flags_probe_clean(self):
        for p in shipped_problems():
            if p.gradient_lipschitz is None:
                continue
            region = p.quasi_convex_ball or p.kl_ball
            center = region.center if region else p.start
            radius = min(region.radius if region else 1.0, 1.5)
            report = probe_gradient_lipschitz(p.objective, center, radius, p.gradient_lipschitz, seed=11)
            assert report.status == "PASS", p.id

    def test_kl_flags_estimate_positive(self):
        for p in shipped_problems():
            if p.kl_ball is None:
                continue
            est = estimate_kl(
                p.objective, p.merit_oracle(), p.kl_ball.center, p.kl_ball.radius, 300, seed=2
            )
            assert est.status == "ok", p.id
            assert est.alpha_hat > 0.0
            if p.kl_ball.known_alpha is not None:
                assert est.alpha_hat == pytest.approx(p.kl_ball.known_alpha, rel=0.05)

    def test_p0_p1_kl_constants_exact(self):
        for pid in ("P0", "P1"):
            p = get_problem(pid)
            est = estimate_kl(
                p.objective, p.merit_oracle(), p.kl_ball.center, p.kl_ball.radius, 200, seed=4
            )
            assert est.alpha_hat == pytest.approx(2.0, abs=5e-3), pid
