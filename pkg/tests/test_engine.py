"""Descent engine tests: line search values, run termination, trace
invariants, step-rule contract enforcement."""

import numpy as np
import pytest

from modesc.engine import (
    RunConfig,
    StepSizeRule,
    Termination,
    armijo_step,
    run,
    sufficient_decrease,
)
from modesc.errors import ContractViolation, LineSearchError
from modesc.manifolds import Euclidean, Hyperboloid
from modesc.objectives import VectorObjective, leq


def scalar_quadratic():
    m = Euclidean(1)
    F = VectorObjective(
        m,
        ((lambda p: 0.5 * float(p.coords @ p.coords), lambda p: m.tangent(p, p.coords)),),
        name="scalar-quadratic",
        gradient_lipschitz=1.0,
    )
    return m, F


def hyperboloid_pair(gap=0.8):
    h = Hyperboloid(2)
    o = h.point([1.0, 0.0, 0.0])
    u = h.tangent(o, [0.0, 1.0, 0.0])
    a1 = h.exp(o, u, gap / 2)
    a2 = h.exp(o, h.tangent(o, [0.0, -1.0, 0.0]), gap / 2)

    def make(anchor):
        return (
            lambda p: 0.5 * h.dist(p, anchor) ** 2,
            lambda p: h.tangent(p, -h.log(p, anchor).coords),
        )

    F = VectorObjective(h, (make(a1), make(a2)), name="hyperboloid-pair", gradient_lipschitz=4.0)
    return h, F, a1, a2


class TestSufficientDecrease:
    def test_accepts_unit_step_at_half_beta(self):
        m, F = scalar_quadratic()
        p = m.point([1.0])
        v = m.tangent(p, [-1.0])
        assert sufficient_decrease(F, p, v, 1.0, 0.5)

    def test_rejects_overlong_step(self):
        m, F = scalar_quadratic()
        p = m.point([1.0])
        v = m.tangent(p, [-1.0])
        assert not sufficient_decrease(F, p, v, 1.5, 0.5)

    def test_zero_direction_is_equality(self):
        m, F = scalar_quadratic()
        p = m.point([0.7])
        assert sufficient_decrease(F, p, m.zero_tangent(p), 2.0, 0.5)

    def test_requires_positive_t(self):
        m, F = scalar_quadratic()
        p = m.point([1.0])
        with pytest.raises(ContractViolation):
            sufficient_decrease(F, p, m.tangent(p, [-1.0]), 0.0, 0.5)


class TestArmijoStep:
    def test_full_step_accepted(self):
        m, F = scalar_quadratic()
        p = m.point([1.0])
        v = m.tangent(p, [-1.0])
        assert armijo_step(F, p, v, nu=0.5, beta=0.5, R=1.0) == 1.0

    def test_backtracks_to_eighth(self):
        # beta = 0.9 admits t <= 0.2 only; the ladder lands on 1/8
        m, F = scalar_quadratic()
        p = m.point([1.0])
        v = m.tangent(p, [-1.0])
        assert armijo_step(F, p, v, nu=0.5, beta=0.9, R=1.0) == 0.125

    def test_flat_curvature_takes_first_candidate(self):
        m = Euclidean(1)
        F = VectorObjective(
            m,
            ((lambda p: 1e-3 * 0.5 * float(p.coords @ p.coords), lambda p: m.tangent(p, 1e-3 * p.coords)),),
        )
        p = m.point([1.0])
        v = m.tangent(p, [-1e-3])
        assert armijo_step(F, p, v, nu=0.5, beta=0.5, R=1.0) == 1.0

    def test_ascent_direction_raises(self):
        m, F = scalar_quadratic()
        p = m.point([1.0])
        v = m.tangent(p, [1.0])  # uphill
        with pytest.raises(LineSearchError):
            armijo_step(F, p, v, nu=0.5, beta=0.5, R=1.0)


class TestRun:
    def test_one_step_convergence(self):
        m, F = scalar_quadratic()
        trace = run(F, m.point([1.0]), StepSizeRule.armijo(), RunConfig())
        assert trace.termination is Termination.CRITICAL_REACHED
        assert trace.iterations == 1
        assert trace.steps[0].t == 1.0
        assert abs(trace.final.point.coords[0]) < 1e-12

    def test_critical_start_has_empty_steps(self):
        m, F = scalar_quadratic()
        trace = run(F, m.point([0.0]), StepSizeRule.armijo(), RunConfig())
        assert trace.termination is Termination.CRITICAL_REACHED
        assert trace.steps == []
        assert trace.iterations == 0

    def test_max_iter_termination(self):
        m, F = scalar_quadratic()
        # beta = 0.9 forces t = 1/8, so iterates contract without hitting 0
        cfg = RunConfig(max_iter=3, tol_critical=1e-300, beta=0.9)
        trace = run(F, m.point([1.0]), StepSizeRule.armijo(), cfg)
        assert trace.termination is Termination.MAX_ITER
        assert trace.iterations == 3

    def test_monotone_and_bounds(self):
        h, F, a1, a2 = hyperboloid_pair()
        p0 = h.exp(a1, h.tangent(a1, [0.0, 0.0, 1.0]), 0.5)
        cfg = RunConfig(max_iter=300)
        trace = run(F, p0, StepSizeRule.armijo(), cfg)
        assert trace.termination is Termination.CRITICAL_REACHED
        for r0, r1 in zip(trace.records, trace.records[1:]):
            assert leq(r1.F, r0.F)
            assert 0.0 < r0.t <= cfg.R
            assert r1.dist_step <= r0.t * r0.norm_v + 1e-8
            # re-check the decrease condition from stored data only
            assert leq(r1.F, r0.F + cfg.beta * r0.t * r0.jacobian)

    def test_hyperboloid_limit_on_segment(self):
        h, F, a1, a2 = hyperboloid_pair()
        p0 = h.exp(a1, h.tangent(a1, [0.0, 0.0, 1.0]), 0.5)
        trace = run(F, p0, StepSizeRule.armijo(), RunConfig(max_iter=300))
        final = trace.final.point
        assert trace.final.norm_v <= 1e-8
        w = h.log(a1, final).coords
        u = h.log(a1, a2).coords
        c = float(np.dot(w, u) / np.dot(u, u))
        assert 0.0 <= c <= 1.0
        assert np.max(np.abs(w - c * u)) < 1e-4

    def test_sigma_mode_stops_on_exact_norm(self):
        h, F, a1, a2 = hyperboloid_pair()
        p0 = h.exp(a1, h.tangent(a1, [0.0, 0.0, 1.0]), 0.5)
        cfg = RunConfig(direction_mode="sigma_approx", sigma=0.5, max_iter=500)
        trace = run(F, p0, StepSizeRule.armijo(), cfg)
        assert trace.termination is Termination.CRITICAL_REACHED
        assert trace.final.norm_v <= cfg.tol_critical

    def test_constant_rule_violation_aborts(self):
        m, F = scalar_quadratic()
        cfg = RunConfig(R=2.0)
        trace = run(F, m.point([1.0]), StepSizeRule.constant(1.9), cfg)
        assert trace.termination is Termination.ERROR
        assert "sufficient-decrease" in trace.message

    def test_custom_rule_out_of_range_aborts(self):
        m, F = scalar_quadratic()
        trace = run(
            F, m.point([1.0]), StepSizeRule.custom(lambda p, v, k: 3.0), RunConfig()
        )
        assert trace.termination is Termination.ERROR
        assert "outside" in trace.message

    def test_custom_rule_valid_steps_accepted(self):
        m, F = scalar_quadratic()
        trace = run(
            F, m.point([1.0]), StepSizeRule.custom(lambda p, v, k: 0.5), RunConfig(max_iter=100)
        )
        assert trace.termination is Termination.CRITICAL_REACHED
        assert all(r.t == 0.5 for r in trace.steps)

    def test_phi_recording(self):
        m, F = scalar_quadratic()
        cfg = RunConfig(record_phi=True)
        trace = run(F, m.point([1.0]), StepSizeRule.armijo(), cfg, phi=lambda p: 0.5 * float(p.coords[0] ** 2))
        assert trace.records[0].phi == pytest.approx(0.5)
        assert trace.final.phi == pytest.approx(0.0, abs=1e-20)


class TestConfigValidation:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"beta": 1.5},
            {"beta": 0.0},
            {"nu": 1.0},
            {"sigma": 1.0},
            {"sigma": -0.1},
            {"R": 0.5},
            {"tol_critical": 0.0},
            {"direction_mode": "other"},
        ],
    )
    def test_bad_ranges_rejected(self, kwargs):
        with pytest.raises(ContractViolation):
            RunConfig(**kwargs)

    def test_constant_rule_requires_positive_step(self):
        with pytest.raises(ContractViolation):
            StepSizeRule.constant(0.0)
