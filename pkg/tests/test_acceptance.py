"""Acceptance suite: one test per release criterion, at pinned tolerances.

Each test prints a single ``ACCEPTANCE <id>: PASS`` line when its criterion
holds (pytest -s shows them live; they also appear in captured output).
Tolerances are fixed here and nowhere else.
"""

import math
import time

import numpy as np
import pytest

from modesc.cli import EXIT_OK, _monte_carlo_distance_inequality, suite
from modesc.directions import alpha, brute_force_alpha_star, solve_exact, solve_sigma_approx
from modesc.engine import RunConfig, StepSizeRule, Termination, run
from modesc.harness import (
    FAIL,
    PASS,
    check_armijo_lower_bound,
    check_linear_rate,
    check_phi_descent,
    check_quasi_fejer,
    check_summability,
    estimate_kl,
    hbar,
    rate_constants,
)
from modesc.manifolds import Euclidean
from modesc.problems import get_problem

from conftest import all_manifolds, random_point
from oracles import integrate_geodesic

SEED = 20240817


def random_instances(count=200, seed=SEED):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(2, 5))
        dim = int(rng.integers(2, 7))
        m = Euclidean(dim)
        p = m.point(np.zeros(dim))
        grads = [m.tangent(p, g) for g in rng.standard_normal((n, dim))]
        yield m, p, grads


@pytest.fixture(scope="module")
def suite_outcome(tmp_path_factory):
    out = tmp_path_factory.mktemp("suite_a")
    start = time.monotonic()
    code, aggregate = suite(seed=0, out_dir=out)
    elapsed = time.monotonic() - start
    return code, aggregate, elapsed, out


def test_criterion_01_direction_solver_oracle_equivalence():
    start = time.monotonic()
    for m, p, grads in random_instances():
        res = solve_exact(p, grads)
        est = brute_force_alpha_star(grads, 1000)
        assert abs(res.alpha_value - est) <= 2e-4
        assert abs(alpha(p, grads, res.v) + 0.5 * m.inner(res.v, res.v)) <= 1e-8
    elapsed = time.monotonic() - start
    assert elapsed < 5.0, f"oracle equivalence took {elapsed:.2f}s"
    print("\nACCEPTANCE 1 direction-solver oracle equivalence: PASS")


def test_criterion_02_sigma_approximation_contract():
    for sigma in (0.25, 0.5):
        certified = 0
        for m, p, grads in random_instances(seed=SEED + 1):
            res = solve_sigma_approx(p, grads, sigma)
            if not res.sigma_certified:
                # only critical hulls may fail to certify
                assert m.norm(solve_exact(p, grads).v) <= 1e-10
                continue
            certified += 1
            vv = m.inner(res.v, res.v)
            assert res.alpha_value <= (1.0 - sigma) * (-0.5 * vv)
            exact_norm = m.norm(solve_exact(p, grads).v)
            assert m.norm(res.v) >= (1.0 - math.sqrt(sigma)) * exact_norm - 1e-8
        assert certified >= 180
    print("\nACCEPTANCE 2 sigma-approximation contract: PASS")


def test_criterion_03_algorithm_invariants_on_every_suite_run(suite_outcome):
    _, aggregate, _, _ = suite_outcome
    expected_runs = 6 * 3 * 2  # problems x direction modes x step rules
    for name in ("monotone", "step_bound", "movement", "sufficient_decrease"):
        reports = [r for reps in aggregate.values() for r in reps if r.check == name]
        assert len(reports) == expected_runs
        assert all(r.status == PASS for r in reports), name
    print("\nACCEPTANCE 3 algorithm invariants on every suite run: PASS")


def test_criterion_04_phi_descent_and_summability():
    for pid in ("P1", "P2", "P3", "P4"):
        problem = get_problem(pid)
        oracle = problem.merit_oracle()
        cfg = RunConfig(record_phi=True, max_iter=500, tol_critical=problem.critical_tol)
        trace = run(problem.objective, problem.start, StepSizeRule.armijo(), cfg, phi=oracle.phi)
        assert check_phi_descent(trace, oracle).status == PASS, pid
        assert check_summability(trace, oracle).status == PASS, pid
    print("\nACCEPTANCE 4 merit descent and summability on P1-P4: PASS")


def test_criterion_05_armijo_lower_bound_on_p1():
    problem = get_problem("P1")
    cfg = RunConfig(nu=0.5, beta=0.5, max_iter=500)
    trace = run(problem.objective, problem.start, StepSizeRule.armijo(), cfg)
    assert trace.steps
    assert all(r.t >= 0.125 - 1e-12 for r in trace.steps)
    report = check_armijo_lower_bound(trace, L=1.0)
    assert report.status == PASS
    assert report.constants["bound"] == pytest.approx(0.125)
    print("\nACCEPTANCE 5 Armijo lower bound (min{nu, nu(1-beta)/2L} = 1/8): PASS")


def test_criterion_06_linear_rate():
    # closed-form constant on the scalar quadratic
    p0 = get_problem("P0")
    oracle0 = p0.merit_oracle()
    cfg = RunConfig(record_phi=True, max_iter=200, tol_critical=1e-8)
    trace0 = run(p0.objective, p0.rate_start, StepSizeRule.armijo(), cfg, phi=oracle0.phi)
    assert trace0.termination is Termination.CRITICAL_REACHED
    assert trace0.final.norm_v <= 1e-8
    report0 = check_linear_rate(trace0, alpha=2.0, oracle=oracle0)
    assert report0.status == PASS
    rho, mu = rate_constants(2.0, min(r.t for r in trace0.steps), 0.0, cfg.beta, cfg.R)
    assert report0.constants["rho"] == pytest.approx(rho)
    assert rho == pytest.approx(math.sqrt(1.0 - 2.0 * 0.5 * 1.0 / 2.0))

    # sampled constant on the rippled pair
    p5 = get_problem("P5")
    oracle5 = p5.merit_oracle()
    est = estimate_kl(
        p5.objective, oracle5, p5.kl_ball.center, p5.kl_ball.radius, sample_count=400, seed=3
    )
    assert est.status == "ok" and est.alpha_hat > 0
    trace5 = run(p5.objective, p5.rate_start, StepSizeRule.armijo(), cfg, phi=oracle5.phi)
    assert trace5.termination is Termination.CRITICAL_REACHED
    assert trace5.iterations <= 200
    assert trace5.final.norm_v <= 1e-8
    report5 = check_linear_rate(trace5, alpha=est.alpha_hat, oracle=oracle5)
    assert report5.status == PASS
    print("\nACCEPTANCE 6 linear rate on the scalar quadratic and P5: PASS")


def test_criterion_07_curvature_distance_inequality():
    assert hbar(1.0) == pytest.approx(math.tanh(1.0))
    assert 2.0 * hbar(1.0) == pytest.approx(2.0 * math.tanh(1.0))
    assert hbar(1.0) > 0.75
    problem = get_problem("P3")
    report = _monte_carlo_distance_inequality(problem, samples=1000, seed=SEED)
    assert report.status == PASS
    assert report.constants["samples"] == 1000
    assert report.worst_margin > -1e-10
    print("\nACCEPTANCE 7 curvature distance inequality (1000 tuples on P3): PASS")


def test_criterion_08_quasi_fejer_on_p1_p3():
    for pid in ("P1", "P3"):
        problem = get_problem(pid)
        oracle = problem.merit_oracle()
        cfg = RunConfig(max_iter=500, tol_critical=problem.critical_tol)
        trace = run(problem.objective, problem.start, StepSizeRule.armijo(), cfg)
        targets = list(oracle.reference_points[::20]) + [trace.final.point]
        report = check_quasi_fejer(trace, targets)
        assert report.status == PASS, pid
        assert report.constants["targets"] >= 1
    print("\nACCEPTANCE 8 quasi-Fejer distance recursion on P1 and P3: PASS")


def test_criterion_09_geometry_kernels():
    start = time.monotonic()
    rng = np.random.default_rng(SEED)
    for manifold in all_manifolds():
        for _ in range(6):
            p = random_point(manifold, rng)
            q = random_point(manifold, rng)
            if manifold.dist(p, q) >= manifold.convexity_radius:
                continue
            v = manifold.log(p, q)
            assert np.max(np.abs(manifold.exp(p, v, 1.0).coords - q.coords)) < 1e-8
            u = manifold.random_tangent(p, rng)
            w = manifold.random_tangent(p, rng)
            pu = manifold.parallel_transport(p, q, u)
            pw = manifold.parallel_transport(p, q, w)
            assert abs(manifold.inner(u, w) - manifold.inner(pu, pw)) <= 1e-10
        for _ in range(3):
            p = random_point(manifold, rng)
            v = manifold.random_tangent(p, rng)
            t = 0.9 / max(manifold.norm(v), 1.0)
            closed = manifold.exp(p, v, t)
            assert np.max(np.abs(closed.coords - integrate_geodesic(manifold, p, v, t))) < 1e-6
            speed = manifold.norm(v)
            tt = 0.8 * min(manifold.convexity_radius, 2.0) / speed
            assert abs(manifold.dist(manifold.exp(p, v, tt), p) - tt * speed) < 1e-8
    elapsed = time.monotonic() - start
    assert elapsed < 10.0, f"geometry kernels took {elapsed:.2f}s"
    print("\nACCEPTANCE 9 geometry kernels on all four manifolds: PASS")


def test_criterion_10_end_to_end_suite(suite_outcome, tmp_path):
    code, aggregate, elapsed, out = suite_outcome
    assert code == EXIT_OK
    failures = [r for reps in aggregate.values() for r in reps if r.status == FAIL]
    assert failures == []
    assert elapsed < 60.0, f"suite took {elapsed:.2f}s"
    # determinism: a second run with the same seed reproduces every artifact
    code2, _ = suite(seed=0, out_dir=tmp_path)
    assert code2 == EXIT_OK
    for csv_a in sorted(out.glob("*.csv")):
        assert (tmp_path / csv_a.name).read_bytes() == csv_a.read_bytes()
    assert (tmp_path / "suite_report.json").read_bytes() == (out / "suite_report.json").read_bytes()
    print("\nACCEPTANCE 10 end-to-end suite (deterministic, <60s, zero FAIL): PASS")
