"""Command-line interface: run experiments, the verification suite, and
stand-alone checks over stored traces.

Subcommands
-----------
``solve <config.json>``
    Run one configured experiment; writes trace CSV, summary JSON, check
    report JSON and SVG diagnostics.  Exit codes: 0 all checks pass,
    1 a check failed, 2 config/schema error, 3 run error.
``suite [--filter ID] [--seed N] [--out DIR]``
    Canned matrix over all shipped problems x direction modes x step rules,
    with every declared flag re-verified by a probe first.  Probe failures
    downgrade dependent checks to INCONCLUSIVE.
``check <trace.csv> --checks a,b,c [--summary S] [--problem ID]``
    Re-run value-level checks against a stored trace artifact.
``phi <problem> <point>``
    Evaluate the problem's merit oracle at an explicit point.

The output directory resolves as: ``--out`` flag, else the
``MODESC_OUTPUT_DIR`` environment variable, else the config's
``output_dir``, else ``./modesc_out``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

try:
    import jsonschema
except ImportError:  # pragma: no cover
    jsonschema = None

from . import reporting
from .engine import RunConfig, StepSizeRule, Termination, run
from .errors import ConfigError, ContractViolation, ModescError
from .harness import (
    FAIL,
    INCONCLUSIVE,
    PASS,
    CheckReport,
    MeritOracle,
    check_armijo_lower_bound,
    check_linear_rate,
    check_monotone,
    check_movement,
    check_phi_descent,
    check_qc_distance_inequality,
    check_quasi_fejer,
    check_step_bound,
    check_sublevel_bounded,
    check_sufficient_decrease,
    check_summability,
    estimate_kl,
    probe_gradient_lipschitz,
    probe_quasi_convexity,
    rate_constants,
)
from .problems import ProblemSpec, get_problem, shipped_problems

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_RUN_ERROR = 3

TRACE_CHECKS = (
    "monotone",
    "step_bound",
    "movement",
    "sufficient_decrease",
    "phi_descent",
    "summability",
    "quasi_fejer",
    "armijo_lower_bound",
    "linear_rate",
)
PROBLEM_CHECKS = (
    "quasi_convexity_probe",
    "gradient_lipschitz_probe",
    "kl_estimate",
    "sublevel_bounded",
    "qc_distance_inequality",
)
DEFAULT_CHECKS = (
    "monotone",
    "step_bound",
    "movement",
    "sufficient_decrease",
    "phi_descent",
    "summability",
)

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["problem"],
    "properties": {
        "problem": {"type": "string"},
        "run": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "sigma": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "beta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "nu": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "R": {"type": "number", "minimum": 1},
                "tol_critical": {"type": "number", "exclusiveMinimum": 0},
                "max_iter": {"type": "integer", "minimum": 0},
                "direction_mode": {"type": "string", "enum": ["exact", "sigma_approx"]},
                "record_phi": {"type": "boolean"},
                "reference_set_id": {"type": "string"},
                "seed": {"type": "integer"},
            },
        },
        "step_rule": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"type": "string", "enum": ["armijo", "constant"]},
                "t": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "initial_point": {"type": "array"},
        "initial_sampler": {
            "type": "object",
            "additionalProperties": False,
            "required": ["radius", "count"],
            "properties": {
                "radius": {"type": "number", "exclusiveMinimum": 0},
                "count": {"type": "integer", "minimum": 1},
            },
        },
        "checks": {
            "type": "array",
            "items": {"type": "string", "enum": list(TRACE_CHECKS + PROBLEM_CHECKS)},
        },
        "reference_count": {"type": "integer", "minimum": 1},
        "output_dir": {"type": "string"},
    },
}


def validate_config(cfg: dict) -> None:
    if jsonschema is None:  # pragma: no cover
        raise ConfigError("jsonschema is required to validate configs")
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as err:
        raise ConfigError(f"config schema violation: {err.message}") from None


def _resolve_out_dir(flag_value, cfg) -> Path:
    out = flag_value or os.environ.get("MODESC_OUTPUT_DIR") or (cfg or {}).get("output_dir") or "modesc_out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _constant_step(problem: ProblemSpec, beta: float) -> float:
    # safe constant step for an L-smooth problem stepping along certified
    # directions: t <= (1 - beta)/L keeps the decrease condition satisfiable
    L = problem.gradient_lipschitz
    if L is None:
        raise ConfigError(f"{problem.id} declares no Lipschitz constant for constant steps")
    return (1.0 - beta) / L


def _build_rule(spec: dict, problem: ProblemSpec, beta: float) -> StepSizeRule:
    kind = spec.get("kind", "armijo")
    if kind == "armijo":
        return StepSizeRule.armijo()
    t = spec.get("t")
    if t is None:
        t = _constant_step(problem, beta)
    return StepSizeRule.constant(t)


def _dominating_targets(problem: ProblemSpec, oracle: MeritOracle, trace) -> list:
    # reference points plus the final iterate, which always dominates itself
    targets = list(oracle.reference_points)
    if trace.records:
        targets.append(trace.final.point)
    return targets


def _check_trace(
    name: str,
    trace,
    problem: ProblemSpec,
    oracle: MeritOracle,
    rule_kind: str,
    gates: dict,
    kl_alpha,
) -> CheckReport:
    if name == "monotone":
        return check_monotone(trace)
    if name == "step_bound":
        return check_step_bound(trace)
    if name == "movement":
        return check_movement(trace)
    if name == "sufficient_decrease":
        return check_sufficient_decrease(trace)
    if name == "phi_descent":
        return check_phi_descent(trace, oracle)
    if name == "summability":
        return check_summability(trace, oracle)
    if name == "quasi_fejer":
        if problem.quasi_convex_ball is None:
            return CheckReport(name, INCONCLUSIVE, None, None, {"reason": "no quasi-convexity flag"})
        if not gates.get("quasi_convexity", True):
            return CheckReport(name, INCONCLUSIVE, None, None, {"reason": "quasi-convexity probe failed"})
        return check_quasi_fejer(trace, _dominating_targets(problem, oracle, trace))
    if name == "armijo_lower_bound":
        if rule_kind != "armijo":
            return CheckReport(name, INCONCLUSIVE, None, None, {"reason": "not an Armijo run"})
        if not gates.get("lipschitz", True):
            return CheckReport(name, INCONCLUSIVE, None, None, {"reason": "Lipschitz probe failed"})
        return check_armijo_lower_bound(trace, problem.gradient_lipschitz)
    if name == "linear_rate":
        if problem.kl_ball is None:
            return CheckReport(name, INCONCLUSIVE, None, None, {"reason": "no KL flag"})
        if kl_alpha is None:
            return CheckReport(name, INCONCLUSIVE, None, None, {"reason": "KL estimate unavailable"})
        return check_linear_rate(trace, kl_alpha, oracle)
    raise ConfigError(f"unknown trace check {name!r}")


def _monte_carlo_distance_inequality(
    problem: ProblemSpec, samples: int, seed: int
) -> CheckReport:
    """Batch of admissible (p, q, weights, t) tuples for the curvature
    distance inequality on the problem's quasi-convexity ball."""
    F = problem.objective
    m = problem.manifold
    kappa = m.curvature_lower_bound
    ball = problem.quasi_convex_ball
    if ball is None or not kappa < 0:
        return CheckReport(
            "qc_distance_inequality",
            INCONCLUSIVE,
            None,
            None,
            {"reason": "needs a quasi-convexity ball and negative curvature"},
        )
    rng = np.random.default_rng(seed)
    sk = math.sqrt(-kappa)
    worst, checked, attempts = math.inf, 0, 0
    while checked < samples and attempts < 100 * samples:
        attempts += 1
        p = m.sample_ball(ball.center, ball.radius, rng)
        q = m.sample_ball(ball.center, ball.radius, rng)
        if not np.all(F.evaluate(q) <= F.evaluate(p)):
            continue
        lam = rng.dirichlet(np.ones(F.n))
        v = m.tangent(p, -sum(w * g.coords for w, g in zip(lam, F.gradients(p))))
        nv = m.norm(v)
        t = rng.uniform(0.0, min(1.0, 1.0 / (sk * nv))) if nv > 0 else 0.0
        report = check_qc_distance_inequality(F, kappa, p, v, t, q)
        if report.status == FAIL:
            return CheckReport(
                "qc_distance_inequality", FAIL, report.worst_margin, None, report.constants
            )
        if report.status == PASS and report.worst_margin is not None:
            worst = min(worst, report.worst_margin)
            checked += 1
    constants = {"samples": checked, "kappa": kappa}
    if checked < samples:
        constants["reason"] = "not enough admissible tuples"
        return CheckReport("qc_distance_inequality", INCONCLUSIVE, None, None, constants)
    return CheckReport("qc_distance_inequality", PASS, worst, None, constants)


def _problem_level_check(name: str, problem: ProblemSpec, oracle: MeritOracle, seed: int, mc_samples: int):
    if name == "quasi_convexity_probe":
        if problem.quasi_convex_ball is None:
            return CheckReport(name, INCONCLUSIVE, None, None, {"reason": "no flag"})
        b = problem.quasi_convex_ball
        return probe_quasi_convexity(problem.objective, b.center, b.radius, seed=seed)
    if name == "gradient_lipschitz_probe":
        if problem.gradient_lipschitz is None:
            return CheckReport(name, INCONCLUSIVE, None, None, {"reason": "no constant"})
        region = problem.quasi_convex_ball or problem.kl_ball
        center = region.center if region else problem.start
        radius = region.radius if region else 1.0
        return probe_gradient_lipschitz(
            problem.objective, center, radius, problem.gradient_lipschitz, seed=seed
        )
    if name == "kl_estimate":
        if problem.kl_ball is None:
            return CheckReport(name, INCONCLUSIVE, None, None, {"reason": "no flag"})
        est = estimate_kl(
            problem.objective,
            oracle,
            problem.kl_ball.center,
            problem.kl_ball.radius,
            sample_count=400,
            seed=seed,
        )
        constants = {
            "alpha_hat": est.alpha_hat,
            "samples_used": est.samples_used,
            "known_alpha": problem.kl_ball.known_alpha,
        }
        if est.status != "ok" or est.alpha_hat is None or not est.alpha_hat > 0:
            return CheckReport(name, INCONCLUSIVE, None, None, constants)
        known = problem.kl_ball.known_alpha
        if known is not None and abs(est.alpha_hat - known) > 0.05 * known:
            return CheckReport(name, FAIL, est.alpha_hat - known, None, constants)
        return CheckReport(name, PASS, est.alpha_hat, None, constants)
    if name == "sublevel_bounded":
        return check_sublevel_bounded(
            problem.objective, problem.start, seed=seed, coercive=problem.coercive
        )
    if name == "qc_distance_inequality":
        return _monte_carlo_distance_inequality(problem, mc_samples, seed)
    raise ConfigError(f"unknown problem check {name!r}")


def run_experiment(config: dict, out_dir=None, label: str = "run") -> tuple:
    """Execute one experiment config; returns (exit_code, reports)."""
    validate_config(config)
    try:
        problem = get_problem(config["problem"])
        run_kwargs = dict(config.get("run", {}))
        run_kwargs.setdefault("record_phi", True)
        run_kwargs.setdefault("tol_critical", problem.critical_tol)
        run_cfg = RunConfig(**run_kwargs)
        rule_spec = config.get("step_rule", {"kind": "armijo"})
        rule = _build_rule(rule_spec, problem, run_cfg.beta)
    except (ContractViolation, ConfigError, TypeError) as err:
        raise ConfigError(str(err)) from None

    out = _resolve_out_dir(out_dir, config)
    oracle = problem.merit_oracle(config.get("reference_count"))

    starts = []
    if "initial_point" in config:
        starts.append(problem.manifold.point(np.array(config["initial_point"], dtype=float)))
    elif "initial_sampler" in config:
        rng = np.random.default_rng(run_cfg.seed)
        sampler = config["initial_sampler"]
        for _ in range(sampler["count"]):
            starts.append(
                problem.manifold.sample_ball(problem.start, sampler["radius"], rng)
            )
    else:
        starts.append(problem.start)

    checks = config.get("checks", list(DEFAULT_CHECKS))
    kl_alpha = problem.kl_ball.known_alpha if problem.kl_ball else None
    if any(c == "linear_rate" for c in checks) and problem.kl_ball and kl_alpha is None:
        est = estimate_kl(
            problem.objective,
            oracle,
            problem.kl_ball.center,
            problem.kl_ball.radius,
            sample_count=400,
            seed=run_cfg.seed,
        )
        kl_alpha = est.alpha_hat

    all_reports = []
    exit_code = EXIT_OK
    for idx, p0 in enumerate(starts):
        suffix = f"_{idx}" if len(starts) > 1 else ""
        name = f"{problem.id}_{label}{suffix}"
        try:
            trace = run(problem.objective, p0, rule, run_cfg, phi=oracle.phi)
        except ModescError as err:
            print(f"[{name}] run error: {err}", file=sys.stderr)
            return EXIT_RUN_ERROR, all_reports
        reporting.write_trace_csv(trace, out / f"{name}.csv")
        reporting.write_summary_json(trace, out / f"{name}.summary.json")
        if trace.termination is Termination.ERROR:
            print(f"[{name}] aborted: {trace.message}", file=sys.stderr)
            return EXIT_RUN_ERROR, all_reports

        reports = []
        for check_name in checks:
            if check_name in TRACE_CHECKS:
                reports.append(
                    _check_trace(check_name, trace, problem, oracle, rule_spec.get("kind", "armijo"), {}, kl_alpha)
                )
            else:
                reports.append(
                    _problem_level_check(check_name, problem, oracle, run_cfg.seed, 200)
                )
        rho = mu = None
        if problem.kl_ball and kl_alpha is not None and trace.steps:
            rho, mu = rate_constants(
                kl_alpha, min(r.t for r in trace.steps), run_cfg.sigma, run_cfg.beta, run_cfg.R
            )
        reporting.plot_trace_svg(trace, out / f"{name}.svg", rho=rho, mu=mu)
        reporting.write_report_json(reports, out / f"{name}.report.json")
        all_reports.extend(reports)
        for r in reports:
            print(f"[{name}] {r.check}: {r.status}")
        if any(r.status == FAIL for r in reports):
            exit_code = EXIT_CHECK_FAILED
    return exit_code, all_reports


def suite(filter_id=None, seed: int = 0, out_dir=None, mc_samples: int = 200) -> tuple:
    """Run every shipped problem through exact and relaxed direction modes
    with both step rules, re-verify all declared flags, and aggregate one
    report.  Deterministic for a fixed seed."""
    problems = [p for p in shipped_problems() if filter_id in (None, p.id)]
    if not problems:
        raise ConfigError(f"no problem matches filter {filter_id!r}")
    out = _resolve_out_dir(out_dir, None)
    aggregate = {}
    failures = 0

    for pi, problem in enumerate(problems):
        oracle = problem.merit_oracle()
        base_seed = seed + 1000 * pi
        gates = {}
        reports = []

        probe_qc = _problem_level_check("quasi_convexity_probe", problem, oracle, base_seed + 1, mc_samples)
        probe_lip = _problem_level_check("gradient_lipschitz_probe", problem, oracle, base_seed + 2, mc_samples)
        probe_kl = _problem_level_check("kl_estimate", problem, oracle, base_seed + 3, mc_samples)
        probe_sub = _problem_level_check("sublevel_bounded", problem, oracle, base_seed + 4, mc_samples)
        reports += [probe_qc, probe_lip, probe_kl, probe_sub]
        gates["quasi_convexity"] = probe_qc.status != FAIL
        gates["lipschitz"] = probe_lip.status != FAIL
        kl_alpha = None
        if probe_kl.status == PASS:
            known = problem.kl_ball.known_alpha if problem.kl_ball else None
            kl_alpha = known if known is not None else probe_kl.constants["alpha_hat"]
        if problem.manifold.curvature_lower_bound < 0 and problem.quasi_convex_ball:
            reports.append(
                _monte_carlo_distance_inequality(problem, mc_samples, base_seed + 5)
            )

        for mode_name, sigma in (("exact", 0.0), ("s25", 0.25), ("s50", 0.5)):
            for rule_kind in ("armijo", "constant"):
                cfg = RunConfig(
                    sigma=sigma,
                    direction_mode="exact" if sigma == 0.0 else "sigma_approx",
                    record_phi=True,
                    max_iter=500,
                    tol_critical=problem.critical_tol,
                    seed=base_seed,
                )
                rule = (
                    StepSizeRule.armijo()
                    if rule_kind == "armijo"
                    else StepSizeRule.constant(_constant_step(problem, cfg.beta))
                )
                name = f"{problem.id}_{mode_name}_{rule_kind}"
                trace = run(problem.objective, problem.start, rule, cfg, phi=oracle.phi)
                reporting.write_trace_csv(trace, out / f"{name}.csv")
                reporting.write_summary_json(trace, out / f"{name}.summary.json")
                if trace.termination is Termination.ERROR:
                    reports.append(
                        CheckReport(f"{name}:run", FAIL, None, None, {"message": trace.message})
                    )
                    continue
                run_checks = [
                    "monotone",
                    "step_bound",
                    "movement",
                    "sufficient_decrease",
                    "phi_descent",
                    "summability",
                ]
                if problem.quasi_convex_ball is not None:
                    run_checks.append("quasi_fejer")
                if rule_kind == "armijo" and problem.gradient_lipschitz is not None:
                    run_checks.append("armijo_lower_bound")
                for check_name in run_checks:
                    rep = _check_trace(check_name, trace, problem, oracle, rule_kind, gates, kl_alpha)
                    rep.constants["run"] = name
                    reports.append(rep)

            if problem.kl_ball is not None and problem.rate_start is not None:
                cfg = RunConfig(
                    sigma=sigma,
                    direction_mode="exact" if sigma == 0.0 else "sigma_approx",
                    record_phi=True,
                    max_iter=200,
                    tol_critical=problem.critical_tol,
                    seed=base_seed,
                )
                name = f"{problem.id}_{mode_name}_rate"
                trace = run(problem.objective, problem.rate_start, StepSizeRule.armijo(), cfg, phi=oracle.phi)
                reporting.write_trace_csv(trace, out / f"{name}.csv")
                rep = _check_trace("linear_rate", trace, problem, oracle, "armijo", gates, kl_alpha)
                rep.constants["run"] = name
                reports.append(rep)
                if trace.termination is not Termination.CRITICAL_REACHED:
                    reports.append(
                        CheckReport(f"{name}:converged", FAIL, None, None, {"iterations": trace.iterations})
                    )
                rho, mu = (None, None)
                if kl_alpha is not None and trace.steps:
                    rho, mu = rate_constants(
                        kl_alpha, min(r.t for r in trace.steps), sigma, cfg.beta, cfg.R
                    )
                reporting.plot_trace_svg(trace, out / f"{name}.svg", rho=rho, mu=mu)

        aggregate[problem.id] = reports
        failures += sum(1 for r in reports if r.status == FAIL)

    flat = [r for reports in aggregate.values() for r in reports]
    reporting.write_report_json(flat, out / "suite_report.json")
    for problem_id, reports in aggregate.items():
        for r in reports:
            tag = r.constants.get("run", problem_id)
            print(f"[{tag}] {r.check}: {r.status}")
    return (EXIT_OK if failures == 0 else EXIT_CHECK_FAILED), aggregate


def _cmd_solve(args) -> int:
    try:
        config = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as err:
        print(f"cannot read config: {err}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    try:
        code, _ = run_experiment(config, out_dir=args.out)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    return code


def _cmd_suite(args) -> int:
    start = time.monotonic()
    try:
        code, _ = suite(filter_id=args.filter, seed=args.seed, out_dir=args.out, mc_samples=args.mc_samples)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    print(f"suite finished in {time.monotonic() - start:.1f}s")
    return code


def _cmd_check(args) -> int:
    summary_path = args.summary or str(Path(args.trace).with_suffix("")) + ".summary.json"
    config = RunConfig()
    problem_id = args.problem
    if Path(summary_path).exists():
        summary = reporting.read_summary_json(summary_path)
        config = reporting.config_from_summary(summary)
    trace = reporting.read_trace_csv(args.trace, config=config)
    names = [c.strip() for c in args.checks.split(",") if c.strip()]
    oracle = None
    if problem_id:
        oracle = get_problem(problem_id).merit_oracle()
    reports = []
    for name in names:
        if name == "monotone":
            reports.append(check_monotone(trace))
        elif name == "step_bound":
            reports.append(check_step_bound(trace))
        elif name == "movement":
            reports.append(check_movement(trace))
        elif name == "phi_descent":
            if oracle is None:
                print("phi_descent needs --problem to size the oracle slack", file=sys.stderr)
                return EXIT_CONFIG_ERROR
            try:
                reports.append(check_phi_descent(trace, oracle))
            except ContractViolation as err:
                print(f"phi_descent: {err}", file=sys.stderr)
                return EXIT_CONFIG_ERROR
        elif name == "summability":
            if oracle is None:
                print("summability needs --problem to size the oracle slack", file=sys.stderr)
                return EXIT_CONFIG_ERROR
            try:
                reports.append(check_summability(trace, oracle))
            except ContractViolation as err:
                print(f"summability: {err}", file=sys.stderr)
                return EXIT_CONFIG_ERROR
        else:
            print(f"check {name!r} is not available on CSV traces", file=sys.stderr)
            return EXIT_CONFIG_ERROR
    for r in reports:
        print(f"{r.check}: {r.status}")
    return EXIT_CHECK_FAILED if any(r.status == FAIL for r in reports) else EXIT_OK


def _cmd_phi(args) -> int:
    try:
        problem = get_problem(args.problem)
        point = problem.manifold.point(np.array(json.loads(args.point), dtype=float))
    except (ContractViolation, json.JSONDecodeError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    oracle = problem.merit_oracle(args.reference_count)
    print(repr(oracle.phi(point)))
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="modesc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run one experiment config")
    p_solve.add_argument("config")
    p_solve.add_argument("--out", default=None)
    p_solve.set_defaults(func=_cmd_solve)

    p_suite = sub.add_parser("suite", help="run the full verification suite")
    p_suite.add_argument("--filter", default=None, help="restrict to one problem id")
    p_suite.add_argument("--seed", type=int, default=0)
    p_suite.add_argument("--out", default=None)
    p_suite.add_argument("--mc-samples", type=int, default=200)
    p_suite.set_defaults(func=_cmd_suite)

    p_check = sub.add_parser("check", help="re-run checks on a stored trace CSV")
    p_check.add_argument("trace")
    p_check.add_argument("--checks", required=True, help="comma-separated check names")
    p_check.add_argument("--summary", default=None)
    p_check.add_argument("--problem", default=None)
    p_check.set_defaults(func=_cmd_check)

    p_phi = sub.add_parser("phi", help="evaluate a problem's merit oracle at a point")
    p_phi.add_argument("problem")
    p_phi.add_argument("point", help="JSON point coordinates")
    p_phi.add_argument("--reference-count", type=int, default=None)
    p_phi.set_defaults(func=_cmd_phi)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
