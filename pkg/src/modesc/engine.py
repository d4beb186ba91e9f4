"""Multiobjective descent loop with pluggable, contract-checked step rules.

Each iteration solves the direction subproblem at the current point, walks
the geodesic ``exp(p_k, v_k, t_k)`` and demands componentwise sufficient
decrease

    F(exp(p_k, v_k, t_k)) <= F(p_k) + beta * t_k * JF(p_k)(v_k)

from whatever rule produced ``t_k``.  Armijo backtracking starts the
candidate ladder at 1 and multiplies by ``nu`` until the condition holds;
constant and user-supplied rules are validated against the same condition
and the range ``(0, R]``, and a violation aborts the run with an ``error``
trace rather than stepping.

The stopping test always uses the exact direction norm, even when stepping
along sigma-approximate directions: the approximate norm is only bounded
below relative to the exact one, so it cannot decide criticality.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .directions import solve_exact, solve_sigma_approx
from .errors import ContractViolation, LineSearchError, StepRuleViolation
from .manifolds import ManifoldPoint, TangentVector
from .objectives import VectorObjective, leq

MIN_ARMIJO_STEP = 1e-16


@dataclass(frozen=True)
class StepSizeRule:
    """Step-size policy: ``armijo`` backtracking, a ``constant`` step, or a
    ``custom`` callback ``(p, v, k) -> t``.  Constant and custom steps are
    re-validated by the engine at every iteration."""

    kind: str
    t: Optional[float] = None
    callback: Optional[Callable] = None

    @staticmethod
    def armijo() -> "StepSizeRule":
        return StepSizeRule(kind="armijo")

    @staticmethod
    def constant(t: float) -> "StepSizeRule":
        if not t > 0:
            raise ContractViolation("constant step must be positive")
        return StepSizeRule(kind="constant", t=float(t))

    @staticmethod
    def custom(callback: Callable) -> "StepSizeRule":
        return StepSizeRule(kind="custom", callback=callback)


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one descent run.  Ranges are enforced on construction:
    sigma in [0,1), beta and nu in (0,1), R >= 1."""

    sigma: float = 0.0
    beta: float = 0.5
    nu: float = 0.5
    R: float = 1.0
    tol_critical: float = 1e-8
    max_iter: int = 200
    direction_mode: str = "exact"  # "exact" | "sigma_approx"
    record_phi: bool = False
    reference_set_id: str = "default"
    seed: int = 0
    solver_tol: float = 1e-12
    max_inner_iters: int = 100

    def __post_init__(self):
        if not (0.0 <= self.sigma < 1.0):
            raise ContractViolation("sigma must lie in [0, 1)")
        if not (0.0 < self.beta < 1.0):
            raise ContractViolation("beta must lie in (0, 1)")
        if not (0.0 < self.nu < 1.0):
            raise ContractViolation("nu must lie in (0, 1)")
        if not self.R >= 1.0:
            raise ContractViolation("R must be >= 1")
        if not self.tol_critical > 0:
            raise ContractViolation("tol_critical must be positive")
        if self.direction_mode not in ("exact", "sigma_approx"):
            raise ContractViolation(f"unknown direction_mode {self.direction_mode!r}")


class Termination(enum.Enum):
    CRITICAL_REACHED = "critical_reached"
    MAX_ITER = "max_iter"
    ERROR = "error"


@dataclass
class IterateRecord:
    """State at iterate k plus the step taken from it.

    The final record of a trace carries the stopping-test direction and no
    step (``t`` is NaN).  ``dist_step`` is the distance to the previous
    iterate, 0 for k = 0.
    """

    k: int
    point: ManifoldPoint
    F: np.ndarray
    v: TangentVector
    norm_v: float
    t: float
    weights: np.ndarray
    jacobian: np.ndarray  # JF(p_k)(v_k)
    dist_step: float
    phi: Optional[float] = None

    @property
    def has_step(self) -> bool:
        return not math.isnan(self.t)


@dataclass
class Trace:
    """Per-iteration records of a run, consumed by the checks and the CLI.

    ``records`` covers every visited point, terminal state included;
    ``steps`` is the sub-list of records that actually stepped.  A trace
    with a critical initial point has no steps.
    """

    config: RunConfig
    records: list
    termination: Termination
    message: str = ""
    objective: Optional[VectorObjective] = None

    @property
    def steps(self) -> list:
        return [r for r in self.records if r.has_step]

    @property
    def iterations(self) -> int:
        return len(self.steps)

    @property
    def final(self) -> IterateRecord:
        return self.records[-1]


def sufficient_decrease(
    F: VectorObjective,
    p: ManifoldPoint,
    v: TangentVector,
    t: float,
    beta: float,
    f_p: Optional[np.ndarray] = None,
    jac: Optional[np.ndarray] = None,
) -> bool:
    """Componentwise test F(exp(p,v,t)) <= F(p) + beta*t*JF(p)(v).

    Exact floating comparison; pre-computed F(p) and JF(p)(v) may be passed
    to avoid re-evaluation inside line searches.
    """
    if not t > 0:
        raise ContractViolation("t must be positive")
    if f_p is None:
        f_p = F.evaluate(p)
    if jac is None:
        jac = F.jacobian_action(p, v)
    trial = F.evaluate(F.manifold.exp(p, v, t))
    return leq(trial, f_p + beta * t * jac)


def armijo_step(
    F: VectorObjective,
    p: ManifoldPoint,
    v: TangentVector,
    nu: float,
    beta: float,
    R: float,
    f_p: Optional[np.ndarray] = None,
    jac: Optional[np.ndarray] = None,
) -> float:
    """Largest step of the ladder {nu^0, nu^1, ...} within (0, R] passing the
    sufficient-decrease test.  Exhausting the ladder signals a direction or
    gradient bug and raises :class:`LineSearchError`."""
    if f_p is None:
        f_p = F.evaluate(p)
    if jac is None:
        jac = F.jacobian_action(p, v)
    if not np.max(jac) < 0.0:
        raise LineSearchError(
            "not a descent direction: some <grad f_i, v> is non-negative"
        )
    t = 1.0
    while t > R:  # R >= 1 by config contract, but keep the rule total
        t *= nu
    while t > MIN_ARMIJO_STEP:
        if sufficient_decrease(F, p, v, t, beta, f_p=f_p, jac=jac):
            return t
        t *= nu
    raise LineSearchError(
        f"no step above {MIN_ARMIJO_STEP} satisfies the decrease condition"
    )


def _propose_step(rule, F, p, v, k, cfg, f_p, jac) -> float:
    if rule.kind == "armijo":
        return armijo_step(F, p, v, cfg.nu, cfg.beta, cfg.R, f_p=f_p, jac=jac)
    if rule.kind == "constant":
        t = rule.t
    elif rule.kind == "custom":
        t = float(rule.callback(p, v, k))
    else:
        raise ContractViolation(f"unknown step rule {rule.kind!r}")
    if not (0.0 < t <= cfg.R):
        raise StepRuleViolation(f"step {t} outside (0, {cfg.R}] at iteration {k}")
    if not sufficient_decrease(F, p, v, t, cfg.beta, f_p=f_p, jac=jac):
        raise StepRuleViolation(
            f"step {t} fails the sufficient-decrease condition at iteration {k}"
        )
    return t


def run(
    F: VectorObjective,
    p0: ManifoldPoint,
    rule: StepSizeRule,
    config: RunConfig,
    phi: Optional[Callable[[ManifoldPoint], float]] = None,
) -> Trace:
    """Descent iteration: stop at criticality (exact direction norm below
    ``tol_critical``) or after ``max_iter`` steps.

    ``phi`` is an optional merit-value callback recorded per iterate when
    ``config.record_phi`` is set.
    """
    m = F.manifold
    m._check_point(p0)
    records: list[IterateRecord] = []
    p = p0
    prev_dist = 0.0

    for k in range(config.max_iter + 1):
        f_p = F.evaluate(p)
        grads = F.gradients(p)
        exact = solve_exact(p, grads, tol=config.solver_tol)
        norm_exact = m.norm(exact.v)
        phi_val = phi(p) if (phi is not None and config.record_phi) else None

        if norm_exact <= config.tol_critical or k == config.max_iter:
            records.append(
                IterateRecord(
                    k=k,
                    point=p,
                    F=f_p,
                    v=exact.v,
                    norm_v=norm_exact,
                    t=math.nan,
                    weights=exact.weights,
                    jacobian=F.jacobian_action(p, exact.v),
                    dist_step=prev_dist,
                    phi=phi_val,
                )
            )
            status = (
                Termination.CRITICAL_REACHED
                if norm_exact <= config.tol_critical
                else Termination.MAX_ITER
            )
            return Trace(config=config, records=records, termination=status, objective=F)

        if config.direction_mode == "sigma_approx":
            direction = solve_sigma_approx(
                p, grads, config.sigma, max_inner_iters=config.max_inner_iters
            )
        else:
            direction = exact
        v = direction.v
        jac = F.jacobian_action(p, v)

        try:
            t = _propose_step(rule, F, p, v, k, config, f_p, jac)
        except StepRuleViolation as err:
            records.append(
                IterateRecord(
                    k=k,
                    point=p,
                    F=f_p,
                    v=v,
                    norm_v=m.norm(v),
                    t=math.nan,
                    weights=direction.weights,
                    jacobian=jac,
                    dist_step=prev_dist,
                    phi=phi_val,
                )
            )
            return Trace(
                config=config,
                records=records,
                termination=Termination.ERROR,
                message=str(err),
                objective=F,
            )

        q = m.exp(p, v, t)
        records.append(
            IterateRecord(
                k=k,
                point=p,
                F=f_p,
                v=v,
                norm_v=m.norm(v),
                t=t,
                weights=direction.weights,
                jacobian=jac,
                dist_step=prev_dist,
                phi=phi_val,
            )
        )
        prev_dist = m.dist(q, p)
        p = q

    raise AssertionError("unreachable")  # loop always returns
