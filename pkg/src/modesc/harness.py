"""Executable checks for the convergence theory behind the descent engine.

Every proved inequality the package relies on is re-verified numerically on
recorded traces: merit-function descent and summability, the
Kurdyka-Lojasiewicz-style lower bound and the linear rate it implies, the
Armijo step lower bound, quasi-Fejer distance recursions and the
curvature-corrected distance inequality on negatively curved models.

The merit function

    phi(p) = sup_q min_i (f_i(p) - f_i(q))

is relaxed to a finite reference set (``MeritOracle``).  The finite max
under-approximates the sup by at most ``resolution * lipschitz``, so every
check carries that oracle slack plus a 1e-8 absolute floor.  All PASS/FAIL
decisions are pure functions of (trace, oracle, constants) and re-run
byte-identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .directions import solve_exact
from .engine import Trace
from .errors import ContractViolation
from .manifolds import ManifoldPoint, TangentVector
from .objectives import VectorObjective, leq

ABS_SLACK = 1e-8

PASS = "PASS"
FAIL = "FAIL"
INCONCLUSIVE = "INCONCLUSIVE"
SKIPPED = "SKIPPED"


@dataclass
class CheckReport:
    """Outcome of one verification check."""

    check: str
    status: str
    worst_margin: Optional[float] = None
    k_at_worst: Optional[int] = None
    constants: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "status": self.status,
            "worst_margin": None if self.worst_margin is None else float(self.worst_margin),
            "k_at_worst": self.k_at_worst,
            "constants": {k: _jsonable(v) for k, v in self.constants.items()},
        }


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


def hbar(s: float) -> float:
    """tanh(s)/s, extended by its limit 1 at s = 0; decreasing on [0, inf)."""
    if s < 0:
        raise ContractViolation("hbar is defined for s >= 0")
    if s < 1e-8:
        return 1.0 - s * s / 3.0
    return math.tanh(s) / s


class MeritOracle:
    """Finite-reference relaxation of the merit gap function.

    ``phi(p) = max over the reference set of min_i (f_i(p) - f_i(q))`` is a
    lower bound on the true supremum; it is exact when the supremum is
    attained on the set (``exact=True``) and otherwise under-approximates by
    at most ``resolution * lipschitz``.  Reference values are cached at
    construction, so one phi evaluation costs n component evaluations plus a
    vectorised max-min.
    """

    def __init__(
        self,
        objective: VectorObjective,
        reference_points: Sequence[ManifoldPoint],
        resolution: float = 0.0,
        lipschitz: float = 0.0,
        exact: bool = False,
    ):
        if not reference_points:
            raise ContractViolation("reference set must be nonempty")
        self.objective = objective
        self.reference_points = list(reference_points)
        self.resolution = float(resolution)
        self.lipschitz = float(lipschitz)
        self.exact = bool(exact)
        self._ref_values = np.array([objective.evaluate(q) for q in self.reference_points])

    @property
    def slack(self) -> float:
        if self.exact:
            return ABS_SLACK
        return self.resolution * self.lipschitz + ABS_SLACK

    def phi(self, p: ManifoldPoint) -> float:
        """Max-min over the reference set; may go (slightly) negative only if
        the reference set fails to cover a dominating region."""
        vals = self.objective.evaluate(p)
        return float(np.max(np.min(vals[None, :] - self._ref_values, axis=1)))


def phi_values(trace: Trace, oracle: Optional[MeritOracle]) -> np.ndarray:
    """Recorded phi values of a trace, recomputed through the oracle where
    the run did not record them."""
    out = np.empty(len(trace.records))
    for i, r in enumerate(trace.records):
        if r.phi is not None:
            out[i] = r.phi
        elif oracle is not None and r.point is not None:
            out[i] = oracle.phi(r.point)
        else:
            raise ContractViolation(
                "trace carries no merit values and cannot recompute them "
                "(no oracle, or a value-only trace loaded from CSV)"
            )
    return out


# ---------------------------------------------------------------------------
# trace bookkeeping checks
# ---------------------------------------------------------------------------


def check_monotone(trace: Trace) -> CheckReport:
    """Componentwise non-increase of the objective along the trace."""
    worst, k_at = math.inf, None
    for r0, r1 in zip(trace.records, trace.records[1:]):
        margin = float(np.min(r0.F - r1.F))
        if margin < worst:
            worst, k_at = margin, r0.k
    if k_at is None:
        return CheckReport("monotone", PASS, None, None, {"pairs": 0})
    return CheckReport("monotone", PASS if worst >= 0.0 else FAIL, worst, k_at)


def check_step_bound(trace: Trace) -> CheckReport:
    """Every accepted step lies in (0, R]."""
    R = trace.config.R
    worst, k_at = math.inf, None
    for r in trace.steps:
        margin = min(r.t, R - r.t)
        if margin < worst:
            worst, k_at = margin, r.k
    if k_at is None:
        return CheckReport("step_bound", PASS, None, None, {"steps": 0})
    return CheckReport("step_bound", PASS if worst >= 0.0 else FAIL, worst, k_at, {"R": R})


def check_movement(trace: Trace) -> CheckReport:
    """Iterate displacement bounded by step length: d(p_{k+1}, p_k) <= t_k ||v_k||."""
    worst, k_at = math.inf, None
    for r0, r1 in zip(trace.records, trace.records[1:]):
        margin = r0.t * r0.norm_v + ABS_SLACK - r1.dist_step
        if margin < worst:
            worst, k_at = margin, r0.k
    if k_at is None:
        return CheckReport("movement", PASS, None, None, {"pairs": 0})
    return CheckReport("movement", PASS if worst >= 0.0 else FAIL, worst, k_at)


def check_sufficient_decrease(trace: Trace) -> CheckReport:
    """Re-verify the acceptance inequality of every stored step from the
    recorded objective values and Jacobian actions alone."""
    beta = trace.config.beta
    worst, k_at = math.inf, None
    for r0, r1 in zip(trace.records, trace.records[1:]):
        margin = float(np.min(r0.F + beta * r0.t * r0.jacobian - r1.F))
        if margin < worst:
            worst, k_at = margin, r0.k
    if k_at is None:
        return CheckReport("sufficient_decrease", PASS, None, None, {"pairs": 0})
    return CheckReport(
        "sufficient_decrease", PASS if worst >= 0.0 else FAIL, worst, k_at, {"beta": beta}
    )


# ---------------------------------------------------------------------------
# merit-function checks
# ---------------------------------------------------------------------------


def check_phi_descent(trace: Trace, oracle: MeritOracle) -> CheckReport:
    """Per-step merit decrease:  (beta t_k / 2)||v_k||^2 <= phi_k - phi_{k+1},
    plus the order-monotonicity side check phi_{k+1} <= phi_k + slack."""
    beta = trace.config.beta
    phis = phi_values(trace, oracle)
    slack = oracle.slack
    worst, k_at = math.inf, None
    for i, r in enumerate(trace.records[:-1]):
        descent_margin = (phis[i] - phis[i + 1]) - 0.5 * beta * r.t * r.norm_v**2
        monotone_margin = phis[i] - phis[i + 1]
        margin = min(descent_margin, monotone_margin)
        if margin < worst:
            worst, k_at = margin, r.k
    if k_at is None:
        return CheckReport("phi_descent", PASS, None, None, {"steps": 0})
    return CheckReport(
        "phi_descent",
        PASS if worst >= -slack else FAIL,
        worst,
        k_at,
        {"beta": beta, "slack": slack},
    )


def check_summability(trace: Trace, oracle: MeritOracle) -> CheckReport:
    """Weighted square-summability certificate:
    sum t_k^2 ||v_k||^2 <= (2R/beta) * phi(p_0), up to oracle slack."""
    cfg = trace.config
    phis = phi_values(trace, oracle)
    total = sum(r.t**2 * r.norm_v**2 for r in trace.steps)
    budget = (2.0 * cfg.R / cfg.beta) * phis[0]
    slack = (2.0 * cfg.R / cfg.beta) * oracle.slack + ABS_SLACK
    margin = budget + slack - total
    return CheckReport(
        "summability",
        PASS if margin >= 0.0 else FAIL,
        margin,
        None,
        {"total": total, "budget": budget, "slack": slack},
    )


# ---------------------------------------------------------------------------
# Kurdyka-Lojasiewicz estimation and the linear rate
# ---------------------------------------------------------------------------


@dataclass
class KLEstimate:
    """Sampled lower-bound constant for ||v(p)||^2 >= alpha * phi(p) on a ball."""

    alpha_hat: Optional[float]
    center: ManifoldPoint
    radius: float
    samples_used: int
    excluded: int
    status: str  # "ok" | "inconclusive"


def estimate_kl(
    F: VectorObjective,
    oracle: MeritOracle,
    center: ManifoldPoint,
    radius: float,
    sample_count: int = 500,
    seed: int = 0,
) -> KLEstimate:
    """Estimate the KL-style constant as the minimum of ||v(p)||^2 / phi(p)
    over ball samples, excluding near-Pareto points where the ratio is 0/0."""
    m = F.manifold
    if not radius < m.convexity_radius:
        raise ContractViolation("radius must stay below the convexity radius")
    rng = np.random.default_rng(seed)
    cutoff = 10.0 * oracle.slack
    ratios = []
    excluded = 0
    for _ in range(sample_count):
        p = m.sample_ball(center, radius, rng)
        ph = oracle.phi(p)
        if ph <= cutoff:
            excluded += 1
            continue
        v = solve_exact(p, F.gradients(p)).v
        ratios.append(m.inner(v, v) / ph)
    if not ratios:
        return KLEstimate(None, center, radius, 0, excluded, "inconclusive")
    return KLEstimate(float(min(ratios)), center, radius, len(ratios), excluded, "ok")


def rate_constants(alpha: float, t_lower: float, sigma: float, beta: float, R: float):
    """Theoretical contraction factor and distance constant of the linear rate.

    Returns (rho, mu) with rho = sqrt(1 - alpha*beta*t_lower*(1-sqrt(sigma))^2/2)
    and mu = 2R/((1-rho)^2 beta); rho must land in (0, 1) to be usable.
    """
    x = 0.5 * alpha * beta * t_lower * (1.0 - math.sqrt(sigma)) ** 2
    if not 0.0 < x < 1.0:
        return None, None
    rho = math.sqrt(1.0 - x)
    mu = 2.0 * R / ((1.0 - rho) ** 2 * beta)
    return rho, mu


def check_linear_rate(
    trace: Trace,
    alpha: float,
    oracle: MeritOracle,
    t_lower: Optional[float] = None,
    sigma: Optional[float] = None,
    beta: Optional[float] = None,
    R: Optional[float] = None,
) -> CheckReport:
    """Verify the geometric decay chain implied by the KL-style bound:

    per-step contraction  phi_{k+1} <= rho^2 phi_k,
    the distance bound    d^2(p_k, p*) <= mu * phi_k,
    geometric decay       phi_k <= rho^{2k} phi_0,
    and their composition d^2(p_k, p*) <= mu * rho^{2k} * phi_0,

    each up to oracle slack, with p* the final iterate."""
    cfg = trace.config
    sigma = cfg.sigma if sigma is None else sigma
    beta = cfg.beta if beta is None else beta
    R = cfg.R if R is None else R
    steps = trace.steps
    if t_lower is None:
        if not steps:
            return CheckReport("linear_rate", INCONCLUSIVE, None, None, {"reason": "no steps"})
        t_lower = min(r.t for r in steps)
    rho, mu = rate_constants(alpha, t_lower, sigma, beta, R)
    constants = {"alpha": alpha, "t_lower": t_lower, "sigma": sigma, "beta": beta, "R": R}
    if rho is None:
        constants["reason"] = "contraction factor outside (0, 1)"
        return CheckReport("linear_rate", INCONCLUSIVE, None, None, constants)
    constants.update({"rho": rho, "mu": mu})

    m = trace.records[0].point.manifold
    phis = phi_values(trace, oracle)
    p_star = trace.final.point
    delta = oracle.slack
    worst, k_at = math.inf, None

    def note(margin, k):
        nonlocal worst, k_at
        if margin < worst:
            worst, k_at = margin, k

    for i, r in enumerate(trace.records):
        d2 = m.dist(r.point, p_star) ** 2
        note(mu * phis[i] + mu * delta + ABS_SLACK - d2, r.k)
        note(rho ** (2 * i) * phis[0] + delta + ABS_SLACK - phis[i], r.k)
        note(mu * rho ** (2 * i) * phis[0] + mu * delta + ABS_SLACK - d2, r.k)
        if i + 1 < len(trace.records):
            note(rho**2 * phis[i] + delta + ABS_SLACK - phis[i + 1], r.k)

    return CheckReport("linear_rate", PASS if worst >= 0.0 else FAIL, worst, k_at, constants)


def check_armijo_lower_bound(
    trace: Trace,
    L: Optional[float],
    nu: Optional[float] = None,
    beta: Optional[float] = None,
) -> CheckReport:
    """Steps of a backtracking run stay above min{nu, nu(1-beta)/(2L)} when
    the Jacobian is L-Lipschitz along the trace."""
    if L is None:
        return CheckReport(
            "armijo_lower_bound", INCONCLUSIVE, None, None, {"reason": "no Lipschitz constant"}
        )
    cfg = trace.config
    nu = cfg.nu if nu is None else nu
    beta = cfg.beta if beta is None else beta
    bound = min(nu, nu * (1.0 - beta) / (2.0 * L))
    worst, k_at = math.inf, None
    for r in trace.steps:
        margin = r.t - bound + 1e-12
        if margin < worst:
            worst, k_at = margin, r.k
    constants = {"L": L, "nu": nu, "beta": beta, "bound": bound}
    if k_at is None:
        return CheckReport("armijo_lower_bound", PASS, None, None, constants)
    return CheckReport(
        "armijo_lower_bound", PASS if worst >= 0.0 else FAIL, worst, k_at, constants
    )


# ---------------------------------------------------------------------------
# quasi-Fejer behaviour and the curvature distance inequality
# ---------------------------------------------------------------------------


def check_quasi_fejer(
    trace: Trace,
    target_points: Sequence[ManifoldPoint],
    eps_budget: Optional[float] = None,
) -> CheckReport:
    """Distance recursion toward dominating points:

        d^2(p_{k+1}, q) <= d^2(p_k, q) + 2 R t_k ||v_k||^2

    for every recorded step and every target q with F(q) <= F(final iterate)
    componentwise.  The perturbations are summable; if ``eps_budget`` is
    given their sum must stay below it."""
    cfg = trace.config
    if not trace.records or trace.objective is None:
        return CheckReport("quasi_fejer", INCONCLUSIVE, None, None, {"reason": "empty trace"})
    m = trace.records[0].point.manifold
    F = trace.objective
    F_final = trace.final.F
    admissible = [q for q in target_points if leq(F.evaluate(q), F_final)]
    if not admissible:
        return CheckReport(
            "quasi_fejer", INCONCLUSIVE, None, None, {"reason": "no dominating target"}
        )
    worst, k_at = math.inf, None
    for q in admissible:
        d2 = [m.dist(r.point, q) ** 2 for r in trace.records]
        for i, r in enumerate(trace.records[:-1]):
            margin = d2[i] + 2.0 * cfg.R * r.t * r.norm_v**2 + ABS_SLACK - d2[i + 1]
            if margin < worst:
                worst, k_at = margin, r.k
    perturbation = sum(2.0 * cfg.R * r.t * r.norm_v**2 for r in trace.steps)
    constants = {"targets": len(admissible), "perturbation_sum": perturbation}
    status = PASS if worst >= 0.0 else FAIL
    if eps_budget is not None:
        constants["eps_budget"] = eps_budget
        if perturbation > eps_budget:
            status = FAIL
    if k_at is None:
        status = PASS
    return CheckReport("quasi_fejer", status, worst if k_at is not None else None, k_at, constants)


def check_qc_distance_inequality(
    F: VectorObjective,
    kappa: float,
    p: ManifoldPoint,
    v: TangentVector,
    t: float,
    q: ManifoldPoint,
) -> CheckReport:
    """Curvature-corrected distance inequality for an s-compatible direction
    at a point dominating q:

        d^2(exp_p(t v), q) < d^2(p, q) + 3 t^2 ||v||^2 / (2 hbar(sqrt|k| d(p,q)))

    valid while sqrt|kappa| * t * ||v|| <= 1 on quasi-convex regions of a
    manifold with curvature bounded below by kappa < 0."""
    m = F.manifold
    constants = {"kappa": kappa, "t": t}
    if not kappa < 0:
        constants["reason"] = "needs a negative curvature lower bound"
        return CheckReport("qc_distance_inequality", SKIPPED, None, None, constants)
    if t == 0.0:
        return CheckReport("qc_distance_inequality", PASS, 0.0, None, constants)
    sk = math.sqrt(-kappa)
    norm_v = m.norm(v)
    if sk * t * norm_v > 1.0:
        constants["reason"] = "step length violates sqrt|kappa| t ||v|| <= 1"
        return CheckReport("qc_distance_inequality", SKIPPED, None, None, constants)
    if not leq(F.evaluate(q), F.evaluate(p)):
        constants["reason"] = "q does not dominate p"
        return CheckReport("qc_distance_inequality", SKIPPED, None, None, constants)
    d_pq = m.dist(p, q)
    lhs = m.dist(m.exp(p, v, t), q) ** 2
    rhs = d_pq**2 + 3.0 * t**2 * norm_v**2 / (2.0 * hbar(sk * d_pq))
    margin = rhs - lhs
    constants["denominator"] = 2.0 * hbar(sk * d_pq)
    return CheckReport(
        "qc_distance_inequality", PASS if margin > -1e-10 else FAIL, margin, None, constants
    )


def check_sublevel_bounded(
    F: VectorObjective,
    p0: ManifoldPoint,
    radius_ladder: Sequence[float] = (0.5, 1.0, 2.0, 4.0, 8.0, 16.0),
    samples_per_annulus: int = 200,
    seed: int = 0,
    coercive: Optional[bool] = None,
) -> CheckReport:
    """Probe boundedness of the initial sublevel set {q : F(q) <= F(p0)}.

    Samples annuli of increasing radius around p0 and reports the largest
    radius still containing sublevel members; the set is judged bounded when
    the outermost two annuli are empty of members.  For manifolds with a
    finite diameter every sublevel set is bounded."""
    m = F.manifold
    rng = np.random.default_rng(seed)
    f0 = F.evaluate(p0)
    ladder = sorted(radius_ladder)
    counts = []
    largest = 0.0
    diameter_cap = math.pi if m.curvature_lower_bound > 0 else math.inf
    prev = 0.0
    for r in ladder:
        if prev >= diameter_cap:
            counts.append(0)
            prev = r
            continue
        members = 0
        for _ in range(samples_per_annulus):
            u = m.random_tangent(p0, rng)
            s = rng.uniform(prev, min(r, diameter_cap - 1e-6))
            q = m.exp(p0, u, s)
            if leq(F.evaluate(q), f0):
                members += 1
        counts.append(members)
        if members > 0:
            largest = r
        prev = r
    bounded = bool(sum(counts[-2:]) == 0) or diameter_cap < ladder[-2]
    constants = {
        "counts": counts,
        "ladder": list(ladder),
        "largest_radius_with_members": largest,
        "bounded": bounded,
    }
    if coercive is None:
        return CheckReport("sublevel_bounded", INCONCLUSIVE, None, None, constants)
    if coercive:
        return CheckReport("sublevel_bounded", PASS if bounded else FAIL, None, None, constants)
    return CheckReport("sublevel_bounded", INCONCLUSIVE, None, None, constants)


# ---------------------------------------------------------------------------
# flag probes: verify declared problem structure before relying on it
# ---------------------------------------------------------------------------


def probe_quasi_convexity(
    F: VectorObjective,
    center: ManifoldPoint,
    radius: float,
    pairs: int = 40,
    seed: int = 0,
    grid: int = 9,
) -> CheckReport:
    """Sampled quasi-convexity of F on a ball: along geodesics between ball
    points, componentwise F(gamma(s)) <= max(F(p), F(q)); dominated endpoints
    must see non-positive Jacobian action along the connecting geodesic; and
    random scalarizations must be quasi-convex along the same geodesics."""
    m = F.manifold
    rng = np.random.default_rng(seed)
    worst = math.inf
    for _ in range(pairs):
        p = m.sample_ball(center, radius, rng)
        q = m.sample_ball(center, radius, rng)
        fp, fq = F.evaluate(p), F.evaluate(q)
        cap = np.maximum(fp, fq)
        w = m.log(p, q)
        for s in np.linspace(0.0, 1.0, grid):
            fs = F.evaluate(m.exp(p, w, s))
            worst = min(worst, float(np.min(cap - fs)))
        lam = rng.dirichlet(np.ones(F.n))
        scal = [float(lam @ F.evaluate(m.exp(p, w, s))) for s in np.linspace(0.0, 1.0, grid)]
        cap_s = max(scal[0], scal[-1])
        worst = min(worst, min(cap_s - x for x in scal))
        if leq(fq, fp):
            worst = min(worst, float(-np.max(F.jacobian_action(p, w))))
        if leq(fp, fq):
            worst = min(worst, float(-np.max(F.jacobian_action(q, m.log(q, p)))))
    return CheckReport(
        "quasi_convexity_probe",
        PASS if worst >= -ABS_SLACK else FAIL,
        worst,
        None,
        {"radius": radius, "pairs": pairs},
    )


def probe_gradient_lipschitz(
    F: VectorObjective,
    center: ManifoldPoint,
    radius: float,
    L: float,
    pairs: int = 60,
    seed: int = 0,
) -> CheckReport:
    """Sampled transport-based Lipschitz bound on the component gradients."""
    m = F.manifold
    rng = np.random.default_rng(seed)
    worst = math.inf
    for _ in range(pairs):
        p = m.sample_ball(center, radius, rng)
        q = m.sample_ball(center, radius, rng)
        d = m.dist(p, q)
        for i in range(F.n):
            gp = F.gradient(p, i)
            gq_at_p = m.parallel_transport(q, p, F.gradient(q, i))
            diff = m.tangent(p, gp.coords - gq_at_p.coords)
            margin = L * d + ABS_SLACK - m.norm(diff)
            worst = min(worst, margin)
    return CheckReport(
        "gradient_lipschitz_probe",
        PASS if worst >= 0.0 else FAIL,
        worst,
        None,
        {"L": L, "radius": radius},
    )


def probe_merit_lipschitz(
    oracle: MeritOracle,
    center: ManifoldPoint,
    radius: float,
    L: float,
    pairs: int = 60,
    seed: int = 0,
) -> CheckReport:
    """Sampled local Lipschitz continuity of the merit oracle itself."""
    m = oracle.objective.manifold
    rng = np.random.default_rng(seed)
    worst = math.inf
    for _ in range(pairs):
        p = m.sample_ball(center, radius, rng)
        q = m.sample_ball(center, radius, rng)
        margin = L * m.dist(p, q) + ABS_SLACK - abs(oracle.phi(p) - oracle.phi(q))
        worst = min(worst, margin)
    return CheckReport(
        "merit_lipschitz_probe", PASS if worst >= 0.0 else FAIL, worst, None, {"L": L}
    )
