"""Geometry kernels for the four supported manifold models.

All models are represented in ambient coordinates, where exponential map,
logarithm, distance and parallel transport have exact closed forms:

* ``Euclidean(m)``     -- flat space, coords in R^m.
* ``Sphere(m)``        -- unit sphere S^m, coords are unit vectors in R^{m+1}.
* ``Hyperboloid(m)``   -- constant curvature kappa < 0, upper sheet of the
  hyperboloid ``<x,x>_L = 1/kappa`` in Minkowski R^{m+1} with the form
  ``<u,v>_L = -u_0 v_0 + sum_i u_i v_i``.
* ``SPDMatrices(d)``   -- symmetric positive-definite d x d matrices with the
  affine-invariant metric ``<U,V>_P = tr(P^-1 U P^-1 V)``.

Points and tangent vectors carry their manifold; every operation validates
that bases match.  Constraint drift up to ``DRIFT_TOL`` is accepted as-is,
drift in ``(DRIFT_TOL, PROJECT_TOL]`` is silently re-projected (long descent
runs accumulate rounding), and anything worse raises ``ContractViolation``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np

from .errors import ContractViolation, OutOfRangeError

DRIFT_TOL = 1e-10
PROJECT_TOL = 1e-6


@dataclass(eq=False)
class ManifoldPoint:
    """A point bound to its manifold; ``coords`` are ambient coordinates."""

    manifold: "Manifold"
    coords: np.ndarray

    def __repr__(self):
        return f"ManifoldPoint({self.manifold!r}, {np.array2string(self.coords, precision=6)})"


@dataclass(eq=False)
class TangentVector:
    """A tangent vector at ``base``; ``coords`` live in the ambient space."""

    base: ManifoldPoint
    coords: np.ndarray

    def __repr__(self):
        return f"TangentVector(base={self.base!r}, {np.array2string(self.coords, precision=6)})"


def _as_float_array(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ContractViolation("coordinates must be finite")
    return a


class Manifold:
    """Common interface of the four geometry models.

    Subclasses provide the raw coordinate kernels (``_exp``, ``_log``, ...);
    this base class adds validation, drift repair and the derived helpers
    (norm, geodesic sampling, ball sampling).
    """

    # analytic constants, set by subclasses
    curvature_lower_bound: float
    curvature_upper_bound: float
    convexity_radius: float

    # ---- constraint handling ----------------------------------------

    def point_defect(self, coords: np.ndarray) -> float:
        raise NotImplementedError

    def tangent_defect(self, base_coords: np.ndarray, coords: np.ndarray) -> float:
        raise NotImplementedError

    def project_point(self, coords: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def project_tangent(self, base_coords: np.ndarray, coords: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def point(self, coords) -> ManifoldPoint:
        """Wrap coordinates as a point, repairing small constraint drift."""
        c = _as_float_array(coords)
        defect = self.point_defect(c)
        if defect > PROJECT_TOL:
            raise ContractViolation(
                f"{self}: point constraint violated by {defect:.3e} (> {PROJECT_TOL})"
            )
        if defect > DRIFT_TOL:
            c = self.project_point(c)
        return ManifoldPoint(self, c)

    def tangent(self, base: ManifoldPoint, coords) -> TangentVector:
        """Wrap coordinates as a tangent vector at ``base``."""
        self._check_point(base)
        c = _as_float_array(coords)
        defect = self.tangent_defect(base.coords, c)
        if defect > PROJECT_TOL:
            raise ContractViolation(
                f"{self}: tangency constraint violated by {defect:.3e} (> {PROJECT_TOL})"
            )
        if defect > DRIFT_TOL:
            c = self.project_tangent(base.coords, c)
        return TangentVector(base, c)

    def zero_tangent(self, base: ManifoldPoint) -> TangentVector:
        return TangentVector(base, np.zeros_like(base.coords))

    def _check_point(self, p: ManifoldPoint):
        if p.manifold != self:
            raise ContractViolation(f"point belongs to {p.manifold}, not {self}")

    def _check_tangent(self, v: TangentVector):
        self._check_point(v.base)

    def _check_same_base(self, u: TangentVector, v: TangentVector):
        self._check_tangent(u)
        self._check_tangent(v)
        if u.base.coords.shape != v.base.coords.shape or not np.array_equal(
            u.base.coords, v.base.coords
        ):
            raise ContractViolation("tangent vectors have different base points")

    # ---- metric operations ------------------------------------------

    def inner(self, u: TangentVector, v: TangentVector) -> float:
        """Riemannian inner product of two tangent vectors at the same base."""
        self._check_same_base(u, v)
        return self._inner(u.base.coords, u.coords, v.coords)

    def norm(self, v: TangentVector) -> float:
        self._check_tangent(v)
        return math.sqrt(max(self._inner(v.base.coords, v.coords, v.coords), 0.0))

    def exp(self, p: ManifoldPoint, v: TangentVector, t: float = 1.0) -> ManifoldPoint:
        """Geodesic point ``gamma(t)`` with ``gamma(0) = p``, ``gamma'(0) = v``."""
        self._check_point(p)
        self._check_tangent(v)
        if v.base is not p and not np.array_equal(v.base.coords, p.coords):
            raise ContractViolation("tangent vector is not based at p")
        if not np.isfinite(t) or t < 0.0:
            raise ContractViolation("t must be finite and >= 0")
        return self.point(self._exp(p.coords, t * v.coords))

    def log(self, p: ManifoldPoint, q: ManifoldPoint) -> TangentVector:
        """Inverse of ``exp`` at ``p``; requires q inside the injectivity range."""
        self._check_point(p)
        self._check_point(q)
        return self.tangent(p, self._log(p.coords, q.coords))

    def dist(self, p: ManifoldPoint, q: ManifoldPoint) -> float:
        self._check_point(p)
        self._check_point(q)
        return self._dist(p.coords, q.coords)

    def parallel_transport(
        self, p: ManifoldPoint, q: ManifoldPoint, v: TangentVector
    ) -> TangentVector:
        """Transport ``v`` from ``T_p M`` to ``T_q M`` along the minimal geodesic."""
        self._check_point(p)
        self._check_point(q)
        self._check_tangent(v)
        if not np.array_equal(v.base.coords, p.coords):
            raise ContractViolation("vector to transport must be based at p")
        return self.tangent(q, self._transport(p.coords, q.coords, v.coords))

    # ---- sampling helpers --------------------------------------------

    def tangent_basis(self, p: ManifoldPoint) -> list[TangentVector]:
        """Orthonormal basis of ``T_p M`` under the model metric."""
        self._check_point(p)
        return [TangentVector(p, b) for b in self._tangent_basis(p.coords)]

    def random_tangent(self, p: ManifoldPoint, rng: np.random.Generator) -> TangentVector:
        """Isotropic unit tangent vector at ``p``."""
        basis = self._tangent_basis(p.coords)
        w = rng.standard_normal(len(basis))
        n = np.linalg.norm(w)
        if n == 0.0:
            w[0] = 1.0
            n = 1.0
        w /= n
        c = sum(wi * bi for wi, bi in zip(w, basis))
        return TangentVector(p, c)

    def sample_ball(
        self, center: ManifoldPoint, radius: float, rng: np.random.Generator
    ) -> ManifoldPoint:
        """Point from the exp-pushforward of the uniform ball in ``T_c M``."""
        u = self.random_tangent(center, rng)
        r = radius * rng.uniform() ** (1.0 / self.dim)
        return self.exp(center, u, r)

    # ---- serialization ------------------------------------------------

    def to_config(self) -> dict:
        raise NotImplementedError

    @property
    def dim(self) -> int:
        raise NotImplementedError


@dataclass(frozen=True)
class Euclidean(Manifold):
    """Flat R^m with the standard inner product."""

    m: int

    curvature_lower_bound = 0.0
    curvature_upper_bound = 0.0
    convexity_radius = math.inf

    @property
    def dim(self):
        return self.m

    def point_defect(self, c):
        if c.shape != (self.m,):
            raise ContractViolation(f"expected shape ({self.m},), got {c.shape}")
        return 0.0

    def tangent_defect(self, base, c):
        if c.shape != (self.m,):
            raise ContractViolation(f"expected shape ({self.m},), got {c.shape}")
        return 0.0

    def project_point(self, c):
        return c

    def project_tangent(self, base, c):
        return c

    def _inner(self, base, u, v):
        return float(np.dot(u, v))

    def _exp(self, p, v):
        return p + v

    def _log(self, p, q):
        return q - p

    def _dist(self, p, q):
        return float(np.linalg.norm(q - p))

    def _transport(self, p, q, v):
        return v

    def _tangent_basis(self, p):
        return list(np.eye(self.m))

    def to_config(self):
        return {"kind": "euclidean", "dim": self.m}


@dataclass(frozen=True)
class Sphere(Manifold):
    """Unit sphere S^m embedded in R^{m+1} with the induced metric."""

    m: int

    curvature_lower_bound = 1.0
    curvature_upper_bound = 1.0
    convexity_radius = math.pi / 2

    @property
    def dim(self):
        return self.m

    def point_defect(self, c):
        if c.shape != (self.m + 1,):
            raise ContractViolation(f"expected shape ({self.m + 1},), got {c.shape}")
        return abs(float(np.linalg.norm(c)) - 1.0)

    def tangent_defect(self, base, c):
        if c.shape != (self.m + 1,):
            raise ContractViolation(f"expected shape ({self.m + 1},), got {c.shape}")
        return abs(float(np.dot(base, c))) / max(1.0, float(np.linalg.norm(c)))

    def project_point(self, c):
        return c / np.linalg.norm(c)

    def project_tangent(self, base, c):
        return c - np.dot(base, c) * base

    def _inner(self, base, u, v):
        return float(np.dot(u, v))

    def _exp(self, p, v):
        s = np.linalg.norm(v)
        if s < 1e-300:
            return p.copy()
        return math.cos(s) * p + math.sin(s) * v / s

    def _log(self, p, q):
        c = float(np.clip(np.dot(p, q), -1.0, 1.0))
        w = q - c * p
        wn = float(np.linalg.norm(w))
        theta = self._dist(p, q)
        if theta > math.pi - 1e-8:
            raise OutOfRangeError("log map undefined near the antipodal point")
        if wn < 1e-15:
            return np.zeros_like(p)
        return (theta / wn) * w

    def _dist(self, p, q):
        # chord-based formulas stay accurate where acos(<p,q>) cancels
        if np.dot(p, q) >= 0.0:
            return 2.0 * math.asin(min(0.5 * float(np.linalg.norm(q - p)), 1.0))
        return math.pi - 2.0 * math.asin(min(0.5 * float(np.linalg.norm(q + p)), 1.0))

    def _transport(self, p, q, v):
        # Decompose along the geodesic direction; the orthogonal part is
        # constant in ambient coordinates, the along-geodesic part rotates.
        if np.array_equal(p, q):
            return v
        d = self._dist(p, q)
        if d > math.pi - 1e-8:
            raise OutOfRangeError("transport undefined between antipodal points")
        u_p = self._log(p, q)
        u_p /= np.linalg.norm(u_p)
        u_q = -self._log(q, p)
        u_q /= np.linalg.norm(u_q)
        a = float(np.dot(u_p, v))
        return v - a * u_p + a * u_q

    def _tangent_basis(self, p):
        a = np.zeros((self.m + 1, self.m + 1))
        a[:, 0] = p
        a[:, 1:] = np.eye(self.m + 1)[:, : self.m]
        q, _ = np.linalg.qr(a)
        # QR can flip signs; only orthogonality to p matters here
        return [q[:, i + 1] for i in range(self.m)]

    def to_config(self):
        return {"kind": "sphere", "dim": self.m}


@dataclass(frozen=True)
class Hyperboloid(Manifold):
    """Upper hyperboloid sheet of constant sectional curvature ``kappa < 0``."""

    m: int
    kappa: float = -1.0

    convexity_radius = math.inf

    def __post_init__(self):
        if not self.kappa < 0:
            raise ContractViolation("hyperboloid curvature must be negative")

    @property
    def curvature_lower_bound(self):
        return self.kappa

    @property
    def curvature_upper_bound(self):
        return self.kappa

    @property
    def dim(self):
        return self.m

    def minkowski(self, u, v) -> float:
        return float(-u[0] * v[0] + np.dot(u[1:], v[1:]))

    def point_defect(self, c):
        if c.shape != (self.m + 1,):
            raise ContractViolation(f"expected shape ({self.m + 1},), got {c.shape}")
        if c[0] <= 0:
            raise ContractViolation("point must lie on the upper sheet (x0 > 0)")
        # relative to the coordinate scale: the Minkowski form cancels two
        # O(|c|^2) terms, so far-out points carry proportional rounding
        scale = max(1.0, float(np.dot(c, c)))
        return abs(self.minkowski(c, c) - 1.0 / self.kappa) / scale

    def tangent_defect(self, base, c):
        if c.shape != (self.m + 1,):
            raise ContractViolation(f"expected shape ({self.m + 1},), got {c.shape}")
        scale = max(1.0, float(np.linalg.norm(base)) * float(np.linalg.norm(c)))
        return abs(self.minkowski(base, c)) / scale

    def project_point(self, c):
        scale = self.kappa * self.minkowski(c, c)
        if scale <= 0:
            raise ContractViolation("coordinates are not timelike; cannot re-project")
        return c / math.sqrt(scale)

    def project_tangent(self, base, c):
        return c - self.kappa * self.minkowski(base, c) * base

    def _inner(self, base, u, v):
        return self.minkowski(u, v)

    def _exp(self, p, v):
        sk = math.sqrt(-self.kappa)
        s = math.sqrt(max(self.minkowski(v, v), 0.0))
        if s < 1e-300:
            return p.copy()
        return math.cosh(sk * s) * p + math.sinh(sk * s) * v / (sk * s)

    def _dist(self, p, q):
        # cosh(sk*d) - 1 recovered from the spacelike chord q - p; this is
        # cancellation-free, unlike acosh of the (near-1) Minkowski product
        diff = q - p
        cm1 = 0.5 * (-self.kappa) * self.minkowski(diff, diff)
        s = math.asinh(math.sqrt(max(cm1 * (cm1 + 2.0), 0.0)))
        return s / math.sqrt(-self.kappa)

    def _log(self, p, q):
        sk = math.sqrt(-self.kappa)
        c = max(self.kappa * self.minkowski(p, q), 1.0)
        s = sk * self._dist(p, q)
        u = q - c * p
        if s < 1e-9:
            return u  # sinh(s)/s -> 1
        return (s / math.sinh(s)) * u

    def _transport(self, p, q, v):
        if np.array_equal(p, q):
            return v
        d = self._dist(p, q)
        if d < 1e-15:
            return self.project_tangent(q, v)
        u_p = self._log(p, q)
        u_p /= math.sqrt(self.minkowski(u_p, u_p))
        u_q = -self._log(q, p)
        u_q /= math.sqrt(self.minkowski(u_q, u_q))
        a = self.minkowski(u_p, v)
        return v - a * u_p + a * u_q

    def _tangent_basis(self, p):
        basis = []
        for i in range(self.m + 1):
            e = np.zeros(self.m + 1)
            e[i] = 1.0
            w = self.project_tangent(p, e)
            for b in basis:
                w = w - self.minkowski(b, w) * b
            n2 = self.minkowski(w, w)
            if n2 > 1e-12:
                basis.append(w / math.sqrt(n2))
            if len(basis) == self.m:
                break
        return basis

    def to_config(self):
        return {"kind": "hyperboloid", "dim": self.m, "curvature": self.kappa}


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def _spd_apply(P: np.ndarray, fn) -> np.ndarray:
    w, V = np.linalg.eigh(_sym(P))
    return _sym(V @ np.diag(fn(w)) @ V.T)


@dataclass(frozen=True)
class SPDMatrices(Manifold):
    """SPD d x d matrices with the affine-invariant metric (a Hadamard space).

    The exact sectional curvature range of this model is [-1/2, 0]; the
    lower bound is recorded for the curvature-dependent inequality checks.
    """

    d: int

    curvature_lower_bound = -0.5
    curvature_upper_bound = 0.0
    convexity_radius = math.inf

    @property
    def dim(self):
        return self.d * (self.d + 1) // 2

    def point_defect(self, c):
        if c.shape != (self.d, self.d):
            raise ContractViolation(f"expected shape ({self.d},{self.d}), got {c.shape}")
        asym = float(np.max(np.abs(c - c.T))) / max(1.0, float(np.max(np.abs(c))))
        lam_min = float(np.min(np.linalg.eigvalsh(_sym(c))))
        if lam_min <= 0:
            raise ContractViolation(
                f"matrix is not positive definite (min eigenvalue {lam_min:.3e})"
            )
        return asym

    def tangent_defect(self, base, c):
        if c.shape != (self.d, self.d):
            raise ContractViolation(f"expected shape ({self.d},{self.d}), got {c.shape}")
        return float(np.max(np.abs(c - c.T))) / max(1.0, float(np.max(np.abs(c))))

    def project_point(self, c):
        return _sym(c)

    def project_tangent(self, base, c):
        return _sym(c)

    def _inner(self, base, u, v):
        Pi = np.linalg.inv(base)
        return float(np.trace(Pi @ u @ Pi @ v))

    def _sqrt_pair(self, P):
        w, V = np.linalg.eigh(_sym(P))
        sq = V @ np.diag(np.sqrt(w)) @ V.T
        isq = V @ np.diag(1.0 / np.sqrt(w)) @ V.T
        return _sym(sq), _sym(isq)

    def _exp(self, p, v):
        sq, isq = self._sqrt_pair(p)
        s = _sym(isq @ v @ isq)
        return _sym(sq @ _spd_apply(s, np.exp) @ sq)

    def _log(self, p, q):
        sq, isq = self._sqrt_pair(p)
        s = _sym(isq @ q @ isq)
        return _sym(sq @ _spd_apply(s, np.log) @ sq)

    def _dist(self, p, q):
        _, isq = self._sqrt_pair(p)
        s = _sym(isq @ q @ isq)
        w = np.linalg.eigvalsh(s)
        return float(np.linalg.norm(np.log(w)))

    def _transport(self, p, q, v):
        # E = (Q P^-1)^(1/2) realised via the principal square root of the
        # congruent SPD matrix; v maps to E v E^T.
        sq, isq = self._sqrt_pair(p)
        mid = _spd_apply(_sym(isq @ q @ isq), np.sqrt)
        E = sq @ mid @ isq
        return _sym(E @ v @ E.T)

    def _tangent_basis(self, p):
        sq, _ = self._sqrt_pair(p)
        basis = []
        for i in range(self.d):
            for j in range(i, self.d):
                s = np.zeros((self.d, self.d))
                if i == j:
                    s[i, i] = 1.0
                else:
                    s[i, j] = s[j, i] = 1.0 / math.sqrt(2.0)
                basis.append(_sym(sq @ s @ sq))
        return basis

    def to_config(self):
        return {"kind": "spd", "size": self.d}


def manifold_from_config(cfg: dict) -> Manifold:
    """Build a manifold from its JSON descriptor, e.g. {"kind":"sphere","dim":3}."""
    kind = cfg.get("kind")
    if kind == "euclidean":
        return Euclidean(int(cfg["dim"]))
    if kind == "sphere":
        return Sphere(int(cfg["dim"]))
    if kind == "hyperboloid":
        return Hyperboloid(int(cfg["dim"]), float(cfg.get("curvature", -1.0)))
    if kind == "spd":
        return SPDMatrices(int(cfg["size"]))
    raise ContractViolation(f"unknown manifold kind {kind!r}")
