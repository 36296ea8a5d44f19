"""Assemble and verify first-order (metric plus connection) solutions.

Given g with Ric(g) = g, a K-structure compatible with g, and a simple
root c of f'(S) S - (n/4) f(S), the pair

    h = |eps|^(-1/2) g(K., .),    Gamma = Levi-Civita(g),    eps = c / n

solves the Euler-Lagrange system of L = f(S) sqrt|det h| with
S = h^{ma} h^{nb} S_ab S_mn and S_mn the symmetrized Ricci of Gamma.

Density bookkeeping.  D^{mn} = f'(S) sqrt|det h| h^{ma} h^{nb} S_ab is a
tensor density of weight 1, so

    nabla_l D^{mn} = d_l D^{mn} + G^m_{lk} D^{kn} + G^n_{lk} D^{mk} - G^k_{kl} D^{mn}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import jets as J
from .errors import (
    DegenerateRootError,
    ParityError,
    PreconditionError,
)
from .fields import JetField, SamplePlan
from .jets import Jet
from .scalar_root import LagrangianSpec, classify_roots, epsilon_of_root
from .tensor_calc import (
    FIRST_ORDER_TOL,
    LocalGeometry,
    check_k_compatibility,
    christoffel_jet,
    einstein_residual,
)

PIPELINE_TOL = 1e-7
EINSTEIN_TOL = 1e-7


@dataclass
class PalatiniSolution:
    g: object
    h: JetField
    K: object
    spec: LagrangianSpec
    root: float
    epsilon: float

    @property
    def n(self) -> int:
        return self.g.dim


def _poly_jet(coeffs, x: Jet) -> Jet:
    """Horner evaluation of an ascending-coefficient polynomial on a jet."""
    out = Jet.constant(np.zeros(x.shape, dtype=x.dtype), x.nvars, x.order)
    for a in reversed(coeffs):
        out = out * x + float(a)
    return out


def scaled_twin(g, K, scale: float) -> JetField:
    def func(point, order):
        return J.einsum("am,an->mn", K.taylor(point, order), g.taylor(point, order)) * scale

    return JetField(g.chart, func, name=f"h({g.name})")


def assemble(g, K, spec: LagrangianSpec, c: float, plan: SamplePlan,
             einstein_tol: float = EINSTEIN_TOL, compat_tol: float = FIRST_ORDER_TOL) -> PalatiniSolution:
    """Build (h, Gamma) from an Einstein metric normalized to Ric = g."""
    if g.dim != spec.n:
        raise PreconditionError(f"metric dimension {g.dim} differs from the Lagrangian's n = {spec.n}")
    fit = einstein_residual(g, plan)
    if abs(fit.gamma - 1.0) > einstein_tol or fit.residual > einstein_tol:
        hint = ""
        if fit.residual <= einstein_tol and fit.gamma > 0:
            hint = f"; Ricci is scale invariant, so g / {fit.gamma:.17g} satisfies Ric = g"
        raise PreconditionError(
            f"metric is not normalized Einstein (gamma_fit = {fit.gamma:.6g}){hint}", fit.residual
        )

    report = classify_roots(spec)
    match = [r for r in report.roots if abs(r.c - c) <= 1e-9 * max(1.0, abs(c))]
    if not match:
        raise DegenerateRootError(f"S = {c} is not a root of the fundamental equation")
    root = match[0]
    if not root.admissible:
        why = "almost-tangent (eps = 0)" if root.almost_tangent else (
            f"multiplicity {root.multiplicity}" if root.multiplicity > 1 else "f'(c) = 0")
        raise DegenerateRootError(f"root S = {c} is not admissible: {why}")
    eps = epsilon_of_root(root.c, spec)
    if eps < 0 and g.dim % 2:
        raise ParityError(f"eps = {eps} < 0 needs an even dimension, got n = {g.dim}")

    want = 1 if eps > 0 else -1
    if K.epsilon != want:
        raise PreconditionError(f"K squares to {K.epsilon:+d} I but eps = {eps} needs {want:+d} I")
    if K.epsilon * K.sigma != 1:
        raise PreconditionError("g(K., .) is a two-form for this K; the twin must be a metric")
    compat = check_k_compatibility(g, K, plan, compat_tol)
    if not compat.passed:
        raise PreconditionError(
            "K is not compatible with g", max(compat.involution_residual, compat.metric_residual)
        )
    h = scaled_twin(g, K, 1.0 / np.sqrt(abs(eps)))
    return PalatiniSolution(g=g, h=h, K=K, spec=spec, root=root.c, epsilon=eps)


def density_divergence(D: Jet, gamma: np.ndarray, weight: float = 1.0) -> np.ndarray:
    """nabla_l D^{mn} for a (2,0) density of the given weight, indexed [l, m, n]."""
    D0, dD = D.value, D.partials().value
    return (
        dD
        + np.einsum("mlk,kn->lmn", gamma, D0)
        + np.einsum("nlk,mk->lmn", gamma, D0)
        - weight * np.einsum("kkl,mn->lmn", gamma, D0)
    )


@dataclass
class PointFields:
    """Everything the Euler-Lagrange residuals need at one point."""

    S_ab: Jet          # symmetrized Ricci of Gamma, order 1
    h: Jet             # order 1
    hinv: Jet
    S: Jet             # the scalar invariant, order 1
    gamma: np.ndarray  # Levi-Civita symbols at the point


def point_fields(sol: PalatiniSolution, point) -> PointFields:
    geo = LocalGeometry(sol.g, point, order=3)
    ric = geo.ricci_jet
    S_ab = (ric + ric.T) * 0.5
    h = sol.h.taylor(geo.point, 1)
    hinv = J.inv(h)
    S = J.einsum("ma,nb,ab,mn->", hinv, hinv, S_ab, S_ab)
    return PointFields(S_ab, h, hinv, S, geo.gamma)


def scalar_invariant(sol: PalatiniSolution, point) -> float:
    return float(np.real(point_fields(sol, point).S.value))


@dataclass
class VerificationReport:
    residuals: dict = field(default_factory=dict)
    tolerance: float = PIPELINE_TOL

    @property
    def passed(self) -> bool:
        return all(v <= self.tolerance for v in self.residuals.values())


def euler_lagrange_residuals(sol: PalatiniSolution, point) -> dict:
    pf = point_fields(sol, point)
    coeffs = sol.spec.coefficients
    dcoeffs = np.polynomial.polynomial.polyder(coeffs)
    fS = _poly_jet(coeffs, pf.S)
    fpS = _poly_jet(dcoeffs, pf.S)
    S0, h0, hinv0 = pf.S_ab.value, pf.h.value, pf.hinv.value

    # metric equation
    quad = fpS.value * np.einsum("ab,ma,nb->mn", hinv0, S0, S0)
    lin = 0.25 * fS.value * h0
    scale = max(np.linalg.norm(quad), np.linalg.norm(lin), 1e-300)
    metric_eq = float(np.linalg.norm(quad - lin) / scale)

    # connection equation on the weight-1 density
    D = J.einsum("ma,nb,ab->mn", pf.hinv, pf.hinv, pf.S_ab) * (fpS * J.sqrt_abs_det(pf.h))
    div = density_divergence(D, pf.gamma)
    dscale = max(np.linalg.norm(D.partials().value), np.linalg.norm(D.value), 1e-300)
    connection_eq = float(np.linalg.norm(div) / dscale)

    scalar = float(abs(pf.S.value - sol.root) / max(1.0, abs(sol.root)))

    n = sol.n
    lhs = np.linalg.det(S0) ** 2
    rhs = sol.epsilon ** n * np.linalg.det(h0) ** 2
    regularity = float(abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300))
    return {
        "metric_equation": metric_eq,
        "connection_equation": connection_eq,
        "scalar_equals_root": scalar,
        "determinant_regularity": regularity,
    }


def verify_euler_lagrange(sol: PalatiniSolution, plan: SamplePlan, tol: float = PIPELINE_TOL) -> VerificationReport:
    worst: dict = {}
    for p in plan:
        for k, v in euler_lagrange_residuals(sol, p).items():
            worst[k] = max(worst.get(k, 0.0), v)
    return VerificationReport(worst, tol)


def twin_relation_residual(sol: PalatiniSolution, point) -> float:
    """|(h^-1 g)^2 - eps I|."""
    h0 = sol.h.at(point)
    A = np.linalg.solve(h0, sol.g.at(point))
    return float(np.linalg.norm(A @ A - sol.epsilon * np.eye(sol.n)))


def ricci_roundtrip(g, point) -> tuple[float, float]:
    """Set g' := S(Gamma(g)); return |g' - g| / |g| and |Gamma(g') - Gamma(g)| / max(|Gamma|, 1)."""
    geo = LocalGeometry(g, point, order=3)
    ric = geo.ricci_jet
    g_new = (ric + ric.T) * 0.5
    gamma_new = christoffel_jet(g_new).value
    r_metric = float(np.linalg.norm(g_new.value - geo.g) / np.linalg.norm(geo.g))
    r_conn = float(np.linalg.norm(gamma_new - geo.gamma) / max(np.linalg.norm(geo.gamma), 1.0))
    return r_metric, r_conn


def density_metricity_residual(g, point) -> float:
    """|nabla_a (sqrt|g| g^{mn})| for the Levi-Civita connection of g."""
    geo = LocalGeometry(g, point, order=1)
    gj = geo.g_jet
    D = J.inv(gj) * J.sqrt_abs_det(gj)
    div = density_divergence(D, geo.gamma)
    return float(np.abs(div).max() / max(np.abs(D.value).max(), 1.0))
