"""Levi-Civita connection, curvature and K-structure checks on a chart.

Index conventions: ``Gamma[s, m, v]`` is the symbol with upper index s,
``R[l, m, v, s]`` is R^l_{m v s} with antisymmetry in (v, s), Ricci is
R_{m s} = R^v_{m v s}, and ``K[m, v]`` is K^m_v.  Every quantity is built
from truncated Taylor jets, so derivatives are exact up to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from . import jets as J
from .errors import (
    ChartMismatchError,
    CompatibilityError,
    DegenerateMetricError,
    HypothesisError,
    PreconditionError,
)
from .fields import JetField, SamplePlan
from .jets import Jet

FIRST_ORDER_TOL = 1e-9
SECOND_ORDER_TOL = 1e-8


@dataclass(frozen=True)
class PointTensor:
    """Components of a tensor at one point.

    ``variance`` has one character per index, ``^`` for contravariant and
    ``_`` for covariant, in storage order.
    """

    name: str
    variance: str
    data: np.ndarray
    point: np.ndarray = field(repr=False, default=None)

    @property
    def rank(self) -> int:
        return len(self.variance)

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))


# ------------------------------------------------------------ jet kernels
def christoffel_jet(g: Jet) -> Jet:
    """Gamma^s_{mv} from a metric jet; the result has one order less."""
    dg = g.partials()  # dg[a, m, v] = d_a g_{mv}
    # first[a, m, v] = Gamma_{a m v} = 1/2 (d_m g_va + d_v g_ma - d_a g_mv)
    first = (dg.transpose(2, 0, 1) + dg.transpose(2, 1, 0) - dg) * 0.5
    ginv = J.inv(g.truncate(dg.order))
    return J.einsum("sa,amv->smv", ginv, first)


def riemann_jet(gamma: Jet) -> Jet:
    """R^l_{mvs} = d_v G^l_{ms} - d_s G^l_{mv} + G^l_{av} G^a_{ms} - G^l_{as} G^a_{mv}."""
    dG = gamma.partials()  # dG[v, l, m, s]
    G = gamma.truncate(dG.order)
    lin = dG.transpose(1, 2, 0, 3) - dG.transpose(1, 2, 3, 0)
    quad = J.einsum("lav,ams->lmvs", G, G)
    return lin + quad - quad.transpose(0, 1, 3, 2)


def ricci_jet(riemann: Jet) -> Jet:
    return J.einsum("lmls->ms", riemann)


def nabla_k_array(K0: np.ndarray, dK: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """(nabla_a K)^m_v = d_a K^m_v + G^m_{ab} K^b_v - G^b_{av} K^m_b, indexed [a, m, v]."""
    return (
        dK
        + np.einsum("mab,bv->amv", gamma, K0)
        - np.einsum("bav,mb->amv", gamma, K0)
    )


def nijenhuis_array(K0: np.ndarray, dK: np.ndarray) -> np.ndarray:
    """N^l_{mv} from K and its partials dK[a, l, v] = d_a K^l_v."""
    t = np.einsum("am,alv->lmv", K0, dK)
    curl = np.einsum("la,mav->lmv", K0, dK)
    return t - t.transpose(0, 2, 1) - (curl - curl.transpose(0, 2, 1))


def _check_nondegenerate(g0: np.ndarray, point) -> None:
    d = np.linalg.det(g0)
    scale = max(np.abs(g0).max(), 1e-300) ** g0.shape[0]
    if not np.isfinite(d) or abs(d) <= 1e-12 * scale:
        raise DegenerateMetricError(float(abs(d)) if np.isfinite(d) else float("nan"), point)


def _same_chart(a, b) -> None:
    if a.chart.coords != b.chart.coords:
        raise ChartMismatchError(
            f"fields live on different charts: {a.chart.coords} vs {b.chart.coords}"
        )


class LocalGeometry:
    """Lazily computed connection and curvature of ``g`` at one point."""

    def __init__(self, g, point, order: int = 2):
        self.field = g
        self.point = np.asarray(point, dtype=float)
        self.order = order
        self.g_jet = g.taylor(self.point, order)
        _check_nondegenerate(self.g_jet.value, self.point)

    @property
    def g(self) -> np.ndarray:
        return self.g_jet.value

    @cached_property
    def ginv(self) -> np.ndarray:
        return np.linalg.inv(self.g)

    @cached_property
    def gamma_jet(self) -> Jet:
        return christoffel_jet(self.g_jet)

    @property
    def gamma(self) -> np.ndarray:
        return self.gamma_jet.value

    @cached_property
    def riemann_jet(self) -> Jet:
        return riemann_jet(self.gamma_jet)

    @property
    def riemann(self) -> np.ndarray:
        return self.riemann_jet.value

    @cached_property
    def ricci_jet(self) -> Jet:
        return ricci_jet(self.riemann_jet)

    @property
    def ricci(self) -> np.ndarray:
        return self.ricci_jet.value


# ------------------------------------------------------- pointwise tensors
def christoffel(g, point) -> PointTensor:
    geo = LocalGeometry(g, point, order=1)
    return PointTensor("Gamma", "^__", geo.gamma, geo.point)


def riemann(g, point) -> PointTensor:
    geo = LocalGeometry(g, point, order=2)
    return PointTensor("Riemann", "^___", geo.riemann, geo.point)


def ricci(g, point) -> PointTensor:
    geo = LocalGeometry(g, point, order=2)
    return PointTensor("Ricci", "__", geo.ricci, geo.point)


def scalar_curvature(g, point) -> float:
    geo = LocalGeometry(g, point, order=2)
    return float(np.einsum("ms,ms->", geo.ginv, geo.ricci))


def metricity_residual(g, point) -> float:
    """max |nabla_a g_{mv}| for the Levi-Civita connection."""
    geo = LocalGeometry(g, point, order=1)
    dg = geo.g_jet.partials().value
    G, g0 = geo.gamma, geo.g
    nab = dg - np.einsum("bam,bv->amv", G, g0) - np.einsum("bav,mb->amv", G, g0)
    return float(np.abs(nab).max())


def bianchi_residual(g, point) -> float:
    """Largest first-Bianchi cyclic sum relative to the curvature size."""
    R = riemann(g, point).data
    cyc = R + R.transpose(0, 2, 3, 1) + R.transpose(0, 3, 1, 2)
    return float(np.abs(cyc).max() / max(np.abs(R).max(), 1.0))


def covariant_derivative_k(g, K, point) -> PointTensor:
    _same_chart(g, K)
    geo = LocalGeometry(g, point, order=1)
    kj = K.taylor(geo.point, 1)
    data = nabla_k_array(kj.value, kj.partials().value, geo.gamma)
    return PointTensor("nabla K", "_^_", data, geo.point)


# ---------------------------------------------------------- Einstein fits
class EinsteinFit(NamedTuple):
    gamma: float
    residual: float


def _raised_pair(ginv: np.ndarray, a: np.ndarray, b: np.ndarray):
    return np.einsum("ma,nb,mn,ab->", ginv, ginv, a, b)


def einstein_residual(g, plan: SamplePlan) -> EinsteinFit:
    """Best constant gamma with Ric = gamma g on the plan, and the worst misfit."""
    num, den, pairs = [], [], []
    for p in plan:
        geo = LocalGeometry(g, p, order=2)
        num.append(_raised_pair(geo.ginv, geo.ricci, geo.g))
        den.append(_raised_pair(geo.ginv, geo.g, geo.g))
        pairs.append((geo.ricci, geo.g))
    gamma = _fsum(num) / _fsum(den)
    residual = max(
        float(np.linalg.norm(ric - gamma * g0) / np.linalg.norm(g0)) for ric, g0 in pairs
    )
    return EinsteinFit(_real_if_close(gamma), residual)


def _fsum(values) -> complex | float:
    values = list(values)
    if any(np.iscomplexobj(v) for v in values):
        return complex(math.fsum(complex(v).real for v in values),
                       math.fsum(complex(v).imag for v in values))
    return math.fsum(float(v) for v in values)


def _real_if_close(x):
    if isinstance(x, complex) and abs(x.imag) <= 1e-12 * max(abs(x), 1.0):
        return x.real
    return x


# ------------------------------------------------------------ K structure
@dataclass(frozen=True)
class CompatibilityReport:
    involution_residual: float
    metric_residual: float
    epsilon: int
    sigma: int
    detected_epsilon: int
    detected_sigma: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return max(self.involution_residual, self.metric_residual) <= self.tolerance


def _sign(x: float) -> int:
    return 1 if x >= 0 else -1


def check_k_compatibility(g, K, plan: SamplePlan, tol: float = FIRST_ORDER_TOL) -> CompatibilityReport:
    """Residuals of K^2 = eps I and g(K., K.) = sigma g over the plan."""
    _same_chart(g, K)
    n = g.dim
    inv_res, met_res = 0.0, 0.0
    eps_votes, sig_votes = [], []
    for p in plan:
        g0 = g.at(p)
        _check_nondegenerate(g0, p)
        K0 = K.at(p)
        K2 = K0 @ K0
        pulled = K0.T @ g0 @ K0
        inv_res = max(inv_res, float(np.linalg.norm(K2 - K.epsilon * np.eye(n)) / math.sqrt(n)))
        met_res = max(met_res, float(np.linalg.norm(pulled - K.sigma * g0) / np.linalg.norm(g0)))
        eps_votes.append(np.trace(K2) / n)
        sig_votes.append(np.trace(np.linalg.solve(g0, pulled)) / n)
    return CompatibilityReport(
        involution_residual=inv_res,
        metric_residual=met_res,
        epsilon=K.epsilon,
        sigma=K.sigma,
        detected_epsilon=_sign(_fsum(eps_votes)),
        detected_sigma=_sign(_fsum(sig_votes)),
        tolerance=tol,
    )


class TwinField(JetField):
    """h(X, Y) = g(KX, Y); a metric when eps*sigma = 1, a two-form otherwise."""

    def __init__(self, g, K):
        self.g = g
        self.K = K
        self.symmetry = K.epsilon * K.sigma
        self.kind = "metric" if self.symmetry == 1 else "two-form"

        def func(point, order):
            return J.einsum("am,an->mn", K.taylor(point, order), g.taylor(point, order))

        super().__init__(g.chart, func, name=f"twin({g.name})",
                         epsilon=K.epsilon, sigma=K.sigma)


def _default_plan(chart, count: int = 8) -> SamplePlan | None:
    if chart.domain_hints is None:
        return None
    return SamplePlan.draw(chart, count, seed=0)


def _require_compatible(g, K, plan, tol) -> CompatibilityReport | None:
    plan = plan if plan is not None else _default_plan(g.chart)
    if plan is None:
        _same_chart(g, K)
        return None
    report = check_k_compatibility(g, K, plan, tol)
    if not report.passed:
        raise CompatibilityError(
            f"(g, K) is not compatible: |K^2 - eps I| = {report.involution_residual:.3e}, "
            f"|g(K.,K.) - sigma g| = {report.metric_residual:.3e}"
        )
    return report


def twin_field(g, K, plan: SamplePlan | None = None, tol: float = FIRST_ORDER_TOL) -> TwinField:
    _require_compatible(g, K, plan, tol)
    return TwinField(g, K)


def psi_tensor(g, K, point) -> PointTensor:
    """psi_{a m v} = nabla_a h_{m v} with h the twin of g."""
    _same_chart(g, K)
    geo = LocalGeometry(g, point, order=1)
    h = TwinField(g, K).taylor(geo.point, 1)
    h0, dh, G = h.value, h.partials().value, geo.gamma
    data = dh - np.einsum("bam,bv->amv", G, h0) - np.einsum("bav,mb->amv", G, h0)
    return PointTensor("psi", "___", data, geo.point)


def psi_symmetry_residuals(psi: np.ndarray, K0: np.ndarray, epsilon: int, sigma: int) -> tuple[float, float]:
    """Residuals of psi(X,Y,Z) = -sigma psi(X,KY,KZ) and psi(X,Y,Z) = sigma eps psi(X,Z,Y)."""
    scale = max(np.abs(psi).max(), 1.0)
    twisted = np.einsum("abc,bm,cv->amv", psi, K0, K0)
    r1 = np.abs(psi + sigma * twisted).max() / scale
    r2 = np.abs(psi - sigma * epsilon * psi.transpose(0, 2, 1)).max() / scale
    return float(r1), float(r2)


def nijenhuis(K, point, tol: float = SECOND_ORDER_TOL) -> PointTensor:
    point = np.asarray(point, dtype=float)
    kj = K.taylor(point, 1)
    K0 = kj.value
    n = K0.shape[0]
    res = float(np.linalg.norm(K0 @ K0 - K.epsilon * np.eye(n)) / math.sqrt(n))
    if res > tol:
        raise PreconditionError(f"K^2 != {K.epsilon:+d} I at {tuple(point)}", res)
    return PointTensor("Nijenhuis", "^__", nijenhuis_array(K0, kj.partials().value), point)


@dataclass(frozen=True)
class KahlerReport:
    max_nabla_k: float
    max_nijenhuis: float
    tolerance: float

    @property
    def parallel(self) -> bool:
        return self.max_nabla_k <= self.tolerance

    @property
    def passed(self) -> bool:
        # parallel K forces N = 0; a nonzero N here would mean a broken kernel
        return self.parallel and self.max_nijenhuis <= self.tolerance


def kahler_like_check(g, K, plan: SamplePlan, tol: float = SECOND_ORDER_TOL,
                      compat_tol: float = FIRST_ORDER_TOL) -> KahlerReport:
    """max |nabla K| over the plan, together with max |N|."""
    _require_compatible(g, K, plan, compat_tol)
    nab, nij = 0.0, 0.0
    for p in plan:
        geo = LocalGeometry(g, p, order=1)
        kj = K.taylor(geo.point, 1)
        K0, dK = kj.value, kj.partials().value
        nab = max(nab, float(np.linalg.norm(nabla_k_array(K0, dK, geo.gamma))))
        nij = max(nij, float(np.linalg.norm(nijenhuis_array(K0, dK))))
    return KahlerReport(nab, nij, tol)


def _require_kahler_like(g, K, plan, tol, compat_tol) -> None:
    report = kahler_like_check(g, K, plan, tol, compat_tol)
    if not report.parallel:
        raise HypothesisError(
            f"K is not parallel for the Levi-Civita connection: max |nabla K| = {report.max_nabla_k:.3e}"
        )


@dataclass(frozen=True)
class IdentityReport:
    residuals: dict
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(v <= self.tolerance for v in self.residuals.values())


def curvature_identities_at(geo: LocalGeometry, K0: np.ndarray, epsilon: int, sigma: int) -> dict:
    """The four curvature/K identities at one point, each relative to max(|R|, 1)."""
    R, S = geo.riemann, geo.ricci
    rs = max(np.linalg.norm(R), 1.0)
    ss = max(np.linalg.norm(S), 1.0)
    commute = np.einsum("lavs,am->lmvs", R, K0) - np.einsum("la,amvs->lmvs", K0, R)
    pulled = np.einsum("av,bs,lmab->lmvs", K0, K0, R) - sigma * R
    ric_pulled = np.einsum("am,bv,ab->mv", K0, K0, S) - sigma * S
    trace = np.einsum("ra,armb,bv->mv", K0, R, K0)
    return {
        "R_commutes_with_K": float(np.linalg.norm(commute) / rs),
        "R_K_invariant": float(np.linalg.norm(pulled) / rs),
        "Ricci_K_invariant": float(np.linalg.norm(ric_pulled) / ss),
        "Ricci_trace_formula": float(np.linalg.norm((sigma - epsilon) * S - trace) / ss),
    }


def curvature_k_identities(g, K, plan: SamplePlan, tol: float = SECOND_ORDER_TOL,
                           compat_tol: float = FIRST_ORDER_TOL) -> IdentityReport:
    _require_kahler_like(g, K, plan, tol, compat_tol)
    worst: dict = {}
    for p in plan:
        geo = LocalGeometry(g, p, order=2)
        res = curvature_identities_at(geo, K.at(geo.point), K.epsilon, K.sigma)
        for k, v in res.items():
            worst[k] = max(worst.get(k, 0.0), v)
    return IdentityReport(worst, tol)


@dataclass(frozen=True)
class RicciTwinReport:
    lam: float
    residual: float
    tolerance: float

    @property
    def proportional(self) -> bool:
        return self.residual <= self.tolerance


def ricci_twin_check(g, K, plan: SamplePlan, tol: float = SECOND_ORDER_TOL,
                     compat_tol: float = FIRST_ORDER_TOL) -> RicciTwinReport:
    """Fit F(X,Y) = S(KX,Y) against lambda h(X,Y) = lambda g(KX,Y)."""
    _require_kahler_like(g, K, plan, tol, compat_tol)
    num, den, pairs = [], [], []
    for p in plan:
        geo = LocalGeometry(g, p, order=2)
        K0 = K.at(geo.point)
        F = K0.T @ geo.ricci
        h = K0.T @ geo.g
        num.append(_raised_pair(geo.ginv, F, h))
        den.append(_raised_pair(geo.ginv, h, h))
        pairs.append((F, h))
    lam = _fsum(num) / _fsum(den)
    residual = max(float(np.linalg.norm(F - lam * h) / np.linalg.norm(h)) for F, h in pairs)
    return RicciTwinReport(float(lam), residual, tol)
