"""Split and warped products, and almost-product structures from a background metric."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dsl import Call, ChartSpec, ScalarExpr, mul, num, parse_scalar, rebind
from .errors import ChartMismatchError, PreconditionError
from .fields import JetField, KField, MetricField, SamplePlan
from .jets import Jet
from .tensor_calc import FIRST_ORDER_TOL, SECOND_ORDER_TOL, EinsteinFit, einstein_residual


@dataclass(frozen=True)
class ProductSpec:
    factor1: MetricField
    factor2: MetricField
    warp: ScalarExpr | str | None = None

    def __post_init__(self):
        shared = set(self.factor1.chart.coords) & set(self.factor2.chart.coords)
        if shared:
            raise ChartMismatchError(f"factor charts share coordinates {sorted(shared)}")
        if isinstance(self.warp, str):
            object.__setattr__(self, "warp", parse_scalar(self.warp, self.factor1.chart))
        elif self.warp is not None and self.warp.coords != self.factor1.chart.coords:
            raise ChartMismatchError("the warp function must live on the first factor's chart")

    @property
    def chart(self) -> ChartSpec:
        c1, c2 = self.factor1.chart, self.factor2.chart
        hints = None
        if c1.domain_hints is not None and c2.domain_hints is not None:
            hints = c1.domain_hints + c2.domain_hints
        return ChartSpec(f"{c1.name}x{c2.name}", c1.coords + c2.coords, hints)

    @property
    def split(self) -> int:
        return self.factor1.dim


def _block_components(spec: ProductSpec, scale2=None) -> list[list[ScalarExpr]]:
    coords = spec.chart.coords
    k, n = spec.split, len(coords)
    zero = ScalarExpr(num(0), coords)
    rows = [[zero] * n for _ in range(n)]
    for i in range(k):
        for j in range(k):
            rows[i][j] = rebind(spec.factor1.components[i][j], coords)
    for i in range(n - k):
        for j in range(n - k):
            e = rebind(spec.factor2.components[i][j], coords)
            if scale2 is not None:
                e = ScalarExpr(mul(scale2, e.root), coords)
            rows[k + i][k + j] = e
    return rows


def product_k(spec: ProductSpec) -> KField:
    """P = -1 on the first factor, +1 on the second."""
    n, k = spec.chart.dim, spec.split
    return KField.constant(spec.chart, np.diag([-1.0] * k + [1.0] * (n - k)), 1, 1, name="P")


def build_product(spec: ProductSpec) -> tuple[MetricField, KField]:
    if spec.warp is not None:
        raise ValueError("build_product takes an unwarped spec; use build_warped")
    chart = spec.chart
    g = MetricField(chart, _block_components(spec), name=chart.name)
    return g, product_k(spec)


def build_warped(spec: ProductSpec) -> MetricField:
    """g1 + exp(2 theta) g2; without a warp this is the plain product metric."""
    chart = spec.chart
    if spec.warp is None:
        return MetricField(chart, _block_components(spec), name=chart.name)
    theta = rebind(spec.warp, chart.coords).root
    factor = Call("exp", mul(num(2), theta))
    return MetricField(chart, _block_components(spec, factor), name=f"{chart.name}_warped")


def factor_points(spec: ProductSpec, plan: SamplePlan) -> tuple[SamplePlan, SamplePlan]:
    k = spec.split
    return SamplePlan(plan.points[:, :k], plan.seed), SamplePlan(plan.points[:, k:], plan.seed)


@dataclass(frozen=True)
class ProductEinsteinReport:
    factor1: EinsteinFit
    factor2: EinsteinFit
    joint: EinsteinFit
    tolerance: float

    @property
    def factors_einstein(self) -> bool:
        return (
            self.factor1.residual <= self.tolerance
            and self.factor2.residual <= self.tolerance
            and abs(self.factor1.gamma - self.factor2.gamma) <= self.tolerance
        )

    @property
    def joint_einstein(self) -> bool:
        return self.joint.residual <= self.tolerance

    @property
    def consistent(self) -> bool:
        return self.factors_einstein == self.joint_einstein


def einstein_product_criterion(spec: ProductSpec, plan: SamplePlan,
                               tol: float = SECOND_ORDER_TOL) -> ProductEinsteinReport:
    """Joint Einstein condition against both factors being Einstein with one gamma."""
    g, _ = build_product(spec)
    p1, p2 = factor_points(spec, plan)
    return ProductEinsteinReport(
        factor1=einstein_residual(spec.factor1, p1),
        factor2=einstein_residual(spec.factor2, p2),
        joint=einstein_residual(g, plan),
        tolerance=tol,
    )


# --------------------------------------------------------- riemannianize
def _sign_split(g0: np.ndarray, h00: np.ndarray, point) -> tuple[np.ndarray, np.ndarray]:
    """P = sign(h0^-1 g) and h = g P at one point."""
    try:
        w, V = scipy.linalg.eigh(g0, h00)  # V^T h0 V = I
    except np.linalg.LinAlgError:
        raise PreconditionError(f"background metric is not positive definite at {tuple(point)}") from None
    scale = max(np.abs(w).max(), 1e-300)
    if np.min(np.abs(w)) <= 1e-12 * scale:
        raise PreconditionError(f"g is degenerate at {tuple(point)}", float(np.min(np.abs(w))))
    P = V @ np.diag(np.sign(w)) @ V.T @ h00
    h = h00 @ V @ np.diag(np.abs(w)) @ V.T @ h00
    return P, 0.5 * (h + h.T)


@dataclass
class Riemannianization:
    P: JetField
    h: JetField
    residuals: dict
    trivial: bool

    def __iter__(self):
        return iter((self.P, self.h))


def riemannianize(g, h0, plan: SamplePlan, tol: float = FIRST_ORDER_TOL) -> Riemannianization:
    """Riemannian h and almost-product P with g(X, Y) = h(PX, Y) and h(P., P.) = h.

    The construction is pointwise: P is the sign of the h0-self-adjoint
    operator h0^-1 g, so the returned fields carry values only.
    """
    n = g.dim

    def at(point):
        point = np.asarray(point, dtype=float)
        h00 = h0.at(point)
        if np.linalg.eigvalsh(0.5 * (h00 + h00.T)).min() <= 0:
            raise PreconditionError(f"background metric is not positive definite at {tuple(point)}")
        return _sign_split(g.at(point), h00, point)

    P_field = JetField(g.chart, lambda p, order: Jet.constant(at(p)[0], n, order),
                       name="P", max_order=0, epsilon=1, sigma=1)
    h_field = JetField(g.chart, lambda p, order: Jet.constant(at(p)[1], n, order),
                       name="h", max_order=0)

    res = {"P_squared": 0.0, "h_invariant": 0.0, "g_reconstruct": 0.0, "h_min_eig": np.inf}
    trivial = True
    eye = np.eye(n)
    for p in plan:
        P, h = at(p)
        g0 = g.at(p)
        hs = np.linalg.norm(h)
        res["P_squared"] = max(res["P_squared"], float(np.linalg.norm(P @ P - eye)))
        res["h_invariant"] = max(res["h_invariant"], float(np.linalg.norm(P.T @ h @ P - h) / hs))
        res["g_reconstruct"] = max(res["g_reconstruct"], float(np.linalg.norm(P.T @ h - g0) / hs))
        res["h_min_eig"] = min(res["h_min_eig"], float(np.linalg.eigvalsh(h).min()))
        if not (np.allclose(P, eye, atol=tol) or np.allclose(P, -eye, atol=tol)):
            trivial = False
    return Riemannianization(P_field, h_field, res, trivial)
