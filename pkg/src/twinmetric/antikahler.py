"""Holomorphic metrics, their realification, and anti-Kähler checks.

A holomorphic metric is an m x m symmetric matrix of expressions in
complex coordinates z1..zm.  Its real form lives on the 2m-dimensional
chart (re_z1..re_zm, im_z1..im_zm) with z = x + i y, and

    2 Re(g_ab dz^a dz^b) = 2 [[A, -B], [-B, -A]]   (A = Re g, B = Im g)

in (dx, dy) components.  The complex structure is J dx-direction -> dy,
i.e. J = [[0, -I], [I, 0]], with eps = -1 and sigma = -1.

Component expressions may also mention ``<z>bar``, the conjugate
variable.  Such metrics are not holomorphic; they are accepted only so
that non-holomorphic controls can be written down and realified.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .dsl import ChartSpec, Const, Neg, ScalarExpr, BinOp, Call, Pow, uses_coordinate
from .errors import DegenerateMetricError, NonAnalyticError, PreconditionError
from .fields import JetField, KField, SamplePlan, _eval_matrix, _parse_matrix
from .jets import Jet
from .matrix_core import signature
from .tensor_calc import (
    SECOND_ORDER_TOL,
    EinsteinFit,
    LocalGeometry,
    _fsum,
    _raised_pair,
    _real_if_close,
    christoffel_jet,
    einstein_residual,
    ricci_jet,
    riemann_jet,
)

REAL_HALF_WIDTH = 0.25
HOLOMORPHY_TOL = 1e-9


class HolomorphicMetricField:
    def __init__(self, coords: Sequence[str], components, params: Mapping[str, float] | None = None,
                 name: str = "G", half_width: float = REAL_HALF_WIDTH):
        coords = tuple(coords)
        self.m = len(coords)
        self.coords = coords
        self.name = name
        self.half_width = half_width
        # the parse chart carries conjugate symbols after the holomorphic ones
        self.parse_chart = ChartSpec(name, coords + tuple(f"{c}bar" for c in coords))
        if components and isinstance(components[0][0], ScalarExpr):
            self.components = tuple(tuple(r) for r in components)
        else:
            self.components = _parse_matrix(self.parse_chart, components, params or {}, self.m)
        for i in range(self.m):
            for j in range(i + 1, self.m):
                if self.components[i][j].root != self.components[j][i].root:
                    raise ValueError(f"holomorphic metric components ({i},{j}) and ({j},{i}) differ")

    @property
    def real_chart(self) -> ChartSpec:
        names = tuple(f"re_{c}" for c in self.coords) + tuple(f"im_{c}" for c in self.coords)
        h = self.half_width
        return ChartSpec(f"{self.name}_real", names, ((-h, h),) * (2 * self.m))

    def uses_conjugates(self) -> bool:
        return any(
            uses_coordinate(e, f"{c}bar") for row in self.components for e in row for c in self.coords
        )

    def taylor_complex(self, z, order: int = 2) -> Jet:
        """Jet of g_ab in the holomorphic variables z around the point z."""
        if self.uses_conjugates():
            raise NonAnalyticError(f"metric {self.name!r} depends on conjugate coordinates")
        z = np.asarray(z, dtype=complex)
        m = self.m
        zs = [Jet.variable(z[a], a, m, order, dtype=complex) for a in range(m)]
        # conjugate slots are never read (checked above); fill with constants
        zb = [Jet.constant(np.conj(z[a]), m, order, dtype=complex) for a in range(m)]
        return _eval_matrix(self.components, None, order, True, zs + zb)

    def taylor_real(self, point, order: int = 2) -> Jet:
        """Complex-valued jet of g_ab in the real variables (x, y)."""
        point = np.asarray(point, dtype=float)
        m = self.m
        xs = [Jet.variable(point[a], a, 2 * m, order, dtype=complex) for a in range(m)]
        ys = [Jet.variable(point[m + a], m + a, 2 * m, order, dtype=complex) for a in range(m)]
        zs = [x + 1j * y for x, y in zip(xs, ys)]
        zb = [x - 1j * y for x, y in zip(xs, ys)]
        return _eval_matrix(self.components, None, order, True, zs + zb)

    def at(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return self.taylor_real(np.concatenate([z.real, z.imag]), 0).value

    def conjugate(self) -> "HolomorphicMetricField":
        """The metric with conjugated coefficients, z -> conj(g(conj z))."""

        def walk(node):
            if isinstance(node, Const) and node.name == "I":
                return Neg(node)
            if isinstance(node, Neg):
                return Neg(walk(node.arg))
            if isinstance(node, BinOp):
                return BinOp(node.op, walk(node.left), walk(node.right))
            if isinstance(node, Pow):
                return Pow(walk(node.base), node.exponent)
            if isinstance(node, Call):
                return Call(node.func, walk(node.arg))
            return node

        comps = [[ScalarExpr(walk(e.root), e.coords) for e in row] for row in self.components]
        return HolomorphicMetricField(self.coords, comps, name=f"conj({self.name})",
                                      half_width=self.half_width)

    def plan(self, count: int = 64, seed: int = 0) -> SamplePlan:
        return SamplePlan.draw(self.real_chart, count, seed)


def complex_sphere_metric(m: int, half_width: float = REAL_HALF_WIDTH) -> HolomorphicMetricField:
    """g_ab = delta_ab + z_a z_b / (1 - z.z)."""
    if m < 1:
        raise ValueError("complex dimension must be at least 1")
    coords = tuple(f"z{a + 1}" for a in range(m))
    quad = " + ".join(f"{c}^2" for c in coords)
    rows = []
    for a in range(m):
        row = []
        for b in range(m):
            i, j = sorted((a, b))
            term = f"{coords[i]}*{coords[j]}/(1 - ({quad}))"
            row.append(f"1 + {term}" if a == b else term)
        rows.append(row)
    return HolomorphicMetricField(coords, rows, name=f"complex_sphere_{m}", half_width=half_width)


def _wirtinger_bar(jet: Jet, m: int) -> np.ndarray:
    """d/dzbar_c = (d/dx_c + i d/dy_c) / 2 of a real-variable jet; index c first."""
    grad = jet.partials().value
    return 0.5 * (grad[:m] + 1j * grad[m:])


def holomorphy_check(G: HolomorphicMetricField, plan: SamplePlan) -> float:
    """Largest |d g_ab / d zbar_c| over the plan, from Cauchy-Riemann combinations."""
    worst = 0.0
    for p in plan:
        jet = G.taylor_real(p, 1)
        g0 = jet.value
        if abs(np.linalg.det(g0)) <= 1e-12 * max(np.abs(g0).max(), 1e-300) ** G.m:
            raise DegenerateMetricError(float(abs(np.linalg.det(g0))), p)
        worst = max(worst, float(np.abs(_wirtinger_bar(jet, G.m)).max()))
    return worst


def realify_jet(gc: Jet) -> Jet:
    """2 [[A, -B], [-B, -A]] from the complex jet g = A + iB."""
    A, B = gc.real().coef, gc.imag().coef
    top = np.concatenate([A, -B], axis=1)
    bottom = np.concatenate([-B, -A], axis=1)
    return Jet(2.0 * np.concatenate([top, bottom], axis=0), gc.nvars, gc.order)


def canonical_j(m: int) -> np.ndarray:
    """J with J d/dx_a = d/dy_a and J d/dy_a = -d/dx_a (columns are images)."""
    eye, zero = np.eye(m), np.zeros((m, m))
    return np.block([[zero, -eye], [eye, zero]])


@dataclass
class RealifiedMetric:
    metric: JetField
    J: KField
    m: int
    source: HolomorphicMetricField

    def signature(self, point) -> tuple[int, int]:
        return signature(self.metric.at(point))


def realify(G: HolomorphicMetricField, plan: SamplePlan | None = None, check: bool = True,
            tol: float = HOLOMORPHY_TOL) -> RealifiedMetric:
    if check:
        if G.uses_conjugates():
            raise NonAnalyticError(f"metric {G.name!r} depends on conjugate coordinates")
        res = holomorphy_check(G, plan if plan is not None else G.plan(8))
        if res > tol:
            raise PreconditionError(f"metric {G.name!r} is not holomorphic", res)
    chart = G.real_chart
    field = JetField(chart, lambda p, order: realify_jet(G.taylor_real(p, order)),
                     name=f"realify({G.name})")
    K = KField.constant(chart, canonical_j(G.m), -1, -1, name="J")
    return RealifiedMetric(field, K, G.m, G)


# -------------------------------------------------------- holomorphic route
def complex_christoffel(G: HolomorphicMetricField, z) -> np.ndarray:
    """Gamma^c_{ab} of g_ab in the coordinate frame d/dz^a."""
    gj = G.taylor_complex(z, 1)
    if abs(np.linalg.det(gj.value)) <= 1e-14:
        raise DegenerateMetricError(float(abs(np.linalg.det(gj.value))), np.asarray(z))
    return christoffel_jet(gj).value


def _wirtinger_frames(m: int) -> tuple[np.ndarray, np.ndarray]:
    """L = d(x, y)/d(z, zbar) and its inverse d(z, zbar)/d(x, y)."""
    eye = np.eye(m)
    L = np.block([[0.5 * eye, 0.5 * eye], [-0.5j * eye, 0.5j * eye]])
    Linv = np.block([[eye, 1j * eye], [eye, -1j * eye]])
    return L, Linv


def christoffel_in_complex_frame(Gamma_real: np.ndarray, m: int) -> np.ndarray:
    """Transform real symbols to the (z, zbar) coordinate frame."""
    L, Linv = _wirtinger_frames(m)
    return np.einsum("cs,smv,ma,vb->cab", Linv, Gamma_real, L, L)


@dataclass(frozen=True)
class ComplexChristoffelReport:
    mixed_residual: float
    route_residual: float


def complex_christoffel_structure(G: HolomorphicMetricField, plan: SamplePlan) -> ComplexChristoffelReport:
    """Vanishing of mixed-type symbols of the realified metric, and agreement
    of its pure block with the holomorphic-route symbols."""
    m = G.m
    R = realify(G, plan, check=False)
    mask = np.ones((2 * m,) * 3, dtype=bool)
    mask[:m, :m, :m] = False
    mask[m:, m:, m:] = False
    mixed, route = 0.0, 0.0
    for p in plan:
        geo = LocalGeometry(R.metric, p, order=1)
        Gc = christoffel_in_complex_frame(geo.gamma, m)
        scale = max(np.abs(Gc).max(), 1.0)
        mixed = max(mixed, float(np.abs(Gc[mask]).max() / scale))
        z = p[:m] + 1j * p[m:]
        hol = complex_christoffel(G, z)
        route = max(route, float(np.abs(Gc[:m, :m, :m] - hol).max() / scale))
        route = max(route, float(np.abs(Gc[m:, m:, m:] - hol.conj()).max() / scale))
    return ComplexChristoffelReport(mixed, route)


def complex_ricci(G: HolomorphicMetricField, z) -> np.ndarray:
    gj = G.taylor_complex(z, 2)
    return ricci_jet(riemann_jet(christoffel_jet(gj))).value


@dataclass(frozen=True)
class ComplexEinsteinReport:
    complex_fit: EinsteinFit
    real_fit: EinsteinFit

    @property
    def gamma(self) -> float:
        return self.complex_fit.gamma

    @property
    def residual(self) -> float:
        return self.complex_fit.residual

    @property
    def route_gap(self) -> float:
        return float(abs(self.complex_fit.gamma - self.real_fit.gamma))


def complex_einstein_check(G: HolomorphicMetricField, plan: SamplePlan) -> ComplexEinsteinReport:
    """Ric(g_ab) = gamma g_ab in z alone, cross-checked on the realified metric."""
    m = G.m
    num, den, pairs = [], [], []
    for p in plan:
        z = p[:m] + 1j * p[m:]
        gj = G.taylor_complex(z, 2)
        g0 = gj.value
        if abs(np.linalg.det(g0)) <= 1e-14:
            raise DegenerateMetricError(float(abs(np.linalg.det(g0))), p)
        ric = ricci_jet(riemann_jet(christoffel_jet(gj))).value
        ginv = np.linalg.inv(g0)
        num.append(_raised_pair(ginv, ric, g0))
        den.append(_raised_pair(ginv, g0, g0))
        pairs.append((ric, g0))
    gamma = _real_if_close(_fsum(num) / _fsum(den))
    residual = max(float(np.linalg.norm(r - gamma * g) / np.linalg.norm(g)) for r, g in pairs)
    real = einstein_residual(realify(G, plan, check=False).metric, plan)
    return ComplexEinsteinReport(EinsteinFit(gamma, residual), real)


# ----------------------------------------------------- block-type checks
def z_basis(J0: np.ndarray) -> np.ndarray:
    """Columns Z_a = X_a - i J X_a, then their conjugates, X_a the first m axes."""
    J0 = np.asarray(J0, dtype=float)
    n = J0.shape[0]
    if n % 2 or not np.allclose(J0 @ J0, -np.eye(n), atol=1e-12):
        raise PreconditionError("J does not square to -I", float(np.linalg.norm(J0 @ J0 + np.eye(n))))
    m = n // 2
    X = np.eye(n)[:, :m]
    Z = X - 1j * (J0 @ X)
    E = np.concatenate([Z, Z.conj()], axis=1)
    if abs(np.linalg.det(E)) <= 1e-12:
        raise PreconditionError("Z vectors do not form a basis for this J")
    return E


@dataclass(frozen=True)
class BlockReport:
    metric_mixed: float
    ricci_mixed: float
    tolerance: float = SECOND_ORDER_TOL

    @property
    def passed(self) -> bool:
        return max(self.metric_mixed, self.ricci_mixed) <= self.tolerance


def _mixed_fraction(T: np.ndarray, E: np.ndarray, floor: float) -> float:
    m = E.shape[0] // 2
    TE = E.T @ T @ E
    return float(np.linalg.norm(TE[:m, m:]) / max(np.linalg.norm(TE), floor))


def antihermitian_block_check(g_real, J0, plan: SamplePlan, tol: float = SECOND_ORDER_TOL) -> BlockReport:
    """Mixed (a, bbar) blocks of g and Ric in the Z basis, relative to the full block."""
    J0 = J0.at(plan.points[0]) if hasattr(J0, "at") else np.asarray(J0)
    E = z_basis(J0)
    gm, rm = 0.0, 0.0
    for p in plan:
        geo = LocalGeometry(g_real, p, order=2)
        gnorm = np.linalg.norm(geo.g)
        gm = max(gm, _mixed_fraction(geo.g, E, 1e-300))
        # a Ricci tensor that vanishes to rounding has no meaningful type
        rm = max(rm, _mixed_fraction(geo.ricci, E, 1e-6 * gnorm))
    return BlockReport(gm, rm, tol)
