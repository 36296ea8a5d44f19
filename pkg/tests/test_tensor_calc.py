import functools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twinmetric.antikahler import HolomorphicMetricField, canonical_j, complex_sphere_metric, realify
from twinmetric.dsl import ChartSpec
from twinmetric.errors import (
    ChartMismatchError,
    CompatibilityError,
    DegenerateMetricError,
    HypothesisError,
    PreconditionError,
)
from twinmetric.fields import KField, MetricField, SamplePlan
from twinmetric.product_structures import ProductSpec, build_warped, product_k
from twinmetric.tensor_calc import (
    bianchi_residual,
    check_k_compatibility,
    christoffel,
    covariant_derivative_k,
    curvature_k_identities,
    einstein_residual,
    kahler_like_check,
    metricity_residual,
    nijenhuis,
    psi_symmetry_residuals,
    psi_tensor,
    ricci,
    ricci_twin_check,
    riemann,
    scalar_curvature,
    twin_field,
)

from builders import flat, sphere2, sphere3, twisted_j
from oracles import SympyGeometry, sectional_curvature_2d, sympy_nijenhuis

seeds = st.integers(0, 2 ** 32 - 1)

XYZ = ChartSpec("xyz", ("x", "y", "z"), ((-1.0, 1.0),) * 3)


@functools.lru_cache(maxsize=None)
def geometry_oracle(seed: int) -> SympyGeometry:
    return SympyGeometry("x y z", random_metric(seed)[1])


def random_metric(seed: int) -> tuple[MetricField, list[list[str]]]:
    """A diagonally dominant, non-constant Riemannian metric on XYZ."""
    rng = np.random.default_rng(seed)
    coords = XYZ.coords
    rows = [["0"] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(i, 3):
            a, b = np.round(rng.uniform(-0.3, 0.3, 2), 3)
            k = coords[rng.integers(3)]
            l = coords[rng.integers(3)]
            text = f"{a}*sin({b} + {k}*{l}) + {b}*{l}^2"
            if i == j:
                text = f"3 + {text}"
            rows[i][j] = rows[j][i] = text
    return MetricField(XYZ, rows), rows


def warped_fixture():
    line = MetricField(ChartSpec("line", ("t",), ((-1.0, 1.0),)), [["1"]])
    spec = ProductSpec(line, flat(3, tag="u"), warp="t")
    return build_warped(spec), product_k(spec), spec


def polar_plane():
    chart = ChartSpec("polar", ("r", "phi"), ((0.5, 3.0), (-3.0, 3.0)))
    return MetricField(chart, [["1", "0"], ["0", "r^2"]])


class TestChristoffel:
    def test_flat(self):
        assert not christoffel(flat(3), [0.1, 0.2, 0.3]).data.any()

    def test_sphere(self, s2):
        G = christoffel(s2, [math.pi / 4, 0.3]).data
        assert G[0, 1, 1] == pytest.approx(-0.5, abs=1e-14)
        assert G[1, 0, 1] == pytest.approx(1.0, abs=1e-14)
        assert G[1, 1, 0] == G[1, 0, 1]

    def test_polar(self):
        G = christoffel(polar_plane(), [2.0, 0.1]).data
        assert G[0, 1, 1] == -2.0
        assert G[1, 0, 1] == 0.5

    def test_degenerate(self):
        g = MetricField(XYZ, [["x", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]])
        with pytest.raises(DegenerateMetricError) as info:
            christoffel(g, [0.0, 0.1, 0.2])
        assert info.value.det_value == 0.0

    @given(seeds, st.tuples(*[st.floats(-0.9, 0.9)] * 3))
    def test_matches_sympy(self, seed, p):
        g, _ = random_metric(seed % 8)
        oracle = geometry_oracle(seed % 8)
        np.testing.assert_allclose(christoffel(g, p).data, oracle.christoffel_at(p), atol=1e-12)


class TestCurvature:
    def test_flat_zero(self):
        assert not riemann(flat(4), [0.0] * 4).data.any()
        assert not ricci(flat(4), [0.0] * 4).data.any()

    def test_polar_flat(self):
        assert np.abs(riemann(polar_plane(), [1.3, 0.2]).data).max() <= 1e-14

    def test_product_of_flats(self):
        spec = ProductSpec(flat(2, tag="a"), flat(2, tag="b"))
        assert not riemann(build_warped(spec), [0.1] * 4).data.any()

    def test_sphere_sectional_curvature(self, s2, s2_plan):
        for p in s2_plan:
            R = riemann(s2, p).data
            g0 = s2.at(p)
            R_lower = np.einsum("la,amvs->lmvs", g0, R)
            assert sectional_curvature_2d(R_lower[0, 1, 0, 1], g0) == pytest.approx(1.0, abs=1e-12)

    def test_sphere_ricci_and_scalar(self, s2, s2_plan):
        for p in s2_plan:
            np.testing.assert_allclose(ricci(s2, p).data, s2.at(p), atol=1e-12)
            assert scalar_curvature(s2, p) == pytest.approx(2.0, abs=1e-12)

    def test_sphere3_matches_sympy(self):
        g = sphere3()
        oracle = SympyGeometry("a b c", g.text())
        p = [0.9, 1.7, 0.4]
        np.testing.assert_allclose(riemann(g, p).data, oracle.riemann_at(p), atol=1e-12)
        np.testing.assert_allclose(ricci(g, p).data, oracle.ricci_at(p), atol=1e-12)

    @given(seeds, st.tuples(*[st.floats(-0.9, 0.9)] * 3))
    def test_random_matches_sympy(self, seed, p):
        g, _ = random_metric(seed % 8)
        oracle = geometry_oracle(seed % 8)
        np.testing.assert_allclose(riemann(g, p).data, oracle.riemann_at(p), atol=1e-10)

    @given(seeds, st.tuples(*[st.floats(-0.9, 0.9)] * 3))
    def test_structural_identities(self, seed, p):
        g, _ = random_metric(seed)
        G = christoffel(g, p).data
        assert np.abs(G - G.transpose(0, 2, 1)).max() == 0.0
        assert metricity_residual(g, p) <= 1e-9
        R = riemann(g, p).data
        assert np.abs(R + R.transpose(0, 1, 3, 2)).max() <= 1e-12
        assert bianchi_residual(g, p) <= 1e-9
        S = ricci(g, p).data
        assert np.abs(S - S.T).max() <= 1e-10


class TestEinstein:
    def test_flat(self):
        fit = einstein_residual(flat(3), SamplePlan.draw(flat(3).chart, 8))
        assert fit.gamma == 0.0 and fit.residual == 0.0

    def test_sphere2(self, s2, s2_plan):
        fit = einstein_residual(s2, s2_plan)
        assert abs(fit.gamma - 1) <= 1e-8 and fit.residual <= 1e-8

    def test_sphere3(self):
        g = sphere3()
        fit = einstein_residual(g, SamplePlan.draw(g.chart, 16, seed=4))
        assert abs(fit.gamma - 2) <= 1e-8 and fit.residual <= 1e-8

    def test_unequal_product_not_einstein(self, unequal_product):
        _, g, _ = unequal_product
        assert einstein_residual(g, SamplePlan.draw(g.chart, 16, seed=5)).residual >= 0.1

    @given(st.permutations(range(16)), st.integers(1, 16))
    def test_gamma_stable_under_subsets(self, order, size):
        g = sphere2()
        plan = SamplePlan.draw(g.chart, 16, seed=6)
        full = einstein_residual(g, plan).gamma
        part = einstein_residual(g, plan.subset(list(order[:size]))).gamma
        assert abs(full - part) <= 1e-8


class TestCompatibility:
    def chart2(self):
        return ChartSpec("ab", ("a", "b"), ((-1.0, 1.0),) * 2)

    def test_split_signature_detects_sigma(self):
        c = self.chart2()
        g = MetricField(c, [["1", "0"], ["0", "-1"]])
        K = KField.constant(c, [[0, 1], [1, 0]], 1, -1)
        rep = check_k_compatibility(g, K, SamplePlan.draw(c, 4))
        assert rep.passed and rep.detected_epsilon == 1 and rep.detected_sigma == -1
        wrong = KField.constant(c, [[0, 1], [1, 0]], 1, 1)
        assert not check_k_compatibility(g, wrong, SamplePlan.draw(c, 4)).passed

    def test_realified_constant(self):
        G = HolomorphicMetricField(("z1", "z2"), [["1 + 2*I", "0.5"], ["0.5", "-1 + I"]])
        R = realify(G)
        rep = check_k_compatibility(R.metric, R.J, G.plan(4))
        assert rep.involution_residual == 0.0 and rep.metric_residual == 0.0
        assert (rep.detected_epsilon, rep.detected_sigma) == (-1, -1)

    def test_identity(self, s2, s2_plan):
        K = KField.constant(s2.chart, np.eye(2), 1, 1)
        rep = check_k_compatibility(s2, K, s2_plan)
        assert rep.passed and (rep.detected_epsilon, rep.detected_sigma) == (1, 1)

    def test_chart_mismatch(self, s2):
        with pytest.raises(ChartMismatchError):
            check_k_compatibility(s2, KField.constant(self.chart2(), np.eye(2), 1, 1), SamplePlan.draw(s2.chart, 2))


class TestTwin:
    def test_identity(self):
        c = ChartSpec("ab", ("a", "b"), ((-1.0, 1.0),) * 2)
        h = twin_field(MetricField(c, [["1", "0"], ["0", "1"]]), KField.constant(c, np.eye(2), 1, 1))
        assert h.kind == "metric"
        np.testing.assert_array_equal(h.at([0.1, 0.2]), np.eye(2))

    def test_split_signature_j(self):
        g = flat(4, signs=[1, 1, -1, -1])
        J0 = canonical_j(2)
        h = twin_field(g, KField.constant(g.chart, J0, -1, -1))
        assert h.kind == "metric"
        v = h.at([0.0] * 4)
        np.testing.assert_array_equal(v, v.T)

    def test_hermitian_two_form(self):
        g = flat(2)
        h = twin_field(g, KField.constant(g.chart, [[0, -1], [1, 0]], -1, 1))
        assert h.kind == "two-form"
        v = h.at([0.0, 0.0])
        np.testing.assert_array_equal(v, -v.T)
        assert v.any()

    def test_incompatible(self):
        g = flat(2)
        with pytest.raises(CompatibilityError):
            twin_field(g, KField.constant(g.chart, [[0, -1], [1, 0]], -1, -1))

    def test_symmetries_on_product(self, s2xs2, s2xs2_plan):
        _, g, P = s2xs2
        h = twin_field(g, P)
        for p in s2xs2_plan:
            v, K0 = h.at(p), P.at(p)
            np.testing.assert_allclose(v, v.T, atol=0)
            np.testing.assert_allclose(K0.T @ v @ K0, v, atol=1e-15)


class TestPsiAndNijenhuis:
    def test_psi_zero_on_product(self, s2xs2, s2xs2_plan):
        _, g, P = s2xs2
        for p in s2xs2_plan:
            assert psi_tensor(g, P, p).norm() <= 1e-12

    def test_psi_nonzero_on_warped(self):
        g, P, spec = warped_fixture()
        plan = SamplePlan.draw(spec.chart, 8, seed=7)
        for p in plan:
            psi = psi_tensor(g, P, p)
            assert psi.norm() > 1e-3
            r1, r2 = psi_symmetry_residuals(psi.data, P.at(p), 1, 1)
            assert max(r1, r2) <= 1e-8

    def test_psi_zero_for_constant_fields(self):
        g = flat(4, signs=[1, 1, -1, -1])
        assert psi_tensor(g, KField.constant(g.chart, canonical_j(2), -1, -1), [0.1] * 4).norm() == 0.0

    @given(st.tuples(*[st.floats(-0.9, 0.9)] * 4))
    def test_psi_symmetries_realified(self, p):
        R = realify(complex_sphere_metric(2))
        p = np.array(p) * 0.25
        psi = psi_tensor(R.metric, R.J, p).data
        r1, r2 = psi_symmetry_residuals(psi, R.J.at(p), -1, -1)
        assert max(r1, r2) <= 1e-8

    def test_nijenhuis_constant_and_identity(self):
        g = flat(4)
        for K in (KField.constant(g.chart, canonical_j(2), -1, -1),
                  KField.constant(g.chart, np.eye(4), 1, 1),
                  KField.constant(g.chart, -np.eye(4), 1, 1)):
            assert nijenhuis(K, [0.3, -0.2, 0.1, 0.0]).norm() == 0.0

    def test_twisted_matches_bracket_oracle(self):
        K = twisted_j()
        p = [0.1, -0.2, 0.3, 0.05]
        N = nijenhuis(K, p).data
        comps = [["0", "0", "-1", "-r"], ["0", "0", "0", "-1"], ["1", "-r", "0", "0"], ["0", "1", "0", "0"]]
        np.testing.assert_allclose(N, sympy_nijenhuis("p q r s", comps, -1, p), atol=1e-13)
        # eight unit entries and two entries equal to +-r
        assert np.linalg.norm(N) == pytest.approx(math.sqrt(8 + 2 * 0.3 ** 2), abs=1e-14)

    def test_non_involutive(self):
        g = flat(2)
        K = KField(g.chart, [["1", "x0"], ["0", "1"]], 1, 1)
        with pytest.raises(PreconditionError):
            nijenhuis(K, [0.5, 0.0])
        # K = I at the origin, so the precondition holds there
        assert nijenhuis(K, [0.0, 0.0]).data.shape == (2, 2, 2)

    @given(seeds, st.tuples(*[st.floats(-0.9, 0.9)] * 3))
    def test_conjugated_involution(self, seed, p):
        # K = T J0 T^-1 with T depending on x: bracket oracle and antisymmetry
        rng = np.random.default_rng(seed)
        c = np.round(rng.uniform(-0.5, 0.5, 3), 3)
        chart = ChartSpec("xyw", ("x", "y", "w"), ((-1.0, 1.0),) * 3)
        # on R^3 use a product involution diag(1, -1, -1) sheared by T = [[1, f, 0], [0, 1, 0], [0, 0, 1]]
        f = f"{c[0]}*x + {c[1]}*y*w + {c[2]}*w^2"
        rows = [["1", f"2*({f})", "0"], ["0", "-1", "0"], ["0", "0", "-1"]]
        K = KField(chart, rows, 1, 1)
        N = nijenhuis(K, p).data
        np.testing.assert_array_equal(N, -N.transpose(0, 2, 1))
        np.testing.assert_allclose(N, sympy_nijenhuis("x y w", rows, 1, p), atol=1e-12)


class TestKahlerLike:
    def test_product_passes(self, s2xs2, s2xs2_plan):
        _, g, P = s2xs2
        rep = kahler_like_check(g, P, s2xs2_plan)
        assert rep.passed and rep.max_nijenhuis == 0.0

    def test_realified_passes(self, csphere2, csphere2_plan):
        R = realify(csphere2)
        rep = kahler_like_check(R.metric, R.J, csphere2_plan)
        assert rep.passed and rep.max_nijenhuis <= 1e-8

    def test_warped_fails(self):
        g, P, spec = warped_fixture()
        rep = kahler_like_check(g, P, SamplePlan.draw(spec.chart, 8, seed=8))
        assert not rep.passed and rep.max_nabla_k > 1e-3

    def test_covariant_derivative_shape(self, s2xs2):
        _, g, P = s2xs2
        assert covariant_derivative_k(g, P, [1.0, 0.2, 1.3, 0.4]).data.shape == (4, 4, 4)


class TestCurvatureIdentities:
    def test_product(self, s2xs2, s2xs2_plan):
        _, g, P = s2xs2
        rep = curvature_k_identities(g, P, s2xs2_plan)
        assert rep.passed and len(rep.residuals) == 4

    def test_complex_sphere(self, csphere2, csphere2_plan):
        R = realify(csphere2)
        assert curvature_k_identities(R.metric, R.J, csphere2_plan).passed

    def test_flat(self):
        g = flat(4, signs=[1, 1, -1, -1])
        K = KField.constant(g.chart, canonical_j(2), -1, -1)
        rep = curvature_k_identities(g, K, SamplePlan.draw(g.chart, 4))
        assert all(v == 0.0 for v in rep.residuals.values())

    def test_hypothesis_error(self):
        g, P, spec = warped_fixture()
        with pytest.raises(HypothesisError):
            curvature_k_identities(g, P, SamplePlan.draw(spec.chart, 4, seed=9))


class TestRicciTwin:
    def test_einstein_product(self, s2xs2, s2xs2_plan):
        _, g, P = s2xs2
        rep = ricci_twin_check(g, P, s2xs2_plan)
        assert rep.proportional and abs(rep.lam - 1) <= 1e-8

    def test_unequal_radii(self, unequal_product):
        _, g, P = unequal_product
        rep = ricci_twin_check(g, P, SamplePlan.draw(g.chart, 16, seed=10))
        assert rep.residual >= 0.1 and not rep.proportional

    def test_flat(self):
        g = flat(4)
        K = KField.constant(g.chart, np.diag([-1.0, -1.0, 1.0, 1.0]), 1, 1)
        rep = ricci_twin_check(g, K, SamplePlan.draw(g.chart, 4))
        assert rep.lam == 0.0 and rep.residual == 0.0

    def test_both_directions_agree_with_einstein(self, s2xs2, unequal_product):
        for _, g, P in (s2xs2, unequal_product):
            plan = SamplePlan.draw(g.chart, 8, seed=11)
            einstein = einstein_residual(g, plan).residual <= 1e-8
            assert ricci_twin_check(g, P, plan).proportional == einstein
