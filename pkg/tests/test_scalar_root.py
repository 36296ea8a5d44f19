import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twinmetric.errors import DegenerateRootError
from twinmetric.scalar_root import (
    LagrangianSpec,
    classify_roots,
    epsilon_of_root,
    quadratic_family,
    phi_coefficients,
)

from oracles import sign_scan_roots

seeds = st.integers(0, 2 ** 32 - 1)


def phi_value(spec, c):
    return spec.f_prime(c) * c - spec.n / 4 * spec.f(c)


class TestSpec:
    @pytest.mark.parametrize("coeffs,n", [((), 4), ((0.0, 0.0), 4), ((1.0,), 2), ((1.0,), 4.5)])
    def test_invalid(self, coeffs, n):
        with pytest.raises(ValueError):
            LagrangianSpec(coeffs, n)

    def test_phi_coefficients(self):
        # f = 1 + 2S + 3S^2, n = 4: phi = f'S - f = -1 + 0 S + 3 S^2
        np.testing.assert_array_equal(phi_coefficients(LagrangianSpec((1, 2, 3), 4)), [-1.0, 0.0, 3.0])


class TestClassify:
    def test_square_of_linear(self):
        spec = LagrangianSpec((64.0, 64.0, 16.0), 4)  # (4S + 8)^2
        rep = classify_roots(spec)
        by_c = {round(r.c, 9): r for r in rep.roots}
        assert set(by_c) == {2.0, -2.0}
        assert by_c[2.0].admissible and by_c[2.0].multiplicity == 1
        assert by_c[2.0].epsilon == 0.5
        assert not by_c[-2.0].admissible
        assert by_c[-2.0].f_prime_at_c == pytest.approx(0.0, abs=1e-9)

    def test_identically_degenerate(self):
        rep = classify_roots(LagrangianSpec((0.0, 0.0, 1.0), 8))
        assert rep.identically_degenerate and rep.roots == [] and rep.admissible == []

    def test_linear(self):
        # f = S - 6, n = 6: phi = S - (3/2)(S - 6) = -S/2 + 9
        rep = classify_roots(LagrangianSpec((-6.0, 1.0), 6))
        assert len(rep.roots) == 1
        r = rep.roots[0]
        assert r.c == pytest.approx(18.0, abs=1e-12)
        assert r.admissible and r.epsilon == pytest.approx(3.0, abs=1e-12)
        assert sign_scan_roots(phi_coefficients(LagrangianSpec((-6.0, 1.0), 6))) == pytest.approx([18.0])

    def test_almost_tangent_root(self):
        # f = S, n = 8: phi = S - 2S = -S, root c = 0 with f'(0) = 1
        rep = classify_roots(LagrangianSpec((0.0, 1.0), 8))
        (r,) = rep.roots
        assert r.c == 0.0 and r.almost_tangent and not r.admissible

    def test_double_root_inadmissible(self):
        # n = 12 gives phi_k = a_k (k - 3), so the target phi must have no S^3 term
        target = np.polynomial.polynomial.polyfromroots([1.0, 1.0, -2.0, 0.0])
        assert abs(target[3]) < 1e-15
        a = np.array([t / (k - 3) if k != 3 else 0.0 for k, t in enumerate(target)])
        spec = LagrangianSpec(tuple(a), 12)
        np.testing.assert_allclose(phi_coefficients(spec), target, atol=1e-15)
        rep = classify_roots(spec)
        by_c = {round(r.c, 6): r for r in rep.roots}
        assert by_c[1.0].multiplicity == 2 and not by_c[1.0].admissible
        assert by_c[-2.0].multiplicity == 1

    @pytest.mark.parametrize("n", [3, 4, 5, 6, 7])
    @pytest.mark.parametrize("c0", [-3, -2, -1, 1, 2, 3])
    def test_quadratic_family(self, n, c0):
        spec = quadratic_family(n, c0)
        rep = classify_roots(spec)
        simple = [r for r in rep.roots if abs(r.c - c0) <= 1e-9]
        degenerate = [r for r in rep.roots if abs(r.c - c0 * (n - 8) / n) <= 1e-9]
        assert len(simple) == 1 and simple[0].admissible
        assert simple[0].epsilon == pytest.approx(c0 / n, abs=1e-12)
        assert len(degenerate) == 1 and not degenerate[0].admissible
        eps = epsilon_of_root(simple[0].c, spec)
        assert abs(spec.f(c0) / (4 * spec.f_prime(c0)) - eps) <= 1e-9

    @given(seeds, st.integers(1, 6), st.integers(3, 10))
    def test_matches_sign_scan(self, seed, degree, n):
        rng = np.random.default_rng(seed)
        coeffs = rng.standard_normal(degree + 1)
        spec = LagrangianSpec(tuple(coeffs), n)
        phi = phi_coefficients(spec)
        rep = classify_roots(spec)
        if rep.identically_degenerate:
            return
        found = sorted(r.c for r in rep.roots)
        oracle = sign_scan_roots(phi)
        assert len(found) == len(oracle)
        for a, b in zip(found, oracle):
            assert abs(a - b) <= 1e-8 * max(1.0, abs(b))

    @given(seeds, st.integers(1, 6), st.integers(3, 10))
    def test_root_invariants(self, seed, degree, n):
        rng = np.random.default_rng(seed)
        spec = LagrangianSpec(tuple(rng.standard_normal(degree + 1)), n)
        rep = classify_roots(spec)
        scale = np.abs(phi_coefficients(spec)).sum()
        for r in rep.roots:
            assert abs(phi_value(spec, r.c)) <= 1e-9 * scale * max(1.0, abs(r.c)) ** degree
            assert r.epsilon == r.c / n
            assert r.admissible == (r.multiplicity == 1 and abs(r.f_prime_at_c) > 1e-10 * spec.norm
                                    and not r.almost_tangent)
            if r.admissible:
                assert abs(spec.f(r.c) / (4 * spec.f_prime(r.c)) - r.epsilon) <= 1e-9 * max(1.0, abs(r.epsilon))

    @given(seeds, st.integers(1, 6), st.integers(3, 10), st.floats(0.01, 100.0))
    def test_positive_scaling_invariance(self, seed, degree, n, lam):
        rng = np.random.default_rng(seed)
        coeffs = rng.standard_normal(degree + 1)
        a = classify_roots(LagrangianSpec(tuple(coeffs), n))
        b = classify_roots(LagrangianSpec(tuple(lam * coeffs), n))
        assert len(a.roots) == len(b.roots)
        for x, y in zip(a.roots, b.roots):
            assert abs(x.c - y.c) <= 1e-8 * max(1.0, abs(x.c))
            assert x.admissible == y.admissible and x.multiplicity == y.multiplicity


class TestEpsilon:
    def test_square_of_linear(self):
        spec = LagrangianSpec((64.0, 64.0, 16.0), 4)
        assert epsilon_of_root(2.0, spec) == 0.5
        assert spec.f(2.0) == 256 and spec.f_prime(2.0) == 128

    def test_linear(self):
        assert epsilon_of_root(18.0, LagrangianSpec((-6.0, 1.0), 6)) == 3.0

    def test_degenerate(self):
        with pytest.raises(DegenerateRootError):
            epsilon_of_root(-2.0, LagrangianSpec((64.0, 64.0, 16.0), 4))

    def test_not_a_root(self):
        with pytest.raises(DegenerateRootError):
            epsilon_of_root(1.0, LagrangianSpec((64.0, 64.0, 16.0), 4))
