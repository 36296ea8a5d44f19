"""Acceptance criteria, one test per criterion.

Each test prints its measured quantities; the conftest hook prints a
PASS/FAIL line per criterion at the end of the session.
"""

import time

import numpy as np
import pytest

from twinmetric.antikahler import (
    HolomorphicMetricField,
    antihermitian_block_check,
    complex_einstein_check,
    complex_sphere_metric,
    holomorphy_check,
    realify,
)
from twinmetric.cli import main
from twinmetric.config import Workspace
from twinmetric.fields import SamplePlan
from twinmetric.matrix_core import canonical_kg, canonical_kh, simultaneous_congruence
from twinmetric.palatini_pipeline import (
    PalatiniSolution,
    assemble,
    scaled_twin,
    verify_euler_lagrange,
)
from twinmetric.product_structures import ProductSpec, build_product, build_warped, product_k
from twinmetric.scalar_root import classify_roots, quadratic_family
from twinmetric.tensor_calc import (
    bianchi_residual,
    curvature_k_identities,
    einstein_residual,
    kahler_like_check,
    metricity_residual,
    nijenhuis,
    psi_symmetry_residuals,
    psi_tensor,
    ricci_twin_check,
    riemann,
)

from builders import (
    DEMO,
    flat,
    mixed_control,
    random_invertible,
    random_complex_pair,
    random_product_pair,
    sphere2,
    sphere3,
    twisted_j,
)
from test_antikahler import POLYNOMIAL

pytestmark = pytest.mark.acceptance


def test_criterion_1_product_congruence():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst, k_mismatch = 0.0, 0
    for _ in range(1000):
        n = int(rng.integers(2, 9))
        h, g, k = random_product_pair(rng, n)
        assert max(np.linalg.cond(h), np.linalg.cond(g)) <= 1e6
        dec = simultaneous_congruence(h, g)
        worst = max(worst, *dec.residuals(h, g))
        T = random_invertible(rng, n, 10.0)
        moved = simultaneous_congruence(T.T @ h @ T, T.T @ g @ T)
        k_mismatch += (dec.k != k) + (moved.k != k)
    elapsed = time.perf_counter() - start
    print(f"worst residual {worst:.3e}, k mismatches {k_mismatch}, {elapsed:.2f} s")
    assert worst <= 1e-9 and k_mismatch == 0 and elapsed <= 30


def test_criterion_2_complex_congruence():
    rng = np.random.default_rng(2)
    start = time.perf_counter()
    worst, worst_takagi, canonical_ok = 0.0, 0.0, True
    for _ in range(1000):
        m = int(rng.integers(1, 5))
        h, g = random_complex_pair(rng, m)
        dec = simultaneous_congruence(h, g)
        worst = max(worst, *dec.residuals(h, g))
        canonical_ok &= bool(np.array_equal(dec.D_h, canonical_kh(m))
                             and np.array_equal(dec.D_g, canonical_kg(m)))
        N, C = dec.internals["N"], dec.internals["a"] + 1j * dec.internals["b"]
        worst_takagi = max(worst_takagi, np.linalg.norm(N.T @ N - C) / np.linalg.norm(C))
    elapsed = time.perf_counter() - start
    print(f"worst residual {worst:.3e}, takagi {worst_takagi:.3e}, {elapsed:.2f} s")
    assert canonical_ok and worst <= 1e-9 and worst_takagi <= 1e-9 and elapsed <= 30


def test_criterion_3_root_classification():
    worst = 0.0
    for n in range(3, 8):
        for c0 in (-3, -2, -1, 1, 2, 3):
            spec = quadratic_family(n, c0)
            rep = classify_roots(spec)
            simple = [r for r in rep.roots if abs(r.c - c0) <= 1e-9]
            degenerate = [r for r in rep.roots if abs(r.c - c0 * (n - 8) / n) <= 1e-9]
            assert len(simple) == 1 and simple[0].admissible and simple[0].multiplicity == 1
            assert abs(simple[0].epsilon - c0 / n) <= 1e-12
            # simple root of phi but f'(c) = 0 there, so it is flagged degenerate
            assert len(degenerate) == 1 and not degenerate[0].admissible
            assert abs(degenerate[0].f_prime_at_c) <= 1e-9
            assert [r.c for r in rep.admissible] == [simple[0].c]
            c = simple[0].c
            worst = max(worst, abs(c / n - spec.f(c) / (4 * spec.f_prime(c))))
    print(f"worst gap between the two epsilon expressions {worst:.3e}")
    assert worst <= 1e-9


def test_criterion_4_curvature_engine():
    for g, gamma in ((sphere2(), 1.0), (sphere3(), 2.0)):
        fit = einstein_residual(g, SamplePlan.draw(g.chart, 64, seed=4))
        print(f"{g.name}: gamma {fit.gamma!r}, residual {fit.residual:.3e}")
        assert abs(fit.gamma - gamma) <= 1e-8 and fit.residual <= 1e-8
    for n in (2, 3, 4):
        g = flat(n, signs=[(-1) ** i for i in range(n)])
        for p in SamplePlan.draw(g.chart, 8, seed=n):
            assert not riemann(g, p).data.any()
    fixtures = [
        sphere2(), sphere3(), flat(4),
        build_product(ProductSpec(sphere2("1"), sphere2("2", 2.0)))[0],
        build_warped(ProductSpec(sphere2("1"), sphere2("2"), warp="th1")),
        realify(complex_sphere_metric(2)).metric,
    ]
    worst_b, worst_m = 0.0, 0.0
    for g in fixtures:
        for p in SamplePlan.draw(g.chart, 16, seed=5):
            worst_b = max(worst_b, bianchi_residual(g, p))
            worst_m = max(worst_m, metricity_residual(g, p))
    print(f"bianchi {worst_b:.3e}, metricity {worst_m:.3e}")
    assert worst_b <= 1e-9 and worst_m <= 1e-9


def test_criterion_5_anti_kahler():
    fixtures = [complex_sphere_metric(2)] + [HolomorphicMetricField(c, r) for c, r in POLYNOMIAL]
    for G in fixtures:
        plan = G.plan(16, seed=5)
        R = realify(G, plan)
        nab = kahler_like_check(R.metric, R.J, plan).max_nabla_k
        blocks = antihermitian_block_check(R.metric, R.J, plan)
        print(f"{G.name}: nabla J {nab:.3e}, blocks {blocks.metric_mixed:.3e} {blocks.ricci_mixed:.3e}")
        assert nab <= 1e-8 and blocks.metric_mixed <= 1e-8 and blocks.ricci_mixed <= 1e-8
    G = mixed_control()
    plan = G.plan(16, seed=5)
    R = realify(G, check=False)
    nab = kahler_like_check(R.metric, R.J, plan).max_nabla_k
    blocks = antihermitian_block_check(R.metric, R.J, plan)
    print(f"control: dbar {holomorphy_check(G, plan):.3e}, nabla J {nab:.3e}, "
          f"ricci block {blocks.ricci_mixed:.3e}")
    assert nab >= 0.1 and max(blocks.metric_mixed, blocks.ricci_mixed) >= 0.1


def test_criterion_6_two_routes():
    for m, gamma in ((2, 1.0), (3, 2.0)):
        G = complex_sphere_metric(m)
        plan = G.plan(32, seed=6)
        rep = complex_einstein_check(G, plan)
        print(f"m={m}: complex {rep.gamma!r}, real {rep.real_fit.gamma!r}, gap {rep.route_gap:.3e}")
        assert rep.route_gap <= 1e-7 and abs(rep.real_fit.gamma - gamma) <= 1e-7
        R = realify(G, plan)
        assert all(R.signature(p) == (m, m) for p in plan)


def test_criterion_7_palatini_pipeline():
    start = time.perf_counter()
    spec = ProductSpec(sphere2("1"), sphere2("2"))
    g, P = build_product(spec)
    product_plan = SamplePlan.draw(g.chart, 16, seed=7)
    G = complex_sphere_metric(2)
    R = realify(G)
    complex_plan = G.plan(16, seed=7)
    cases = [
        ("product", assemble(g, P, quadratic_family(4, 2), 2.0, product_plan), product_plan),
        ("anti-kahler", assemble(R.metric, R.J, quadratic_family(4, -2), -2.0, complex_plan), complex_plan),
    ]
    for name, sol, plan in cases:
        rep = verify_euler_lagrange(sol, plan)
        print(f"{name} (eps {sol.epsilon}): " + ", ".join(f"{k} {v:.3e}" for k, v in sorted(rep.residuals.items())))
        assert len(rep.residuals) == 4 and max(rep.residuals.values()) <= 1e-7
        bad = PalatiniSolution(g=sol.g, h=scaled_twin(sol.g, sol.K, 1.0), K=sol.K, spec=sol.spec,
                               root=sol.root, epsilon=sol.epsilon)
        control = verify_euler_lagrange(bad, plan).residuals["metric_equation"]
        print(f"{name} unscaled control: {control:.3e}")
        assert control >= 1e-2
    assert cases[0][1].epsilon == 0.5 and cases[1][1].epsilon < 0
    elapsed = time.perf_counter() - start
    print(f"{elapsed:.2f} s")
    assert elapsed <= 60


def test_criterion_8_identity_suite():
    s2xs2, P = build_product(ProductSpec(sphere2("1"), sphere2("2")))
    big, P_big = build_product(ProductSpec(sphere2("1"), sphere2("2", 2.0)))
    R = realify(complex_sphere_metric(2))
    warped_spec = ProductSpec(sphere2("1"), sphere2("2"), warp="th1")
    warped, P_warped = build_warped(warped_spec), product_k(warped_spec)
    kahler = [(s2xs2, P), (big, P_big), (R.metric, R.J)]

    worst = 0.0
    for g, K in kahler + [(warped, P_warped)]:
        for p in SamplePlan.draw(g.chart, 8, seed=8):
            worst = max(worst, *psi_symmetry_residuals(psi_tensor(g, K, p).data, K.at(p),
                                                       K.epsilon, K.sigma))
    print(f"psi symmetries {worst:.3e}")
    assert worst <= 1e-8

    for g, K in kahler:
        plan = SamplePlan.draw(g.chart, 16, seed=8)
        ids = curvature_k_identities(g, K, plan)
        kl = kahler_like_check(g, K, plan)
        print(f"identities {max(ids.residuals.values()):.3e}, nijenhuis {kl.max_nijenhuis:.3e}")
        assert ids.passed and max(ids.residuals.values()) <= 1e-8 and kl.max_nijenhuis <= 1e-8

        # Ricci-twin proportionality holds exactly when g is Einstein
        twin = ricci_twin_check(g, K, plan)
        fit = einstein_residual(g, plan)
        print(f"ricci twin {twin.residual:.3e} (lambda {twin.lam!r}), einstein {fit.residual:.3e}")
        assert (twin.residual <= 1e-8) == (fit.residual <= 1e-8)
        if twin.residual <= 1e-8:
            assert abs(twin.lam - fit.gamma) <= 1e-8
        else:
            assert twin.residual >= 0.1 and fit.residual >= 0.1
    assert ricci_twin_check(big, P_big, SamplePlan.draw(big.chart, 16, seed=8)).residual >= 0.1

    N = nijenhuis(twisted_j(), [0.1, -0.2, 0.3, 0.05]).norm()
    print(f"twisted nijenhuis {N:.6f}")
    assert N >= 1e-3


def test_criterion_9_determinism(tmp_path):
    suites = sorted(Workspace.load(DEMO).raw["suites"])
    for suite in suites:
        outs = []
        for i in range(2):
            path = tmp_path / f"{suite}-{i}.json"
            code = main(["verify", suite, "--config", str(DEMO), "--format", "structured",
                         "--out", str(path)])
            assert code in (0, 1)
            outs.append(path.read_bytes())
        print(f"{suite}: {len(outs[0])} bytes, identical {outs[0] == outs[1]}")
        assert outs[0] == outs[1]
