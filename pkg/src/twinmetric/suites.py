"""Named verification checks that suites in a workspace config refer to."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

from . import antikahler as AK
from . import tensor_calc as TC
from .config import Workspace
from .errors import ConfigError, TwinMetricError
from .palatini_pipeline import assemble, verify_euler_lagrange
from .product_structures import einstein_product_criterion
from .scalar_root import classify_roots


@dataclass
class CheckResult:
    name: str
    check: str
    passed: bool
    residuals: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    values: dict = field(default_factory=dict)
    plan: dict | None = None
    error: str | None = None
    wall_time: float | None = None


def _require(spec: dict, *keys: str) -> list:
    missing = [k for k in keys if k not in spec]
    if missing:
        raise ConfigError(f"check {spec.get('name')!r} ({spec.get('check')}) is missing {', '.join(missing)}")
    return [spec[k] for k in keys]


def _plan_info(ws: Workspace, name: str) -> dict:
    plan = ws.plan(name)
    entry = ws.raw["plans"][name]
    seed = None if "points" in entry else int(entry.get("seed", ws.seed))
    return {"name": name, "count": len(plan), "seed": seed}


def _within(residuals: dict, tolerances: dict) -> bool:
    return all(residuals[k] <= tolerances[k] for k in residuals)


# each runner returns (residuals, tolerances, values); pass means every
# residual is within its tolerance unless the runner overrides it
def _einstein(ws, spec):
    metric, plan = _require(spec, "metric", "plan")
    fit = TC.einstein_residual(ws.metric(metric), ws.plan(plan))
    tol = ws.tolerance("einstein")
    res = {"residual": fit.residual}
    if "gamma" in spec:
        res["gamma_error"] = abs(fit.gamma - float(spec["gamma"]))
    return res, dict.fromkeys(res, tol), {"gamma_fit": fit.gamma}


def _not_einstein(ws, spec):
    metric, plan = _require(spec, "metric", "plan")
    fit = TC.einstein_residual(ws.metric(metric), ws.plan(plan))
    floor = float(spec.get("min_residual", 0.1))
    # a negative control: passes when the residual is large
    return {"shortfall": max(0.0, floor - fit.residual)}, {"shortfall": 0.0}, {
        "gamma_fit": fit.gamma, "residual": fit.residual}


def _curvature_basics(ws, spec):
    metric, plan = _require(spec, "metric", "plan")
    g = ws.metric(metric)
    bian = max(TC.bianchi_residual(g, p) for p in ws.plan(plan))
    met = max(TC.metricity_residual(g, p) for p in ws.plan(plan))
    tol = ws.tolerance("first_order")
    return {"bianchi": bian, "metricity": met}, {"bianchi": tol, "metricity": tol}, {}


def _compatibility(ws, spec):
    metric, k, plan = _require(spec, "metric", "k", "plan")
    rep = TC.check_k_compatibility(ws.metric(metric), ws.k_field(k), ws.plan(plan), ws.tolerance("first_order"))
    res = {"involution": rep.involution_residual, "metric": rep.metric_residual}
    return res, dict.fromkeys(res, rep.tolerance), {
        "detected_epsilon": rep.detected_epsilon, "detected_sigma": rep.detected_sigma}


def _kahler_like(ws, spec):
    metric, k, plan = _require(spec, "metric", "k", "plan")
    rep = TC.kahler_like_check(ws.metric(metric), ws.k_field(k), ws.plan(plan),
                               ws.tolerance("second_order"), ws.tolerance("first_order"))
    res = {"nabla_k": rep.max_nabla_k, "nijenhuis": rep.max_nijenhuis}
    return res, dict.fromkeys(res, rep.tolerance), {}


def _psi_symmetries(ws, spec):
    metric, k, plan = _require(spec, "metric", "k", "plan")
    g, K = ws.metric(metric), ws.k_field(k)
    r1 = r2 = 0.0
    for p in ws.plan(plan):
        psi = TC.psi_tensor(g, K, p).data
        a, b = TC.psi_symmetry_residuals(psi, K.at(p), K.epsilon, K.sigma)
        r1, r2 = max(r1, a), max(r2, b)
    tol = ws.tolerance("second_order")
    res = {"k_twist": r1, "transpose": r2}
    return res, dict.fromkeys(res, tol), {}


def _curvature_identities(ws, spec):
    metric, k, plan = _require(spec, "metric", "k", "plan")
    rep = TC.curvature_k_identities(ws.metric(metric), ws.k_field(k), ws.plan(plan),
                                    ws.tolerance("second_order"), ws.tolerance("first_order"))
    return dict(rep.residuals), dict.fromkeys(rep.residuals, rep.tolerance), {}


def _ricci_twin(ws, spec):
    metric, k, plan = _require(spec, "metric", "k", "plan")
    rep = TC.ricci_twin_check(ws.metric(metric), ws.k_field(k), ws.plan(plan),
                              ws.tolerance("second_order"), ws.tolerance("first_order"))
    return {"residual": rep.residual}, {"residual": rep.tolerance}, {"lambda": rep.lam}


def _nijenhuis(ws, spec):
    k, plan = _require(spec, "k", "plan")
    K = ws.k_field(k)
    norm = max(TC.nijenhuis(K, p).norm() for p in ws.plan(plan))
    if spec.get("expect", "zero") == "nonzero":
        floor = ws.tolerance("nonzero")
        return {"shortfall": max(0.0, floor - norm)}, {"shortfall": 0.0}, {"max_norm": norm}
    return {"max_norm": norm}, {"max_norm": ws.tolerance("second_order")}, {}


def _product_einstein(ws, spec):
    metric, plan = _require(spec, "metric", "plan")
    rep = einstein_product_criterion(ws.product_spec(metric), ws.plan(plan), ws.tolerance("einstein"))
    values = {
        "gamma_factor1": rep.factor1.gamma, "gamma_factor2": rep.factor2.gamma,
        "gamma_joint": rep.joint.gamma, "joint_einstein": rep.joint_einstein,
        "factors_einstein": rep.factors_einstein,
    }
    return {"criterion_mismatch": 0.0 if rep.consistent else 1.0}, {"criterion_mismatch": 0.0}, values


def _holomorphy(ws, spec):
    hol, plan = _require(spec, "holomorphic", "plan")
    r = AK.holomorphy_check(ws.holomorphic(hol), ws.plan(plan))
    return {"dbar": r}, {"dbar": ws.tolerance("holomorphy")}, {}


def _complex_einstein(ws, spec):
    hol, plan = _require(spec, "holomorphic", "plan")
    G = ws.holomorphic(hol)
    rep = AK.complex_einstein_check(G, ws.plan(plan))
    res = {"complex_residual": rep.residual, "real_residual": rep.real_fit.residual,
           "route_gap": rep.route_gap}
    tols = {"complex_residual": ws.tolerance("complex_einstein"),
            "real_residual": ws.tolerance("complex_einstein"),
            "route_gap": ws.tolerance("route_gap")}
    if "gamma" in spec:
        res["gamma_error"] = abs(rep.gamma - float(spec["gamma"]))
        tols["gamma_error"] = ws.tolerance("complex_einstein")
    sig = {tuple(AK.realify(G, check=False).signature(p)) for p in ws.plan(plan)}
    res["signature_mismatch"] = 0.0 if sig == {(G.m, G.m)} else 1.0
    tols["signature_mismatch"] = 0.0
    return res, tols, {"gamma_complex": rep.gamma, "gamma_real": rep.real_fit.gamma}


def _antihermitian_blocks(ws, spec):
    plan = ws.plan(_require(spec, "plan")[0])
    if "holomorphic" in spec:
        R = AK.realify(ws.holomorphic(spec["holomorphic"]), check=False)
        g, J = R.metric, R.J
    else:
        metric, k = _require(spec, "metric", "k")
        g, J = ws.metric(metric), ws.k_field(k)
    rep = AK.antihermitian_block_check(g, J, plan, ws.tolerance("second_order"))
    res = {"metric_mixed": rep.metric_mixed, "ricci_mixed": rep.ricci_mixed}
    return res, dict.fromkeys(res, rep.tolerance), {}


def _palatini(ws, spec):
    metric, k, lag, root, plan = _require(spec, "metric", "k", "lagrangian", "root", "plan")
    sol = assemble(ws.metric(metric), ws.k_field(k), ws.lagrangian(lag), float(root), ws.plan(plan),
                   ws.tolerance("pipeline"), ws.tolerance("first_order"))
    rep = verify_euler_lagrange(sol, ws.plan(plan), ws.tolerance("pipeline"))
    return dict(rep.residuals), dict.fromkeys(rep.residuals, rep.tolerance), {"epsilon": sol.epsilon}


def _roots(ws, spec):
    (lag,) = _require(spec, "lagrangian")
    rep = classify_roots(ws.lagrangian(lag))
    values = {"roots": [r.c for r in rep.roots], "admissible": [r.c for r in rep.admissible]}
    return {"no_admissible_root": 0.0 if rep.admissible else 1.0}, {"no_admissible_root": 0.0}, values


CHECKS: dict[str, Callable] = {
    "einstein": _einstein,
    "not_einstein": _not_einstein,
    "curvature_basics": _curvature_basics,
    "compatibility": _compatibility,
    "kahler_like": _kahler_like,
    "psi_symmetries": _psi_symmetries,
    "curvature_identities": _curvature_identities,
    "ricci_twin": _ricci_twin,
    "nijenhuis": _nijenhuis,
    "product_einstein": _product_einstein,
    "holomorphy": _holomorphy,
    "complex_einstein": _complex_einstein,
    "antihermitian_blocks": _antihermitian_blocks,
    "palatini": _palatini,
    "roots": _roots,
}


def run_check(ws: Workspace, spec: dict) -> CheckResult:
    kind = spec.get("check")
    if kind not in CHECKS:
        raise ConfigError(f"check {spec.get('name')!r} has unknown type {kind!r}; "
                          f"known: {', '.join(sorted(CHECKS))}")
    plan = _plan_info(ws, spec["plan"]) if "plan" in spec else None
    start = time.perf_counter()
    try:
        residuals, tolerances, values = CHECKS[kind](ws, spec)
    except ConfigError:
        raise
    except TwinMetricError as exc:
        # domain failures (degenerate metric, unmet hypothesis) fail the check
        return CheckResult(spec["name"], kind, False, plan=plan,
                           error=f"{type(exc).__name__}: {exc}",
                           wall_time=time.perf_counter() - start)
    expect_fail = bool(spec.get("expect_fail", False))
    passed = _within(residuals, tolerances)
    return CheckResult(
        name=spec["name"],
        check=kind,
        passed=(not passed) if expect_fail else passed,
        residuals={k: float(v) for k, v in residuals.items()},
        tolerances={k: float(v) for k, v in tolerances.items()},
        values=values,
        plan=plan,
        wall_time=time.perf_counter() - start,
    )


def run_suite(ws: Workspace, name: str) -> list[CheckResult]:
    checks = ws.suite(name)
    results = [run_check(ws, spec) for spec in checks]
    return sorted(results, key=lambda r: r.name)

