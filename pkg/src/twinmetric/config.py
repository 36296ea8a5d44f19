"""Workspace configuration: a single YAML document of named objects.

Top-level keys (all optional except where a suite needs them)::

    seed: 0                      # default seed for sample plans
    charts:      {name: {coords: [..], domain: [[lo, hi], ..]}}
    metrics:     {name: {chart: c, components: [[..]], params: {..}}
                        | {product: [m1, m2]}
                        | {warped: {base: m1, fiber: m2, warp: "expr"}}
                        | {realify: holomorphic-name}
                        | {scaled: m, factor: x}}
    k_fields:    {name: {chart: c, components: [[..]], epsilon: 1, sigma: 1}
                        | {product_of: product-metric-name}
                        | {complex_structure: holomorphic-name}}
    holomorphic_metrics: {name: {complex_sphere: m} | {coords: [..], components: [[..]]}}
    lagrangians: {name: {coefficients: [a0, a1, ..], n: 4} | {quadratic_family: {n: 4, c0: 2}}}
    plans:       {name: {metric | chart | holomorphic: ref, count: 64, seed: 3} | {points: [[..]]}}
    tolerances:  {name: value}
    suites:      {name: [{name: .., check: .., ...}, ..]}
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .antikahler import HolomorphicMetricField, complex_sphere_metric, realify
from .dsl import ChartSpec
from .errors import ConfigError, TwinMetricError
from .fields import JetField, KField, MetricField, SamplePlan
from .product_structures import ProductSpec, build_product, build_warped, product_k
from .scalar_root import LagrangianSpec, quadratic_family

SECTIONS = ("charts", "metrics", "k_fields", "holomorphic_metrics", "lagrangians", "plans", "suites")

DEFAULT_TOLERANCES = {
    "first_order": 1e-9,
    "second_order": 1e-8,
    "holomorphy": 1e-9,
    "einstein": 1e-8,
    "complex_einstein": 1e-7,
    "route_gap": 1e-7,
    "pipeline": 1e-7,
    "congruence": 1e-9,
    "nonzero": 1e-3,
}


@dataclass
class Workspace:
    raw: dict
    source: str = "<memory>"
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)
    _building: set = field(default_factory=set, repr=False)

    # ------------------------------------------------------------ loading
    @classmethod
    def load(cls, path: str | Path, seed: int | None = None,
             tolerance_overrides: dict | None = None) -> "Workspace":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        return cls.from_text(text, path.name, seed, tolerance_overrides)

    @classmethod
    def from_text(cls, text: str, source: str = "<memory>", seed: int | None = None,
                  tolerance_overrides: dict | None = None) -> "Workspace":
        try:
            raw = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"config is not valid YAML: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a mapping at the top level")
        for key in SECTIONS + ("tolerances",):
            if raw.get(key) is None:
                raw[key] = {}
            if not isinstance(raw[key], dict):
                raise ConfigError(f"section {key!r} must be a mapping")
        seen: dict[str, str] = {}
        for section in SECTIONS[:-1]:
            for name in raw[section]:
                if name in seen:
                    raise ConfigError(f"name {name!r} is defined in both {seen[name]!r} and {section!r}")
                seen[name] = section
        tolerances = dict(DEFAULT_TOLERANCES)
        for k, v in raw["tolerances"].items():
            tolerances[k] = _float(v, f"tolerances.{k}")
        for k, v in (tolerance_overrides or {}).items():
            if k not in tolerances:
                raise ConfigError(f"unknown tolerance {k!r}; known: {', '.join(sorted(tolerances))}")
            tolerances[k] = v
        base_seed = raw.get("seed", 0) if seed is None else seed
        if not isinstance(base_seed, int):
            raise ConfigError("seed must be an integer")
        ws = cls(raw, source, base_seed, tolerances)
        ws.validate()
        return ws

    def validate(self) -> None:
        """Resolve every named object once so broken references fail early."""
        for section, getter in (
            ("charts", self.chart),
            ("holomorphic_metrics", self.holomorphic),
            ("metrics", self.metric),
            ("k_fields", self.k_field),
            ("lagrangians", self.lagrangian),
            ("plans", self.plan),
        ):
            for name in self.raw[section]:
                getter(name)
        for name, checks in self.raw["suites"].items():
            if not isinstance(checks, list) or not checks:
                raise ConfigError(f"suite {name!r} must be a non-empty list of checks")
            names = [c.get("name") if isinstance(c, dict) else None for c in checks]
            if None in names:
                raise ConfigError(f"every check in suite {name!r} needs a name")
            if len(set(names)) != len(names):
                raise ConfigError(f"duplicate check names in suite {name!r}")

    # --------------------------------------------------------- resolution
    def _entry(self, section: str, name: str) -> dict:
        try:
            entry = self.raw[section][name]
        except KeyError:
            raise ConfigError(f"unknown {section[:-1].replace('_', ' ')} {name!r}") from None
        if not isinstance(entry, dict):
            raise ConfigError(f"{section}.{name} must be a mapping")
        return entry

    def _memo(self, section: str, name: str, build):
        key = (section, name)
        if key in self._cache:
            return self._cache[key]
        if key in self._building:
            raise ConfigError(f"circular reference through {section}.{name}")
        self._building.add(key)
        try:
            value = build(self._entry(section, name))
        except ConfigError:
            raise
        except (TwinMetricError, ValueError, TypeError, KeyError) as exc:
            raise ConfigError(f"{section}.{name}: {exc}") from None
        finally:
            self._building.discard(key)
        self._cache[key] = value
        return value

    def chart(self, name: str) -> ChartSpec:
        def build(e):
            domain = e.get("domain")
            hints = tuple((float(a), float(b)) for a, b in domain) if domain is not None else None
            return ChartSpec(name, tuple(e["coords"]), hints)

        return self._memo("charts", name, build)

    def holomorphic(self, name: str) -> HolomorphicMetricField:
        def build(e):
            if "complex_sphere" in e:
                G = complex_sphere_metric(int(e["complex_sphere"]))
                G.name = name
                return G
            return HolomorphicMetricField(e["coords"], _text_matrix(e["components"]),
                                          e.get("params"), name=name,
                                          half_width=float(e.get("half_width", 0.25)))

        return self._memo("holomorphic_metrics", name, build)

    def product_spec(self, name: str) -> ProductSpec:
        e = self._entry("metrics", name)
        if "product" in e:
            a, b = e["product"]
            return ProductSpec(self.metric(a), self.metric(b))
        if "warped" in e:
            w = e["warped"]
            return ProductSpec(self.metric(w["base"]), self.metric(w["fiber"]), w.get("warp"))
        raise ConfigError(f"metric {name!r} is not a product")

    def metric(self, name: str):
        def build(e):
            if "product" in e:
                g, _ = build_product(self.product_spec(name))
                return g
            if "warped" in e:
                return build_warped(self.product_spec(name))
            if "realify" in e:
                return realify(self.holomorphic(e["realify"]), check=False).metric
            if "scaled" in e:
                return _scaled(self.metric(e["scaled"]), _float(e["factor"], f"metrics.{name}.factor"))
            return MetricField(self.chart(e["chart"]), _text_matrix(e["components"]),
                               e.get("params"), name=name)

        return self._memo("metrics", name, build)

    def k_field(self, name: str):
        def build(e):
            if "product_of" in e:
                return product_k(self.product_spec(e["product_of"]))
            if "complex_structure" in e:
                return realify(self.holomorphic(e["complex_structure"]), check=False).J
            return KField(self.chart(e["chart"]), _text_matrix(e["components"]),
                          int(e["epsilon"]), int(e["sigma"]), e.get("params"), name=name)

        return self._memo("k_fields", name, build)

    def lagrangian(self, name: str) -> LagrangianSpec:
        def build(e):
            if "quadratic_family" in e:
                p = e["quadratic_family"]
                return quadratic_family(int(p["n"]), _float(p["c0"], f"lagrangians.{name}.c0"))
            return LagrangianSpec(tuple(_float(c, "coefficient") for c in e["coefficients"]), int(e["n"]))

        return self._memo("lagrangians", name, build)

    def plan(self, name: str) -> SamplePlan:
        def build(e):
            if "points" in e:
                return SamplePlan.explicit(np.asarray(e["points"], dtype=float))
            count = int(e.get("count", 64))
            seed = int(e.get("seed", self.seed))
            if "metric" in e:
                chart = self.metric(e["metric"]).chart
            elif "holomorphic" in e:
                chart = self.holomorphic(e["holomorphic"]).real_chart
            elif "chart" in e:
                chart = self.chart(e["chart"])
            else:
                raise ConfigError(f"plan {name!r} needs points, metric, holomorphic or chart")
            return SamplePlan.draw(chart, count, seed)

        return self._memo("plans", name, build)

    def suite(self, name: str) -> list[dict]:
        try:
            return self.raw["suites"][name]
        except KeyError:
            known = ", ".join(sorted(self.raw["suites"])) or "none"
            raise ConfigError(f"unknown suite {name!r} (defined: {known})") from None

    def tolerance(self, name: str) -> float:
        return self.tolerances[name]


def _float(value: Any, where: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a number, got {value!r}") from None


def _text_matrix(rows) -> list[list[str]]:
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise ConfigError("components must be a list of rows")
    return [[str(v) for v in row] for row in rows]


def _scaled(g, factor: float) -> JetField:
    if factor <= 0:
        raise ConfigError("metric scale factor must be positive")
    return JetField(g.chart, lambda p, order: g.taylor(p, order) * factor, name=f"{factor}*{g.name}")

