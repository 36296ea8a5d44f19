"""Tensor fields over a chart and the sample plans they are checked on."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.stats import qmc

from .dsl import ChartSpec, ScalarExpr, evaluate, evaluate_with, num, parse_scalar, to_text
from .errors import ChartMismatchError, TwinMetricError
from .jets import Jet

ComponentText = Sequence[Sequence[str]]


def _parse_matrix(chart: ChartSpec, rows: ComponentText, params,
                  size: int | None = None) -> tuple[tuple[ScalarExpr, ...], ...]:
    n = chart.dim if size is None else size
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ValueError(f"expected a {n}x{n} component matrix for chart {chart.name!r}")
    cache: dict[str, ScalarExpr] = {}
    out = []
    for row in rows:
        parsed = []
        for text in row:
            text = str(text)
            if text not in cache:
                cache[text] = parse_scalar(text, chart, params)
            parsed.append(cache[text])
        out.append(tuple(parsed))
    return tuple(out)


def _eval_matrix(components, point, order: int, complex_mode: bool = False, variables=None) -> Jet:
    """Evaluate a matrix of expressions, sharing work between repeated entries.

    ``variables`` (substitution jets) overrides ``point`` and ``order``.
    """
    n = len(components)
    memo: dict[int, Jet] = {}
    rows = []
    for row in components:
        jets = []
        for expr in row:
            key = id(expr)
            if key not in memo:
                if variables is not None:
                    memo[key] = evaluate_with(expr, variables, complex_mode)
                else:
                    memo[key] = evaluate(expr, point, order=order, complex_mode=complex_mode)
            jets.append(memo[key])
        rows.append(Jet.stack(jets))
    jet = Jet.stack(rows)
    assert jet.shape == (n, n)
    return jet


class MetricField:
    """Symmetric (0,2) tensor field with expression components."""

    def __init__(self, chart: ChartSpec, components, params: Mapping[str, float] | None = None,
                 name: str = ""):
        self.chart = chart
        self.name = name or chart.name
        if components and isinstance(components[0][0], ScalarExpr):
            self.components = tuple(tuple(r) for r in components)
        else:
            self.components = _parse_matrix(chart, components, params or {})
        n = chart.dim
        for i in range(n):
            for j in range(i + 1, n):
                if self.components[i][j].root != self.components[j][i].root:
                    raise ValueError(
                        f"metric components ({i},{j}) and ({j},{i}) differ: "
                        f"{self.components[i][j]} vs {self.components[j][i]}"
                    )

    @property
    def dim(self) -> int:
        return self.chart.dim

    def taylor(self, point, order: int = 2) -> Jet:
        return _eval_matrix(self.components, point, order)

    def at(self, point) -> np.ndarray:
        return self.taylor(point, 0).value

    def text(self) -> list[list[str]]:
        return [[to_text(e.root) for e in row] for row in self.components]


class KField:
    """Mixed (1,1) tensor field K^mu_nu (row mu, column nu) with declared signs."""

    def __init__(self, chart: ChartSpec, components, epsilon: int, sigma: int,
                 params: Mapping[str, float] | None = None, name: str = ""):
        if epsilon not in (1, -1) or sigma not in (1, -1):
            raise ValueError("epsilon and sigma must each be +1 or -1")
        self.chart = chart
        self.name = name or "K"
        self.epsilon = epsilon
        self.sigma = sigma
        if components and isinstance(components[0][0], ScalarExpr):
            self.components = tuple(tuple(r) for r in components)
        else:
            self.components = _parse_matrix(chart, components, params or {})

    @classmethod
    def constant(cls, chart: ChartSpec, matrix, epsilon: int, sigma: int, name: str = "") -> "KField":
        rows = [[ScalarExpr(num(float(v)), chart.coords) for v in row] for row in np.asarray(matrix)]
        return cls(chart, rows, epsilon, sigma, name=name)

    @property
    def dim(self) -> int:
        return self.chart.dim

    def taylor(self, point, order: int = 1) -> Jet:
        return _eval_matrix(self.components, point, order)

    def at(self, point) -> np.ndarray:
        return self.taylor(point, 0).value


class JetField:
    """A field given directly by a function ``(point, order) -> Jet``.

    Used for derived fields (twins, realified metrics) and for fields known
    only pointwise, which set ``max_order=0``.
    """

    def __init__(self, chart: ChartSpec, func: Callable[[np.ndarray, int], Jet], name: str = "",
                 max_order: int | None = None, epsilon: int | None = None, sigma: int | None = None):
        self.chart = chart
        self.func = func
        self.name = name
        self.max_order = max_order
        self.epsilon = epsilon
        self.sigma = sigma

    @property
    def dim(self) -> int:
        return self.chart.dim

    def taylor(self, point, order: int = 2) -> Jet:
        if self.max_order is not None and order > self.max_order:
            raise TwinMetricError(f"field {self.name!r} provides derivatives only up to order {self.max_order}")
        return self.func(np.asarray(point), order)

    def at(self, point) -> np.ndarray:
        return self.taylor(point, 0).value


def same_chart(a, b) -> None:
    if a.chart.coords != b.chart.coords:
        raise ChartMismatchError(f"charts differ: {a.chart.coords} vs {b.chart.coords}")


@dataclass(frozen=True)
class SamplePlan:
    points: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @classmethod
    def explicit(cls, points) -> "SamplePlan":
        return cls(np.asarray(points, dtype=float))

    @classmethod
    def draw(cls, chart: ChartSpec, count: int = 64, seed: int = 0) -> "SamplePlan":
        """Scrambled Halton points mapped into the chart's domain hints."""
        if chart.domain_hints is None:
            raise ValueError(f"chart {chart.name!r} has no domain hints to sample from")
        lo = np.array([a for a, _ in chart.domain_hints])
        hi = np.array([b for _, b in chart.domain_hints])
        u = qmc.Halton(d=chart.dim, scramble=True, seed=seed).random(count)
        # keep a margin so points stay strictly interior
        u = 0.01 + 0.98 * u
        return cls(lo + (hi - lo) * u, seed)

    def subset(self, index) -> "SamplePlan":
        return SamplePlan(self.points[index], self.seed)

    def check_interior(self, chart: ChartSpec) -> None:
        if chart.domain_hints is None:
            return
        for p in self.points:
            for x, (lo, hi) in zip(p, chart.domain_hints):
                if not lo < x < hi:
                    raise ValueError(f"sample point {tuple(p)} leaves the domain of chart {chart.name!r}")
