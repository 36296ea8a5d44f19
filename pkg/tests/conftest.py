from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from twinmetric.antikahler import complex_sphere_metric
from twinmetric.config import Workspace
from twinmetric.fields import SamplePlan
from twinmetric.product_structures import ProductSpec, build_product

from builders import DEMO, sphere2

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")



@pytest.fixture(scope="session")
def s2():
    return sphere2()


@pytest.fixture(scope="session")
def s2_plan(s2):
    return SamplePlan.draw(s2.chart, 16, seed=1)


@pytest.fixture(scope="session")
def s2xs2():
    spec = ProductSpec(sphere2("1"), sphere2("2"))
    g, P = build_product(spec)
    return spec, g, P


@pytest.fixture(scope="session")
def s2xs2_plan(s2xs2):
    return SamplePlan.draw(s2xs2[1].chart, 16, seed=2)


@pytest.fixture(scope="session")
def unequal_product():
    spec = ProductSpec(sphere2("1"), sphere2("2", radius=2.0))
    g, P = build_product(spec)
    return spec, g, P


@pytest.fixture(scope="session")
def csphere2():
    return complex_sphere_metric(2)


@pytest.fixture(scope="session")
def csphere2_plan(csphere2):
    return csphere2.plan(16, seed=3)


@pytest.fixture(scope="session")
def demo_ws():
    return Workspace.load(DEMO)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: one test per acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when == "call" and "test_acceptance.py::test_criterion_" in rep.nodeid:
                name = rep.nodeid.split("::test_criterion_")[1]
                num, _, title = name.partition("_")
                lines.append((int(num), f"criterion {num} {title.replace('_', ' ')}: {outcome[:4].upper()}"))
    if lines:
        terminalreporter.section("acceptance")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
