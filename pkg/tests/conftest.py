import numpy as np
import pytest
from hypothesis import settings

from trialtransport.io import data_path, load_scm, load_table

settings.register_profile("default", max_examples=100, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def table1():
    return load_table(data_path("table1.csv"))


@pytest.fixture(scope="session")
def reference_scm():
    return load_scm(data_path("fig1.scm.json"))


@pytest.fixture(scope="session")
def sharp_null_scm():
    return load_scm(data_path("sharp_null.scm.json"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("acceptance")
        if m is not None:
            item.user_properties.append(("acceptance", m.args))


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            if rep.when != "call":
                continue
            for name, args in rep.user_properties:
                if name == "acceptance":
                    lines.append((args[0], args[1], rep.passed))
    if lines:
        terminalreporter.section("acceptance criteria")
        for number, title, passed in sorted(lines):
            terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {title}")
