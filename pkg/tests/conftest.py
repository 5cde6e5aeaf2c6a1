import math

import numpy as np
import pytest

from levyk import KappaClass, LevyModel, exponent_table


def relativistic():
    return LevyModel.create(1, KappaClass.poly_log(0.5, 0.0), 1.0, 1.0, 1.25)


def subexponential():
    return LevyModel.create(1, KappaClass.poly_log(0.5, 0.0), 1.0, 0.5, 0.0)


def lamperti():
    return LevyModel.create(1, KappaClass.poly_log(0.5, 0.0), 1.0, 1.0, 0.0)


def pure_log():
    return LevyModel.create(1, KappaClass.pure_log(), 1.0, 1.0, 0.0)


def high_intensity():
    return LevyModel.create(1, KappaClass.high_intensity(), 1.0, 1.0, 0.0)


def loglog_slope(x, y):
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


@pytest.fixture(scope="session")
def rel_model():
    return relativistic()


@pytest.fixture(scope="session")
def rel_table(rel_model):
    return exponent_table(rel_model)


@pytest.fixture(scope="session")
def sub_model():
    return subexponential()


@pytest.fixture(scope="session")
def sub_table(sub_model):
    return exponent_table(sub_model)


@pytest.fixture(scope="session")
def pure_log_table():
    return exponent_table(pure_log())


@pytest.fixture(scope="session")
def high_table():
    return exponent_table(high_intensity())


E = math.e


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
