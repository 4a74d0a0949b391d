import numpy as np
import pytest

from ucfun.instance import UcInstance, UnitSpec, load_instance, random_instance


def unit(i, p_min=10.0, p_max=100.0, rate=1.0, up=1, down=1, on=False, dur=None):
    return UnitSpec(i, p_min, p_max, rate, up, down, on, dur)


def make_instance(units, demand, hours=1.0):
    return UcInstance(tuple(units), tuple(demand), hours)


def tiny_instances(count, seed=1000):
    """Seeded tiny instances: N in {2,3}, T in {3,4}."""
    out = []
    for k in range(count):
        rng = np.random.default_rng(seed + k)
        n, horizon = int(rng.choice([2, 3])), int(rng.choice([3, 4]))
        out.append(random_instance(rng, n, horizon))
    return out


@pytest.fixture(scope="session")
def ten_unit():
    return load_instance("ten_unit.json")


def pytest_terminal_summary(terminalreporter):
    lines = getattr(__import__("sys").modules.get("test_acceptance"), "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
