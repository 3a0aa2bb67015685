import pytest

from ppbranch import load_config
from ppbranch.model import ModelConfig, OffspringLaw, build_table


@pytest.fixture(scope="session")
def ex1():
    return load_config("example1")


@pytest.fixture(scope="session")
def ex2():
    return load_config("example2")


@pytest.fixture(scope="session")
def ex3():
    return load_config("example3")


@pytest.fixture(scope="session")
def dead_config():
    """Every individual has zero offspring."""
    law = OffspringLaw.explicit([1.0])
    surv = build_table([(0.0, 0.5)], 0.5, 0.5, 1.0)
    return ModelConfig(law, law, surv, surv, None, (1, 1))


@pytest.fixture(scope="session")
def free_config():
    """Survival forced to 1: two independent Galton-Watson processes."""
    one = build_table([(0.0, 1.0)], 1.0, 1.0, 1.0)
    return ModelConfig(OffspringLaw.geometric(1 / 3), OffspringLaw.geometric(0.4), one, one, None, (5, 5))


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
