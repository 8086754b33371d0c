import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one acceptance line: criterion(number, ok, detail, seconds, budget)."""

    def record(number, ok, detail, seconds, budget):
        within = seconds <= budget
        status = "PASS" if ok and within else "FAIL"
        line = f"criterion {number:2d}: {status}  {detail}  [{seconds:.1f}s, budget {budget:.0f}s]"
        ACCEPTANCE_LINES.append((number, line))
        print(line)
        return ok and within

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
