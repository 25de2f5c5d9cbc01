import numpy as np
import pytest

_ACCEPTANCE = []


@pytest.fixture
def record():
    """Collects one summary line per acceptance criterion."""

    def _record(number, name, passed, detail):
        _ACCEPTANCE.append((number, name, bool(passed), detail))
        return passed

    return _record


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number:>2}. {name}: {detail}")
