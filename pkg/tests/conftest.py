import numpy as np
import pytest

# acceptance verdicts, printed after the run: list of (label, passed, detail)
VERDICTS: list[tuple[str, bool, str]] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def verdict():
    def record(label: str, passed: bool, detail: str) -> bool:
        VERDICTS.append((label, bool(passed), detail))
        print(f"{'PASS' if passed else 'FAIL'} {label}: {detail}")
        return bool(passed)
    return record


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in sorted(VERDICTS, key=lambda v: v[0]):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} {label}: {detail}")
