import numpy as np
import pytest

_ACCEPTANCE = []


@pytest.fixture
def report():
    """Record one pass/fail line per acceptance criterion."""
    def record(label, ok, detail=""):
        _ACCEPTANCE.append((label, bool(ok), detail))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}")


@pytest.fixture
def ramp8():
    """8x8 image with a distinct color at every pixel."""
    r, c = np.mgrid[0:8, 0:8]
    return np.stack([r / 7.0, c / 7.0, (r * 8 + c) / 63.0], axis=-1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
