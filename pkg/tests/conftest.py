import sys
from pathlib import Path

import numpy as np
import pytest

from monostereo import kernels

sys.path.insert(0, str(Path(__file__).parent))

BACKENDS = kernels.available_backends()


@pytest.fixture(params=sorted(BACKENDS))
def kernel_backend(request, monkeypatch):
    """Run the test once per available kernel implementation."""
    monkeypatch.setattr(kernels, "impl", BACKENDS[request.param])
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion and fail the test on FAIL."""
    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
