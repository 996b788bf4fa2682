import numpy as np
import pytest

from coherent_kernel import _backend, _purepy

try:
    from coherent_kernel import _native
except ImportError:  # pragma: no cover - extension not built
    _native = None

BACKENDS = ["python"] + (["native"] if _native is not None else [])

ACCEPTANCE_LINES = []


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run a test once per available kernel backend."""
    mod = _native if request.param == "native" else _purepy
    monkeypatch.setattr(_backend, "cayley_axial_steps", mod.cayley_axial_steps)
    monkeypatch.setattr(_backend, "rk4_linear2", mod.rk4_linear2)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
