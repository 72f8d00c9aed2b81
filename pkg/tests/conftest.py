import numpy as np
import pytest

from distcert.randomness import SeededStream


@pytest.fixture
def src(request):
    """A fresh stream keyed by the test name, so tests do not share draws."""
    return SeededStream(20240611, ("test", request.node.name))


def rand_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def rand_hermitian(rng, d):
    G = rand_complex(rng, d, d)
    return (G + G.conj().T) / 2


def rand_density(rng, d, rank=None):
    G = rand_complex(rng, d, d if rank is None else rank)
    r = G @ G.conj().T
    return r / np.trace(r).real


_ACCEPTANCE: dict = {}


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion; printed in the terminal summary."""

    def _report(criterion: int, ok: bool, detail: str):
        line = f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'} {detail}"
        _ACCEPTANCE[criterion] = line
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])
