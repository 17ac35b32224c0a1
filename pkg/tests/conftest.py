import numpy as np
import pytest

from otoc_qrt.emitter import EmitterParams, liouvillian, noise_model
from otoc_qrt.qrt import Engine

_ACCEPTANCE = []


def random_operator(rng, n=2):
    return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))


def random_hermitian(rng, n=2):
    a = random_operator(rng, n)
    return 0.5 * (a + a.conj().T)


def random_density(rng, n=2):
    a = random_operator(rng, n)
    rho = a @ a.conj().T
    return rho / np.trace(rho)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def coherent():
    p = EmitterParams(omega=2.0)
    return p, Engine(liouvillian(p), noise_model(p))


@pytest.fixture(scope="session")
def thermal():
    p = EmitterParams(nbar=1.0)
    return p, Engine(liouvillian(p), noise_model(p))


@pytest.fixture
def criterion():
    """Record one acceptance verdict line, then assert it."""

    def record(number, passed, detail):
        _ACCEPTANCE.append((number, bool(passed), detail))
        assert passed, f"criterion {number}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {detail}")
