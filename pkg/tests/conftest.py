import numpy as np
import pytest


def random_positive(rng, n, scale=1.0):
    return np.exp(scale * rng.normal(size=(n, n)))


def random_reciprocal(rng, n, scale=1.0):
    k = scale * rng.normal(size=(n, n))
    return np.exp(k - k.T)


def random_consistent(rng, n, scale=1.0):
    u = scale * rng.normal(size=n)
    return np.exp(u[:, None] - u[None, :])


def random_cm(rng, n, scale=1.0):
    """Pure matrix whose multiplicative and additive Phi parts are both consistent."""
    u = scale * rng.normal(size=n)
    v = scale * rng.normal(size=n)
    idx = np.arange(n)
    eps = np.sign(idx[:, None] - idx[None, :])
    l = (u[:, None] - u[None, :]) + eps * (v[:, None] - v[None, :])
    return np.exp(l)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


INC3 = np.array([[1, 2, 2], [0.5, 1, 2], [0.5, 0.5, 1]])
C3 = np.array([[1, 2, 4], [0.5, 1, 2], [0.25, 0.5, 1]])
NONREC2 = np.array([[1.0, 2.0], [8.0, 1.0]])
WITNESS4 = np.array([[1, 2, 1, 1], [0.5, 1, 2, 1], [1, 0.5, 1, 2], [1, 1, 0.5, 1]])


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def acceptance(request):
    """Record one criterion outcome; the line is echoed live and in the summary."""
    lines = request.config.stash[_ACCEPTANCE]

    def record(number, name, value, tol, passed, detail=""):
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] criterion {number:>2}: {name}: {detail or f'{value:.3e} vs tol {tol:.0e}'}"
        lines.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
