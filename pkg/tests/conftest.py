import numpy as np
import pytest


def phase_align(a, b):
    """Rotate ``a`` by the unit phase that best matches ``b``."""
    inner = np.vdot(a, b)
    return a if inner == 0 else a * (inner / abs(inner))


def assert_modes_close(A, B, atol):
    for i in range(A.shape[1]):
        np.testing.assert_allclose(phase_align(A[:, i], B[:, i]), B[:, i], atol=atol)


def sorted_eigs(z):
    z = np.asarray(z)
    return z[np.lexsort((np.round(z.imag, 8), np.round(z.real, 8)))]


def random_similarity_system(rng, eigs, n=None):
    """Well-conditioned real matrix with prescribed real eigenvalues."""
    n = n or len(eigs)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    S = Q @ np.diag(1 + 0.5 * rng.random(n))
    return S @ np.diag(eigs) @ np.linalg.inv(S)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# Every solve in the suite is checked for a non-increasing residual history.
SOLVE_LOG = []


@pytest.fixture(autouse=True)
def _monotone_solver(monkeypatch):
    import optdmd.optimized
    import optdmd.varpro

    original = optdmd.varpro.solve_varpro

    def checked(*args, **kwargs):
        sol = original(*args, **kwargs)
        hist = sol.residual_history
        assert np.all(np.diff(hist) <= 0), f"residual history increased: {hist}"
        SOLVE_LOG.append(hist.size)
        return sol

    monkeypatch.setattr(optdmd.varpro, "solve_varpro", checked)
    monkeypatch.setattr(optdmd.optimized, "solve_varpro", checked)
    yield


ACCEPTANCE = []


@pytest.fixture
def report():
    """Record one acceptance line; the full list is echoed in the terminal summary."""

    def _report(number, title, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title} ({detail})"
        ACCEPTANCE.append(line)
        print(line)
        return passed

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
