import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


def dense_particle_generators(config, n):
    """H_k = sum_i h_k^(i) built by explicit Kronecker products, independent of the diagonal code."""
    d1 = sum(config.dims)
    hs = []
    for k in range(config.M):
        h1 = np.zeros((d1, d1))
        off = config.offsets[k]
        for j, lam in enumerate(config.spectra[k]):
            h1[off + j, off + j] = lam
        total = np.zeros((d1 ** n, d1 ** n))
        for i in range(n):
            ops = [np.eye(d1)] * n
            ops[i] = h1
            t = np.ones((1, 1))
            for o in ops:
                t = np.kron(t, o)
            total += t
        hs.append(total)
    return hs


def sylvester_qfi(rho, h):
    """Scalar QFI Tr[rho L^2] from the SLD equation rho L + L rho = 2 d rho (full-rank rho)."""
    from scipy.linalg import solve_sylvester

    drho = -1j * (h @ rho - rho @ h)
    L = solve_sylvester(rho, rho, 2 * drho)
    return float(np.real(np.trace(rho @ L @ L)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criteria register their outcome here; the terminal summary prints one line each
ACCEPTANCE = {}


class criterion:
    """Context manager recording PASS/FAIL for one numbered acceptance criterion."""

    def __init__(self, number, title):
        self.number, self.title = number, title

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        ok = exc_type is None
        line = f"criterion {self.number:>2}: {'PASS' if ok else 'FAIL'}  {self.title}"
        if not ok:
            line += f"  ({exc_type.__name__}: {str(exc).splitlines()[0] if str(exc) else ''})"
        ACCEPTANCE[self.number] = line
        print(line)
        return False


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
