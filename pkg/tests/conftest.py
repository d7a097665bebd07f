import numpy as np
import pytest

from lrcone.lattice import PAULI, build_lattice, embed_operator

_ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    """Print a one-line acceptance verdict and keep it for the terminal summary."""
    print(line)
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def ising_pair(J=1.0):
    """H = J Z0 Z1 on a 2-chain, as a custom Hamiltonian document."""
    zz = J * np.kron(PAULI["Z"], PAULI["Z"])
    return {
        "d": 1,
        "extents": [2],
        "metric": "euclidean",
        "alpha": 2.5,
        "ensemble": "custom",
        "seed": None,
        "terms": [{"i": 0, "j": 1, "matrix": [[float(z.real), float(z.imag)] for z in zz.ravel()]}],
    }


@pytest.fixture
def chain5():
    return build_lattice(1, [5])


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def random_hermitian(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (a + a.conj().T) / 2


def kron_chain(*ops):
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def two_site(op, i, j, n):
    return embed_operator(op, (i, j), n)
