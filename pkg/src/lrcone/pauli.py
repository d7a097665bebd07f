"""Pauli-string decomposition of dense operators and the spatial projector P_r.

Coefficients live in a dense array of shape ``(4,) * n`` indexed by the
letter on each qubit (0=I, 1=X, 2=Y, 3=Z). The forward transform costs
O(n 4^n) instead of one trace per string.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from lrcone.errors import DomainError, ResourceError
from lrcone.lattice import PAULI, Lattice, embed_operator

__all__ = [
    "LETTERS",
    "PauliString",
    "OperatorDecomposition",
    "pauli_coefficients",
    "from_coefficients",
    "decompose",
    "project_outside",
    "project_outside_coefficients",
    "project_outside_matrix",
    "partial_trace_restrict",
    "op_norm",
    "frobenius_norm_normalized",
]

LETTERS = "IXYZ"
MAX_DECOMPOSE_QUBITS = 14
DEFAULT_CUTOFF = 1e-14

# Rows: I, X, Y, Z. Columns: block entries m00, m01, m10, m11.
_FORWARD = 0.5 * np.array(
    [
        [1, 0, 0, 1],
        [0, 1, 1, 0],
        [0, 1j, -1j, 0],
        [1, 0, 0, -1],
    ],
    dtype=complex,
)
_INVERSE = np.array(
    [
        [1, 0, 0, 1],
        [0, 1, -1j, 0],
        [0, 1, 1j, 0],
        [1, 0, 0, -1],
    ],
    dtype=complex,
)


@dataclass(frozen=True)
class PauliString:
    """A weighted tensor product of Pauli letters; absent sites carry identity."""

    letters: tuple[tuple[int, str], ...]
    coeff: complex = 1.0

    @classmethod
    def from_dict(cls, letters: Mapping[int, str], coeff: complex = 1.0) -> "PauliString":
        items = []
        for site, letter in letters.items():
            letter = letter.upper()
            if letter not in "XYZ":
                raise DomainError(f"Pauli letter must be X, Y or Z, got {letter!r}")
            items.append((int(site), letter))
        return cls(tuple(sorted(items)), complex(coeff))

    @property
    def support(self) -> frozenset[int]:
        return frozenset(site for site, _ in self.letters)

    def label(self, n: int) -> str:
        out = ["I"] * n
        for site, letter in self.letters:
            out[site] = letter
        return "".join(out)

    def to_matrix(self, n: int) -> np.ndarray:
        mat = np.ones((1, 1), dtype=complex)
        for ch in self.label(n):
            mat = np.kron(mat, PAULI[ch])
        return self.coeff * mat

    def to_dict(self) -> dict:
        return {
            "letters": {str(site): letter for site, letter in self.letters},
            "re": float(self.coeff.real),
            "im": float(self.coeff.imag),
        }


@dataclass(frozen=True)
class OperatorDecomposition:
    n: int
    strings: tuple[PauliString, ...]

    def coefficient_array(self) -> np.ndarray:
        arr = np.zeros((4,) * self.n, dtype=complex)
        for s in self.strings:
            idx = [0] * self.n
            for site, letter in s.letters:
                idx[site] = LETTERS.index(letter)
            arr[tuple(idx)] = s.coeff
        return arr

    def to_matrix(self) -> np.ndarray:
        return from_coefficients(self.coefficient_array())

    def weight(self) -> float:
        """sum |c_P|^2, which equals Tr(O^dag O) / 2^n."""
        return float(sum(abs(s.coeff) ** 2 for s in self.strings))

    def to_json(self) -> str:
        return json.dumps([s.to_dict() for s in self.strings])

    @classmethod
    def from_json(cls, text: str, n: int) -> "OperatorDecomposition":
        strings = [
            PauliString.from_dict({int(k): v for k, v in item["letters"].items()}, complex(item["re"], item["im"]))
            for item in json.loads(text)
        ]
        return cls(n, _canonical(strings))

    def __len__(self) -> int:
        return len(self.strings)


def _canonical(strings: Iterable[PauliString]) -> tuple[PauliString, ...]:
    return tuple(sorted(strings, key=lambda s: s.letters))


def _qubits_of(O: np.ndarray, n: int | None) -> int:
    O = np.asarray(O)
    if O.ndim != 2 or O.shape[0] != O.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {O.shape}")
    dim = O.shape[0]
    guess = dim.bit_length() - 1
    if n is None:
        n = guess
    if 2**n != dim:
        raise DomainError(f"matrix dimension {dim} is not 2^{n}")
    return n


def pauli_coefficients(O: np.ndarray, n: int | None = None) -> np.ndarray:
    """All c_P = Tr(P^dag O) / 2^n as an array of shape (4,)*n."""
    n = _qubits_of(O, n)
    if n > MAX_DECOMPOSE_QUBITS:
        raise ResourceError(f"{n} qubits exceeds the decomposition limit of {MAX_DECOMPOSE_QUBITS}")
    if n == 0:
        return np.asarray(O, dtype=complex).reshape(())
    # (r_0..r_{n-1}, c_0..c_{n-1}) -> (r_0, c_0, r_1, c_1, ...) -> one axis of length 4 per qubit
    t = np.asarray(O, dtype=complex).reshape((2,) * (2 * n))
    order = [ax for k in range(n) for ax in (k, n + k)]
    t = t.transpose(order).reshape((4,) * n)
    for k in range(n):
        t = np.moveaxis(np.tensordot(_FORWARD, t, axes=([1], [k])), 0, k)
    return t


def from_coefficients(coeffs: np.ndarray) -> np.ndarray:
    n = coeffs.ndim
    t = np.asarray(coeffs, dtype=complex)
    for k in range(n):
        t = np.moveaxis(np.tensordot(_INVERSE, t, axes=([1], [k])), 0, k)
    t = t.reshape((2,) * (2 * n))
    order = [2 * k for k in range(n)] + [2 * k + 1 for k in range(n)]
    return t.transpose(order).reshape(2**n, 2**n)


def decompose(O: np.ndarray, n: int | None = None, cutoff: float = DEFAULT_CUTOFF) -> OperatorDecomposition:
    coeffs = pauli_coefficients(O, n)
    n = coeffs.ndim
    strings = []
    for idx in zip(*np.nonzero(np.abs(coeffs) >= cutoff)):
        letters = tuple((site, LETTERS[l]) for site, l in enumerate(idx) if l)
        strings.append(PauliString(letters, complex(coeffs[idx])))
    return OperatorDecomposition(n, _canonical(strings))


def _reaches(support: Iterable[int], center: int, r: float, lattice: Lattice) -> bool:
    row = lattice.distances[center]
    return any(row[j] >= r for j in support)


def project_outside(dec: OperatorDecomposition, center: int, r: float, lattice: Lattice) -> OperatorDecomposition:
    """Keep the strings with some support site at distance >= r from ``center``.

    The identity string has empty support and is always dropped.
    """
    if r < 0:
        raise DomainError(f"projection radius must be >= 0, got {r}")
    kept = [s for s in dec.strings if _reaches(s.support, center, r, lattice)]
    return OperatorDecomposition(dec.n, tuple(kept))


def project_outside_coefficients(coeffs: np.ndarray, center: int, r: float, lattice: Lattice) -> np.ndarray:
    """Same selection as :func:`project_outside` on a dense coefficient array."""
    if r < 0:
        raise DomainError(f"projection radius must be >= 0, got {r}")
    far = set(lattice.far_sites(center, r))
    out = np.array(coeffs, dtype=complex, copy=True)
    # strings that are the identity on every far site never reach distance r
    out[tuple(0 if s in far else slice(None) for s in range(out.ndim))] = 0.0
    return out


def project_outside_matrix(O: np.ndarray, center: int, r: float, lattice: Lattice) -> np.ndarray:
    """P_r O as a dense matrix, via the coefficient transform."""
    n = lattice.n_sites
    return from_coefficients(project_outside_coefficients(pauli_coefficients(O, n), center, r, lattice))


def partial_trace_restrict(O: np.ndarray, keep: Sequence[int], n: int) -> np.ndarray:
    """Tr_{rest}[O] / 2^{|rest|} tensored back with identity on the rest.

    This is the trace-compatible restriction of ``O`` to the sites in
    ``keep``: in the Pauli basis it retains exactly the strings supported
    inside ``keep``.
    """
    keep = sorted(set(int(k) for k in keep))
    rest = [s for s in range(n) if s not in keep]
    t = np.asarray(O, dtype=complex).reshape((2,) * (2 * n))
    letters_in = "abcdefghijklmnopqrstuvwxyz"
    letters_out = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    rows = [letters_in[s] for s in range(n)]
    cols = [letters_out[s] if s in keep else letters_in[s] for s in range(n)]
    sub = "".join(rows + cols) + "->" + "".join([letters_in[s] for s in keep] + [letters_out[s] for s in keep])
    reduced = np.einsum(sub, t).reshape(2 ** len(keep), 2 ** len(keep)) / 2 ** len(rest)

    return embed_operator(reduced, keep, n)


def op_norm(O: np.ndarray) -> float:
    """Largest singular value.

    Hermitian and anti-Hermitian inputs (evolved observables, their
    projections and commutators) take the cheaper eigvalsh route.
    """
    O = np.asarray(O)
    if O.ndim != 2 or O.shape[0] != O.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {O.shape}")
    if O.size == 0:
        return 0.0
    scale = np.max(np.abs(O))
    if scale == 0:
        return 0.0
    Od = O.conj().T
    # Rounding noise is absolute, so tiny matrices are judged on the unit scale.
    # The norm error of dropping the residual part is at most its own norm.
    tol = 1e-13 * max(scale, 1.0)
    if np.max(np.abs(O - Od)) <= tol:
        return float(np.max(np.abs(np.linalg.eigvalsh((O + Od) / 2))))
    if np.max(np.abs(O + Od)) <= tol:
        return float(np.max(np.abs(np.linalg.eigvalsh(0.5j * (O - Od)))))
    return float(np.linalg.svd(O, compute_uv=False)[0])


def frobenius_norm_normalized(O: np.ndarray, n: int | None = None) -> float:
    n = _qubits_of(O, n)
    O = np.asarray(O)
    return float(np.sqrt(np.vdot(O, O).real / 2**n))
