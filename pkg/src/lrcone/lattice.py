"""Hypercubic lattices, power-law two-body Hamiltonians and range bucketing."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from lrcone.errors import DomainError, ResourceError

__all__ = [
    "METRICS",
    "ENSEMBLES",
    "Lattice",
    "CouplingTerm",
    "PowerLawHamiltonian",
    "build_lattice",
    "tau",
    "sample_hamiltonian",
    "range_bucket",
    "embed_operator",
    "site_operator",
    "PAULI",
]

METRICS = ("euclidean", "chebyshev", "manhattan")
ENSEMBLES = ("ising_zz", "xy", "random_two_body")

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# Dense matrices of 2^n x 2^n complex entries; 12 qubits is already 256 MiB.
MAX_QUBITS = 12


@dataclass(frozen=True)
class Lattice:
    """Open-boundary hypercubic lattice with integer site coordinates.

    Sites are enumerated in row-major order over ``extents``; site ``k`` is
    also qubit ``k`` (most significant first) in every dense matrix built on
    this lattice.
    """

    d: int
    extents: tuple[int, ...]
    metric: str = "euclidean"

    @cached_property
    def coords(self) -> np.ndarray:
        pts = np.array(list(itertools.product(*[range(e) for e in self.extents])), dtype=float)
        pts.setflags(write=False)
        return pts

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.extents))

    @cached_property
    def distances(self) -> np.ndarray:
        diff = np.abs(self.coords[:, None, :] - self.coords[None, :, :])
        if self.metric == "euclidean":
            dist = np.sqrt(np.sum(diff**2, axis=-1))
        elif self.metric == "chebyshev":
            dist = np.max(diff, axis=-1)
        else:
            dist = np.sum(diff, axis=-1)
        dist.setflags(write=False)
        return dist

    def dist(self, i: int, j: int) -> float:
        return float(self.distances[i, j])

    @property
    def diameter(self) -> float:
        """r*, the largest pairwise distance."""
        return float(self.distances.max())

    def ball(self, center: int, radius: float, *, open_ball: bool = False) -> list[int]:
        row = self.distances[center]
        mask = row < radius if open_ball else row <= radius
        return [int(k) for k in np.flatnonzero(mask)]

    def far_sites(self, center: int, r: float) -> list[int]:
        """Sites at distance >= r from ``center``."""
        return [int(k) for k in np.flatnonzero(self.distances[center] >= r)]

    def pairs(self) -> Iterable[tuple[int, int]]:
        return itertools.combinations(range(self.n_sites), 2)

    def to_dict(self) -> dict:
        return {"d": self.d, "extents": list(self.extents), "metric": self.metric}


def build_lattice(d: int, extents: Sequence[int], metric: str = "euclidean") -> Lattice:
    if d < 1:
        raise DomainError(f"lattice dimension must be >= 1, got {d}")
    extents = tuple(int(e) for e in extents)
    if len(extents) == 0:
        raise DomainError("extents must be non-empty")
    if len(extents) != d:
        raise DomainError(f"need one extent per axis: d={d}, extents={list(extents)}")
    if any(e < 2 for e in extents):
        raise DomainError(f"every extent must be >= 2, got {list(extents)}")
    metric = metric.lower()
    if metric not in METRICS:
        raise DomainError(f"unknown metric {metric!r}; choose from {METRICS}")
    return Lattice(d=d, extents=extents, metric=metric)


def tau(lattice: Lattice, alpha: float) -> float:
    """max_i sum_{j != i} dist(i, j)^-alpha."""
    if alpha <= lattice.d:
        raise DomainError(f"tau needs alpha > d (alpha={alpha}, d={lattice.d})")
    dist = lattice.distances
    with np.errstate(divide="ignore"):
        w = np.where(dist > 0, dist ** (-float(alpha)), 0.0)
    return float(w.sum(axis=1).max())


@dataclass(frozen=True, eq=False)
class CouplingTerm:
    i: int
    j: int
    matrix: np.ndarray  # 4x4, acting on (i, j) with i the more significant qubit

    def norm(self) -> float:
        return float(np.linalg.svd(self.matrix, compute_uv=False)[0])


@dataclass(frozen=True, eq=False)
class PowerLawHamiltonian:
    lattice: Lattice
    alpha: float
    terms: tuple[CouplingTerm, ...]
    ensemble: str = "custom"
    seed: int | None = None

    @property
    def n_qubits(self) -> int:
        return self.lattice.n_sites

    def dense(self) -> np.ndarray:
        n = self.n_qubits
        if n > MAX_QUBITS:
            raise ResourceError(f"{n} qubits exceeds the dense limit of {MAX_QUBITS}")
        H = np.zeros((2**n, 2**n), dtype=complex)
        for term in self.terms:
            H += embed_operator(term.matrix, (term.i, term.j), n)
        return H

    def restricted(self, keep) -> "PowerLawHamiltonian":
        """Same Hamiltonian with only the terms for which ``keep(term)`` is true."""
        return PowerLawHamiltonian(
            lattice=self.lattice,
            alpha=self.alpha,
            terms=tuple(t for t in self.terms if keep(t)),
            ensemble=self.ensemble,
            seed=self.seed,
        )

    def norm_violations(self, atol: float = 1e-12) -> list[tuple[int, int, float, float]]:
        out = []
        for t in self.terms:
            cap = self.lattice.dist(t.i, t.j) ** (-self.alpha)
            nrm = t.norm()
            if nrm > cap * (1 + atol) + atol:
                out.append((t.i, t.j, nrm, cap))
        return out

    def to_dict(self) -> dict:
        return {
            **self.lattice.to_dict(),
            "alpha": self.alpha,
            "ensemble": self.ensemble,
            "seed": self.seed,
            "terms": [
                {
                    "i": t.i,
                    "j": t.j,
                    "matrix": [[float(z.real), float(z.imag)] for z in t.matrix.ravel()],
                }
                for t in self.terms
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "PowerLawHamiltonian":
        lattice = build_lattice(doc["d"], doc["extents"], doc.get("metric", "euclidean"))
        terms = []
        for t in doc["terms"]:
            i, j = int(t["i"]), int(t["j"])
            if i == j:
                raise DomainError(f"coupling term needs two distinct sites, got ({i}, {j})")
            flat = [complex(re, im) for re, im in t["matrix"]]
            if len(flat) != 16:
                raise DomainError("coupling matrices must be 4x4")
            terms.append(CouplingTerm(i, j, np.array(flat, dtype=complex).reshape(4, 4)))
        h = cls(
            lattice=lattice,
            alpha=float(doc["alpha"]),
            terms=tuple(terms),
            ensemble=doc.get("ensemble", "custom"),
            seed=doc.get("seed"),
        )
        bad = h.norm_violations()
        if bad:
            i, j, nrm, cap = bad[0]
            raise DomainError(f"term ({i},{j}) has norm {nrm} above the cap dist^-alpha = {cap}")
        return h

    @classmethod
    def from_json(cls, text: str) -> "PowerLawHamiltonian":
        return cls.from_dict(json.loads(text))


_ZZ = np.kron(PAULI["Z"], PAULI["Z"])
_XY = 0.5 * (np.kron(PAULI["X"], PAULI["X"]) + np.kron(PAULI["Y"], PAULI["Y"]))


def _random_hermitian_unit(rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h = (a + a.conj().T) / 2
    return h / np.max(np.abs(np.linalg.eigvalsh(h)))


def sample_hamiltonian(lattice: Lattice, alpha: float, ensemble: str, seed: int) -> PowerLawHamiltonian:
    """Draw one Hamiltonian with ``||h_ij|| = |u_ij| dist(i,j)^-alpha``, ``u_ij ~ U[-1, 1]``.

    Pairs are visited in lexicographic order and every draw comes from
    ``numpy.random.default_rng(seed)``, so the result is a pure function of
    the arguments.
    """
    if alpha <= lattice.d:
        raise DomainError(f"power-law exponent must exceed d (alpha={alpha}, d={lattice.d})")
    if ensemble not in ENSEMBLES:
        raise DomainError(f"unknown ensemble {ensemble!r}; choose from {ENSEMBLES}")
    rng = np.random.default_rng(seed)
    terms = []
    for i, j in lattice.pairs():
        u = rng.uniform(-1.0, 1.0)
        scale = u * lattice.dist(i, j) ** (-alpha)
        if ensemble == "ising_zz":
            base = _ZZ
        elif ensemble == "xy":
            base = _XY
        else:
            base = _random_hermitian_unit(rng)
        terms.append(CouplingTerm(i, j, scale * base))
    return PowerLawHamiltonian(lattice, float(alpha), tuple(terms), ensemble, int(seed))


def range_bucket(h: PowerLawHamiltonian, L: float, n: int) -> list[PowerLawHamiltonian]:
    """Split ``h`` into V_1..V_{n+1} by coupling range.

    V_k holds the terms with ell_{k-1} < dist <= ell_k, where ell_0 = 0,
    ell_k = L^k for k <= n and ell_{n+1} = r*.
    """
    if L <= 1:
        raise DomainError(f"bucket base L must exceed 1, got {L}")
    if n < 1:
        raise DomainError(f"need at least one bucket, got n={n}")
    edges = [float(L) ** k for k in range(1, n + 1)] + [max(h.lattice.diameter, float(L) ** n)]
    buckets: list[list[CouplingTerm]] = [[] for _ in edges]
    for term in h.terms:
        dist = h.lattice.dist(term.i, term.j)
        k = next(k for k, edge in enumerate(edges) if dist <= edge)
        buckets[k].append(term)
    return [
        PowerLawHamiltonian(h.lattice, h.alpha, tuple(b), h.ensemble, h.seed) for b in buckets
    ]


def embed_operator(op: np.ndarray, sites: Sequence[int], n: int) -> np.ndarray:
    """Lift an operator on ``sites`` (in the given order) to the full 2^n space."""
    k = len(sites)
    rest = [s for s in range(n) if s not in sites]
    m = n - k
    full = np.multiply.outer(
        np.asarray(op, dtype=complex).reshape([2] * (2 * k)),
        np.eye(2**m, dtype=complex).reshape([2] * (2 * m)),
    )
    out_axis = {s: a for a, s in enumerate(sites)} | {s: 2 * k + b for b, s in enumerate(rest)}
    in_axis = {s: k + a for a, s in enumerate(sites)} | {s: 2 * k + m + b for b, s in enumerate(rest)}
    perm = [out_axis[s] for s in range(n)] + [in_axis[s] for s in range(n)]
    return full.transpose(perm).reshape(2**n, 2**n)


def site_operator(letter_or_matrix, site: int, n: int) -> np.ndarray:
    op = PAULI[letter_or_matrix] if isinstance(letter_or_matrix, str) else letter_or_matrix
    return embed_operator(op, (site,), n)
