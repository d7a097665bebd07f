"""Exact Heisenberg-picture dynamics and the spreading functionals built on it."""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from lrcone.errors import DomainError, ResourceError
from lrcone.lattice import MAX_QUBITS, PAULI, Lattice, PowerLawHamiltonian, embed_operator, site_operator
from lrcone.pauli import (
    frobenius_norm_normalized,
    op_norm,
    pauli_coefficients,
    from_coefficients,
    project_outside_coefficients,
)

__all__ = [
    "NORM_KINDS",
    "EvolutionContext",
    "LeakageCurve",
    "evolve",
    "leakage",
    "leakage_curve",
    "commutator_norm",
    "site_commutator",
    "sup_commutator_estimate",
    "product_state",
    "connected_correlator",
    "is_product_across",
    "truncation_error",
    "CSV_HEADER",
    "format_float",
]

NORM_KINDS = ("operator", "frobenius")
CSV_HEADER = ("center", "r", "t", "value", "norm_kind", "seed", "alpha", "ensemble")


def format_float(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True, eq=False)
class EvolutionContext:
    """Eigendecomposition of a time-independent Hamiltonian, cached for reuse."""

    energies: np.ndarray
    vectors: np.ndarray
    n: int
    hamiltonian: PowerLawHamiltonian | None = None

    @classmethod
    def from_matrix(cls, H: np.ndarray, hamiltonian: PowerLawHamiltonian | None = None) -> "EvolutionContext":
        H = np.asarray(H, dtype=complex)
        n = H.shape[0].bit_length() - 1
        if 2**n != H.shape[0]:
            raise DomainError(f"Hamiltonian dimension {H.shape[0]} is not a power of two")
        if n > MAX_QUBITS:
            raise ResourceError(f"{n} qubits exceeds the dense limit of {MAX_QUBITS}")
        energies, vectors = np.linalg.eigh(H)
        energies.setflags(write=False)
        vectors.setflags(write=False)
        return cls(energies, vectors, n, hamiltonian)

    @classmethod
    def from_hamiltonian(cls, h: PowerLawHamiltonian) -> "EvolutionContext":
        return cls.from_matrix(h.dense(), h)

    @property
    def lattice(self) -> Lattice | None:
        return None if self.hamiltonian is None else self.hamiltonian.lattice

    def propagator(self, t: float) -> np.ndarray:
        """U(t) = exp(-iHt)."""
        return (self.vectors * np.exp(-1j * self.energies * t)) @ self.vectors.conj().T


def evolve(ctx: EvolutionContext, O: np.ndarray, t: float) -> np.ndarray:
    """O(t) = exp(iHt) O exp(-iHt), computed in the energy eigenbasis."""
    O = np.asarray(O, dtype=complex)
    if O.shape != (2**ctx.n, 2**ctx.n):
        raise DomainError(f"operator shape {O.shape} does not match {ctx.n} qubits")
    if t == 0:
        return O.copy()
    V = ctx.vectors
    phase = np.exp(1j * ctx.energies * t)
    inner = V.conj().T @ O @ V
    inner *= np.outer(phase, phase.conj())
    return V @ inner @ V.conj().T


def _norm(O: np.ndarray, kind: str) -> float:
    if kind == "operator":
        return op_norm(O)
    if kind == "frobenius":
        return frobenius_norm_normalized(O)
    raise DomainError(f"unknown norm kind {kind!r}; choose from {NORM_KINDS}")


def _lattice_of(ctx: EvolutionContext, lattice: Lattice | None) -> Lattice:
    lattice = lattice or ctx.lattice
    if lattice is None:
        raise DomainError("a lattice is needed to measure distances")
    return lattice


def leakage(
    ctx: EvolutionContext,
    O: np.ndarray,
    center: int,
    r: float,
    t: float,
    norm_kind: str = "operator",
    lattice: Lattice | None = None,
) -> float:
    """||P_r O(t)|| for an operator that starts on ``center``."""
    lattice = _lattice_of(ctx, lattice)
    Ot = evolve(ctx, O, t)
    projected = project_outside_coefficients(pauli_coefficients(Ot, ctx.n), center, r, lattice)
    if norm_kind == "frobenius":
        return float(np.sqrt(np.sum(np.abs(projected) ** 2)))
    return _norm(from_coefficients(projected), norm_kind)


@dataclass
class LeakageCurve:
    """Leakage sampled on an (r, t) grid; ``values[a, b]`` is at ``(r_grid[a], t_grid[b])``."""

    center: int
    r_grid: np.ndarray
    t_grid: np.ndarray
    values: np.ndarray
    norm_kind: str = "operator"
    meta: dict = field(default_factory=dict)

    def points(self) -> Iterable[tuple[float, float, float, str]]:
        for a, r in enumerate(self.r_grid):
            for b, t in enumerate(self.t_grid):
                yield float(r), float(t), float(self.values[a, b]), self.norm_kind

    def csv_rows(self) -> list[list[str]]:
        seed = self.meta.get("seed", "")
        alpha = self.meta.get("alpha", "")
        ensemble = self.meta.get("ensemble", "")
        return [
            [
                str(self.center),
                format_float(r),
                format_float(t),
                format_float(v),
                kind,
                "" if seed is None else str(seed),
                format_float(alpha) if alpha != "" else "",
                str(ensemble),
            ]
            for r, t, v, kind in self.points()
        ]

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if header:
            writer.writerow(CSV_HEADER)
        writer.writerows(self.csv_rows())
        return buf.getvalue()


def leakage_curve(
    ctx: EvolutionContext,
    O: np.ndarray,
    center: int,
    r_grid: Sequence[float],
    t_grid: Sequence[float],
    norm_kind: str = "operator",
    lattice: Lattice | None = None,
) -> LeakageCurve:
    """Evaluate leakage on a grid, evolving once per time point."""
    lattice = _lattice_of(ctx, lattice)
    r_grid = np.asarray(r_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    values = np.zeros((len(r_grid), len(t_grid)))
    for b, t in enumerate(t_grid):
        coeffs = pauli_coefficients(evolve(ctx, O, t), ctx.n)
        for a, r in enumerate(r_grid):
            projected = project_outside_coefficients(coeffs, center, r, lattice)
            if norm_kind == "frobenius":
                values[a, b] = np.sqrt(np.sum(np.abs(projected) ** 2))
            else:
                values[a, b] = _norm(from_coefficients(projected), norm_kind)
    meta = {}
    if ctx.hamiltonian is not None:
        meta = {"seed": ctx.hamiltonian.seed, "alpha": ctx.hamiltonian.alpha, "ensemble": ctx.hamiltonian.ensemble}
    return LeakageCurve(center, r_grid, t_grid, values, norm_kind, meta)


def site_commutator(O: np.ndarray, letter: str, site: int, n: int) -> np.ndarray:
    """[sigma_site, O] without forming the 2^n x 2^n Pauli matrix."""
    sigma = PAULI[letter]
    dim = 2**n
    left = np.asarray(O).reshape(2**site, 2, 2 ** (n - site - 1), dim)
    AO = np.einsum("ab,ibkc->iakc", sigma, left).reshape(dim, dim)
    right = np.asarray(O).reshape(dim, 2**site, 2, 2 ** (n - site - 1))
    OA = np.einsum("rjbk,ba->rjak", right, sigma).reshape(dim, dim)
    return AO - OA


def commutator_norm(ctx: EvolutionContext, O: np.ndarray, A: np.ndarray, t: float) -> float:
    """||[A, O(t)]||."""
    Ot = evolve(ctx, O, t)
    return op_norm(A @ Ot - Ot @ A)


def sup_commutator_estimate(
    ctx: EvolutionContext,
    O: np.ndarray,
    center: int,
    r: float,
    t: float,
    lattice: Lattice | None = None,
) -> tuple[float, bool]:
    """Max of ||[A, O(t)]|| over single-site Paulis A at distance >= r.

    This is a lower bound on the supremum over all unit-norm exterior
    operators. Returns ``(value, empty)`` where ``empty`` flags that no
    site lies at distance >= r; the value is then 0.
    """
    lattice = _lattice_of(ctx, lattice)
    far = lattice.far_sites(center, r)
    if not far:
        warnings.warn(f"no sites at distance >= {r} from site {center}", stacklevel=2)
        return 0.0, True
    Ot = evolve(ctx, O, t)
    best = max(op_norm(site_commutator(Ot, letter, j, ctx.n)) for j in far for letter in "XYZ")
    return best, False


def product_state(n: int, kind: str = "zeros", *, bits: Sequence[int] | None = None, seed: int | None = None) -> np.ndarray:
    """Product state vector: all zeros, a computational basis string, or Haar-random per site."""
    if kind == "zeros":
        psi = np.zeros(2**n, dtype=complex)
        psi[0] = 1.0
        return psi
    if kind == "basis":
        if bits is None or len(bits) != n:
            raise DomainError("basis product state needs one bit per site")
        psi = np.zeros(2**n, dtype=complex)
        psi[int("".join(str(int(b)) for b in bits), 2)] = 1.0
        return psi
    if kind == "haar":
        rng = np.random.default_rng(seed)
        psi = np.ones(1, dtype=complex)
        for _ in range(n):
            v = rng.normal(size=2) + 1j * rng.normal(size=2)
            psi = np.kron(psi, v / np.linalg.norm(v))
        return psi
    raise DomainError(f"unknown product state kind {kind!r}")


def _schmidt_rank(psi: np.ndarray, region: Sequence[int], n: int, tol: float = 1e-10) -> int:
    region = sorted(region)
    rest = [s for s in range(n) if s not in region]
    t = psi.reshape((2,) * n).transpose(region + rest).reshape(2 ** len(region), -1)
    sv = np.linalg.svd(t, compute_uv=False)
    return int(np.sum(sv > tol * sv[0]))


def is_product_across(psi: np.ndarray, region: Sequence[int], n: int) -> bool:
    """True when ``psi`` has Schmidt rank 1 across region | complement."""
    if len(region) in (0, n):
        return True
    return _schmidt_rank(np.asarray(psi, dtype=complex), list(region), n) == 1


def connected_correlator(
    ctx: EvolutionContext,
    A: np.ndarray,
    B: np.ndarray,
    psi: np.ndarray,
    t: float,
    product_region: Sequence[int] | None = None,
) -> complex:
    """<A(t)B(t)> - <A(t)><B(t)> in the state ``psi``.

    ``product_region`` (sites of the ball around A's site) is checked for a
    product cut when given. The full complex value is returned; callers
    report the real part.
    """
    psi = np.asarray(psi, dtype=complex)
    if abs(np.vdot(psi, psi).real - 1.0) > 1e-10:
        raise DomainError("state is not normalized")
    if product_region is not None:
        if not is_product_across(psi, product_region, ctx.n):
            raise DomainError("state is not a product across the requested bipartition")
    At = evolve(ctx, A, t)
    Bt = evolve(ctx, B, t)
    ab = np.vdot(psi, At @ (Bt @ psi))
    a = np.vdot(psi, At @ psi)
    b = np.vdot(psi, Bt @ psi)
    return complex(ab - a * b)


def truncation_error(
    h: PowerLawHamiltonian,
    A: np.ndarray,
    site: int,
    r: float,
    t: float,
    full_ctx: EvolutionContext | None = None,
) -> float:
    """||A(t) - A_r(t)|| where A_r evolves under the terms inside the closed ball B_r(site).

    ``A`` is the single-site (2x2) operator placed at ``site``. Pass
    ``full_ctx`` to reuse the eigendecomposition of ``h`` across calls.
    """
    lattice = h.lattice
    inside = set(lattice.ball(site, r))
    h_r = h.restricted(lambda term: term.i in inside and term.j in inside)
    if t == 0 or len(h_r.terms) == len(h.terms):
        return 0.0
    A_full = embed_operator(A, (site,), h.n_qubits)
    full = evolve(full_ctx or EvolutionContext.from_hamiltonian(h), A_full, t)
    cut = evolve(EvolutionContext.from_matrix(h_r.dense(), h_r), A_full, t)
    return op_norm(full - cut)
