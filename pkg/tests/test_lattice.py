import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrcone.errors import DomainError, ResourceError
from lrcone.lattice import (
    PAULI,
    PowerLawHamiltonian,
    build_lattice,
    embed_operator,
    range_bucket,
    sample_hamiltonian,
    site_operator,
    tau,
)

from conftest import kron_chain


def brute_diameter(coords, metric):
    best = 0.0
    for a, b in itertools.combinations(coords, 2):
        diff = [abs(x - y) for x, y in zip(a, b)]
        if metric == "euclidean":
            dist = math.sqrt(sum(x * x for x in diff))
        elif metric == "chebyshev":
            dist = max(diff)
        else:
            dist = sum(diff)
        best = max(best, dist)
    return best


def test_chain_geometry():
    lat = build_lattice(1, [5], "euclidean")
    assert lat.n_sites == 5
    assert lat.diameter == 4


def test_square_diameter_matches_brute_force():
    lat = build_lattice(2, [3, 3])
    assert lat.n_sites == 9
    coords = list(itertools.product(range(3), range(3)))
    assert lat.diameter == pytest.approx(brute_diameter(coords, "euclidean"), abs=1e-15)
    assert lat.diameter == pytest.approx(2 * math.sqrt(2), abs=1e-12)


def test_manhattan_pair():
    lat = build_lattice(1, [2], "manhattan")
    assert lat.n_sites == 2 and lat.diameter == 1


@pytest.mark.parametrize(
    "d, extents, metric",
    [(0, [], "euclidean"), (1, [], "euclidean"), (1, [1], "euclidean"), (2, [3], "euclidean"), (1, [3], "taxicab")],
)
def test_build_lattice_rejects_bad_input(d, extents, metric):
    with pytest.raises(DomainError):
        build_lattice(d, extents, metric)


@settings(max_examples=40, deadline=None)
@given(
    extents=st.lists(st.integers(2, 4), min_size=1, max_size=3),
    metric=st.sampled_from(["euclidean", "chebyshev", "manhattan"]),
)
def test_metric_axioms(extents, metric):
    lat = build_lattice(len(extents), extents, metric)
    D = lat.distances
    assert lat.n_sites == int(np.prod(extents))
    assert np.array_equal(D, D.T)
    assert np.all(np.diag(D) == 0) and np.all(D >= 0)
    # triangle inequality over every triple
    assert np.all(D[:, None, :] <= D[:, :, None] + D[None, :, :] + 1e-12)
    assert lat.diameter == pytest.approx(brute_diameter([tuple(c) for c in lat.coords], metric))


def test_distances_are_read_only():
    lat = build_lattice(1, [3])
    with pytest.raises(ValueError):
        lat.distances[0, 1] = 7.0


def brute_tau(lat, alpha):
    return max(sum(lat.dist(i, j) ** -alpha for j in range(lat.n_sites) if j != i) for i in range(lat.n_sites))


@pytest.mark.parametrize("n, alpha, expected", [(5, 3, 2.25), (2, 2.7, 1.0), (3, 3, 2.0)])
def test_tau_examples(n, alpha, expected):
    lat = build_lattice(1, [n])
    assert tau(lat, alpha) == pytest.approx(expected, abs=1e-14)
    assert tau(lat, alpha) == pytest.approx(brute_tau(lat, alpha), abs=1e-14)


def test_tau_monotone_in_alpha():
    lat = build_lattice(2, [3, 4])
    values = [tau(lat, a) for a in np.linspace(2.1, 6, 15)]
    assert all(b <= a for a, b in zip(values, values[1:]))


def test_tau_requires_alpha_above_d():
    with pytest.raises(DomainError):
        tau(build_lattice(2, [2, 2]), 2.0)


@pytest.mark.parametrize("ensemble", ["ising_zz", "xy", "random_two_body"])
def test_sampled_terms_respect_norm_cap(ensemble):
    lat = build_lattice(1, [6])
    for seed in range(4):
        h = sample_hamiltonian(lat, 2.5, ensemble, seed)
        assert len(h.terms) == 15
        assert h.norm_violations() == []
        for term in h.terms:
            assert np.allclose(term.matrix, term.matrix.conj().T, atol=1e-12)
            assert term.norm() <= lat.dist(term.i, term.j) ** -2.5 * (1 + 1e-12)
        H = h.dense()
        assert np.allclose(H, H.conj().T, atol=1e-12)


def test_norm_equals_abs_u_times_cap():
    # replay the generator: one uniform per pair in lexicographic order
    lat = build_lattice(1, [4])
    h = sample_hamiltonian(lat, 2.5, "xy", 11)
    rng = np.random.default_rng(11)
    for term in h.terms:
        u = rng.uniform(-1, 1)
        assert term.norm() == pytest.approx(abs(u) * lat.dist(term.i, term.j) ** -2.5, rel=1e-12)


def test_pair_example():
    lat = build_lattice(1, [2])
    h = sample_hamiltonian(lat, 2.5, "ising_zz", 7)
    (term,) = h.terms
    u = term.matrix[0, 0].real
    assert abs(u) <= 1
    assert np.allclose(term.matrix, u * np.kron(PAULI["Z"], PAULI["Z"]))
    assert term.norm() == pytest.approx(abs(u))


def test_three_chain_long_bond_capped():
    lat = build_lattice(1, [3])
    for seed in range(5):
        h = sample_hamiltonian(lat, 3.0, "ising_zz", seed)
        far = [t for t in h.terms if (t.i, t.j) == (0, 2)][0]
        assert far.norm() <= 1 / 8 + 1e-15


def test_sampling_is_deterministic():
    lat = build_lattice(2, [2, 3])
    a = sample_hamiltonian(lat, 4.5, "random_two_body", 3)
    b = sample_hamiltonian(lat, 4.5, "random_two_body", 3)
    c = sample_hamiltonian(lat, 4.5, "random_two_body", 4)
    assert all(np.array_equal(x.matrix, y.matrix) for x, y in zip(a.terms, b.terms))
    assert not all(np.array_equal(x.matrix, y.matrix) for x, y in zip(a.terms, c.terms))


def test_unknown_ensemble():
    with pytest.raises(DomainError):
        sample_hamiltonian(build_lattice(1, [3]), 2.5, "heisenberg", 0)


def test_json_round_trip_is_bit_exact():
    h = sample_hamiltonian(build_lattice(1, [4], "chebyshev"), 2.3, "random_two_body", 5)
    back = PowerLawHamiltonian.from_json(h.to_json())
    assert back.lattice == h.lattice and back.alpha == h.alpha and back.seed == 5
    for x, y in zip(h.terms, back.terms):
        assert (x.i, x.j) == (y.i, y.j)
        assert np.array_equal(x.matrix, y.matrix)
    doc = json.loads(h.to_json())
    assert set(doc) == {"d", "extents", "metric", "alpha", "ensemble", "seed", "terms"}


def test_from_dict_rejects_norm_violation():
    doc = json.loads(sample_hamiltonian(build_lattice(1, [3]), 2.5, "ising_zz", 0).to_json())
    doc["terms"][1]["matrix"] = [[2.0 if k in (0, 15) else 0.0, 0.0] for k in range(16)]
    with pytest.raises(DomainError):
        PowerLawHamiltonian.from_dict(doc)


def test_dense_guard():
    h = sample_hamiltonian(build_lattice(1, [13]), 2.5, "ising_zz", 0)
    with pytest.raises(ResourceError):
        h.dense()


def test_range_bucket_example(chain5):
    h = sample_hamiltonian(chain5, 2.5, "ising_zz", 1)
    v1, v2 = range_bucket(h, 2.0, 1)
    assert sorted(chain5.dist(t.i, t.j) for t in v1.terms) == [1, 1, 1, 1, 2, 2, 2]
    assert sorted(chain5.dist(t.i, t.j) for t in v2.terms) == [3, 3, 4]


def test_range_bucket_large_base(chain5):
    h = sample_hamiltonian(chain5, 2.5, "xy", 1)
    v1, v2 = range_bucket(h, 10.0, 1)
    assert len(v1.terms) == 10 and len(v2.terms) == 0


@settings(max_examples=30, deadline=None)
@given(L=st.floats(1.1, 6.0), n=st.integers(1, 4), side=st.integers(2, 4))
def test_range_buckets_partition(L, n, side):
    lat = build_lattice(2, [side, 3])
    h = sample_hamiltonian(lat, 4.5, "ising_zz", 0)
    buckets = range_bucket(h, L, n)
    assert len(buckets) == n + 1
    assert sum(len(b.terms) for b in buckets) == len(h.terms)
    edges = [0.0] + [L**k for k in range(1, n + 1)] + [max(lat.diameter, L**n)]
    for k, b in enumerate(buckets):
        for t in b.terms:
            assert edges[k] < lat.dist(t.i, t.j) <= edges[k + 1]


def test_embed_operator_matches_kron():
    X, Y, Z, I = (PAULI[c] for c in "XYZI")
    assert np.allclose(embed_operator(np.kron(X, Z), (0, 1), 3), kron_chain(X, Z, I))
    assert np.allclose(embed_operator(np.kron(X, Z), (2, 0), 3), kron_chain(Z, I, X))
    assert np.allclose(site_operator("Y", 1, 3), kron_chain(I, Y, I))
