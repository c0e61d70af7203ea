import itertools

import numpy as np
import pytest

from nrep.fock import FermionOperator, NSectorDensity, build_basis, string_to_bits
from nrep.hamiltonians import SpinHamiltonian


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def slater_density(d, n, occupied):
    """Density of a single Slater determinant with the given occupied modes."""
    basis = build_basis(d, n)
    bits = 0
    for i in occupied:
        bits |= 1 << (i - 1)
    vec = np.zeros(basis.dim, dtype=complex)
    vec[basis.index[bits]] = 1.0
    return NSectorDensity(basis, np.outer(vec, vec.conj()))


def random_pure_density(basis, rng):
    vec = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    vec /= np.linalg.norm(vec)
    return NSectorDensity(basis, np.outer(vec, vec.conj()))


def random_mixed_density(basis, rng, rank=4):
    rank = min(rank, basis.dim)
    mat = np.zeros((basis.dim, basis.dim), dtype=complex)
    weights = rng.dirichlet(np.ones(rank))
    for w in weights:
        vec = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
        vec /= np.linalg.norm(vec)
        mat += w * np.outer(vec, vec.conj())
    mat = 0.5 * (mat + mat.conj().T)
    return NSectorDensity(basis, mat / np.trace(mat).real)


def random_trace_one_hermitian(dim, rng, scale=0.5):
    mat = rng.normal(size=(dim, dim), scale=scale) + 1j * rng.normal(
        size=(dim, dim), scale=scale
    )
    mat = 0.5 * (mat + mat.conj().T)
    mat += (1.0 - np.trace(mat).real) / dim * np.eye(dim)
    return mat


def two_local_words(n):
    words = []
    for s in range(n):
        for p in "XYZ":
            w = ["I"] * n
            w[s] = p
            words.append("".join(w))
    for s, t in itertools.combinations(range(n), 2):
        for p in "XYZ":
            for q in "XYZ":
                w = ["I"] * n
                w[s], w[t] = p, q
                words.append("".join(w))
    return words


def random_two_local(n, rng, n_terms=5):
    words = two_local_words(n)
    chosen = rng.choice(len(words), size=min(n_terms, len(words)), replace=False)
    return SpinHamiltonian(
        n, tuple((float(rng.uniform(-1, 1)), words[int(k)]) for k in chosen)
    )


def random_fermion_operator(d, rng, n_monomials=4, max_factors=4):
    op = FermionOperator(d)
    for _ in range(n_monomials):
        n_factors = int(rng.integers(1, max_factors + 1))
        factors = [
            (int(rng.integers(1, d + 1)), bool(rng.integers(0, 2)))
            for _ in range(n_factors)
        ]
        coeff = complex(rng.normal(), rng.normal())
        op = op + FermionOperator.from_factors(d, coeff, factors)
    return op


def encoded_indices(basis, encode, n_qubits):
    """Sector indices of the encoded computational-basis images."""
    return [
        basis.index[string_to_bits(encode(format(z, f"0{n_qubits}b")))]
        for z in range(2**n_qubits)
    ]
