"""Two-particle reduced density matrices and their coordinate system.

The 2-RDM of an N-particle state is indexed by unordered mode pairs
I = {i1 < i2} and normalized to unit trace:

    rho[I, J] = c_N <a_J† a_I>,   c_N = 2 / (N (N - 1)),

where a_I = a_{i2} a_{i1}.  Expectation coordinates are taken against a
complete Hermitian observable set over the pair space: cross terms
X_IJ = a_I†a_J + a_J†a_I and Y_IJ = -i a_I†a_J + i a_J†a_I for every pair
of pairs I < J, plus the diagonal occupations Z_I = a_I†a_I for every pair
except the last (whose expectation is fixed by normalization).  Together
with the identity these span the full Hermitian pair-matrix space, so the
coordinate map is an invertible affine change of variables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np

from .errors import DimensionMismatchError
from .fock import (
    FermionOperator,
    NSectorDensity,
    build_basis,
    operator_matrix,
)


@dataclass(frozen=True)
class PairBasis:
    """Lexicographically ordered unordered mode pairs {i1 < i2}."""

    d: int
    pairs: tuple[tuple[int, int], ...]
    index: dict[tuple[int, int], int] = field(repr=False)

    @property
    def m(self) -> int:
        return len(self.pairs)


@lru_cache(maxsize=None)
def pair_basis(d: int) -> PairBasis:
    if d < 2:
        raise ValueError("need at least two modes")
    pairs = tuple(combinations(range(1, d + 1), 2))
    return PairBasis(d=d, pairs=pairs, index={p: k for k, p in enumerate(pairs)})


def pair_annihilator(d: int, pair: tuple[int, int]) -> FermionOperator:
    """a_I = a_{i2} a_{i1} for I = {i1 < i2}."""
    i1, i2 = pair
    return FermionOperator.from_factors(d, 1, [(i2, False), (i1, False)])


def rdm_normalization(n_particles: int) -> float:
    return 2.0 / (n_particles * (n_particles - 1))


@dataclass
class TwoRDM:
    """Trace-one Hermitian matrix over the pair basis.

    Construction validates Hermiticity and trace; positivity is enforced by
    default but can be waived for coordinate-reconstructed matrices, which
    are Hermitian and trace-one yet need not be positive.
    """

    pair_basis: PairBasis
    n_particles: int
    matrix: np.ndarray
    require_psd: bool = True

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        dim = self.pair_basis.m
        if m.shape != (dim, dim):
            raise DimensionMismatchError(f"matrix shape {m.shape} != ({dim}, {dim})")
        if np.max(np.abs(m - m.conj().T)) > 1e-10:
            raise ValueError("TwoRDM not Hermitian to 1e-10")
        tr = complex(np.trace(m)).real
        if abs(tr - 1.0) > 1e-10:
            raise ValueError(f"TwoRDM trace {tr} deviates from 1 beyond 1e-10")
        if self.require_psd and float(np.linalg.eigvalsh(m)[0]) < -1e-10:
            raise ValueError("TwoRDM has eigenvalue below -1e-10")
        self.matrix = m

    @property
    def d(self) -> int:
        return self.pair_basis.d

    def is_psd(self, tol: float = 1e-10) -> bool:
        return float(np.linalg.eigvalsh(self.matrix)[0]) >= -tol


@dataclass
class OneRDM:
    """Matrix of <a_i† a_j>; trace equals the particle count."""

    d: int
    n_particles: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.d, self.d):
            raise DimensionMismatchError(f"matrix shape {m.shape} != ({self.d}, {self.d})")
        if np.max(np.abs(m - m.conj().T)) > 1e-10:
            raise ValueError("OneRDM not Hermitian to 1e-10")
        self.matrix = m


@dataclass
class ExpectationVector:
    """Coordinates of a pair-space matrix in the observable basis order."""

    values: np.ndarray
    d: int
    n_particles: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)


@lru_cache(maxsize=None)
def _pair_lowering_stack(d: int, n_particles: int) -> np.ndarray:
    """Stack of matrices of a_I from the N-sector to the (N-2)-sector."""
    pb = pair_basis(d)
    b_in = build_basis(d, n_particles)
    b_out = build_basis(d, n_particles - 2)
    stack = np.zeros((pb.m, b_out.dim, b_in.dim), dtype=complex)
    for k, pair in enumerate(pb.pairs):
        stack[k] = operator_matrix(pair_annihilator(d, pair), b_in, b_out)
    return stack


@lru_cache(maxsize=None)
def _mode_lowering_stack(d: int, n_particles: int) -> np.ndarray:
    b_in = build_basis(d, n_particles)
    b_out = build_basis(d, n_particles - 1)
    stack = np.zeros((d, b_out.dim, b_in.dim), dtype=complex)
    for i in range(1, d + 1):
        stack[i - 1] = operator_matrix(
            FermionOperator.from_term(d, 1, (), (i,)), b_in, b_out
        )
    return stack


def two_rdm(sigma: NSectorDensity) -> TwoRDM:
    """Normalized two-particle reduction of an N-particle density."""
    n = sigma.n_particles
    if n < 2:
        raise ValueError("two-particle reduction needs at least 2 particles")
    d = sigma.basis.d
    low = _pair_lowering_stack(d, n)
    # rho[I, J] = c_N tr(T_I sigma T_J†)
    ts = np.einsum("iab,bc->iac", low, sigma.matrix)
    mat = rdm_normalization(n) * np.einsum("iac,jac->ij", ts, low.conj())
    mat = 0.5 * (mat + mat.conj().T)
    return TwoRDM(pair_basis(d), n, mat)


def one_rdm(sigma: NSectorDensity) -> OneRDM:
    """<a_i† a_j> matrix; traces to the particle count."""
    n = sigma.n_particles
    if n < 1:
        raise ValueError("one-particle reduction needs at least 1 particle")
    d = sigma.basis.d
    low = _mode_lowering_stack(d, n)
    ls = np.einsum("jab,bc->jac", low, sigma.matrix)
    gamma = np.einsum("iac,jac->ij", low.conj(), ls)
    gamma = 0.5 * (gamma + gamma.conj().T)
    return OneRDM(d=d, n_particles=n, matrix=gamma)


def coleman_check(gamma: OneRDM) -> bool:
    """Ensemble representability of a one-particle density: eigenvalues in
    [0, 1] and trace equal to the particle count, within tolerance."""
    evals = np.linalg.eigvalsh(gamma.matrix)
    if evals[0] < -1e-10 or evals[-1] > 1 + 1e-10:
        return False
    return abs(float(np.trace(gamma.matrix).real) - gamma.n_particles) <= 1e-8


class ObservableBasis:
    """The Hermitian pair-space observable set and its linear algebra.

    `specs` lists ("X", I, J), ("Y", I, J), ("Z", I) labels in storage
    order: all X cross terms (lexicographic in the pair-index pair), then
    all Y, then the Z diagonals except the last pair.  Spectra lie in
    [-1, 1] on every particle-number sector.
    """

    def __init__(self, d: int):
        if d < 3:
            raise ValueError("observable basis needs at least 3 modes")
        self.d = d
        self.pair_basis = pair_basis(d)
        m = self.pair_basis.m
        self.specs: list[tuple] = []
        for kind in ("X", "Y"):
            for a in range(m):
                for b in range(a + 1, m):
                    self.specs.append((kind, a, b))
        for a in range(m - 1):
            self.specs.append(("Z", a))
        self.ell = len(self.specs)
        self._ops: list[FermionOperator] | None = None
        self._sector_stacks: dict[int, np.ndarray] = {}
        self._pair_stack = self._build_pair_stack()
        self._gram_inv = self._build_gram_inverse()

    # ---- operators and matrices ----

    def operators(self) -> list[FermionOperator]:
        if self._ops is None:
            d = self.d
            pairs = self.pair_basis.pairs
            ops = []
            for spec in self.specs:
                if spec[0] == "Z":
                    aI = pair_annihilator(d, pairs[spec[1]])
                    ops.append(aI.dagger() * aI)
                else:
                    aI = pair_annihilator(d, pairs[spec[1]])
                    aJ = pair_annihilator(d, pairs[spec[2]])
                    cross = aI.dagger() * aJ
                    if spec[0] == "X":
                        ops.append(cross + cross.dagger())
                    else:
                        ops.append((-1j) * cross + (1j) * cross.dagger())
            self._ops = [op.prune(1e-15) for op in ops]
        return self._ops

    def _build_pair_stack(self) -> np.ndarray:
        """Matrices on the 2-particle sector: unit entries by construction."""
        m = self.pair_basis.m
        stack = np.zeros((self.ell, m, m), dtype=complex)
        for k, spec in enumerate(self.specs):
            if spec[0] == "X":
                stack[k, spec[1], spec[2]] = 1
                stack[k, spec[2], spec[1]] = 1
            elif spec[0] == "Y":
                stack[k, spec[1], spec[2]] = -1j
                stack[k, spec[2], spec[1]] = 1j
            else:
                stack[k, spec[1], spec[1]] = 1
        return stack

    @property
    def pair_stack(self) -> np.ndarray:
        return self._pair_stack

    def sector_stack(self, n_particles: int) -> np.ndarray:
        """Matrices of every observable on the N-particle sector."""
        if n_particles not in self._sector_stacks:
            if n_particles == 2:
                self._sector_stacks[2] = self._pair_stack
            else:
                basis = build_basis(self.d, n_particles)
                stack = np.zeros((self.ell, basis.dim, basis.dim), dtype=complex)
                for k, op in enumerate(self.operators()):
                    stack[k] = operator_matrix(op, basis, basis)
                self._sector_stacks[n_particles] = stack
        return self._sector_stacks[n_particles]

    # ---- dual basis and coordinate inversion ----

    def _build_gram_inverse(self) -> np.ndarray:
        m = self.pair_basis.m
        basis_mats = [np.eye(m, dtype=complex)] + list(self._pair_stack)
        k = len(basis_mats)
        gram = np.empty((k, k))
        for a in range(k):
            for b in range(a, k):
                g = float(np.trace(basis_mats[a] @ basis_mats[b]).real)
                gram[a, b] = g
                gram[b, a] = g
        return np.linalg.inv(gram)

    def expansion_rank(self) -> int:
        """Rank of {identity} ∪ observables as vectors in Hermitian pair space."""
        m = self.pair_basis.m
        vecs = np.concatenate(
            [np.eye(m, dtype=complex).reshape(1, -1), self._pair_stack.reshape(self.ell, -1)]
        )
        return int(np.linalg.matrix_rank(np.concatenate([vecs.real, vecs.imag], axis=1)))

    def dual_elements(self) -> np.ndarray:
        """Traceless duals D_k with tr(D_k S_j) = δ_kj and tr(D_k) = 0."""
        m = self.pair_basis.m
        basis_mats = np.concatenate(
            [np.eye(m, dtype=complex)[None, :, :], self._pair_stack]
        )
        return np.einsum("kj,jab->kab", self._gram_inv[1:, :], basis_mats)

    def decompose_pair_matrix(self, mat: np.ndarray) -> tuple[np.ndarray, float, float]:
        """Coefficients (gamma, c0) with mat = sum gamma_S S + c0 I, plus the
        reconstruction residual (zero for every Hermitian pair matrix)."""
        m = self.pair_basis.m
        if mat.shape != (m, m):
            raise DimensionMismatchError(f"matrix shape {mat.shape} != ({m}, {m})")
        t = np.empty(self.ell + 1)
        t[0] = float(np.trace(mat).real)
        t[1:] = np.einsum("kij,ji->k", self._pair_stack, mat).real
        coeffs = self._gram_inv @ t
        recon = coeffs[0] * np.eye(m) + np.einsum("k,kij->ij", coeffs[1:], self._pair_stack)
        residual = float(np.max(np.abs(recon - mat)))
        return coeffs[1:], float(coeffs[0]), residual

    # ---- norm conversion ----

    def alpha_per_trace_lower(self) -> float:
        """Conservative lower bound on (coordinate distance)/(trace distance).

        For a traceless Hermitian pair difference D the coordinates give
        |alpha|^2 = 4*sum_{I<J}|D_IJ|^2 + sum_{I != last} D_II^2, while
        ||D||_1^2 <= m ||D||_F^2 and ||D||_F^2 <= (m + 1/2)|alpha|^2, so
        |alpha| >= ||D||_1 / sqrt(m (m + 1/2)).
        """
        m = self.pair_basis.m
        return 1.0 / math.sqrt(m * (m + 0.5))

    def interior_radius_pair(self) -> float:
        """Radius of a coordinate ball around the maximally mixed pair state
        guaranteed to stay inside the positive trace-one set."""
        m = self.pair_basis.m
        duals = self.dual_elements()
        total = 0.0
        for k in range(self.ell):
            total += float(np.max(np.abs(np.linalg.eigvalsh(duals[k]))) ** 2)
        return (1.0 / m) / math.sqrt(total)


@lru_cache(maxsize=None)
def observable_basis(d: int) -> ObservableBasis:
    return ObservableBasis(d)


def expectation_vector(rho: TwoRDM, basis: ObservableBasis | None = None) -> ExpectationVector:
    """Coordinates alpha_S = tr(S rho) of a pair-space matrix."""
    if basis is None:
        basis = observable_basis(rho.d)
    if basis.d != rho.d:
        raise DimensionMismatchError("observable basis and TwoRDM mode counts differ")
    vals = np.einsum("kij,ji->k", basis.pair_stack, rho.matrix)
    return ExpectationVector(values=vals.real, d=rho.d, n_particles=rho.n_particles)


def rdm_from_alpha(alpha: ExpectationVector, basis: ObservableBasis | None = None) -> TwoRDM:
    """Unique Hermitian trace-one pair matrix with the given coordinates.

    The output need not be positive; it is constructed from the dual basis
    of {identity} ∪ observables.
    """
    if basis is None:
        basis = observable_basis(alpha.d)
    m = basis.pair_basis.m
    t = np.concatenate([[1.0], alpha.values])
    coeffs = basis._gram_inv @ t
    basis_mats = np.concatenate(
        [np.eye(m, dtype=complex)[None, :, :], basis.pair_stack]
    )
    mat = np.einsum("k,kij->ij", coeffs, basis_mats)
    mat = 0.5 * (mat + mat.conj().T)
    return TwoRDM(basis.pair_basis, alpha.n_particles, mat, require_psd=False)


def trace_distance(a, b) -> float:
    """Sum of absolute eigenvalues of the Hermitian difference."""
    ma = a.matrix if hasattr(a, "matrix") else np.asarray(a)
    mb = b.matrix if hasattr(b, "matrix") else np.asarray(b)
    if ma.shape != mb.shape:
        raise DimensionMismatchError(f"shapes differ: {ma.shape} vs {mb.shape}")
    return float(np.sum(np.abs(np.linalg.eigvalsh(ma - mb))))


def diagonal_elements(rho: TwoRDM) -> np.ndarray:
    """Pair occupations D_ij = <a_i† a_j† a_j a_i> as a symmetric d x d
    matrix with zero diagonal, undoing the trace-one normalization."""
    d = rho.d
    scale = 1.0 / rdm_normalization(rho.n_particles)
    out = np.zeros((d, d))
    for k, (i, j) in enumerate(rho.pair_basis.pairs):
        v = float(rho.matrix[k, k].real) * scale
        out[i - 1, j - 1] = v
        out[j - 1, i - 1] = v
    return out
