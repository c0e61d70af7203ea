"""Particle-hole duality for pair observables.

On the (d-2)-particle sector every two-particle observable is an affine
combination of two-hole observables and vice versa, because two holes
behave exactly like two particles.  The complement map below realizes the
state-level correspondence: a two-particle basis state maps to the
(d-2)-particle state with the same two modes empty, with the phase obtained
by applying the pair annihilator to the completely filled configuration.
That phase choice makes particle expectations of the two-particle state
equal hole expectations of its image entry for entry.

The affine maps are solved numerically from the exact linear systems on the
sector and feed the inner-ball radius certificate used by the cutting-plane
solver: the set of reachable coordinate vectors at particle number d-2
contains a ball whose radius is the pair-space interior radius shrunk by at
most the smallest singular value of the transformation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatchError, RankDeficiencyError
from .fock import (
    FermionOperator,
    NSectorDensity,
    build_basis,
    operator_matrix,
)
from .rdm import (
    ExpectationVector,
    observable_basis,
    pair_annihilator,
    pair_basis,
    rdm_normalization,
)


class HoleObservableBasis:
    """Hole-side partners of the pair observables, in identical order:
    X'_IJ = a_I a_J† + a_J a_I†, Y'_IJ = -i a_I a_J† + i a_J a_I†,
    Z'_I = a_I a_I† (all pairs except the last)."""

    def __init__(self, d: int):
        if d < 3:
            raise ValueError("hole observables need at least 3 modes")
        self.d = d
        self.pair_basis = pair_basis(d)
        self.particle_basis = observable_basis(d)
        self.specs = self.particle_basis.specs
        self.ell = self.particle_basis.ell
        self._ops: list[FermionOperator] | None = None
        self._sector_stacks: dict[int, np.ndarray] = {}

    def operators(self) -> list[FermionOperator]:
        if self._ops is None:
            d = self.d
            pairs = self.pair_basis.pairs
            ops = []
            for spec in self.specs:
                if spec[0] == "Z":
                    aI = pair_annihilator(d, pairs[spec[1]])
                    ops.append(aI * aI.dagger())
                else:
                    aI = pair_annihilator(d, pairs[spec[1]])
                    aJ = pair_annihilator(d, pairs[spec[2]])
                    cross = aI * aJ.dagger()
                    if spec[0] == "X":
                        ops.append(cross + cross.dagger())
                    else:
                        ops.append((-1j) * cross + (1j) * cross.dagger())
            self._ops = [op.prune(1e-15) for op in ops]
        return self._ops

    def sector_stack(self, n_particles: int) -> np.ndarray:
        if n_particles not in self._sector_stacks:
            basis = build_basis(self.d, n_particles)
            stack = np.zeros((self.ell, basis.dim, basis.dim), dtype=complex)
            for k, op in enumerate(self.operators()):
                stack[k] = operator_matrix(op, basis, basis)
            self._sector_stacks[n_particles] = stack
        return self._sector_stacks[n_particles]


@lru_cache(maxsize=None)
def hole_observable_basis(d: int) -> HoleObservableBasis:
    return HoleObservableBasis(d)


def slater_complement(sigma2: NSectorDensity) -> NSectorDensity:
    """Map a 2-particle density to the (d-2)-particle density with the
    occupation pattern complemented.

    Basis images carry the sign of a_I applied to the filled configuration,
    which is what makes hole expectations of the image reproduce particle
    expectations of the input exactly.
    """
    if sigma2.n_particles != 2:
        raise ValueError("complement map expects a 2-particle density")
    d = sigma2.basis.d
    if d < 4:
        raise ValueError("complement map needs at least 4 modes")
    pb = pair_basis(d)
    out_basis = build_basis(d, d - 2)
    full = (1 << d) - 1
    perm = np.zeros((out_basis.dim, pb.m))
    for k, pair in enumerate(pb.pairs):
        op = pair_annihilator(d, pair)
        ((cre, ann),) = op.terms.keys()
        coeff = op.terms[(cre, ann)]
        from .fock import apply_monomial

        sign, bits = apply_monomial(cre, ann, full)
        perm[out_basis.index[bits], k] = float((coeff * sign).real)
    tau = perm @ sigma2.matrix @ perm.T
    return NSectorDensity(out_basis, tau)


def hole_expectation_vector(
    tau: NSectorDensity, basis: HoleObservableBasis | None = None
) -> ExpectationVector:
    """Raw hole-observable expectations tr(S' tau) in storage order."""
    if basis is None:
        basis = hole_observable_basis(tau.basis.d)
    if basis.d != tau.basis.d:
        raise DimensionMismatchError("mode counts differ")
    stack = basis.sector_stack(tau.n_particles)
    vals = np.einsum("kij,ji->k", stack, tau.matrix).real
    return ExpectationVector(values=vals, d=tau.basis.d, n_particles=tau.n_particles)


@dataclass(frozen=True)
class CoordinateMap:
    """Affine map between expectation-coordinate systems."""

    matrix: np.ndarray
    offset: np.ndarray

    def apply(self, values: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(values, dtype=float) + self.offset

    def compose(self, inner: "CoordinateMap") -> "CoordinateMap":
        return CoordinateMap(
            matrix=self.matrix @ inner.matrix,
            offset=self.matrix @ inner.offset + self.offset,
        )

    def min_singular_value(self) -> float:
        return float(np.linalg.svd(self.matrix, compute_uv=False)[-1])

    def to_text(self, name: str) -> str:
        ell = self.matrix.shape[0]
        lines = [f"coordinate-map {name} ell={ell}"]
        lines.append("offset " + " ".join(f"{v:.17g}" for v in self.offset))
        for row in self.matrix:
            lines.append(" ".join(f"{v:.17g}" for v in row))
        return "\n".join(lines) + "\n"


def _expansion_ingredients(d: int):
    """Sector stacks on the (d-2)-particle sector plus scaling to the
    normalized particle coordinates."""
    if d < 5:
        raise ValueError("duality maps need at least 5 modes")
    n = d - 2
    pob = observable_basis(d)
    hob = hole_observable_basis(d)
    p_stack = pob.sector_stack(n)
    h_stack = hob.sector_stack(n)
    dim = p_stack.shape[1]
    scale = rdm_normalization(n)
    return n, pob, hob, scale * p_stack, h_stack, dim


def _solve_expansion(target_stack, source_stack, dim) -> tuple[np.ndarray, np.ndarray]:
    """Expand each target matrix over {source matrices} ∪ {identity}.

    Returns (coefficient matrix, identity offsets).  Raises when the source
    set fails to span the targets.
    """
    ell = source_stack.shape[0]
    mats = np.concatenate([np.eye(dim, dtype=complex)[None, :, :], source_stack])
    k = ell + 1
    gram = np.einsum("aij,bji->ab", mats, mats).real
    rhs = np.einsum("aij,bji->ab", mats, target_stack).real  # (k, ell_target)
    try:
        coeffs = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise RankDeficiencyError(f"expansion system singular: {exc}") from None
    recon = np.einsum("ka,kij->aij", coeffs, mats)
    residual = float(np.max(np.abs(recon - target_stack)))
    if residual > 1e-8:
        raise RankDeficiencyError(
            f"expansion residual {residual:.3e} exceeds 1e-8; source set does not span"
        )
    return coeffs[1:].T, coeffs[0].copy()


def build_map_A(d: int) -> CoordinateMap:
    """Affine map from hole coordinates to normalized particle coordinates
    on the (d-2)-particle sector: alpha(tau) = A alpha'(tau) + offset."""
    n, pob, hob, p_stack, h_stack, dim = _expansion_ingredients(d)
    matrix, offset = _solve_expansion(p_stack, h_stack, dim)
    return CoordinateMap(matrix=matrix, offset=offset)


def build_map_B(d: int) -> CoordinateMap:
    """Inverse direction: hole coordinates from normalized particle ones."""
    n, pob, hob, p_stack, h_stack, dim = _expansion_ingredients(d)
    matrix, offset = _solve_expansion(h_stack, p_stack, dim)
    return CoordinateMap(matrix=matrix, offset=offset)


def inner_ball_certificate(d: int) -> float:
    """Certified inner-ball radius of the reachable coordinate set at
    particle number d-2 (hence, by particle removal, at every particle
    number from 2 to d-2).

    The pair-space set contains a coordinate ball of explicitly computable
    radius around the maximally mixed point; the hole correspondence carries
    it to particle number d-2 unchanged and the affine map shrinks it by at
    most the smallest singular value.
    """
    a_map = build_map_A(d)
    r2 = observable_basis(d).interior_radius_pair()
    smin = a_map.min_singular_value()
    if smin <= 0:
        raise RankDeficiencyError("coordinate map is singular")
    return r2 * smin
