"""Slater-determinant bases and dense matrices of fermionic operators.

Occupation configurations of ``d`` modes are stored as integer bitmasks with
mode ``i`` (1-based) at bit ``i - 1``.  The string form prints mode 1 first,
so ``"10"`` is the d=2 configuration with mode 1 occupied.  Creation and
annihilation operators follow the standard convention {a_i, a_j†} = δ_ij,
with each elementary factor contributing the sign
(-1)^(number of occupied modes below its index) at the moment it acts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import DimensionMismatchError, NonHermitianError, SectorSizeError

DEFAULT_SECTOR_CAP = 100_000


def bits_to_string(bits: int, d: int) -> str:
    """Occupation string with mode 1 leftmost."""
    return "".join("1" if (bits >> k) & 1 else "0" for k in range(d))


def string_to_bits(s: str) -> int:
    bits = 0
    for k, ch in enumerate(s):
        if ch == "1":
            bits |= 1 << k
        elif ch != "0":
            raise ValueError(f"not an occupation string: {s!r}")
    return bits


def fock_index(bits: int, d: int) -> int:
    """Index of a configuration in the 2^d qubit-style ordering.

    Mode 1 is the most significant position, matching the tensor-product
    order |i_1> ⊗ ... ⊗ |i_d| used for qubit encodings.
    """
    idx = 0
    for k in range(d):
        idx = (idx << 1) | ((bits >> k) & 1)
    return idx


def _parity_below(bits: int, mode: int) -> int:
    """(-1)^(occupied modes with index strictly below `mode`)."""
    mask = (1 << (mode - 1)) - 1
    return -1 if bin(bits & mask).count("1") % 2 else 1


@dataclass(frozen=True)
class SlaterBasis:
    """Ordered basis of occupation bitstrings with fixed particle number.

    States are ordered lexicographically by their occupied-mode tuples,
    i.e. (1,2) before (1,3) before (2,3), which puts "110" first at d=3, N=2.
    """

    d: int
    n_particles: int
    states: tuple[int, ...]
    index: dict[int, int] = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.states)

    def state_string(self, k: int) -> str:
        return bits_to_string(self.states[k], self.d)


def sector_cap() -> int:
    """Configured sector-size cap; NREP_SECTOR_CAP overrides the default."""
    import os

    value = os.environ.get("NREP_SECTOR_CAP")
    return int(value) if value else DEFAULT_SECTOR_CAP


def build_basis(d: int, n_particles: int, cap: int | None = None) -> SlaterBasis:
    """Enumerate the N-particle sector of d modes.

    Raises SectorSizeError when binomial(d, N) exceeds `cap` (defaulting to
    the configured sector cap), and ValueError for N outside [0, d].
    """
    if cap is None:
        cap = sector_cap()
    if d < 1:
        raise ValueError(f"mode count must be positive, got {d}")
    if not 0 <= n_particles <= d:
        raise ValueError(f"particle count {n_particles} outside [0, {d}]")
    size = math.comb(d, n_particles)
    if size > cap:
        raise SectorSizeError(
            f"sector (d={d}, N={n_particles}) has {size} states, cap is {cap}"
        )
    states = []
    for occ in combinations(range(1, d + 1), n_particles):
        bits = 0
        for i in occ:
            bits |= 1 << (i - 1)
        states.append(bits)
    index = {s: k for k, s in enumerate(states)}
    return SlaterBasis(d=d, n_particles=n_particles, states=tuple(states), index=index)


def apply_monomial(
    creators: tuple[int, ...], annihilators: tuple[int, ...], bits: int
) -> tuple[int, int] | None:
    """Apply a normal-ordered monomial a†_{i1}..a†_{ip} a_{j1}..a_{jq} to a configuration.

    Factors act right to left.  Returns (sign, resulting bitmask), or None
    when an annihilator hits an empty mode or a creator an occupied one.
    """
    sign = 1
    for j in reversed(annihilators):
        if not (bits >> (j - 1)) & 1:
            return None
        sign *= _parity_below(bits, j)
        bits &= ~(1 << (j - 1))
    for i in reversed(creators):
        if (bits >> (i - 1)) & 1:
            return None
        sign *= _parity_below(bits, i)
        bits |= 1 << (i - 1)
    return sign, bits


def _sorted_with_parity(indices) -> tuple[tuple[int, ...] | None, int]:
    """Sort an index list, tracking the permutation sign; None on duplicates."""
    idx = list(indices)
    sign = 1
    for i in range(1, len(idx)):
        j = i
        while j > 0 and idx[j - 1] > idx[j]:
            idx[j - 1], idx[j] = idx[j], idx[j - 1]
            sign = -sign
            j -= 1
    for a, b in zip(idx, idx[1:]):
        if a == b:
            return None, 0
    return tuple(idx), sign


class FermionOperator:
    """Sum of normal-ordered creation/annihilation monomials.

    Terms are keyed by (creators, annihilators), both strictly ascending
    index tuples; reordering signs are absorbed into the coefficients at
    construction time.  Instances are treated as immutable values: all
    arithmetic returns new operators.
    """

    __slots__ = ("d", "terms")

    def __init__(self, d: int, terms: dict | None = None):
        self.d = d
        self.terms = dict(terms) if terms else {}

    # ---- constructors ----

    @classmethod
    def zero(cls, d: int) -> "FermionOperator":
        return cls(d)

    @classmethod
    def constant(cls, d: int, value: complex) -> "FermionOperator":
        if value == 0:
            return cls(d)
        return cls(d, {((), ()): complex(value)})

    @classmethod
    def from_term(cls, d, coeff, creators, annihilators) -> "FermionOperator":
        """Single monomial with index lists in arbitrary order.

        Duplicate indices within a list make the term vanish identically.
        """
        cre, s1 = _sorted_with_parity(creators)
        if cre is None:
            return cls(d)
        ann, s2 = _sorted_with_parity(annihilators)
        if ann is None:
            return cls(d)
        for i in (*cre, *ann):
            if not 1 <= i <= d:
                raise ValueError(f"mode index {i} outside 1..{d}")
        c = complex(coeff) * s1 * s2
        if c == 0:
            return cls(d)
        return cls(d, {(cre, ann): c})

    @classmethod
    def from_factors(cls, d, coeff, factors) -> "FermionOperator":
        """Normal-order an arbitrary product of elementary factors.

        `factors` is a left-to-right sequence of (mode, is_creation).
        Anticommutator contractions {a_i, a_j†} = δ_ij generate the extra
        lower-degree terms.
        """
        terms: dict = {}
        stack = [(complex(coeff), list(factors))]
        while stack:
            c, fs = stack.pop()
            pos = -1
            action = ""
            for k in range(len(fs) - 1):
                (m1, dag1), (m2, dag2) = fs[k], fs[k + 1]
                if (not dag1) and dag2:
                    pos, action = k, "contract"
                    break
                if dag1 == dag2 and m1 >= m2:
                    pos, action = k, ("drop" if m1 == m2 else "swap")
                    break
            if pos < 0:
                cre = tuple(m for m, dag in fs if dag)
                ann = tuple(m for m, dag in fs if not dag)
                key = (cre, ann)
                terms[key] = terms.get(key, 0j) + c
                continue
            if action == "drop":
                continue
            m1 = fs[pos][0]
            m2 = fs[pos + 1][0]
            swapped = list(fs)
            swapped[pos], swapped[pos + 1] = swapped[pos + 1], swapped[pos]
            stack.append((-c, swapped))
            if action == "contract" and m1 == m2:
                stack.append((c, fs[:pos] + fs[pos + 2 :]))
        return cls(d, {k: v for k, v in terms.items() if v != 0})

    # ---- algebra ----

    def __add__(self, other: "FermionOperator") -> "FermionOperator":
        if self.d != other.d:
            raise DimensionMismatchError(f"mode counts differ: {self.d} vs {other.d}")
        out = dict(self.terms)
        for key, c in other.terms.items():
            out[key] = out.get(key, 0j) + c
            if out[key] == 0:
                del out[key]
        return FermionOperator(self.d, out)

    def __sub__(self, other: "FermionOperator") -> "FermionOperator":
        return self + (-1) * other

    def __mul__(self, other):
        if isinstance(other, FermionOperator):
            if self.d != other.d:
                raise DimensionMismatchError(
                    f"mode counts differ: {self.d} vs {other.d}"
                )
            out = FermionOperator(self.d)
            for (c1, a1), x in self.terms.items():
                f1 = [(m, True) for m in c1] + [(m, False) for m in a1]
                for (c2, a2), y in other.terms.items():
                    f2 = [(m, True) for m in c2] + [(m, False) for m in a2]
                    out = out + FermionOperator.from_factors(self.d, x * y, f1 + f2)
            return out
        return FermionOperator(
            self.d, {k: complex(other) * v for k, v in self.terms.items() if other != 0}
        )

    __rmul__ = __mul__

    def dagger(self) -> "FermionOperator":
        out = FermionOperator(self.d)
        for (cre, ann), c in self.terms.items():
            factors = [(m, True) for m in reversed(ann)] + [
                (m, False) for m in reversed(cre)
            ]
            out = out + FermionOperator.from_factors(self.d, c.conjugate(), factors)
        return out

    def prune(self, tol: float = 0.0) -> "FermionOperator":
        return FermionOperator(
            self.d, {k: v for k, v in self.terms.items() if abs(v) > tol}
        )

    @property
    def constant_part(self) -> complex:
        return self.terms.get(((), ()), 0j)

    def is_number_conserving(self) -> bool:
        return all(len(c) == len(a) for c, a in self.terms)

    def max_degree(self) -> int:
        return max((max(len(c), len(a)) for c, a in self.terms), default=0)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        diff = self - self.dagger()
        return all(abs(v) <= tol for v in diff.terms.values())

    def coefficient_norm(self) -> float:
        """Sum of absolute coefficients."""
        return float(sum(abs(c) for c in self.terms.values()))

    # ---- text format ----

    def to_text(self, comments: list[str] | None = None) -> str:
        lines = [f"fermion-op d={self.d}"]
        for c in comments or []:
            lines.append(f"# {c}")
        for (cre, ann) in sorted(self.terms):
            v = self.terms[(cre, ann)]
            cs = " ".join(str(i) for i in cre)
            as_ = " ".join(str(j) for j in ann)
            lines.append(f"({v.real:.17g},{v.imag:.17g}) + {cs} - {as_}".replace("  ", " "))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "FermionOperator":
        from .errors import ParseError

        d = None
        terms: dict = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if d is None:
                if not line.startswith("fermion-op"):
                    raise ParseError("expected header 'fermion-op d=<d>'", lineno)
                try:
                    d = int(line.split("d=", 1)[1])
                except (IndexError, ValueError):
                    raise ParseError("malformed fermion-op header", lineno) from None
                continue
            try:
                coeff_s, rest = line.split(")", 1)
                re_s, im_s = coeff_s.lstrip("(").split(",")
                coeff = complex(float(re_s), float(im_s))
                plus, minus = rest.split("+", 1)[1].split("-", 1)
                cre = tuple(int(t) for t in plus.split())
                ann = tuple(int(t) for t in minus.split())
            except (ValueError, IndexError):
                raise ParseError(f"malformed term: {line!r}", lineno) from None
            key = (cre, ann)
            terms[key] = terms.get(key, 0j) + coeff
        if d is None:
            raise ParseError("empty operator file")
        out = cls(d)
        for (cre, ann), c in terms.items():
            out = out + cls.from_term(d, c, cre, ann)
        return out

    def __repr__(self):
        return f"FermionOperator(d={self.d}, terms={len(self.terms)})"


@dataclass
class NSectorState:
    """Unit vector on a fixed-particle-number sector."""

    basis: SlaterBasis
    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.basis.dim,):
            raise DimensionMismatchError(
                f"amplitude length {self.amplitudes.shape} != sector dim {self.basis.dim}"
            )
        if self.normalized:
            nrm = float(np.linalg.norm(self.amplitudes))
            if abs(nrm - 1.0) > 1e-12:
                raise ValueError(f"state norm {nrm} deviates from 1 beyond 1e-12")

    def density(self) -> "NSectorDensity":
        v = self.amplitudes
        return NSectorDensity(self.basis, np.outer(v, v.conj()))


@dataclass
class NSectorDensity:
    """Density matrix on a fixed-particle-number sector."""

    basis: SlaterBasis
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        dim = self.basis.dim
        if m.shape != (dim, dim):
            raise DimensionMismatchError(f"matrix shape {m.shape} != ({dim}, {dim})")
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise ValueError("density matrix not Hermitian to 1e-12")
        tr = complex(np.trace(m)).real
        if abs(tr - 1.0) > 1e-10:
            raise ValueError(f"density trace {tr} deviates from 1 beyond 1e-10")
        if float(np.linalg.eigvalsh(m)[0]) < -1e-10:
            raise ValueError("density matrix has eigenvalue below -1e-10")
        self.matrix = m

    @property
    def n_particles(self) -> int:
        return self.basis.n_particles


def operator_matrix(
    op: FermionOperator, basis_in: SlaterBasis, basis_out: SlaterBasis
) -> np.ndarray:
    """Dense matrix of `op` mapping basis_in states to basis_out states.

    Terms whose particle-number change differs from N_out - N_in contribute
    zero and are skipped.
    """
    if not (op.d == basis_in.d == basis_out.d):
        raise DimensionMismatchError(
            f"mode counts differ: op d={op.d}, in d={basis_in.d}, out d={basis_out.d}"
        )
    dn = basis_out.n_particles - basis_in.n_particles
    mat = np.zeros((basis_out.dim, basis_in.dim), dtype=complex)
    for (cre, ann), coeff in op.terms.items():
        if len(cre) - len(ann) != dn:
            continue
        for col, bits in enumerate(basis_in.states):
            hit = apply_monomial(cre, ann, bits)
            if hit is None:
                continue
            sign, out_bits = hit
            row = basis_out.index.get(out_bits)
            if row is not None:
                mat[row, col] += sign * coeff
    return mat


def fock_matrix(op: FermionOperator, d: int | None = None) -> np.ndarray:
    """Matrix of `op` on the full 2^d Fock space in qubit-style ordering.

    Row/column index of a configuration is `fock_index(bits, d)`, i.e. the
    tensor-product order with mode 1 most significant.
    """
    d = op.d if d is None else d
    dim = 1 << d
    mat = np.zeros((dim, dim), dtype=complex)
    for (cre, ann), coeff in op.terms.items():
        for bits in range(dim):
            hit = apply_monomial(cre, ann, bits)
            if hit is None:
                continue
            sign, out_bits = hit
            mat[fock_index(out_bits, d), fock_index(bits, d)] += sign * coeff
    return mat


def ground_energy_exact(
    op: FermionOperator, basis: SlaterBasis
) -> tuple[float, NSectorState]:
    """Minimal eigenvalue and eigenvector of `op` on one sector.

    Requires a number-conserving operator whose sector matrix is Hermitian
    to 1e-8 (absolute, relative to the largest entry).
    """
    if not op.is_number_conserving():
        raise ValueError(
            "operator changes particle number; the sector restriction would "
            "silently drop terms"
        )
    mat = operator_matrix(op, basis, basis)
    scale = max(1.0, float(np.max(np.abs(mat))))
    if np.max(np.abs(mat - mat.conj().T)) > 1e-8 * scale:
        raise NonHermitianError("operator is not Hermitian on this sector")
    evals, evecs = np.linalg.eigh(mat)
    return float(evals[0]), NSectorState(basis, evecs[:, 0])
