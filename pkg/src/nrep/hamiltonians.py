"""Spin Hamiltonians and their fermionic images.

Two encodings of qubits into fermionic modes are provided.  The default
represents qubit i by a single fermion in one of two modes (a_i = mode 2i-1,
b_i = mode 2i); its Pauli images are

    X_i -> a†b + b†a,   Y_i -> i(b†a - a†b),   Z_i -> 1 - 2 b†b,

with a weighted penalty that charges every site holding zero or two
fermions.  The alternative "parity" encoding puts zero or two fermions per
site and needs only a small penalty constant.  A Jordan-Wigner map to qubit
operators is included for the tomography side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, ParseError, WeightViolationError
from .fock import FermionOperator

PAULI_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# single-qubit products:  (P, Q) -> (phase, PQ)
_PAULI_MUL = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("Y", "I"): (1, "Y"), ("Z", "I"): (1, "Z"),
    ("X", "X"): (1, "I"), ("Y", "Y"): (1, "I"), ("Z", "Z"): (1, "I"),
    ("X", "Y"): (1j, "Z"), ("Y", "X"): (-1j, "Z"),
    ("Y", "Z"): (1j, "X"), ("Z", "Y"): (-1j, "X"),
    ("Z", "X"): (1j, "Y"), ("X", "Z"): (-1j, "Y"),
}


def pauli_weight(word: str) -> int:
    return sum(1 for ch in word if ch != "I")


def pauli_word_matrix(word: str) -> np.ndarray:
    mat = np.ones((1, 1), dtype=complex)
    for ch in word:
        mat = np.kron(mat, PAULI_MATS[ch])
    return mat


@dataclass(frozen=True)
class SpinHamiltonian:
    """Real-weighted Pauli strings of weight at most 2."""

    n_qubits: int
    terms: tuple[tuple[float, str], ...]

    def __post_init__(self):
        for coeff, word in self.terms:
            if len(word) != self.n_qubits:
                raise DimensionMismatchError(
                    f"term {word!r} has length {len(word)}, expected {self.n_qubits}"
                )
            if pauli_weight(word) > 2:
                raise WeightViolationError(
                    f"term {word!r} acts on {pauli_weight(word)} qubits (limit 2)"
                )

    def matrix(self) -> np.ndarray:
        dim = 1 << self.n_qubits
        mat = np.zeros((dim, dim), dtype=complex)
        for coeff, word in self.terms:
            mat += coeff * pauli_word_matrix(word)
        return mat

    def coefficient_norm(self) -> float:
        return float(sum(abs(c) for c, _ in self.terms))

    def to_text(self) -> str:
        lines = [f"qubits={self.n_qubits}"]
        lines += [f"{c:.17g} {w}" for c, w in self.terms]
        return "\n".join(lines) + "\n"


class QubitOperator:
    """Complex-weighted Pauli strings in canonical form (one term per string)."""

    __slots__ = ("n_qubits", "terms")

    def __init__(self, n_qubits: int, terms: dict | None = None):
        self.n_qubits = n_qubits
        self.terms = dict(terms) if terms else {}

    @classmethod
    def identity(cls, n: int, coeff: complex = 1.0) -> "QubitOperator":
        return cls(n, {"I" * n: complex(coeff)})

    def __add__(self, other: "QubitOperator") -> "QubitOperator":
        if self.n_qubits != other.n_qubits:
            raise DimensionMismatchError("qubit counts differ")
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, 0j) + c
            if out[w] == 0:
                del out[w]
        return QubitOperator(self.n_qubits, out)

    def __sub__(self, other):
        return self + (-1) * other

    def __mul__(self, other):
        if isinstance(other, QubitOperator):
            if self.n_qubits != other.n_qubits:
                raise DimensionMismatchError("qubit counts differ")
            out: dict = {}
            for w1, c1 in self.terms.items():
                for w2, c2 in other.terms.items():
                    phase = c1 * c2
                    chars = []
                    for p, q in zip(w1, w2):
                        ph, r = _PAULI_MUL[(p, q)]
                        phase *= ph
                        chars.append(r)
                    word = "".join(chars)
                    out[word] = out.get(word, 0j) + phase
                    if out[word] == 0:
                        del out[word]
            return QubitOperator(self.n_qubits, out)
        return QubitOperator(
            self.n_qubits,
            {w: complex(other) * c for w, c in self.terms.items() if other != 0},
        )

    __rmul__ = __mul__

    def dagger(self) -> "QubitOperator":
        return QubitOperator(
            self.n_qubits, {w: c.conjugate() for w, c in self.terms.items()}
        )

    def prune(self, tol: float = 1e-14) -> "QubitOperator":
        return QubitOperator(
            self.n_qubits, {w: c for w, c in self.terms.items() if abs(c) > tol}
        )

    def matrix(self) -> np.ndarray:
        dim = 1 << self.n_qubits
        mat = np.zeros((dim, dim), dtype=complex)
        for w, c in self.terms.items():
            mat += c * pauli_word_matrix(w)
        return mat

    def __repr__(self):
        return f"QubitOperator(n={self.n_qubits}, terms={len(self.terms)})"


@dataclass(frozen=True)
class EncodingMap:
    """Bookkeeping for the one-fermion-per-site embedding of n qubits."""

    n_qubits: int
    penalty_weight: float

    @property
    def d(self) -> int:
        return 2 * self.n_qubits

    def mode_a(self, i: int) -> int:
        return 2 * i - 1

    def mode_b(self, i: int) -> int:
        return 2 * i


def parse_spin_hamiltonian(text: str) -> SpinHamiltonian:
    """Parse the text format: optional header ``qubits=<n>``, one term per
    line ``<real-coef> <pauli-word>``, ``#`` comments, case-insensitive words.
    """
    n = None
    terms: list[tuple[float, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.lower().startswith("qubits="):
            try:
                n = int(line.split("=", 1)[1])
            except ValueError:
                raise ParseError("malformed qubits header", lineno) from None
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"expected '<coef> <word>', got {line!r}", lineno)
        try:
            coeff = float(parts[0])
        except ValueError:
            raise ParseError(f"bad coefficient {parts[0]!r}", lineno) from None
        word = parts[1].upper()
        if any(ch not in "IXYZ" for ch in word):
            raise ParseError(f"bad Pauli word {parts[1]!r}", lineno)
        if pauli_weight(word) > 2:
            raise WeightViolationError(
                f"line {lineno}: term {word!r} acts on more than 2 qubits"
            )
        if n is None:
            n = len(word)
        elif len(word) != n:
            raise ParseError(
                f"word length {len(word)} inconsistent with qubits={n}", lineno
            )
        terms.append((coeff, word))
    if n is None:
        raise ParseError("no qubit count: empty Hamiltonian without header")
    return SpinHamiltonian(n_qubits=n, terms=tuple(terms))


def encode_basis_state(z: str) -> str:
    """Occupation string of the one-fermion-per-site image of |z>.

    Mode 2i-1 is occupied when z_i = 0, mode 2i when z_i = 1.
    """
    out = []
    for ch in z:
        if ch == "0":
            out.append("10")
        elif ch == "1":
            out.append("01")
        else:
            raise ValueError(f"not a bitstring: {z!r}")
    return "".join(out)


def encode_basis_state_parity(z: str) -> str:
    """Occupation string for the zero-or-two-fermion encoding: both modes of
    site i occupied when z_i = 1, both empty when z_i = 0."""
    return "".join("11" if ch == "1" else "00" for ch in z)


def _site_image(letter: str, i: int, d: int) -> FermionOperator:
    a, b = 2 * i - 1, 2 * i
    if letter == "X":
        return FermionOperator.from_term(d, 1, (a,), (b,)) + FermionOperator.from_term(
            d, 1, (b,), (a,)
        )
    if letter == "Y":
        return FermionOperator.from_term(d, 1j, (b,), (a,)) + FermionOperator.from_term(
            d, -1j, (a,), (b,)
        )
    if letter == "Z":
        return FermionOperator.constant(d, 1) + FermionOperator.from_term(
            d, -2, (b,), (b,)
        )
    raise ValueError(f"unexpected Pauli letter {letter!r}")


def _site_image_parity(letter: str, i: int, d: int) -> FermionOperator:
    a, b = 2 * i - 1, 2 * i
    if letter == "X":
        hop = _site_image("X", i, d)
        pair = FermionOperator.from_factors(
            d, 1, [(b, False), (a, False)]
        ) + FermionOperator.from_factors(d, 1, [(a, True), (b, True)])
        return hop + pair
    if letter == "Y":
        hop = _site_image("Y", i, d)
        pair = FermionOperator.from_factors(
            d, 1j, [(a, True), (b, True)]
        ) + FermionOperator.from_factors(d, -1j, [(b, False), (a, False)])
        return hop + pair
    return _site_image(letter, i, d)


def _term_image(coeff: float, word: str, d: int, site_image) -> FermionOperator:
    img = FermionOperator.constant(d, coeff)
    for i, letter in enumerate(word, start=1):
        if letter != "I":
            img = img * site_image(letter, i, d)
    return img


def _site_parity_product(i: int, d: int) -> FermionOperator:
    """(2 n_a - 1)(2 n_b - 1) for site i: +1 on doubly-occupied or empty
    sites, -1 on singly-occupied ones."""
    a, b = 2 * i - 1, 2 * i
    na = FermionOperator.from_term(d, 1, (a,), (a,))
    nb = FermionOperator.from_term(d, 1, (b,), (b,))
    one = FermionOperator.constant(d, 1)
    return (2 * na - one) * (2 * nb - one)


def default_penalty_weight(hamiltonian: SpinHamiltonian) -> float:
    """Penalty weight sufficient to confine the sector minimum to the
    one-fermion-per-site subspace: twice the coefficient norm plus one."""
    return 2.0 * hamiltonian.coefficient_norm() + 1.0


def spin_to_fermion(
    hamiltonian: SpinHamiltonian, penalty_weight: float | None = None
) -> tuple[FermionOperator, EncodingMap]:
    """One-fermion-per-site fermionic image on d = 2n modes.

    The result is the Pauli-by-Pauli substitution plus
    w * sum_i (1 + P_i)/2 with P_i = (2 n_a - 1)(2 n_b - 1), which costs w
    for every site not holding exactly one fermion and nothing on the
    encoded subspace.  Restricted to the span of `encode_basis_state`
    images, the sector matrix equals the qubit matrix entry for entry.
    """
    if penalty_weight is None:
        penalty_weight = default_penalty_weight(hamiltonian)
    if penalty_weight <= 0:
        raise ValueError("penalty weight must be positive")
    n = hamiltonian.n_qubits
    d = 2 * n
    out = FermionOperator(d)
    for coeff, word in hamiltonian.terms:
        out = out + _term_image(coeff, word, d, _site_image)
    one = FermionOperator.constant(d, 1)
    for i in range(1, n + 1):
        bad_site = 0.5 * (one + _site_parity_product(i, d))
        out = out + penalty_weight * bad_site
    return out.prune(), EncodingMap(n_qubits=n, penalty_weight=penalty_weight)


def spin_to_fermion_parity(
    hamiltonian: SpinHamiltonian, epsilon: float = 0.5
) -> FermionOperator:
    """Zero-or-two-fermion image on d = 2n modes.

    Acts like the qubit Hamiltonian on both the one-fermion-per-site and the
    zero-or-two-fermion subspaces; the small penalty eps * sum_i (1 - P_i)/2
    charges singly-occupied sites and selects the latter.
    """
    if epsilon <= 0:
        raise ValueError("penalty constant must be positive")
    n = hamiltonian.n_qubits
    d = 2 * n
    out = FermionOperator(d)
    for coeff, word in hamiltonian.terms:
        out = out + _term_image(coeff, word, d, _site_image_parity)
    one = FermionOperator.constant(d, 1)
    for i in range(1, n + 1):
        single_site = 0.5 * (one - _site_parity_product(i, d))
        out = out + epsilon * single_site
    return out.prune()


def two_body_normal_form(op: FermionOperator, n_particles: int) -> FermionOperator:
    """Rewrite every one-body term a_i†a_j as the two-body sum
    (1/(N-1)) sum_k a_i† a_k† a_k a_j, valid on the N-particle sector.

    Constants are kept; genuine two-body terms pass through unchanged, so
    the map is idempotent and preserves the sector matrix exactly.
    """
    if n_particles < 2:
        raise ValueError("two-body rewriting needs at least 2 particles")
    if not op.is_number_conserving():
        raise ValueError("operator must be number-conserving")
    d = op.d
    out = FermionOperator(d)
    for (cre, ann), coeff in op.terms.items():
        deg = len(cre)
        if deg == 0 or deg == 2:
            out = out + FermionOperator(d, {(cre, ann): coeff})
        elif deg == 1:
            i, j = cre[0], ann[0]
            scale = coeff / (n_particles - 1)
            for k in range(1, d + 1):
                if k == i or k == j:
                    continue
                out = out + FermionOperator.from_factors(
                    d, scale, [(i, True), (k, True), (k, False), (j, False)]
                )
        else:
            raise ValueError(f"term of degree {deg} exceeds two-body form")
    return out.prune()


def _lowering_qubit_op(i: int, d: int) -> QubitOperator:
    """Qubit image of a_i: -(Z ⊗ .. ⊗ Z) ⊗ |0><1| at position i."""
    z = "Z" * (i - 1)
    tail = "I" * (d - i)
    return QubitOperator(
        d, {z + "X" + tail: -0.5, z + "Y" + tail: -0.5j}
    )


def jordan_wigner(op: FermionOperator) -> QubitOperator:
    """Jordan-Wigner image of a fermionic operator on d qubits.

    The per-factor global minus sign cancels in every even-degree monomial,
    so number-conserving operators reproduce the sector matrices exactly
    under the occupation <-> computational-basis identification.
    """
    d = op.d
    out = QubitOperator(d)
    for (cre, ann), coeff in op.terms.items():
        q = QubitOperator.identity(d, coeff)
        for i in cre:
            q = q * _lowering_qubit_op(i, d).dagger()
        for j in ann:
            q = q * _lowering_qubit_op(j, d)
        out = out + q
    return out.prune(0.0)
