"""Monte-Carlo simulation of the tomography verifier.

A witness consists of blocks of d qubits, each supposedly holding the qubit
encoding of the same N-fermion state.  The verifier first measures the
total occupation of every block and rejects unless it equals N; it then
estimates the pair-observable expectations of the surviving blocks through
a one-ancilla measurement gadget and accepts when every estimated
coordinate matches the claimed pair density within a threshold.

All sampling is exact Born sampling on explicit state vectors or density
matrices, driven by a single seeded generator per run so that every report
is reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatchError, NonHermitianError, SimulationCapError
from .fock import NSectorDensity, fock_index
from .hamiltonians import jordan_wigner
from .rdm import TwoRDM, expectation_vector, observable_basis

SIMULATION_QUBIT_CAP = 20


@dataclass
class WitnessBlocks:
    """Product witness: one qubit density matrix of dimension 2^d per block."""

    d: int
    blocks: list[np.ndarray]

    def __post_init__(self):
        if self.n_blocks * self.d > SIMULATION_QUBIT_CAP:
            raise SimulationCapError(
                f"{self.n_blocks} blocks of {self.d} qubits exceed the "
                f"{SIMULATION_QUBIT_CAP}-qubit simulation cap"
            )
        dim = 1 << self.d
        for b in self.blocks:
            if b.shape != (dim, dim):
                raise DimensionMismatchError(f"block shape {b.shape} != ({dim},{dim})")

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)


@dataclass(frozen=True)
class VerifierConfig:
    rho: TwoRDM
    beta: float
    n_particles: int
    d: int
    shots: int
    threshold: float

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("need at least one shot per observable")
        if not 0 < self.threshold < 1:
            raise ValueError("acceptance threshold must lie in (0, 1)")


@dataclass
class RunRecord:
    seed: int
    accepted: bool
    max_deviation: float
    blocks: int
    shots: int

    def line(self) -> str:
        return (
            f"seed={self.seed} accepted={str(self.accepted).lower()} "
            f"max_dev={self.max_deviation:.17g} blocks={self.blocks} "
            f"shots={self.shots}"
        )


@dataclass
class VerifierOutcome:
    accepted: bool
    frequency: float
    runs: list[RunRecord]
    estimates: np.ndarray | None = field(default=None, repr=False)
    deviations: np.ndarray | None = field(default=None, repr=False)


def default_threshold(beta: float, d: int) -> float:
    """Per-coordinate acceptance margin: a 1/(4 sqrt(ell)) fraction of the
    trace-norm tolerance."""
    return beta / (4.0 * math.sqrt(observable_basis(d).ell))


def calibrate_shots(threshold: float, sigmas: float = 3.3) -> int:
    """Shots per observable so that `sigmas` standard errors of the widest
    (range two) observable fit inside the threshold."""
    return int(math.ceil((sigmas / threshold) ** 2))


def qubit_encoding(sigma: NSectorDensity) -> np.ndarray:
    """Embed a sector density into the 2^d computational-basis matrix under
    the occupation <-> bitstring identification."""
    d = sigma.basis.d
    dim = 1 << d
    idx = np.array([fock_index(bits, d) for bits in sigma.basis.states])
    out = np.zeros((dim, dim), dtype=complex)
    out[np.ix_(idx, idx)] = sigma.matrix
    return out


def honest_witness(sigma: NSectorDensity, n_blocks: int) -> WitnessBlocks:
    """Independent copies of the qubit encoding of sigma."""
    block = qubit_encoding(sigma)
    return WitnessBlocks(d=sigma.basis.d, blocks=[block.copy() for _ in range(n_blocks)])


@lru_cache(maxsize=None)
def _weight_masks(d: int) -> list[np.ndarray]:
    dim = 1 << d
    weights = np.array([bin(i).count("1") for i in range(dim)])
    return [weights == n for n in range(d + 1)]


def measure_particle_number(
    block: np.ndarray, rng: np.random.Generator
) -> tuple[int, np.ndarray]:
    """Sample the total-occupation observable and project.

    Returns the sampled particle count and the renormalized post-measurement
    density matrix.
    """
    d = int(round(math.log2(block.shape[0])))
    masks = _weight_masks(d)
    diag = np.real(np.diag(block))
    probs = np.array([float(diag[m].sum()) for m in masks])
    probs = np.clip(probs, 0.0, None)
    probs = probs / probs.sum()
    n = int(rng.choice(len(probs), p=probs))
    mask = masks[n]
    post = np.zeros_like(block)
    post[np.ix_(mask, mask)] = block[np.ix_(mask, mask)]
    post = post / float(np.trace(post).real)
    return n, post


def sample_observable(
    state: np.ndarray,
    observable: np.ndarray,
    shots: int,
    rng: np.random.Generator,
    bounds: tuple[float, float] | None = None,
    eig: tuple[np.ndarray, np.ndarray] | None = None,
) -> float:
    """Estimate an expectation with the one-ancilla gadget.

    Eigenvalues are rescaled into [0, 1] with the supplied (or spectral)
    bounds; each shot samples an eigenstate with Born probability, then an
    ancilla bit with the rescaled eigenvalue as bias.  The mean is mapped
    back through the recorded rescaling.  Standard error is at most
    (hi - lo) / (2 sqrt(shots)).
    """
    if eig is None:
        if np.max(np.abs(observable - observable.conj().T)) > 1e-10:
            raise NonHermitianError("observable must be Hermitian")
        evals, evecs = np.linalg.eigh(observable)
    else:
        evals, evecs = eig
    lo, hi = bounds if bounds is not None else (float(evals[0]), float(evals[-1]))
    if hi - lo < 1e-12:
        return float(evals[0])  # constant observable: no randomness involved
    lam = np.clip((evals - lo) / (hi - lo), 0.0, 1.0)
    probs = np.real(np.einsum("ia,ij,ja->a", evecs.conj(), state, evecs))
    probs = np.clip(probs, 0.0, None)
    probs = probs / probs.sum()
    counts = rng.multinomial(shots, probs)
    ones = sum(int(rng.binomial(int(c), p)) for c, p in zip(counts, lam) if c > 0)
    return (ones / shots) * (hi - lo) + lo


class _GadgetCache:
    """Eigendecompositions and rescaling bounds of the encoded observables."""

    def __init__(self, d: int):
        self.d = d
        basis = observable_basis(d)
        self.basis = basis
        self.eigs: list[tuple[np.ndarray, np.ndarray]] = []
        self.bounds: list[tuple[float, float]] = []
        for spec, op in zip(basis.specs, basis.operators()):
            mat = jordan_wigner(op).matrix()
            evals, evecs = np.linalg.eigh(mat)
            self.eigs.append((evals, evecs))
            self.bounds.append((0.0, 1.0) if spec[0] == "Z" else (-1.0, 1.0))


@lru_cache(maxsize=None)
def _gadget_cache(d: int) -> _GadgetCache:
    return _GadgetCache(d)


def verify(
    config: VerifierConfig,
    witness: WitnessBlocks,
    runs: int = 1,
    seed: int = 0,
) -> VerifierOutcome:
    """Run the verification protocol.

    Each run measures the particle number of every block (rejecting on any
    mismatch) and then estimates the pair-observable coordinates, assigning
    observables to blocks round robin with `config.shots` gadget shots each.
    The run accepts when the largest deviation from the claimed coordinates
    stays within the threshold.
    """
    if witness.d != config.d:
        raise DimensionMismatchError("witness and instance mode counts differ")
    cache = _gadget_cache(config.d)
    target = expectation_vector(config.rho, cache.basis).values
    ell = cache.basis.ell
    if witness.n_blocks < 1:
        raise ValueError("need at least one block for the observable schedule")
    records: list[RunRecord] = []
    last_est = None
    last_dev = None
    for r in range(runs):
        run_seed = seed + r
        rng = np.random.default_rng(run_seed)
        rejected = False
        posts = []
        for block in witness.blocks:
            n, post = measure_particle_number(block, rng)
            if n != config.n_particles:
                rejected = True
                break
            posts.append(post)
        if rejected:
            records.append(
                RunRecord(
                    seed=run_seed,
                    accepted=False,
                    max_deviation=float("inf"),
                    blocks=witness.n_blocks,
                    shots=config.shots,
                )
            )
            continue
        estimates = np.empty(ell)
        for k in range(ell):
            block_state = posts[k % len(posts)]
            estimates[k] = sample_observable(
                block_state,
                None,
                config.shots,
                rng,
                bounds=cache.bounds[k],
                eig=cache.eigs[k],
            )
        deviations = np.abs(estimates - target)
        max_dev = float(np.max(deviations))
        accepted = max_dev <= config.threshold
        records.append(
            RunRecord(
                seed=run_seed,
                accepted=accepted,
                max_deviation=max_dev,
                blocks=witness.n_blocks,
                shots=config.shots,
            )
        )
        last_est, last_dev = estimates, deviations
    freq = sum(rec.accepted for rec in records) / len(records)
    return VerifierOutcome(
        accepted=records[-1].accepted,
        frequency=freq,
        runs=records,
        estimates=last_est,
        deviations=last_dev,
    )


def block_marginals(joint: np.ndarray, d: int, n_blocks: int) -> list[np.ndarray]:
    """Reduced density matrix of each d-qubit block of a joint pure state."""
    dim = 1 << d
    if joint.size != dim**n_blocks:
        raise DimensionMismatchError(
            f"joint state size {joint.size} != {dim}^{n_blocks}"
        )
    tensor = joint.reshape([dim] * n_blocks)
    out = []
    for b in range(n_blocks):
        moved = np.moveaxis(tensor, b, 0).reshape(dim, -1)
        out.append(moved @ moved.conj().T)
    return out


def entangled_adversary_test(
    config: VerifierConfig,
    joint_state: np.ndarray,
    n_blocks: int,
    runs: int = 1,
    seed: int = 0,
) -> VerifierOutcome:
    """Verify a block-entangled witness.

    The protocol only ever measures single-block observables, so the
    decision is driven entirely by the block marginals.
    """
    marginals = block_marginals(np.asarray(joint_state, dtype=complex), config.d, n_blocks)
    witness = WitnessBlocks(d=config.d, blocks=marginals)
    return verify(config, witness, runs=runs, seed=seed)


def purity_overlap_test(
    rho_state: np.ndarray,
    sigma_state: np.ndarray,
    shots: int,
    epsilon: float = 0.1,
    seed: int = 0,
) -> tuple[float, bool]:
    """Estimate tr(rho sigma) by simulated swap-test sampling.

    The verdict is "pure and equal" when the estimated overlap reaches
    1 - epsilon/2; a state with purity below 1 - epsilon cannot pass in
    expectation, by the Cauchy-Schwarz bound on tr(rho sigma).
    """
    if rho_state.shape != sigma_state.shape:
        raise DimensionMismatchError("states have different dimensions")
    overlap = float(np.real(np.trace(rho_state @ sigma_state)))
    p_plus = min(max((1.0 + overlap) / 2.0, 0.0), 1.0)
    rng = np.random.default_rng(seed)
    plus = int(rng.binomial(shots, p_plus))
    estimate = 2.0 * plus / shots - 1.0
    return estimate, estimate >= 1.0 - epsilon / 2.0
