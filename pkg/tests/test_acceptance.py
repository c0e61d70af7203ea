"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
lines and timings as they complete.
"""

import subprocess
import sys
import time

import numpy as np

from nrep.duality import (
    build_map_A,
    build_map_B,
    hole_expectation_vector,
    hole_observable_basis,
    inner_ball_certificate,
    slater_complement,
)
from nrep.ellipsoid import decompose_objective, ground_energy_via_oracle
from nrep.fock import (
    FermionOperator,
    NSectorDensity,
    build_basis,
    fock_matrix,
    ground_energy_exact,
    operator_matrix,
    string_to_bits,
)
from nrep.hamiltonians import (
    SpinHamiltonian,
    default_penalty_weight,
    encode_basis_state,
    encode_basis_state_parity,
    jordan_wigner,
    spin_to_fermion,
    spin_to_fermion_parity,
    two_body_normal_form,
)
from nrep.fock import fock_index
from nrep.oracle import (
    RepresentabilityInstance,
    contraction_expectations,
    is_representable,
    project_onto_K,
)
from nrep.rdm import (
    OneRDM,
    coleman_check,
    expectation_vector,
    observable_basis,
    two_rdm,
)
from nrep.verifier import (
    VerifierConfig,
    WitnessBlocks,
    calibrate_shots,
    default_threshold,
    honest_witness,
    verify,
)

from conftest import (
    encoded_indices,
    random_mixed_density,
    random_trace_one_hermitian,
    random_two_local,
)


def report(number: int, ok: bool, elapsed: float, note: str):
    status = "PASS" if ok else "FAIL"
    print(f"[criterion {number}] {status} ({elapsed:.1f}s) {note}", flush=True)


def test_criterion_1_algebra_suite():
    start = time.perf_counter()
    ok = True
    for d in range(3, 7):
        dim = 1 << d
        lower = [
            fock_matrix(FermionOperator.from_term(d, 1, (), (i,)))
            for i in range(1, d + 1)
        ]
        raise_ = [m.conj().T for m in lower]
        for i in range(d):
            for j in range(d):
                ok &= np.max(np.abs(lower[i] @ lower[j] + lower[j] @ lower[i])) <= 1e-12
                ok &= np.max(np.abs(raise_[i] @ raise_[j] + raise_[j] @ raise_[i])) <= 1e-12
                expected = np.eye(dim) if i == j else np.zeros((dim, dim))
                ok &= (
                    np.max(np.abs(lower[i] @ raise_[j] + raise_[j] @ lower[i] - expected))
                    <= 1e-12
                )
    for d in range(2, 5):
        dim = 1 << d
        jl = [
            jordan_wigner(FermionOperator.from_term(d, 1, (), (i,))).matrix()
            for i in range(1, d + 1)
        ]
        jr = [m.conj().T for m in jl]
        for i in range(d):
            for j in range(d):
                ok &= np.max(np.abs(jl[i] @ jl[j] + jl[j] @ jl[i])) <= 1e-12
                ok &= np.max(np.abs(jr[i] @ jr[j] + jr[j] @ jr[i])) <= 1e-12
                expected = np.eye(dim) if i == j else np.zeros((dim, dim))
                ok &= np.max(np.abs(jl[i] @ jr[j] + jr[j] @ jl[i] - expected)) <= 1e-12
    elapsed = time.perf_counter() - start
    report(1, ok and elapsed < 10, elapsed, "anticommutation identities, direct and encoded")
    assert ok
    assert elapsed < 10


def test_criterion_2_encoding_fidelity():
    start = time.perf_counter()
    rng = np.random.default_rng(11)
    ok = True
    plan = [(1, 10), (2, 20), (3, 20)]
    for n, count in plan:
        for _ in range(count):
            ham = random_two_local(n, rng)
            weight = default_penalty_weight(ham)
            op, _ = spin_to_fermion(ham, weight)
            basis = build_basis(2 * n, n)
            mat = operator_matrix(op, basis, basis)
            idx = encoded_indices(basis, encode_basis_state, n)
            spec_q = np.linalg.eigvalsh(ham.matrix())
            spec_r = np.linalg.eigvalsh(mat[np.ix_(idx, idx)])
            ok &= bool(np.max(np.abs(spec_q - spec_r)) <= 1e-9)
            ok &= abs(float(np.linalg.eigvalsh(mat)[0]) - spec_q[0]) <= 1e-9
    for n, count in [(1, 10), (2, 10)]:
        for _ in range(count):
            ham = random_two_local(n, rng)
            op = spin_to_fermion_parity(ham, 0.5)
            mat = fock_matrix(op)
            idx = [
                fock_index(
                    string_to_bits(encode_basis_state_parity(format(z, f"0{n}b"))),
                    2 * n,
                )
                for z in range(2**n)
            ]
            spec_q = np.linalg.eigvalsh(ham.matrix())
            spec_r = np.linalg.eigvalsh(mat[np.ix_(idx, idx)])
            ok &= bool(np.max(np.abs(spec_q - spec_r)) <= 1e-9)
            ok &= abs(float(np.linalg.eigvalsh(mat)[0]) - spec_q[0]) <= 1e-9
    elapsed = time.perf_counter() - start
    report(2, ok and elapsed < 60, elapsed, "spectrum preservation, both encodings")
    assert ok
    assert elapsed < 60


def _alpha_projection_reference(target, basis):
    """Independent oracle: the exact coordinate-space projection onto the
    two-particle set, solved as a convex program by an external solver."""
    import cvxpy as cp

    m = basis.pair_basis.m
    rho = cp.Variable((m, m), hermitian=True)
    alpha_expr = cp.hstack(
        [cp.real(cp.trace(basis.pair_stack[k] @ rho)) for k in range(basis.ell)]
    )
    problem = cp.Problem(
        cp.Minimize(cp.norm(alpha_expr - target, 2)),
        [rho >> 0, cp.trace(rho) == 1],
    )
    problem.solve(solver="CLARABEL")
    return float(problem.value)


def _clip_renormalize_alpha_distance(matrix, target, basis):
    """Coordinate distance of the spectrum-clipped, trace-renormalized point;
    it lies in the reachable set, so this upper-bounds the true distance."""
    evals, evecs = np.linalg.eigh(matrix)
    clipped = np.maximum(evals, 0.0)
    if clipped.sum() <= 0:
        return None
    clipped /= clipped.sum()
    point = (evecs * clipped) @ evecs.conj().T
    alpha = np.einsum("kij,ji->k", basis.pair_stack, point).real
    return float(np.linalg.norm(alpha - target))


def test_criterion_3_oracle_equivalence_and_soundness():
    start = time.perf_counter()
    rng = np.random.default_rng(23)
    basis4 = observable_basis(4)
    ok = True
    worst = 0.0
    for _ in range(100):
        matrix = random_trace_one_hermitian(6, rng, scale=0.25)
        target = np.einsum("kij,ji->k", basis4.pair_stack, matrix).real
        result = project_onto_K(target, 2, 4, tol=2e-4)
        reference = _alpha_projection_reference(target, basis4)
        worst = max(worst, abs(result.distance - reference))
        ok &= abs(result.distance - reference) <= 1e-3
        clip = _clip_renormalize_alpha_distance(matrix, target, basis4)
        if clip is not None:
            ok &= result.distance <= clip + 1e-3
    sound = True
    plan = [
        (4, 2, 300, 6),
        (5, 2, 200, 8),
        (6, 2, 150, 12),
        (6, 3, 150, 16),
        (7, 3, 150, 24),
        (8, 4, 50, 70),
    ]
    assert sum(c for _, _, c, _ in plan) == 1000
    for d, n, count, rank in plan:
        sector = build_basis(d, n)
        for _ in range(count):
            sigma = random_mixed_density(sector, rng, rank=rank)
            rho = two_rdm(sigma)
            verdict = is_representable(
                RepresentabilityInstance(rho, n, d, beta=0.4), max_iter=400
            )
            sound &= verdict.verdict != "NO"
    elapsed = time.perf_counter() - start
    report(
        3,
        ok and sound and elapsed < 300,
        elapsed,
        f"projection matches convex reference (worst gap {worst:.2e}); no false NO",
    )
    assert ok
    assert sound
    assert elapsed < 300


def test_criterion_4_end_to_end_reduction():
    start = time.perf_counter()
    rng = np.random.default_rng(31)
    suite = [SpinHamiltonian(2, ((-1.0, "ZZ"), (-1.0, "XI")))]
    suite += [random_two_local(2, rng, n_terms=4) for _ in range(5)]
    suite += [random_two_local(3, rng, n_terms=5) for _ in range(4)]
    ok = True
    details = []
    for ham in suite:
        n = ham.n_qubits
        weight = default_penalty_weight(ham)
        fermi, _ = spin_to_fermion(ham, weight)
        exact, _ = ground_energy_exact(fermi, build_basis(2 * n, n))
        objective = decompose_objective(
            two_body_normal_form(fermi, n), observable_basis(2 * n), n
        )
        eps = 1e-2 * objective.coefficient_norm()
        value = ground_energy_via_oracle(ham)
        error = abs(value - exact)
        ok &= error <= eps
        details.append((n, error, eps))
    sqrt2 = SpinHamiltonian(2, ((-1.0, "ZZ"), (-1.0, "XI")))
    fermi, _ = spin_to_fermion(sqrt2, default_penalty_weight(sqrt2))
    exact, _ = ground_energy_exact(fermi, build_basis(4, 2))
    ok &= abs(exact - (-np.sqrt(2))) <= 1e-10
    elapsed = time.perf_counter() - start
    worst = max(err / eps for _, err, eps in details)
    report(
        4,
        ok and elapsed < 600,
        elapsed,
        f"10 Hamiltonians within eps (worst error/eps {worst:.2f})",
    )
    assert ok
    assert elapsed < 600


def test_criterion_5_appendix_duality():
    start = time.perf_counter()
    rng = np.random.default_rng(41)
    ok = True
    for d in (5, 6):
        sector2 = build_basis(d, 2)
        hob = hole_observable_basis(d)
        for _ in range(50):
            sigma = random_mixed_density(sector2, rng, rank=6)
            particle = expectation_vector(two_rdm(sigma)).values
            hole = hole_expectation_vector(slater_complement(sigma), hob).values
            ok &= bool(np.max(np.abs(particle - hole)) <= 1e-10)
        a_map = build_map_A(d)
        b_map = build_map_B(d)
        comp = b_map.compose(a_map)
        ell = comp.matrix.shape[0]
        ok &= bool(np.max(np.abs(comp.matrix - np.eye(ell))) <= 1e-8)
        ok &= bool(np.max(np.abs(comp.offset)) <= 1e-8)
        ok &= inner_ball_certificate(d) > 0
        bound = np.sqrt(observable_basis(d).ell)
        per_n = 1000 // (d - 1)
        for n in range(2, d - 1 + 1):
            sector = build_basis(d, n)
            for _ in range(per_n):
                alpha = contraction_expectations(
                    random_mixed_density(sector, rng)
                ).values
                ok &= float(np.linalg.norm(alpha)) <= bound + 1e-12
    elapsed = time.perf_counter() - start
    report(5, ok and elapsed < 120, elapsed, "hole duality, inverse maps, radius bounds")
    assert ok
    assert elapsed < 120


def test_criterion_6_verifier_gap():
    start = time.perf_counter()
    beta = 0.4
    threshold = default_threshold(beta, 4)
    shots = calibrate_shots(threshold)
    basis = build_basis(4, 2)
    vec = np.zeros(basis.dim, dtype=complex)
    vec[basis.index[string_to_bits("1100")]] = 1.0
    sigma = NSectorDensity(basis, np.outer(vec, vec.conj()))
    rho = two_rdm(sigma)
    config = VerifierConfig(
        rho=rho, beta=beta, n_particles=2, d=4, shots=shots, threshold=threshold
    )
    honest = verify(config, honest_witness(sigma, 5), runs=100, seed=1000)

    far_vec = np.zeros(basis.dim, dtype=complex)
    far_vec[basis.index[string_to_bits("0011")]] = 1.0
    far_sigma = NSectorDensity(
        basis, 0.75 * sigma.matrix + 0.25 * np.outer(far_vec, far_vec.conj())
    )
    from nrep.rdm import trace_distance

    assert trace_distance(two_rdm(far_sigma), rho) >= beta
    far = verify(config, honest_witness(far_sigma, 5), runs=100, seed=2000)

    empty = np.zeros((16, 16), dtype=complex)
    empty[0, 0] = 1.0
    zero_out = verify(
        config,
        WitnessBlocks(d=4, blocks=[empty.copy() for _ in range(5)]),
        runs=20,
        seed=3000,
    )

    rng = np.random.default_rng(55)
    cauchy = True
    for _ in range(1000):
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        a = a @ a.conj().T
        a /= np.trace(a).real
        b = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        b = b @ b.conj().T
        b /= np.trace(b).real
        lhs = float(np.real(np.trace(a @ b)))
        rhs = np.sqrt(float(np.real(np.trace(a @ a))) * float(np.real(np.trace(b @ b))))
        cauchy &= lhs <= rhs + 1e-12

    ok = (
        honest.frequency >= 0.9
        and far.frequency <= 0.5
        and honest.frequency - far.frequency >= 0.3
        and zero_out.frequency == 0.0
        and cauchy
    )
    elapsed = time.perf_counter() - start
    report(
        6,
        ok and elapsed < 300,
        elapsed,
        f"acceptance {honest.frequency:.2f} honest vs {far.frequency:.2f} far",
    )
    assert ok
    assert elapsed < 300


def _one_rdm_feasible_reference(gamma, d, n):
    """Brute-force representability of a one-particle density: minimize the
    distance from the demanded expectations over the sector density set and
    test whether it vanishes."""
    import cvxpy as cp

    from nrep.rdm import _mode_lowering_stack

    basis = build_basis(d, n)
    low = _mode_lowering_stack(d, n)
    sigma = cp.Variable((basis.dim, basis.dim), hermitian=True)
    entries = []
    targets = []
    for i in range(d):
        for j in range(d):
            op = low[i].conj().T @ low[j]
            entries.append(cp.real(cp.trace(op @ sigma)))
            entries.append(cp.imag(cp.trace(op @ sigma)))
            targets.extend([gamma[i, j].real, gamma[i, j].imag])
    problem = cp.Problem(
        cp.Minimize(cp.norm(cp.hstack(entries) - np.array(targets), 2)),
        [sigma >> 0, cp.trace(sigma) == 1],
    )
    problem.solve(solver="CLARABEL")
    return float(problem.value) <= 1e-6


def test_criterion_7_coleman_agreement():
    start = time.perf_counter()
    rng = np.random.default_rng(61)
    ok = True
    for d, n in ((4, 2), (5, 2)):
        spectra = [
            [1.0, 1.0] + [0.0] * (d - 2),
            [n / d] * d,
            [0.9, 0.9, 0.2] + [0.0] * (d - 3),
            [0.7, 0.6, 0.4, 0.3] + [0.0] * (d - 4),
            [1.5, 0.5] + [0.0] * (d - 2),
            [1.1, 0.9] + [0.0] * (d - 2),
            [-0.1, 1.0, 0.6, 0.5] + [0.0] * (d - 4),
            [0.8, 0.8, 0.8] + [0.0] * (d - 3),  # trace 2.4, not 2
            [1.0, 0.5, 0.5] + [0.0] * (d - 3),
            [1.0 + 1e-4, 1.0 - 1e-4] + [0.0] * (d - 2),
        ]
        for spec in spectra:
            base = np.diag(np.array(spec, dtype=complex))
            mats = [base]
            q = np.linalg.qr(
                rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            )[0]
            mats.append(q @ base @ q.conj().T)
            for gamma_mat in mats:
                gamma = OneRDM(d=d, n_particles=n, matrix=gamma_mat)
                predicted = coleman_check(gamma)
                actual = _one_rdm_feasible_reference(gamma.matrix, d, n)
                ok &= predicted == actual
    elapsed = time.perf_counter() - start
    report(7, ok and elapsed < 60, elapsed, "eigenvalue criterion matches state search")
    assert ok
    assert elapsed < 60


def test_criterion_8_cli_determinism(tmp_path):
    start = time.perf_counter()
    outputs = {}
    for tag in ("first", "second"):
        sub = tmp_path / tag
        sub.mkdir()
        ham = sub / "ham.txt"
        ham.write_text("qubits=2\n-1.0 ZZ\n-0.6 XI\n0.3 IY\n")
        state = sub / "state.txt"
        state.write_text("state d=4 N=2\n1100 0.8 0\n0110 0.6 0\n")
        collected = b""
        runs = [
            ["map", "ham.txt", "-o", "ferm.txt"],
            ["energy", "ham.txt", "--method", "ellipsoid", "-o", "trace.csv"],
            ["rdm", "state.txt", "-o", "pair.rdm"],
            ["check", "pair.rdm", "--beta", "0.3", "-o", "verdict.txt"],
            [
                "verify", "pair.rdm", "--honest-from", "state.txt",
                "--runs", "3", "--seed", "17",
                "--shots", "2000", "--threshold", "0.08",
                "-o", "report.txt",
            ],
            ["duality", "--d", "5", "-o", "dual"],
        ]
        for args in runs:
            proc = subprocess.run(
                [sys.executable, "-m", "nrep.cli", *args],
                capture_output=True,
                cwd=sub,
            )
            assert proc.returncode == 0, proc.stderr.decode()
        for name in (
            "ferm.txt", "trace.csv", "pair.rdm", "pair.rdm.alpha.csv",
            "verdict.txt", "report.txt", "dual.A.txt", "dual.B.txt",
            "dual.report.txt",
        ):
            collected += (sub / name).read_bytes()
        outputs[tag] = collected
    ok = outputs["first"] == outputs["second"]
    elapsed = time.perf_counter() - start
    report(8, ok, elapsed, "seeded command outputs byte-identical")
    assert ok
