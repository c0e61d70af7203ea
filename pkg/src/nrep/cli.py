"""Command-line front end.

Subcommands compose the library into file-driven experiments: `map` embeds
a spin Hamiltonian into fermionic modes, `rdm` reduces a state file to its
pair density and coordinates, `check` runs the representability oracle,
`energy` compares exact diagonalization with the oracle-driven solver,
`verify` simulates the tomography protocol, and `duality` exports the
particle-hole coordinate maps with their certificates.

Exit codes: 0 success, 1 oracle answered NO, 2 malformed input,
3 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__, fileio
from .errors import (
    NrepError,
    ParseError,
    SectorSizeError,
    SimulationCapError,
    WeightViolationError,
)
from .fock import build_basis, ground_energy_exact
from .hamiltonians import (
    default_penalty_weight,
    parse_spin_hamiltonian,
    spin_to_fermion,
    spin_to_fermion_parity,
)
from .rdm import expectation_vector, observable_basis, two_rdm
from .oracle import RepresentabilityInstance, is_representable
from .verifier import (
    VerifierConfig,
    calibrate_shots,
    default_threshold,
    entangled_adversary_test,
    honest_witness,
    verify,
)

EXIT_OK = 0
EXIT_NO = 1
EXIT_INPUT = 2
EXIT_RESOURCE = 3


def _write(path: str, text: str):
    Path(path).write_text(text)


def _observable_label(spec, pairs) -> str:
    if spec[0] == "Z":
        i, j = pairs[spec[1]]
        return f"Z[{i},{j}]"
    a = pairs[spec[1]]
    b = pairs[spec[2]]
    return f"{spec[0]}[{a[0]},{a[1]}][{b[0]},{b[1]}]"


def cmd_map(args) -> int:
    text = Path(args.hamiltonian).read_text()
    ham = parse_spin_hamiltonian(text)
    if args.encoding == "one-per-site":
        weight = args.penalty if args.penalty is not None else default_penalty_weight(ham)
        op, _ = spin_to_fermion(ham, weight)
        penalty_note = f"penalty={weight}"
    else:
        epsilon = args.penalty if args.penalty is not None else 0.5
        op = spin_to_fermion_parity(ham, epsilon)
        penalty_note = f"penalty={epsilon}"
    config = {
        "command": "map",
        "encoding": args.encoding,
        "input": Path(args.hamiltonian).name,
        "penalty": penalty_note.split("=")[1],
        "qubits": ham.n_qubits,
    }
    out = op.to_text(comments=[f"nrep-version={__version__}"] + [
        f"config {k}={v}" for k, v in sorted(config.items())
    ])
    _write(args.output, out)
    print(f"wrote {args.output}: d={op.d} modes, sector N={ham.n_qubits} (d = 2N)")
    if args.json:
        _write(
            args.output + ".json",
            fileio.json_mirror({"d": op.d, "terms": len(op.terms)}, config),
        )
    return EXIT_OK


def cmd_rdm(args) -> int:
    text = Path(args.state).read_text()
    first = next(
        line for _, line in fileio._data_lines(text)
    )
    if first.startswith("density"):
        density = fileio.read_density(text)
    else:
        density = fileio.read_state(text).density()
    rdm = two_rdm(density)
    basis = observable_basis(rdm.d)
    alpha = expectation_vector(rdm, basis)
    config = {
        "command": "rdm",
        "d": rdm.d,
        "N": rdm.n_particles,
        "input": Path(args.state).name,
    }
    _write(args.output, fileio.write_two_rdm(rdm, config))
    labels = [_observable_label(s, basis.pair_basis.pairs) for s in basis.specs]
    rows = [[lab, float(v)] for lab, v in zip(labels, alpha.values)]
    alpha_path = args.alpha_output or args.output + ".alpha.csv"
    _write(alpha_path, fileio.write_csv(["observable", "value"], rows, config))
    print(f"wrote {args.output} and {alpha_path}: ell={basis.ell} coordinates")
    if args.json:
        _write(
            args.output + ".json",
            fileio.json_mirror({"alpha": list(map(float, alpha.values))}, config),
        )
    return EXIT_OK


def cmd_check(args) -> int:
    rdm = fileio.read_two_rdm(Path(args.rdm).read_text())
    instance = RepresentabilityInstance(
        rho=rdm, n_particles=args.n if args.n is not None else rdm.n_particles,
        d=rdm.d, beta=args.beta,
    )
    verdict = is_representable(instance, tol=args.tol)
    line = verdict.record()
    print(line)
    if args.output:
        config = {
            "command": "check",
            "beta": args.beta,
            "d": rdm.d,
            "N": instance.n_particles,
            "input": Path(args.rdm).name,
            "tol": args.tol,
        }
        _write(args.output, "\n".join(fileio.config_comments(config) + [line]) + "\n")
        if args.json:
            _write(
                args.output + ".json",
                fileio.json_mirror(
                    {
                        "verdict": verdict.verdict,
                        "distance": verdict.distance,
                        "iterations": verdict.iterations,
                    },
                    config,
                ),
            )
    return EXIT_NO if verdict.verdict == "NO" else EXIT_OK


def cmd_energy(args) -> int:
    from .ellipsoid import ground_energy_via_oracle

    ham = parse_spin_hamiltonian(Path(args.hamiltonian).read_text())
    config = {
        "command": "energy",
        "eps": args.eps if args.eps is not None else "auto",
        "input": Path(args.hamiltonian).name,
        "method": args.method,
        "qubits": ham.n_qubits,
    }
    if args.method == "exact":
        weight = default_penalty_weight(ham)
        op, enc = spin_to_fermion(ham, weight)
        basis = build_basis(enc.d, ham.n_qubits)
        energy, _ = ground_energy_exact(op, basis)
        rows = [[0, 0.0, 0.0, "EXACT", float(energy)]]
    else:
        energy, details = ground_energy_via_oracle(ham, eps=args.eps, return_details=True)
        rows = [
            [r.iteration, float(r.center_norm), float(r.volume_log), r.cut_type, float(r.best_value)]
            for r in details.trace
        ]
    print(f"energy={fileio.fmt(energy)}")
    if args.output:
        _write(
            args.output,
            fileio.write_csv(
                ["iter", "center_norm", "volume_log", "cut_type", "best_value"],
                rows,
                config,
            ),
        )
        if args.json:
            _write(
                args.output + ".json",
                fileio.json_mirror({"energy": float(energy)}, config),
            )
    return EXIT_OK


def cmd_verify(args) -> int:
    rdm = fileio.read_two_rdm(Path(args.rdm).read_text())
    threshold = (
        args.threshold
        if args.threshold is not None
        else default_threshold(args.beta, rdm.d)
    )
    shots = args.shots if args.shots is not None else calibrate_shots(threshold)
    config = VerifierConfig(
        rho=rdm,
        beta=args.beta,
        n_particles=rdm.n_particles,
        d=rdm.d,
        shots=shots,
        threshold=threshold,
    )
    if args.honest_from:
        sigma = fileio.read_state(Path(args.honest_from).read_text()).density()
        witness = honest_witness(sigma, args.blocks)
        outcome = verify(config, witness, runs=args.runs, seed=args.seed)
    elif args.witness:
        joint, d, n_blocks = fileio.read_witness(Path(args.witness).read_text())
        outcome = entangled_adversary_test(
            config, joint, n_blocks, runs=args.runs, seed=args.seed
        )
    else:
        print("error: provide --honest-from or --witness", file=sys.stderr)
        return EXIT_INPUT
    lines = [rec.line() for rec in outcome.runs]
    lines.append(f"acceptance_frequency={fileio.fmt(outcome.frequency)}")
    print("\n".join(lines))
    if args.output:
        file_config = {
            "command": "verify",
            "beta": args.beta,
            "blocks": args.blocks,
            "input": Path(args.rdm).name,
            "runs": args.runs,
            "seed": args.seed,
            "shots": shots,
            "threshold": threshold,
        }
        _write(
            args.output,
            "\n".join(fileio.config_comments(file_config) + lines) + "\n",
        )
        if args.json:
            _write(
                args.output + ".json",
                fileio.json_mirror(
                    {
                        "frequency": outcome.frequency,
                        "runs": [
                            {
                                "seed": r.seed,
                                "accepted": r.accepted,
                                "max_dev": r.max_deviation,
                            }
                            for r in outcome.runs
                        ],
                    },
                    file_config,
                ),
            )
    return EXIT_OK


def cmd_duality(args) -> int:
    from .duality import build_map_A, build_map_B, inner_ball_certificate

    a_map = build_map_A(args.d)
    b_map = build_map_B(args.d)
    radius = inner_ball_certificate(args.d)
    comp = b_map.compose(a_map)
    ident_err = float(
        max(
            np.max(np.abs(comp.matrix - np.eye(comp.matrix.shape[0]))),
            np.max(np.abs(comp.offset)),
        )
    )
    config = {"command": "duality", "d": args.d}
    prefix = args.output
    _write(prefix + ".A.txt", "".join(fileio.config_comments(config)) + "\n" + a_map.to_text("A"))
    _write(prefix + ".B.txt", "".join(fileio.config_comments(config)) + "\n" + b_map.to_text("B"))
    report = fileio.config_comments(config) + [
        f"inner_ball_radius={fileio.fmt(radius)}",
        f"min_singular_value_A={fileio.fmt(a_map.min_singular_value())}",
        f"inverse_identity_error={fileio.fmt(ident_err)}",
        f"trace_BtB={fileio.fmt(float(np.trace(b_map.matrix.T @ b_map.matrix)))}",
    ]
    _write(prefix + ".report.txt", "\n".join(report) + "\n")
    print(f"wrote {prefix}.A.txt, {prefix}.B.txt, {prefix}.report.txt")
    print(f"inner_ball_radius={fileio.fmt(radius)}")
    if args.json:
        _write(
            prefix + ".json",
            fileio.json_mirror(
                {"inner_ball_radius": radius, "identity_error": ident_err}, config
            ),
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nrep",
        description="Fermionic pair-density representability toolkit.",
    )
    parser.add_argument("--version", action="version", version=f"nrep {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("map", help="embed a spin Hamiltonian into fermionic modes")
    p.add_argument("hamiltonian")
    p.add_argument("--encoding", choices=["one-per-site", "parity"], default="one-per-site")
    p.add_argument("--penalty", type=float, default=None)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("rdm", help="pair density and coordinates of a state file")
    p.add_argument("state")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--alpha-output", default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_rdm)

    p = sub.add_parser("check", help="representability verdict for a pair density")
    p.add_argument("rdm")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("energy", help="ground energy, exact or oracle-driven")
    p.add_argument("hamiltonian")
    p.add_argument("--method", choices=["exact", "ellipsoid"], default="ellipsoid")
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser("verify", help="Monte-Carlo tomography verification")
    p.add_argument("rdm")
    p.add_argument("--honest-from", default=None)
    p.add_argument("--witness", default=None)
    p.add_argument("--blocks", type=int, default=5)
    p.add_argument("--shots", type=int, default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--beta", type=float, default=0.4)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("duality", help="particle-hole coordinate maps and certificate")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("-o", "--output", required=True, help="output path prefix")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_duality)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, WeightViolationError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SectorSizeError, SimulationCapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except NrepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
