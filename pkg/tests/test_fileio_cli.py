import subprocess
import sys

import numpy as np
import pytest

from nrep import fileio
from nrep.errors import ParseError
from nrep.fock import NSectorState, build_basis
from nrep.rdm import two_rdm

from conftest import random_mixed_density, slater_density


def run_cli(args, cwd):
    return subprocess.run(
        [sys.executable, "-m", "nrep.cli", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


def test_state_round_trip(rng):
    basis = build_basis(5, 2)
    vec = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    vec /= np.linalg.norm(vec)
    state = NSectorState(basis, vec)
    text = fileio.write_state(state, config={"seed": 1})
    again = fileio.read_state(text)
    assert np.allclose(again.amplitudes, vec)


def test_two_rdm_round_trip(rng):
    rdm = two_rdm(random_mixed_density(build_basis(5, 3), rng))
    text = fileio.write_two_rdm(rdm, config={"d": 5})
    again = fileio.read_two_rdm(text)
    assert np.max(np.abs(again.matrix - rdm.matrix)) < 1e-15
    assert again.n_particles == 3
    # writing the parsed copy reproduces the bytes
    assert fileio.write_two_rdm(again, config={"d": 5}) == text


def test_two_rdm_reader_rejects_garbage():
    with pytest.raises(ParseError):
        fileio.read_two_rdm("two-rdm d=4 N=2\n0 0 not-a-number 0\n")
    with pytest.raises(ParseError):
        fileio.read_two_rdm("wrong-header d=4 N=2\n")


def test_density_round_trip(rng):
    density = random_mixed_density(build_basis(4, 2), rng)
    text = fileio.write_density(density)
    again = fileio.read_density(text)
    assert np.allclose(again.matrix, density.matrix)


def test_witness_round_trip(rng):
    joint = rng.normal(size=64) + 1j * rng.normal(size=64)
    joint /= np.linalg.norm(joint)
    text = fileio.write_witness(joint, d=3, n_blocks=2)
    again, d, blocks = fileio.read_witness(text)
    assert (d, blocks) == (3, 2)
    assert np.allclose(again, joint)


def test_outputs_embed_version_and_config():
    rdm = two_rdm(slater_density(4, 2, (1, 2)))
    text = fileio.write_two_rdm(rdm, config={"command": "rdm", "seed": 7})
    assert "# nrep-version=" in text
    assert "# config command=rdm" in text
    assert "# config seed=7" in text


def test_cli_map_energy_round_trip(tmp_path):
    ham = tmp_path / "ham.txt"
    ham.write_text("qubits=2\n-1.0 ZZ\n-1.0 XI\n")
    out = tmp_path / "ferm.txt"
    result = run_cli(["map", str(ham), "-o", str(out)], tmp_path)
    assert result.returncode == 0
    assert out.read_text().startswith("fermion-op d=4")

    exact = run_cli(
        ["energy", str(ham), "--method", "exact"], tmp_path
    )
    assert exact.returncode == 0
    value = float(exact.stdout.strip().split("=")[1])
    assert value == pytest.approx(-np.sqrt(2), abs=1e-9)


def test_cli_rdm_and_check(tmp_path):
    state = tmp_path / "state.txt"
    state.write_text("state d=4 N=2\n1100 1 0\n")
    rdm_path = tmp_path / "out.rdm"
    result = run_cli(["rdm", str(state), "-o", str(rdm_path)], tmp_path)
    assert result.returncode == 0
    assert (tmp_path / "out.rdm.alpha.csv").exists()

    check = run_cli(["check", str(rdm_path), "--beta", "0.2"], tmp_path)
    assert check.returncode == 0
    assert check.stdout.startswith("verdict=YES")

    # same pair density claimed for three particles is far from reachable
    check_no = run_cli(
        ["check", str(rdm_path), "--beta", "0.2", "--n", "3"], tmp_path
    )
    assert check_no.returncode == 1
    assert check_no.stdout.startswith("verdict=NO")


def test_cli_exit_codes(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("1.0 XXX\n")
    result = run_cli(["map", str(bad), "-o", str(tmp_path / "x.txt")], tmp_path)
    assert result.returncode == 2

    big = tmp_path / "big.txt"
    word = "Z" + "I" * 39
    big.write_text(f"qubits=40\n-1.0 {word}\n")
    result = run_cli(["energy", str(big), "--method", "exact"], tmp_path)
    assert result.returncode == 3


def test_cli_sector_cap_env(tmp_path):
    import os

    ham = tmp_path / "ham.txt"
    ham.write_text("qubits=2\n-1.0 ZZ\n")
    env = dict(os.environ, NREP_SECTOR_CAP="3")
    result = subprocess.run(
        [sys.executable, "-m", "nrep.cli", "energy", str(ham), "--method", "exact"],
        capture_output=True,
        text=True,
        env=env,
    )
    assert result.returncode == 3


def test_cli_verify_report(tmp_path):
    state = tmp_path / "state.txt"
    state.write_text("state d=4 N=2\n1100 1 0\n")
    rdm_path = tmp_path / "out.rdm"
    run_cli(["rdm", str(state), "-o", str(rdm_path)], tmp_path)
    report = tmp_path / "verify.txt"
    result = run_cli(
        [
            "verify", str(rdm_path),
            "--honest-from", str(state),
            "--runs", "2", "--seed", "5",
            "--shots", "2000", "--threshold", "0.08",
            "-o", str(report),
        ],
        tmp_path,
    )
    assert result.returncode == 0
    lines = [l for l in report.read_text().splitlines() if not l.startswith("#")]
    assert lines[0].startswith("seed=5 accepted=")
    assert lines[-1].startswith("acceptance_frequency=")


def test_cli_rdm_accepts_density_file(tmp_path):
    from nrep import fileio as fio
    from nrep.fock import NSectorDensity
    import numpy as np

    basis = build_basis(4, 2)
    density = NSectorDensity(basis, np.eye(6) / 6)
    path = tmp_path / "density.txt"
    path.write_text(fio.write_density(density))
    out = tmp_path / "out.rdm"
    result = run_cli(["rdm", str(path), "-o", str(out)], tmp_path)
    assert result.returncode == 0
    rdm = fio.read_two_rdm(out.read_text())
    assert np.allclose(rdm.matrix, np.eye(6) / 6)


def test_cli_json_mirrors(tmp_path):
    import json

    ham = tmp_path / "ham.txt"
    ham.write_text("qubits=2\n-1.0 ZZ\n")
    out = tmp_path / "ferm.txt"
    result = run_cli(["map", str(ham), "-o", str(out), "--json"], tmp_path)
    assert result.returncode == 0
    payload = json.loads((tmp_path / "ferm.txt.json").read_text())
    assert payload["config"]["command"] == "map"
    assert payload["d"] == 4

    trace = tmp_path / "trace.csv"
    result = run_cli(
        ["energy", str(ham), "--method", "exact", "-o", str(trace), "--json"],
        tmp_path,
    )
    assert result.returncode == 0
    payload = json.loads((tmp_path / "trace.csv.json").read_text())
    assert payload["energy"] == pytest.approx(-1.0, abs=1e-9)


def test_cli_verify_witness_file(tmp_path):
    state = tmp_path / "state.txt"
    state.write_text("state d=4 N=2\n1100 1 0\n")
    rdm_path = tmp_path / "out.rdm"
    run_cli(["rdm", str(state), "-o", str(rdm_path)], tmp_path)
    # two correlated blocks, both with the honest marginal
    from nrep.fock import fock_index, string_to_bits as s2b
    import numpy as np
    from nrep import fileio as fio

    idx = fock_index(s2b("1100"), 4)
    joint = np.zeros(256, dtype=complex)
    joint[idx * 16 + idx] = 1.0
    witness = tmp_path / "witness.txt"
    witness.write_text(fio.write_witness(joint, d=4, n_blocks=2))
    result = run_cli(
        [
            "verify", str(rdm_path), "--witness", str(witness),
            "--runs", "2", "--seed", "3",
            "--shots", "2000", "--threshold", "0.08",
        ],
        tmp_path,
    )
    assert result.returncode == 0
    assert "acceptance_frequency=1" in result.stdout


def test_cli_duality_outputs(tmp_path):
    result = run_cli(
        ["duality", "--d", "5", "-o", str(tmp_path / "dual")], tmp_path
    )
    assert result.returncode == 0
    report = (tmp_path / "dual.report.txt").read_text()
    assert "inner_ball_radius=" in report
    assert float(
        next(l for l in report.splitlines() if l.startswith("inner_ball_radius"))
        .split("=")[1]
    ) > 0


def test_cli_deterministic_outputs(tmp_path):
    ham = tmp_path / "ham.txt"
    ham.write_text("qubits=2\n-1.0 ZZ\n0.5 XI\n")
    paths = []
    for tag in ("a", "b"):
        out = tmp_path / f"trace_{tag}.csv"
        result = run_cli(
            ["energy", str(ham), "--method", "ellipsoid", "-o", str(out)], tmp_path
        )
        assert result.returncode == 0
        paths.append(out.read_bytes())
    assert paths[0] == paths[1]

    reports = []
    for tag in ("a", "b"):
        sub = tmp_path / tag
        sub.mkdir()
        state = sub / "state.txt"
        state.write_text("state d=4 N=2\n1100 0.8 0\n0011 0.6 0\n")
        rdm_path = sub / "pair.rdm"
        run_cli(["rdm", str(state), "-o", str(rdm_path)], sub)
        rep = sub / "verify.txt"
        run_cli(
            [
                "verify", str(rdm_path), "--honest-from", str(state),
                "--runs", "2", "--seed", "9", "--shots", "1000",
                "--threshold", "0.1", "-o", str(rep),
            ],
            sub,
        )
        reports.append(rep.read_bytes())
    assert reports[0] == reports[1]
