"""Plain-text file formats for states, densities, and pair matrices.

Every writer embeds the tool version and the resolved run configuration as
``#`` comment lines, which all readers skip; identical configuration and
seeds therefore reproduce byte-identical files.
"""

from __future__ import annotations

import json
import numpy as np

from . import __version__
from .errors import ParseError
from .fock import NSectorDensity, NSectorState, build_basis, bits_to_string, string_to_bits
from .rdm import TwoRDM, pair_basis


def fmt(x: float) -> str:
    value = float(x)
    if value == 0.0:
        value = 0.0  # normalize negative zero for byte-stable output
    return f"{value:.17g}"


def config_comments(config: dict | None) -> list[str]:
    lines = [f"# nrep-version={__version__}"]
    if config:
        for key in sorted(config):
            lines.append(f"# config {key}={config[key]}")
    return lines


def _data_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def _parse_header(line: str, lineno: int, tag: str, fields: list[str]) -> dict:
    parts = line.split()
    if not parts or parts[0] != tag:
        raise ParseError(f"expected header starting with {tag!r}", lineno)
    out = {}
    for part in parts[1:]:
        if "=" not in part:
            raise ParseError(f"malformed header field {part!r}", lineno)
        key, value = part.split("=", 1)
        out[key] = value
    for f in fields:
        if f not in out:
            raise ParseError(f"header missing {f}=", lineno)
        out[f] = int(out[f])
    return out


def write_state(state: NSectorState, config: dict | None = None) -> str:
    basis = state.basis
    lines = [f"state d={basis.d} N={basis.n_particles}"]
    lines += config_comments(config)
    for k, bits in enumerate(basis.states):
        amp = state.amplitudes[k]
        if amp != 0:
            lines.append(
                f"{bits_to_string(bits, basis.d)} {fmt(amp.real)} {fmt(amp.imag)}"
            )
    return "\n".join(lines) + "\n"


def read_state(text: str) -> NSectorState:
    header = None
    amps = None
    basis = None
    for lineno, line in _data_lines(text):
        if header is None:
            header = _parse_header(line, lineno, "state", ["d", "N"])
            basis = build_basis(header["d"], header["N"])
            amps = np.zeros(basis.dim, dtype=complex)
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(f"expected '<bits> <re> <im>', got {line!r}", lineno)
        try:
            bits = string_to_bits(parts[0])
            amps[basis.index[bits]] = complex(float(parts[1]), float(parts[2]))
        except (ValueError, KeyError):
            raise ParseError(f"bad amplitude line {line!r}", lineno) from None
    if header is None:
        raise ParseError("empty state file")
    nrm = float(np.linalg.norm(amps))
    if nrm == 0:
        raise ParseError("state file holds the zero vector")
    return NSectorState(basis, amps / nrm)


def write_density(density: NSectorDensity, config: dict | None = None) -> str:
    basis = density.basis
    lines = [f"density d={basis.d} N={basis.n_particles}"]
    lines += config_comments(config)
    mat = density.matrix
    for r in range(basis.dim):
        for c in range(r, basis.dim):
            v = mat[r, c]
            if v != 0:
                lines.append(f"{r} {c} {fmt(v.real)} {fmt(v.imag)}")
    return "\n".join(lines) + "\n"


def read_density(text: str) -> NSectorDensity:
    header = None
    mat = None
    basis = None
    for lineno, line in _data_lines(text):
        if header is None:
            header = _parse_header(line, lineno, "density", ["d", "N"])
            basis = build_basis(header["d"], header["N"])
            mat = np.zeros((basis.dim, basis.dim), dtype=complex)
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ParseError(f"expected 'row col re im', got {line!r}", lineno)
        r, c = int(parts[0]), int(parts[1])
        v = complex(float(parts[2]), float(parts[3]))
        mat[r, c] = v
        mat[c, r] = v.conjugate()
    if header is None:
        raise ParseError("empty density file")
    return NSectorDensity(basis, mat)


def write_two_rdm(rdm: TwoRDM, config: dict | None = None) -> str:
    """Upper-triangle entries (row <= col); the rest follows by Hermiticity."""
    lines = [f"two-rdm d={rdm.d} N={rdm.n_particles}"]
    lines += config_comments(config)
    m = rdm.pair_basis.m
    for r in range(m):
        for c in range(r, m):
            v = rdm.matrix[r, c]
            lines.append(f"{r} {c} {fmt(v.real)} {fmt(v.imag)}")
    return "\n".join(lines) + "\n"


def read_two_rdm(text: str, require_psd: bool = True) -> TwoRDM:
    header = None
    mat = None
    pb = None
    for lineno, line in _data_lines(text):
        if header is None:
            header = _parse_header(line, lineno, "two-rdm", ["d", "N"])
            pb = pair_basis(header["d"])
            mat = np.zeros((pb.m, pb.m), dtype=complex)
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ParseError(f"expected 'row col re im', got {line!r}", lineno)
        try:
            r, c = int(parts[0]), int(parts[1])
            v = complex(float(parts[2]), float(parts[3]))
        except ValueError:
            raise ParseError(f"malformed entry {line!r}", lineno) from None
        if not (0 <= r < pb.m and 0 <= c < pb.m):
            raise ParseError(f"pair index out of range in {line!r}", lineno)
        mat[r, c] = v
        mat[c, r] = v.conjugate()
    if header is None:
        raise ParseError("empty two-rdm file")
    return TwoRDM(pb, header["N"], mat, require_psd=require_psd)


def write_witness(joint: np.ndarray, d: int, n_blocks: int, config: dict | None = None) -> str:
    lines = [f"witness d={d} blocks={n_blocks}"]
    lines += config_comments(config)
    for idx, amp in enumerate(joint):
        if amp != 0:
            lines.append(f"{idx} {fmt(amp.real)} {fmt(amp.imag)}")
    return "\n".join(lines) + "\n"


def read_witness(text: str) -> tuple[np.ndarray, int, int]:
    header = None
    joint = None
    for lineno, line in _data_lines(text):
        if header is None:
            header = _parse_header(line, lineno, "witness", ["d", "blocks"])
            joint = np.zeros((1 << header["d"]) ** header["blocks"], dtype=complex)
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(f"expected '<index> <re> <im>', got {line!r}", lineno)
        joint[int(parts[0])] = complex(float(parts[1]), float(parts[2]))
    if header is None:
        raise ParseError("empty witness file")
    nrm = float(np.linalg.norm(joint))
    if nrm == 0:
        raise ParseError("witness file holds the zero vector")
    return joint / nrm, header["d"], header["blocks"]


def write_csv(header_cols: list[str], rows: list[list], config: dict | None = None) -> str:
    lines = config_comments(config)
    lines.append(",".join(header_cols))
    for row in rows:
        lines.append(",".join(fmt(v) if isinstance(v, float) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def json_mirror(payload: dict, config: dict | None = None) -> str:
    body = {"nrep_version": __version__, "config": config or {}}
    body.update(payload)
    return json.dumps(body, indent=2, sort_keys=True, default=float) + "\n"
