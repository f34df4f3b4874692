"""File formats: tensor JSON, FCIDUMP, Pauli-sum text, CSV and run manifests."""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import os
import re
import tempfile
from pathlib import Path

import numpy as np

from .operators import CoefficientTensors, PauliSum, EQ5, NORMAL, normal_order, to_eq5

SIG_DIGITS = 12


class FcidumpError(ValueError):
    pass


# ---------------------------------------------------------------------------
# atomic output
# ---------------------------------------------------------------------------


def atomic_write(path, data: str | bytes) -> None:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def fmt(value) -> str:
    """Fixed-precision text for floats; everything else via ``str``."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.{SIG_DIGITS}g}"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def _round_json(obj):
    if isinstance(obj, dict):
        return {k: _round_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_json(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        return float(f"{float(obj):.{SIG_DIGITS}g}")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _round_json(obj.tolist())
    if isinstance(obj, complex):
        return [_round_json(obj.real), _round_json(obj.imag)]
    return obj


def csv_text(rows: list[dict], columns: list[str] | None = None) -> str:
    columns = columns or (list(rows[0]) if rows else [])
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row.get(c, "")) for c in columns])
    return buf.getvalue()


def json_text(obj, rounded: bool = True) -> str:
    return json.dumps(_round_json(obj) if rounded else obj, indent=2, sort_keys=False) + "\n"


# ---------------------------------------------------------------------------
# tensors
# ---------------------------------------------------------------------------


def tensors_to_dict(tensors: CoefficientTensors) -> dict:
    """Full-precision JSON form; complex numbers are ``[re, im]`` pairs."""
    one = tensors.one_body
    return {
        "n_spin_orbitals": tensors.n_spin_orbitals,
        "convention": "EQ5" if tensors.convention == EQ5 else "NORMAL",
        "constant": [tensors.constant.real, tensors.constant.imag],
        "one_body": [[[float(v.real), float(v.imag)] for v in row] for row in one],
        "two_body": [[int(p), int(q), int(r), int(s), float(v.real), float(v.imag)]
                     for (p, q, r, s), v in zip(tensors.two_body_indices,
                                                tensors.two_body_values)],
    }


def tensors_from_dict(data: dict) -> CoefficientTensors:
    n = int(data["n_spin_orbitals"])
    one = np.array(data["one_body"], dtype=float)
    if one.shape != (n, n, 2):
        raise ValueError(f"one_body must be an {n}x{n} array of [re, im] pairs")
    two = np.array(data.get("two_body", []), dtype=float).reshape(-1, 6)
    const = data.get("constant", 0.0)
    const = complex(*const) if isinstance(const, list) else complex(const)
    conv = {"EQ5": EQ5, "NORMAL": NORMAL}[data.get("convention", "EQ5")]
    return CoefficientTensors(n, one[..., 0] + 1j * one[..., 1], two[:, :4].astype(np.int64),
                              two[:, 4] + 1j * two[:, 5], const, conv)


def write_tensors(path, tensors: CoefficientTensors) -> None:
    atomic_write(path, json.dumps(tensors_to_dict(tensors)) + "\n")


def read_tensors(path) -> CoefficientTensors:
    return tensors_from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# Pauli sums
# ---------------------------------------------------------------------------


def write_pauli_sum(path, psum: PauliSum) -> None:
    atomic_write(path, f"# width {psum.width}\n" + psum.to_text())


def read_pauli_sum(path) -> PauliSum:
    text = Path(path).read_text()
    m = re.match(r"#\s*width\s+(\d+)", text)
    if not m:
        raise ValueError(f"{path}: missing '# width N' header line")
    body = "\n".join(l for l in text.splitlines()
                     if not l.strip().endswith(") I") and not l.startswith("#"))
    psum = PauliSum.from_text(body, int(m.group(1)))
    offset = 0j
    for line in text.splitlines():
        if line.strip().endswith(") I"):
            re_s, im_s = line.strip()[1:-3].split(",")
            offset += complex(float(re_s), float(im_s))
    return PauliSum(psum.width, psum.x, psum.z, psum.coeffs, offset)


# ---------------------------------------------------------------------------
# FCIDUMP
# ---------------------------------------------------------------------------


def _parse_header(text: str):
    m = re.search(r"&FCI(.*?)(&END|/)", text, flags=re.S | re.I)
    if not m:
        raise FcidumpError("line 1: missing &FCI ... &END namelist")
    header = m.group(1)
    values = {}
    for key, val in re.findall(r"([A-Za-z0-9_]+)\s*=\s*([^=]*?)(?=,?\s*[A-Za-z0-9_]+\s*=|$)",
                               header, flags=re.S):
        values[key.upper()] = val.strip().rstrip(",")
    body_start = text[:m.end()].count("\n") + 1
    return values, text[m.end():], body_start


def read_fcidump(text: str) -> CoefficientTensors:
    """Tensors from FCIDUMP text.

    Spatial-orbital files (the default) hold chemists' integrals ``(ij|kl)``
    over real orbitals, listed once per 8-fold symmetry class; spin orbitals
    are interleaved (even alpha, odd beta). With ``ISPINORB=1`` the indices
    are spin orbitals already and every entry is listed explicitly. Lines
    with all indices zero give the core energy; lines with ``k = l = 0`` are
    one-electron integrals; lines with only ``i`` nonzero are orbital
    energies and are ignored.
    """
    values, body, first = _parse_header(text)
    if "NORB" not in values:
        raise FcidumpError("header has no NORB")
    try:
        norb = int(values["NORB"])
    except ValueError as exc:
        raise FcidumpError(f"NORB is not an integer: {values['NORB']!r}") from exc
    spinorb = values.get("ISPINORB", "0").strip() not in ("0", "", ".FALSE.", "F")
    n = norb if spinorb else 2 * norb
    one_sp = np.zeros((norb, norb))
    two_sp: dict = {}
    core = 0.0
    for offset, line in enumerate(body.splitlines()):
        lineno = first + offset
        if not line.strip():
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 5:
            raise FcidumpError(f"line {lineno}: expected 'value i j k l', got {line.strip()!r}")
        try:
            val = float(parts[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(p) for p in parts[1:])
        except ValueError as exc:
            raise FcidumpError(f"line {lineno}: cannot parse {line.strip()!r}") from exc
        if max(i, j, k, l) > norb or min(i, j, k, l) < 0:
            raise FcidumpError(f"line {lineno}: index exceeds NORB={norb}")
        if i == j == k == l == 0:
            core += val
        elif k == l == 0 and j > 0:
            one_sp[i - 1, j - 1] = val
            if not spinorb:
                one_sp[j - 1, i - 1] = val
        elif j == k == l == 0:
            continue
        elif min(i, j, k, l) == 0:
            raise FcidumpError(f"line {lineno}: malformed index pattern {i} {j} {k} {l}")
        else:
            i, j, k, l = i - 1, j - 1, k - 1, l - 1
            if spinorb:
                two_sp[(i, j, k, l)] = val
            else:
                for key in {(i, j, k, l), (j, i, k, l), (i, j, l, k), (j, i, l, k),
                            (k, l, i, j), (l, k, i, j), (k, l, j, i), (l, k, j, i)}:
                    two_sp[key] = val
    if spinorb:
        one = one_sp.astype(complex)
        quads = list(two_sp.items())
    else:
        one = np.kron(one_sp, np.eye(2)).astype(complex)
        quads = []
        for (i, j, k, l), v in two_sp.items():
            for a in (0, 1):
                for b in (0, 1):
                    quads.append(((2 * i + a, 2 * j + a, 2 * k + b, 2 * l + b), v))
    idx = np.array([q for q, _ in quads], dtype=np.int64).reshape(-1, 4)
    val = np.array([v for _, v in quads], dtype=complex)
    # (ij|kl) multiplies c+_i c+_k c_l c_j, which is the NORMAL convention
    return to_eq5(CoefficientTensors(n, one, idx, val, core, NORMAL))


def read_fcidump_file(path) -> CoefficientTensors:
    return read_fcidump(Path(path).read_text())


def write_fcidump(tensors: CoefficientTensors, nelec: int | None = None) -> str:
    """Spin-orbital FCIDUMP text (``ISPINORB=1``) for real tensors.

    Every nonzero entry is written, without symmetry folding, so the reader
    reproduces the tensors exactly.
    """
    if not tensors.is_real:
        raise ValueError("FCIDUMP export requires real tensors")
    no = normal_order(tensors)
    n = no.n_spin_orbitals
    nelec = n // 2 if nelec is None else nelec
    lines = [f" &FCI NORB={n},NELEC={nelec},MS2=0,ISPINORB=1,", " &END"]
    for (p, q, r, s), v in zip(no.two_body_indices, no.two_body_values):
        lines.append(f"{float(v.real)!r} {p + 1} {q + 1} {r + 1} {s + 1}")
    for p, q in zip(*np.nonzero(no.one_body)):
        lines.append(f"{float(no.one_body[p, q].real)!r} {p + 1} {q + 1} 0 0")
    lines.append(f"{float(no.constant.real)!r} 0 0 0 0")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# manifests
# ---------------------------------------------------------------------------


def build_manifest(version: str, command: str, argv: list[str], config: dict,
                   inputs: dict[str, str], outputs: dict[str, str]) -> dict:
    """Run record without timestamps, so re-running gives an identical file."""
    return {"tool": "orfh", "version": version, "command": command, "argv": list(argv),
            "config": config,
            "inputs": {k: sha256_file(v) for k, v in sorted(inputs.items())},
            "outputs": {k: sha256_file(v) for k, v in sorted(outputs.items())}}
