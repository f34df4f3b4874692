import json
import subprocess
import sys

import numpy as np
import pytest

from orfh import io as fio
from orfh.cli import main
from orfh.models import HubbardParams, build_hubbard, orfh_tensors
from orfh.operators import jordan_wigner, pauli_matrix

from fock import fock_matrix

# two spatial orbitals, integrals listed once per symmetry class
SPATIAL = """ &FCI NORB=2,NELEC=2,MS2=0,
  ORBSYM=1,1,
  ISYM=1,
 &END
  0.6746 1 1 1 1
  0.1813 1 2 1 2
  0.6636 1 1 2 2
  0.6975 2 2 2 2
  0.05   1 1 1 2
 -1.2528 1 1 0 0
 -0.4759 2 2 0 0
  0.1    1 2 0 0
  0.7137 0 0 0 0
"""


def expected_spatial_matrix():
    h = np.array([[-1.2528, 0.1], [0.1, -0.4759]])
    eri = np.zeros((2,) * 4)
    for (i, j, k, l), v in {(0, 0, 0, 0): 0.6746, (0, 1, 0, 1): 0.1813,
                            (0, 0, 1, 1): 0.6636, (1, 1, 1, 1): 0.6975,
                            (0, 0, 0, 1): 0.05}.items():
        for a, b, c, d in {(i, j, k, l), (j, i, k, l), (i, j, l, k), (j, i, l, k),
                           (k, l, i, j), (l, k, i, j), (k, l, j, i), (l, k, j, i)}:
            eri[a, b, c, d] = v
    one = np.zeros((4, 4))
    two = {}
    for i in range(2):
        for j in range(2):
            for s in (0, 1):
                one[2 * i + s, 2 * j + s] = h[i, j]
    for i, j, k, l in np.ndindex(2, 2, 2, 2):
        for s in (0, 1):
            for t in (0, 1):
                key = (2 * i + s, 2 * j + s, 2 * k + t, 2 * l + t)
                two[key] = two.get(key, 0) + eri[i, j, k, l]
    return fock_matrix(one, two, 0.7137, normal=True)


def test_spatial_fcidump_matches_chemist_hamiltonian():
    t = fio.read_fcidump(SPATIAL)
    assert t.n_spin_orbitals == 4
    m = pauli_matrix(jordan_wigner(t))
    assert np.abs(m - expected_spatial_matrix()).max() < 1e-12


def test_fcidump_roundtrip_spin_orbital():
    t, _ = orfh_tensors(HubbardParams(3), 2, real_flag=True)
    back = fio.read_fcidump(fio.write_fcidump(t))
    a, b = pauli_matrix(jordan_wigner(t)), pauli_matrix(jordan_wigner(back))
    assert np.abs(a - b).max() < 1e-12


def test_fcidump_rejects_complex_and_bad_input():
    t, _ = orfh_tensors(HubbardParams(2), 2)
    with pytest.raises(ValueError):
        fio.write_fcidump(t)
    with pytest.raises(fio.FcidumpError, match="NORB"):
        fio.read_fcidump(" &FCI NELEC=2,\n &END\n")
    with pytest.raises(fio.FcidumpError, match="line 3"):
        fio.read_fcidump(" &FCI NORB=2,\n &END\n 1.0 1 x 0 0\n")
    with pytest.raises(fio.FcidumpError, match="exceeds"):
        fio.read_fcidump(" &FCI NORB=2,\n &END\n 1.0 3 1 0 0\n")


def test_tensor_json_roundtrip(tmp_path):
    t, _ = orfh_tensors(HubbardParams(3), 1)
    fio.write_tensors(tmp_path / "t.json", t)
    back = fio.read_tensors(tmp_path / "t.json")
    assert np.array_equal(back.one_body, t.one_body)
    assert np.array_equal(back.two_body_values, t.two_body_values)
    assert back.constant == t.constant


def test_pauli_file_roundtrip(tmp_path):
    ps = jordan_wigner(build_hubbard(HubbardParams(3)))
    fio.write_pauli_sum(tmp_path / "h.pauli", ps)
    back = fio.read_pauli_sum(tmp_path / "h.pauli")
    assert np.abs(pauli_matrix(back) - pauli_matrix(ps)).max() < 1e-14


def test_formatting_helpers():
    assert fio.fmt(1 / 3) == "0.333333333333"
    assert fio.fmt(True) == "true" and fio.fmt(np.int64(4)) == "4"
    text = fio.csv_text([{"a": 1.0, "b": "x"}], ["a", "b"])
    assert text == "a,b\n1,x\n"
    assert json.loads(fio.json_text({"v": np.float64(2 / 3)}))["v"] == 0.666666666667


def run_cli(*argv):
    return main(list(argv))


def test_generate_is_deterministic(tmp_path):
    outs = []
    for name in ("a", "b"):
        assert run_cli("generate", "--sites", "3", "--seed", "4", "--pauli",
                       "--out", str(tmp_path / name)) == 0
        outs.append({f: (tmp_path / name / f).read_bytes()
                     for f in ("tensors.json", "descriptor.json", "hamiltonian.pauli")})
    assert outs[0] == outs[1]
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert set(manifest["outputs"]) == {"tensors", "descriptor", "pauli"}
    assert "time" not in json.dumps(manifest).lower()


def test_analyze_report(tmp_path):
    out = tmp_path / "r.csv"
    assert run_cli("analyze", "--sites", "4", "--no-rotation", "--out", str(out)) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "n_spin_orbitals,source,term_count,one_norm,two_norm"
    assert lines[1].split(",")[:4] == ["8", "FH", lines[1].split(",")[2], "24"]
    assert float(lines[1].split(",")[4]) == pytest.approx(np.sqrt(22), rel=1e-11)


def test_descriptor_instance_and_replay(tmp_path):
    run_cli("generate", "--sites", "2", "--seed", "1", "--out", str(tmp_path / "g"))
    out = tmp_path / "e.json"
    assert run_cli("exact", "--instance", str(tmp_path / "g" / "descriptor.json"),
                   "--format", "json", "--out", str(out)) == 0
    first = out.read_bytes()
    out.unlink()
    assert run_cli("--replay", str(out) + ".manifest.json") == 0
    assert out.read_bytes() == first
    rows = json.loads(first)
    assert rows[0]["energy"] == pytest.approx(-4.53112887415, abs=1e-10)


def test_capability_error_exit_code(tmp_path, capsys):
    code = run_cli("exact", "--sites", "8", "--dense")
    assert code == 3
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "capability"


def test_generic_error_is_json(capsys):
    assert run_cli("analyze") == 1
    assert "message" in json.loads(capsys.readouterr().err)


def test_bethe_and_ingest_commands(tmp_path, capsys):
    assert run_cli("bethe", "--sites", "4") == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["total_energy"] == pytest.approx(-5.34084761725, abs=1e-10)
    path = tmp_path / "x.fcidump"
    path.write_text(SPATIAL)
    assert run_cli("ingest", str(path)) == 0
    assert json.loads(capsys.readouterr().out)["n_spin_orbitals"] == 4


def test_fcidump_cli_analyze(tmp_path, capsys):
    path = tmp_path / "x.fcidump"
    path.write_text(SPATIAL)
    assert run_cli("analyze", "--fcidump", str(path), "--format", "json") == 0
    rows = json.loads(capsys.readouterr().out)
    assert rows[0]["source"] == "FCIDUMP" and rows[0]["n_spin_orbitals"] == 4


def test_thread_variable_is_validated(monkeypatch):
    monkeypatch.setenv("ORFH_NUM_THREADS", "zero")
    assert run_cli("bethe", "--sites", "2") == 1
    monkeypatch.setenv("ORFH_NUM_THREADS", "1")
    assert run_cli("bethe", "--sites", "2") == 0


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "orfh.cli", "shots", "--sites", "2",
                           "--format", "csv"], capture_output=True, text=True, check=True)
    lines = proc.stdout.splitlines()
    assert lines[0] == "qubits,method,groups,K,epsilon,M,clamped"
    assert [l.split(",")[1] for l in lines[1:]] == ["QWC", "GC", "BASIS_ROTATION"]
