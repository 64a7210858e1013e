import csv
import io
import json

import pytest

from qrampoly.cli import main, render, run_timestamp
from qrampoly.wordfile import WordFileError, format_words, parse_words


def run_json(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None


def test_synth_qram(capsys):
    code, doc = run_json(capsys, "synth", "qram", "-n", "3")
    assert code == 0
    assert doc["summary"]["toffoli_pairs"] == 4
    assert doc["manifest"]["subcommand"] == "synth qram"
    assert doc["manifest"]["config"]["n"] == 3


def test_synth_qram_parallel_t_costs(capsys):
    code, doc = run_json(capsys, "synth", "qram", "-n", "3", "--variant", "parallel", "--parallel-readout")
    assert code == 0
    assert doc["summary"]["t_count"] == 48


def test_synth_qlut(capsys):
    code, doc = run_json(capsys, "synth", "qlut", "--n1", "2", "--n2", "2", "-l", "2")
    assert code == 0
    s = doc["summary"]
    assert s["toffoli_depth"] == 2
    assert s["toffoli_count"] == doc["formula"]["extra"]["toffoli_compute_count"]
    assert s["ancillae"] == doc["formula"]["extra"]["ancillae"]


def test_qlut_table_file(tmp_path, capsys):
    table = tmp_path / "t.txt"
    table.write_text("".join(f"{w:02b}\n" for w in [0, 1, 2, 3, 3, 2, 1, 0]))
    code, doc = run_json(capsys, "synth", "qlut", "-n", "3", "-l", "2", "--table", str(table))
    assert code == 0
    assert doc["summary"]["table_x_gates"] == 8
    assert str(table) in doc["manifest"]["inputs"]
    assert doc["manifest"]["inputs"][str(table)].startswith("sha256:")
    table.write_text("0\n1\n")
    assert main(["synth", "qlut", "-n", "3", "--table", str(table)]) == 2


@pytest.mark.parametrize("target", ["read", "write", "phase"])
def test_verify_synthesized(capsys, target):
    code, doc = run_json(capsys, "verify", target, "-n", "4", "-l", "2", "--variant", "parallel", "--trials", "2")
    assert code == 0 and doc["passed"]


def test_verify_memory_file(tmp_path, capsys):
    mem = tmp_path / "m.txt"
    mem.write_text("\n".join("1 0 1 1 0 0 1 0".split()))
    code, doc = run_json(capsys, "verify", "read", "-n", "3", "--memory", str(mem))
    assert code == 0 and doc["trials"][0]["checked"] == 8


def test_mutated_circuit_fails(tmp_path, capsys):
    circ = tmp_path / "c.txt"
    assert main(["synth", "qram", "-n", "3", "--circuit-out", str(circ), "--out", str(tmp_path / "r.json")]) == 0
    assert main(["verify", "read", "--circuit", str(circ)]) == 0
    capsys.readouterr()
    lines = circ.read_text().splitlines()
    victim = next(i for i, l in enumerate(lines) if l.startswith("ccx"))
    circ.write_text("\n".join(lines[:victim] + lines[victim + 1 :]) + "\n")
    code, doc = run_json(capsys, "verify", "read", "--circuit", str(circ))
    assert code == 1
    assert not doc["passed"]
    assert doc["trials"][-1]["counterexample"] is not None


def test_qasm_export(tmp_path):
    path = tmp_path / "c.qasm"
    assert main(["synth", "qram", "-n", "2", "--circuit-out", str(path), "--out", str(tmp_path / "r")]) == 0
    assert path.read_text().startswith("OPENQASM")


def test_optimize_and_equiv(tmp_path, capsys):
    spec = tmp_path / "s.txt"
    spec.write_text("000\n001\n011\n111\n")
    circ = tmp_path / "o.txt"
    code, doc = run_json(capsys, "optimize", "--spec", str(spec), "--circuit-out", str(circ))
    assert code == 0
    assert doc["optimize"]["toffoli_count"] == 1
    code, doc = run_json(capsys, "verify", "equiv", "--spec", str(spec), "--circuit", str(circ))
    assert code == 0 and doc["passed"]
    other = tmp_path / "s2.txt"
    other.write_text("000\n")
    code, doc = run_json(capsys, "verify", "equiv", "--spec", str(other), "--circuit", str(circ))
    assert code == 1


def test_optimize_empty_spec(capsys):
    code, doc = run_json(capsys, "optimize", "-n", "3")
    assert code == 0 and doc["optimize"]["toffoli_count"] == 0


def test_estimate(capsys):
    code, doc = run_json(capsys, "estimate", "--paper-profile")
    assert code == 0
    assert doc["surface"]["total_qubits"] == pytest.approx(4.201e14, rel=1e-3)
    assert doc["ratios"]["r_tdepth"] == pytest.approx(0.1436, abs=1e-3)
    code, doc = run_json(capsys, "estimate", "--tcount", "1000000", "--tdepth", "10", "--clifford-count", "1000", "--logical-qubits", "100")
    assert code == 0 and "ratios" not in doc
    code, doc = run_json(capsys, "estimate", "-n", "36", "--report", "rough")
    assert doc["rough"]["rough_cost_poly"] == pytest.approx(40.807, abs=1e-3)


def test_grover_csv(capsys):
    assert main(["grover", "-n", "4", "--marked", "3"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == ["address", "probability"]
    assert len(rows) == 17
    assert float(rows[4][1]) == pytest.approx(0.9613, abs=1e-3)


def test_grover_json(capsys):
    code, doc = run_json(capsys, "grover", "-n", "3", "--marked", "5", "--iterations", "2", "--format", "json")
    assert code == 0
    g = doc["grover"]
    assert g["p_marked"] == pytest.approx(g["p_marked_closed_form"])
    assert g["p_marked"] == pytest.approx(0.9453125)


def test_text_and_csv_formats(capsys):
    assert main(["synth", "qram", "-n", "2", "--format", "text"]) == 0
    out = capsys.readouterr().out
    assert "summary.toffoli_pairs: 1" in out
    assert main(["synth", "qram", "-n", "2", "--format", "csv"]) == 0
    rows = dict(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows["summary.toffoli_pairs"] == "1"


@pytest.mark.parametrize(
    "argv",
    [
        ["synth", "qram", "-n", "99"],
        ["synth", "qram"],
        ["estimate", "--tdepth", "0", "-n", "5"],
        ["estimate"],
        ["grover", "-n", "3"],
        ["verify", "equiv"],
        ["optimize", "--spec", "/nonexistent/spec.txt"],
    ],
)
def test_usage_errors(argv, capsys):
    assert main(argv) == 2
    assert "error" in capsys.readouterr().err


def test_deterministic_output(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    out = tmp_path / "r.json"
    texts = []
    for _ in range(2):
        assert main(["verify", "write", "-n", "3", "--seed", "11", "--out", str(out)]) == 0
        texts.append(out.read_text())
    assert texts[0] == texts[1]
    assert json.loads(texts[0])["manifest"]["timestamp"] == "2023-11-14T22:13:20+00:00"
    assert run_timestamp() == "2023-11-14T22:13:20+00:00"
    assert main(["verify", "write", "-n", "3", "--seed", "12", "--out", str(out)]) == 0
    assert out.read_text() != texts[0]


def test_render_flattening():
    doc = {"a": {"b": 1, "c": [1, 2]}, "d": [{"e": 3}]}
    assert render(doc, "text") == "a.b: 1\na.c: [1, 2]\nd.0.e: 3\n"


def test_word_files():
    assert parse_words("01\n10\n", 2) == [1, 2]
    assert parse_words("f\n0x3\n# c\n", 4) == [15, 3]
    # short 0/1 lines are hex under auto, so 0x11 overflows 4 bits
    with pytest.raises(WordFileError):
        parse_words("11\n", 4)
    assert parse_words("0b11\n", 2, "hex") == [3]
    with pytest.raises(WordFileError):
        parse_words("1f\n", 4)
    with pytest.raises(WordFileError):
        parse_words("zz\n", 4)
    with pytest.raises(WordFileError):
        parse_words("1\n", 1, "oct")
    assert parse_words(format_words([1, 2, 3], 2), 2) == [1, 2, 3]
