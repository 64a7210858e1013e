import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrampoly.circuit_ir import (
    Circuit,
    CircuitBuilder,
    CircuitError,
    Gate,
    GateKind,
    QubitLayout,
    ToffoliDecomp,
    asap_layers,
    check_pairs,
    compose,
    export_qasm,
    export_text,
    inverse,
    load_circuit,
    marked_stages,
    measure,
    parse_qasm,
    parse_text,
    toffoli_depth,
)

LAYOUT = QubitLayout.build([("a", 3), ("b", 2), ("out", 1)])


def test_layout_indexing():
    assert LAYOUT.size == 6
    assert LAYOUT["b"][1] == 4
    assert LAYOUT.locate(4) == ("b", 1)
    assert list(LAYOUT["a"]) == [0, 1, 2]
    assert LAYOUT.count("a", "out", "missing") == 4
    assert "b" in LAYOUT and "z" not in LAYOUT
    assert LAYOUT.get("z") is None
    with pytest.raises(CircuitError):
        LAYOUT["z"]
    with pytest.raises(CircuitError):
        LAYOUT["a"][3]
    with pytest.raises(CircuitError):
        LAYOUT.locate(6)
    with pytest.raises(CircuitError):
        QubitLayout.build([("a", 1), ("a", 2)])
    with pytest.raises(CircuitError):
        QubitLayout.build([("a", -1)])


def test_gate_arity_and_constructors():
    assert Gate.mcx([], 0).kind is GateKind.X
    assert Gate.mcx([1], 0).kind is GateKind.CNOT
    assert Gate.mcx([1, 2], 0).kind is GateKind.TOFFOLI
    assert Gate.mcx([1, 2, 3], 0).kind is GateKind.CKX
    assert Gate.fanout(0, [1]).kind is GateKind.CNOT
    assert Gate.fanout(0, [1, 2]).kind is GateKind.MULTI_TARGET_CNOT
    assert Gate.toffoli(0, 1, 2).is_non_clifford and not Gate.cnot(0, 1).is_non_clifford
    with pytest.raises(CircuitError):
        Gate(GateKind.TOFFOLI, (0,), (1,))
    with pytest.raises(CircuitError):
        Gate.cnot(1, 1)
    with pytest.raises(CircuitError):
        Circuit(LAYOUT, (Gate.x(9),))
    with pytest.raises(CircuitError):
        Circuit(LAYOUT, (), (5,))


def _sample():
    b = CircuitBuilder(LAYOUT)
    b.add(Gate.cnot(0, 3))
    b.add(Gate.toffoli(0, 1, 4))
    b.barrier()
    b.add(Gate.mcx([0, 1, 2], 5))
    b.add(Gate.fanout(2, [3, 4]))
    b.add(Gate.cz(3, 4))
    b.add(Gate.x(1))
    b.barrier()
    b.mirror(0, 2)
    return b.build()


def test_builder_mirror_pairs_and_barriers():
    c = _sample()
    assert c.pairs == ((0, 7), (1, 6))
    assert c.gates[6] == c.gates[1] and c.gates[7] == c.gates[0]
    assert c.barriers == (2, 6)
    check_pairs(c, c.pairs)


def test_check_pairs_errors():
    c = _sample()
    with pytest.raises(CircuitError):
        check_pairs(c, [(1, 0)])
    with pytest.raises(CircuitError):
        check_pairs(c, [(0, 6)])  # different gates
    with pytest.raises(CircuitError):
        check_pairs(c, [(0, 7), (0, 7)])


def test_inverse_and_compose():
    c = _sample()
    inv = inverse(c)
    assert inv.gates == tuple(reversed(c.gates))
    assert inverse(inv) == c
    both = compose(c, inv)
    assert len(both) == 2 * len(c)
    check_pairs(both, both.pairs)
    assert (c + inv).gates == both.gates
    with pytest.raises(CircuitError):
        compose(c, Circuit(QubitLayout.build([("q", 1)])))
    assert c.append(Gate.x(0)).gates[-1] == Gate.x(0)


def test_stage_models():
    c = _sample()
    assert marked_stages(c) == [[1], [2], [6]]
    assert toffoli_depth(c) == 3
    unmarked = Circuit(c.layout, c.gates)
    layers = asap_layers(unmarked)
    assert layers[0] == [1]
    # parallel Toffolis on disjoint qubits share one ASAP layer
    lay = QubitLayout.build([("q", 6)])
    par = Circuit(lay, (Gate.toffoli(0, 1, 2), Gate.toffoli(3, 4, 5)))
    assert toffoli_depth(par) == 1


def test_measure_and_decomp():
    c = _sample()
    r = measure(c)
    assert r.toffoli_count == 2 and r.toffoli_pair_count == 1 and r.toffoli_compute_count == 1
    assert r.ckx_count == 1 and r.cz_count == 1 and r.x_count == 1
    assert r.cnot_count_logical == 3 and r.cnot_count_expanded == 4 and r.cnot_pair_count == 1
    # and-gadget: compute Toffoli 4 T, c3x ladder 2 Toffolis = 8 T, uncompute free
    assert r.t_count == 4 + 8
    assert r.t_depth == 2 + 2 * 2 + 0 * 2  # stage 3 only holds the free uncompute
    assert r.toffoli_compute_depth == 2
    u = measure(c, ToffoliDecomp.unit_depth())
    assert u.t_count == 7 + 7 * 3 + 7
    assert u.t_depth == 1 + 3 + 1
    assert r.non_memory_qubits == 5  # 'out' excluded
    d = r.to_dict()
    assert d["toffoli_compute_count"] == 1 and d["decomp"] == "and-gadget"


def test_decomp_from_name():
    assert ToffoliDecomp.from_name("and_gadget") == ToffoliDecomp.and_gadget()
    assert ToffoliDecomp.from_name("UNIT-DEPTH").extra_ancillae == 4
    with pytest.raises(ValueError):
        ToffoliDecomp.from_name("magic")


def test_text_roundtrip():
    c = _sample()
    text = export_text(c)
    assert text.startswith("# qrampoly circuit v1")
    back = parse_text(text)
    assert back == c
    assert load_circuit(text) == c


def test_text_errors_and_lenient():
    text = export_text(_sample())
    with pytest.raises(CircuitError):
        parse_text(text.replace("ccx", "zz"))
    with pytest.raises(CircuitError):
        parse_text("qreg a[2]\ncx a[0], a[5]\n")
    with pytest.raises(CircuitError):
        parse_text("qreg a[2]\ncx a[0] a[1]\n")
    lines = text.splitlines()
    first_cx = next(i for i, line in enumerate(lines) if line.startswith("cx"))
    dropped = "\n".join(lines[:first_cx] + lines[first_cx + 1 :]) + "\n"
    with pytest.raises(CircuitError):
        parse_text(dropped)
    lenient = parse_text(dropped, lenient=True)
    assert lenient.pairs == () and len(lenient) == len(_sample()) - 1


def test_qasm_roundtrip():
    c = _sample()
    q = export_qasm(c)
    assert q.startswith("OPENQASM 2.0;")
    assert "opaque c3x" in q
    back = parse_qasm(q)
    assert back.barriers == (2, 7)  # shifted by the unrolled extra CNOT
    # multi-target CNOT unrolls into plain CNOTs
    kinds = [g.kind for g in back.gates]
    assert GateKind.MULTI_TARGET_CNOT not in kinds
    assert kinds.count(GateKind.CNOT) == 4
    assert load_circuit(q).layout == c.layout
    with pytest.raises(CircuitError):
        parse_qasm("OPENQASM 2.0;\nqreg q[2];\nh q[0];\n")


@st.composite
def random_circuit(draw):
    lay = QubitLayout.build([("q", 5)])
    gates = []
    for _ in range(draw(st.integers(0, 12))):
        k = draw(st.sampled_from(["x", "cx", "ccx", "cz", "mtcx", "ckx"]))
        qs = draw(st.permutations(range(5)))
        gates.append(
            {
                "x": lambda: Gate.x(qs[0]),
                "cx": lambda: Gate.cnot(qs[0], qs[1]),
                "ccx": lambda: Gate.toffoli(qs[0], qs[1], qs[2]),
                "cz": lambda: Gate.cz(qs[0], qs[1]),
                "mtcx": lambda: Gate.fanout(qs[0], qs[1:3]),
                "ckx": lambda: Gate.mcx(qs[:3], qs[3]),
            }[k]()
        )
    barriers = tuple(sorted(draw(st.sets(st.integers(0, len(gates))))))
    return Circuit(lay, tuple(gates), barriers)


@settings(max_examples=60, deadline=None)
@given(random_circuit())
def test_text_roundtrip_random(c):
    assert parse_text(export_text(c)) == c


@settings(max_examples=40, deadline=None)
@given(random_circuit())
def test_qasm_roundtrip_random_without_mtcx(c):
    c = Circuit(c.layout, tuple(g for g in c.gates if g.kind is not GateKind.MULTI_TARGET_CNOT))
    assert parse_qasm(export_qasm(c)).gates == c.gates
