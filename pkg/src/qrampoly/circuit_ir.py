"""Reversible-gate circuits: layout, gates, stages, inversion, metering and text I/O.

Every gate kind here (X, CNOT, multi-target CNOT, Toffoli, C^kX, CZ) is its own
inverse, so inverting a circuit is just reversing the gate list.

Toffoli-depth is read from stage barriers when the synthesizer placed them,
otherwise from ASAP layering where Clifford gates are free but still order the
qubits they touch.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Iterable, Sequence


class CircuitError(ValueError):
    """Invalid gate, layout reference, pair mark, or text input."""


class GateKind(str, Enum):
    X = "x"
    CNOT = "cx"
    MULTI_TARGET_CNOT = "mtcx"
    TOFFOLI = "ccx"
    CKX = "ckx"
    CZ = "cz"


NON_CLIFFORD = {GateKind.TOFFOLI, GateKind.CKX}


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    controls: tuple[int, ...] = ()
    targets: tuple[int, ...] = ()

    def __post_init__(self):
        nc, nt = len(self.controls), len(self.targets)
        ok = {
            GateKind.X: nc == 0 and nt == 1,
            GateKind.CNOT: nc == 1 and nt == 1,
            GateKind.MULTI_TARGET_CNOT: nc == 1 and nt >= 2,
            GateKind.TOFFOLI: nc == 2 and nt == 1,
            GateKind.CKX: nc >= 3 and nt == 1,
            GateKind.CZ: nc == 1 and nt == 1,
        }[self.kind]
        if not ok:
            raise CircuitError(f"{self.kind.value}: bad arity ({nc} controls, {nt} targets)")
        qs = self.controls + self.targets
        if len(set(qs)) != len(qs):
            raise CircuitError(f"{self.kind.value}: repeated qubit in {qs}")

    @classmethod
    def x(cls, q: int) -> "Gate":
        return cls(GateKind.X, (), (q,))

    @classmethod
    def cnot(cls, c: int, t: int) -> "Gate":
        return cls(GateKind.CNOT, (c,), (t,))

    @classmethod
    def fanout(cls, c: int, targets: Sequence[int]) -> "Gate":
        """CNOT or multi-target CNOT depending on the number of targets."""
        targets = tuple(targets)
        if len(targets) == 1:
            return cls.cnot(c, targets[0])
        return cls(GateKind.MULTI_TARGET_CNOT, (c,), targets)

    @classmethod
    def toffoli(cls, c1: int, c2: int, t: int) -> "Gate":
        return cls(GateKind.TOFFOLI, (c1, c2), (t,))

    @classmethod
    def mcx(cls, controls: Sequence[int], t: int) -> "Gate":
        """X on ``t`` controlled on all of ``controls`` (CNOT/Toffoli/C^kX by arity)."""
        controls = tuple(controls)
        if not controls:
            return cls.x(t)
        if len(controls) == 1:
            return cls.cnot(controls[0], t)
        if len(controls) == 2:
            return cls.toffoli(controls[0], controls[1], t)
        return cls(GateKind.CKX, controls, (t,))

    @classmethod
    def cz(cls, a: int, b: int) -> "Gate":
        return cls(GateKind.CZ, (a,), (b,))

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.controls + self.targets

    @property
    def is_non_clifford(self) -> bool:
        return self.kind in NON_CLIFFORD


@dataclass(frozen=True)
class Register:
    name: str
    start: int
    size: int

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.size:
            raise CircuitError(f"{self.name}[{i}] out of range (size {self.size})")
        return self.start + i

    def __iter__(self):
        return iter(range(self.start, self.start + self.size))

    def __len__(self) -> int:
        return self.size


@dataclass(frozen=True)
class QubitLayout:
    """Named registers laid out contiguously in declaration order."""

    registers: tuple[Register, ...]

    @classmethod
    def build(cls, sizes: Iterable[tuple[str, int]]) -> "QubitLayout":
        regs, start, seen = [], 0, set()
        for name, size in sizes:
            if name in seen:
                raise CircuitError(f"duplicate register {name!r}")
            if size < 0:
                raise CircuitError(f"negative size for {name!r}")
            seen.add(name)
            regs.append(Register(name, start, size))
            start += size
        return cls(tuple(regs))

    @property
    def size(self) -> int:
        return sum(r.size for r in self.registers)

    def __getitem__(self, name: str) -> Register:
        for r in self.registers:
            if r.name == name:
                return r
        raise CircuitError(f"no register named {name!r}")

    def __contains__(self, name: str) -> bool:
        return any(r.name == name for r in self.registers)

    def get(self, name: str) -> Register | None:
        return self[name] if name in self else None

    def locate(self, q: int) -> tuple[str, int]:
        for r in self.registers:
            if r.start <= q < r.start + r.size:
                return r.name, q - r.start
        raise CircuitError(f"qubit {q} outside layout of {self.size} qubits")

    def count(self, *names: str) -> int:
        return sum(self[n].size for n in names if n in self)


@dataclass(frozen=True)
class Circuit:
    """An immutable gate sequence over a layout.

    ``barriers`` holds gate positions k meaning "a stage boundary sits just
    before gate k".  ``pairs`` holds (compute, uncompute) gate-index pairs;
    uncompute members are the ones measurement-based AND uncomputation gets
    for free.
    """

    layout: QubitLayout
    gates: tuple[Gate, ...] = ()
    barriers: tuple[int, ...] = ()
    pairs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        size = self.layout.size
        for g in self.gates:
            for q in g.qubits:
                if not 0 <= q < size:
                    raise CircuitError(f"qubit {q} outside layout of {size} qubits")
        if any(not 0 <= b <= len(self.gates) for b in self.barriers):
            raise CircuitError("barrier position out of range")
        object.__setattr__(self, "barriers", tuple(sorted(set(self.barriers))))

    def __len__(self) -> int:
        return len(self.gates)

    def append(self, g: Gate) -> "Circuit":
        return replace(self, gates=self.gates + (g,))

    def __add__(self, other: "Circuit") -> "Circuit":
        return compose(self, other)

    @property
    def has_stage_marks(self) -> bool:
        return bool(self.barriers)


def append(c: Circuit, g: Gate) -> Circuit:
    return c.append(g)


def compose(a: Circuit, b: Circuit) -> Circuit:
    """Run ``a`` then ``b`` on the same layout."""
    if a.layout != b.layout:
        raise CircuitError("cannot compose circuits over different layouts")
    k = len(a.gates)
    barriers = a.barriers + tuple(x + k for x in b.barriers)
    if a.barriers or b.barriers:
        barriers += (k,)
    return Circuit(
        a.layout,
        a.gates + b.gates,
        barriers,
        a.pairs + tuple((i + k, j + k) for i, j in b.pairs),
    )


def inverse(c: Circuit) -> Circuit:
    m = len(c.gates)
    return Circuit(
        c.layout,
        tuple(reversed(c.gates)),
        tuple(m - b for b in c.barriers),
        tuple(sorted((m - 1 - j, m - 1 - i) for i, j in c.pairs)),
    )


class CircuitBuilder:
    """Mutable helper used by the synthesizers; ``build()`` freezes it."""

    def __init__(self, layout: QubitLayout):
        self.layout = layout
        self.gates: list[Gate] = []
        self.barriers: list[int] = []
        self.pairs: list[tuple[int, int]] = []

    def __len__(self) -> int:
        return len(self.gates)

    def add(self, g: Gate) -> int:
        self.gates.append(g)
        return len(self.gates) - 1

    def extend(self, gates: Iterable[Gate]) -> None:
        self.gates.extend(gates)

    def barrier(self) -> None:
        pos = len(self.gates)
        if not self.barriers or self.barriers[-1] != pos:
            self.barriers.append(pos)

    def mirror(self, start: int, end: int, *, stage_marks: bool = True) -> None:
        """Append gates[start:end] reversed, pairing each with its mirror image."""
        base = len(self.gates)
        segment = self.gates[start:end]
        inner = [b for b in self.barriers if start < b < end]
        for k, g in enumerate(reversed(segment)):
            self.pairs.append((end - 1 - k, base + k))
            self.gates.append(g)
        if stage_marks:
            for b in inner:
                self.barriers.append(base + (end - b))
            self.barriers.sort()

    def build(self) -> Circuit:
        return Circuit(self.layout, tuple(self.gates), tuple(self.barriers), tuple(sorted(self.pairs)))


# ---------------------------------------------------------------- stages


def asap_layers(c: Circuit) -> list[list[int]]:
    """Greedy layering of non-Clifford gates; Clifford gates add no depth."""
    level = [0] * c.layout.size
    layers: list[list[int]] = []
    for idx, g in enumerate(c.gates):
        m = max(level[q] for q in g.qubits)
        if g.is_non_clifford:
            m += 1
            if len(layers) < m:
                layers.append([])
            layers[m - 1].append(idx)
        for q in g.qubits:
            level[q] = m
    return layers


def marked_stages(c: Circuit) -> list[list[int]]:
    """Non-Clifford gate indices grouped by barrier-delimited stage."""
    bounds = [0, *c.barriers, len(c.gates)]
    stages = []
    for lo, hi in zip(bounds, bounds[1:]):
        stage = [i for i in range(lo, hi) if c.gates[i].is_non_clifford]
        if stage:
            stages.append(stage)
    return stages


def stages(c: Circuit) -> list[list[int]]:
    return marked_stages(c) if c.has_stage_marks else asap_layers(c)


def toffoli_depth(c: Circuit) -> int:
    return len(stages(c))


# ---------------------------------------------------------------- metering


class DecompPolicy(str, Enum):
    AND_GADGET = "and-gadget"
    UNIT_DEPTH = "unit-depth"


@dataclass(frozen=True)
class ToffoliDecomp:
    """How a Toffoli is charged in T gates.

    AND_GADGET: 4 T at T-depth 2; the uncompute member of a marked pair is
    measurement-based and costs nothing.  UNIT_DEPTH: 7 T at T-depth 1 with 4
    extra ancillae, every Toffoli charged.
    """

    policy: DecompPolicy
    t_cost: int
    t_depth_cost: int
    extra_ancillae: int
    free_uncompute: bool

    @classmethod
    def and_gadget(cls) -> "ToffoliDecomp":
        return cls(DecompPolicy.AND_GADGET, 4, 2, 0, True)

    @classmethod
    def unit_depth(cls) -> "ToffoliDecomp":
        return cls(DecompPolicy.UNIT_DEPTH, 7, 1, 4, False)

    @classmethod
    def from_name(cls, name: str) -> "ToffoliDecomp":
        policy = DecompPolicy(name.replace("_", "-").lower())
        return cls.and_gadget() if policy is DecompPolicy.AND_GADGET else cls.unit_depth()

    def gate_cost(self, g: Gate, uncompute: bool) -> tuple[int, int]:
        """(T-count, T-depth) charged for one non-Clifford gate.

        A C^kX is charged as a Toffoli ladder: k-1 compute Toffolis (plus k-2
        uncompute ones when uncomputation is not free) arranged as a balanced
        tree of depth ceil(log2 k).
        """
        if not g.is_non_clifford:
            return 0, 0
        if uncompute and self.free_uncompute:
            return 0, 0
        if g.kind is GateKind.TOFFOLI:
            return self.t_cost, self.t_depth_cost
        k = len(g.controls)
        layers = math.ceil(math.log2(k))
        if self.free_uncompute:
            return self.t_cost * (k - 1), self.t_depth_cost * layers
        return self.t_cost * (2 * k - 3), self.t_depth_cost * (2 * layers - 1)


@dataclass(frozen=True)
class ResourceReport:
    """Logical resource counts.

    Measured reports fill every field; formula-only reports leave fields the
    formula does not speak to as ``None``.  ``t_count``/``t_depth`` are always
    derived from the Toffoli structure under ``decomp``.
    """

    source: str = "measured"
    toffoli_count: int | None = None
    toffoli_pair_count: int | None = None
    toffoli_depth: int | None = None
    toffoli_compute_depth: int | None = None
    ckx_count: int | None = None
    cnot_count_logical: int | None = None
    cnot_count_expanded: int | None = None
    cnot_pair_count: int | None = None
    x_count: int | None = None
    cz_count: int | None = None
    t_count: int | None = None
    t_depth: int | None = None
    qubit_count: int | None = None
    non_memory_qubits: int | None = None
    decomp: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def toffoli_compute_count(self) -> int | None:
        """Toffolis excluding uncompute members of marked pairs."""
        if self.toffoli_count is None or self.toffoli_pair_count is None:
            return None
        return self.toffoli_count - self.toffoli_pair_count

    def to_dict(self) -> dict:
        d = asdict(self)
        d["toffoli_compute_count"] = self.toffoli_compute_count
        return d


def check_pairs(c: Circuit, pairs: Sequence[tuple[int, int]]) -> None:
    used: set[int] = set()
    for i, j in pairs:
        if not (0 <= i < j < len(c.gates)):
            raise CircuitError(f"pair ({i}, {j}) out of order or range")
        if c.gates[i] != c.gates[j]:
            raise CircuitError(f"pair ({i}, {j}) joins different gates")
        if i in used or j in used:
            raise CircuitError(f"gate index reused across pairs at ({i}, {j})")
        used.update((i, j))


def measure(
    c: Circuit,
    decomp: ToffoliDecomp | None = None,
    pairs: Sequence[tuple[int, int]] | None = None,
    memory_registers: Sequence[str] = ("memory", "parity", "fanout", "out"),
) -> ResourceReport:
    decomp = decomp or ToffoliDecomp.and_gadget()
    pairs = c.pairs if pairs is None else tuple(pairs)
    check_pairs(c, pairs)
    uncompute = {j for _, j in pairs}
    kinds = Counter(g.kind for g in c.gates)

    t_count = 0
    for idx, g in enumerate(c.gates):
        t_count += decomp.gate_cost(g, idx in uncompute)[0]

    staged = stages(c)
    t_depth = sum(max(decomp.gate_cost(c.gates[i], i in uncompute)[1] for i in st) for st in staged)
    compute_depth = sum(1 for st in staged if any(i not in uncompute for i in st))

    cnots = [g for g in c.gates if g.kind in (GateKind.CNOT, GateKind.MULTI_TARGET_CNOT)]
    return ResourceReport(
        source="measured",
        toffoli_count=kinds[GateKind.TOFFOLI],
        toffoli_pair_count=sum(1 for i, _ in pairs if c.gates[i].kind is GateKind.TOFFOLI),
        toffoli_depth=len(staged),
        toffoli_compute_depth=compute_depth,
        ckx_count=kinds[GateKind.CKX],
        cnot_count_logical=len(cnots),
        cnot_count_expanded=sum(len(g.targets) for g in cnots),
        cnot_pair_count=sum(
            1 for i, _ in pairs if c.gates[i].kind in (GateKind.CNOT, GateKind.MULTI_TARGET_CNOT)
        ),
        x_count=kinds[GateKind.X],
        cz_count=kinds[GateKind.CZ],
        t_count=t_count,
        t_depth=t_depth,
        qubit_count=c.layout.size,
        non_memory_qubits=c.layout.size - c.layout.count(*memory_registers),
        decomp=decomp.policy.value,
    )


# ---------------------------------------------------------------- text formats

_HEADER = "# qrampoly circuit v1"
_OPERAND = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\[(\d+)\]$")


def _ref(layout: QubitLayout, q: int) -> str:
    name, i = layout.locate(q)
    return f"{name}[{i}]"


def export_text(c: Circuit) -> str:
    """Line-per-gate native format; barriers as ``---`` and pair marks as ``pair i j``."""
    lines = [_HEADER]
    lines += [f"qreg {r.name}[{r.size}]" for r in c.layout.registers]
    barriers = Counter(c.barriers)
    for idx, g in enumerate(c.gates):
        if barriers[idx]:
            lines.append("---")
        lines.append(f"{g.kind.value} " + ", ".join(_ref(c.layout, q) for q in g.qubits))
    if barriers[len(c.gates)]:
        lines.append("---")
    lines += [f"pair {i} {j}" for i, j in c.pairs]
    return "\n".join(lines) + "\n"


def _parse_operands(layout: QubitLayout, text: str, lineno: int) -> list[int]:
    out = []
    for tok in text.split(","):
        m = _OPERAND.match(tok.strip())
        if not m:
            raise CircuitError(f"line {lineno}: bad operand {tok.strip()!r}")
        out.append(layout[m.group(1)][int(m.group(2))])
    return out


def _gate_from_operands(kind: GateKind, qs: list[int], lineno: int) -> Gate:
    try:
        if kind is GateKind.X:
            return Gate(kind, (), tuple(qs))
        if kind in (GateKind.CNOT, GateKind.MULTI_TARGET_CNOT, GateKind.CZ):
            return Gate(kind, tuple(qs[:1]), tuple(qs[1:]))
        return Gate(kind, tuple(qs[:-1]), tuple(qs[-1:]))
    except CircuitError as exc:
        raise CircuitError(f"line {lineno}: {exc}") from None


def parse_text(text: str, lenient: bool = False) -> Circuit:
    """Parse the native format; ``lenient`` drops pair marks that no longer match (e.g. hand-edited files)."""
    regs: list[tuple[str, int]] = []
    layout: QubitLayout | None = None
    gates: list[Gate] = []
    barriers: list[int] = []
    pairs: list[tuple[int, int]] = []
    kinds = {k.value: k for k in GateKind}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        if head == "qreg":
            if layout is not None:
                raise CircuitError(f"line {lineno}: qreg after first gate")
            m = _OPERAND.match(rest.strip())
            if not m:
                raise CircuitError(f"line {lineno}: bad register declaration")
            regs.append((m.group(1), int(m.group(2))))
            continue
        if layout is None:
            layout = QubitLayout.build(regs)
        if line == "---":
            barriers.append(len(gates))
        elif head == "pair":
            i, j = (int(v) for v in rest.split())
            pairs.append((i, j))
        elif head in kinds:
            gates.append(_gate_from_operands(kinds[head], _parse_operands(layout, rest, lineno), lineno))
        else:
            raise CircuitError(f"line {lineno}: unknown mnemonic {head!r}")
    if layout is None:
        layout = QubitLayout.build(regs)
    c = Circuit(layout, tuple(gates), tuple(barriers), tuple(pairs))
    try:
        check_pairs(c, c.pairs)
    except CircuitError:
        if not lenient:
            raise
        c = Circuit(layout, tuple(gates), tuple(b for b in barriers if b <= len(gates)), ())
    return c


def export_qasm(c: Circuit) -> str:
    """OpenQASM 2.0 subset.  C^kX becomes an opaque ``c<k>x`` gate; multi-target CNOT is unrolled."""
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";']
    for k in sorted({len(g.controls) for g in c.gates if g.kind is GateKind.CKX}):
        args = ",".join([f"c{i}" for i in range(k)] + ["t"])
        lines.append(f"opaque c{k}x {args};")
    lines += [f"qreg {r.name}[{r.size}];" for r in c.layout.registers if r.size]
    all_regs = ",".join(r.name for r in c.layout.registers if r.size)
    barriers = set(c.barriers)
    for idx, g in enumerate(c.gates):
        if idx in barriers:
            lines.append(f"barrier {all_regs};")
        ref = lambda q: _ref(c.layout, q)  # noqa: E731
        if g.kind is GateKind.MULTI_TARGET_CNOT:
            lines += [f"cx {ref(g.controls[0])},{ref(t)};" for t in g.targets]
        elif g.kind is GateKind.CKX:
            lines.append(f"c{len(g.controls)}x " + ",".join(ref(q) for q in g.qubits) + ";")
        else:
            lines.append(f"{g.kind.value} " + ",".join(ref(q) for q in g.qubits) + ";")
    if len(c.gates) in barriers:
        lines.append(f"barrier {all_regs};")
    return "\n".join(lines) + "\n"


def parse_qasm(text: str) -> Circuit:
    regs: list[tuple[str, int]] = []
    body: list[tuple[int, str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("//", 1)[0].strip()
        if not line:
            continue
        for stmt in filter(None, (s.strip() for s in line.split(";"))):
            head, _, rest = stmt.partition(" ")
            if head in ("OPENQASM", "include", "opaque"):
                continue
            if head == "qreg":
                m = _OPERAND.match(rest.strip())
                if not m:
                    raise CircuitError(f"line {lineno}: bad qreg")
                regs.append((m.group(1), int(m.group(2))))
            else:
                body.append((lineno, head, rest))
    layout = QubitLayout.build(regs)
    gates: list[Gate] = []
    barriers: list[int] = []
    for lineno, head, rest in body:
        if head == "barrier":
            barriers.append(len(gates))
            continue
        m = re.fullmatch(r"c(\d+)x", head)
        if m:
            kind = GateKind.CKX
        elif head in ("x", "cx", "ccx", "cz"):
            kind = GateKind(head)
        else:
            raise CircuitError(f"line {lineno}: unsupported gate {head!r}")
        gates.append(_gate_from_operands(kind, _parse_operands(layout, rest, lineno), lineno))
    return Circuit(layout, tuple(gates), tuple(barriers))


def load_circuit(text: str, lenient: bool = False) -> Circuit:
    """Parse either format, sniffing the QASM header."""
    if text.lstrip().startswith("OPENQASM"):
        return parse_qasm(text)
    return parse_text(text, lenient)
