"""Quantum look-up table from two cascaded polynomial-encoding QRAMs.

The n address bits split into a high part (n1 bits, value N1') and a low part
(n2 bits, value N2') with ``N' = N2' + 2^n2 * N1'``.  The first QRAM selects the
block of 2^n2 consecutive words that share N1'; those words are copied into
staging registers by multi-target CNOTs whose targets are fixed by the
classical table.  The second QRAM then picks one staged word, and parity
ancillae carry it to the output bus in a single Toffoli layer.
"""

from __future__ import annotations

from dataclasses import dataclass

from .circuit_ir import Circuit, CircuitBuilder, Gate, QubitLayout, ResourceReport
from .qram_synth import (
    EncodingPlan,
    MonomialSchedule,
    Mode,
    QramError,
    _add_layered,
    build_schedule,
    emit_encoding,
    io_gates,
    parallel_plan,
    stage_count,
)

MAX_BITS = 12


class QlutError(ValueError):
    pass


@dataclass(frozen=True)
class QlutConfig:
    n1: int
    n2: int
    ell: int
    table: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "table", tuple(self.table))
        if self.n1 < 1 or self.n2 < 1:
            raise QlutError("both address groups need at least one bit")
        if self.n1 + self.n2 > MAX_BITS:
            raise QlutError(f"n1 + n2 must be <= {MAX_BITS}")
        if self.ell < 1:
            raise QlutError("word size must be >= 1")
        if len(self.table) != 1 << self.n:
            raise QlutError(f"table has {len(self.table)} words, expected {1 << self.n}")
        if any(not 0 <= w < (1 << self.ell) for w in self.table):
            raise QlutError(f"table word does not fit in {self.ell} bits")

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    @property
    def N1(self) -> int:
        return 1 << self.n1

    @property
    def N2(self) -> int:
        return 1 << self.n2


def default_split(n: int) -> tuple[int, int]:
    return (n + 1) // 2, n // 2


def split_address(address: int, n1: int, n2: int) -> tuple[int, int]:
    """(N1', N2') with N2' the low n2 bits."""
    if not 0 <= address < 1 << (n1 + n2):
        raise QlutError(f"address {address} out of range for {n1 + n2} bits")
    return address >> n2, address & ((1 << n2) - 1)


def _sub_plan(n: int, address, select, work) -> tuple[EncodingPlan, MonomialSchedule | None]:
    if n == 1:
        # x_1 into select[1], then 1 + x_1 into select[0]
        return EncodingPlan([Gate.cnot(address[0], select[1])], [], [Gate.cnot(select[1], select[0]), Gate.x(select[0])]), None
    schedule = build_schedule(n)
    return parallel_plan(n, address, select, work, schedule), schedule


@dataclass(frozen=True)
class QlutSynthesis:
    config: QlutConfig
    circuit: Circuit
    compute_end: int


def synthesize(cfg: QlutConfig) -> QlutSynthesis:
    n1, n2, ell, N1, N2 = cfg.n1, cfg.n2, cfg.ell, cfg.N1, cfg.N2
    w1 = build_schedule(n1).work_pool if n1 > 1 else 0
    w2 = build_schedule(n2).work_pool if n2 > 1 else 0
    if w1 > N1 or w2 > N2:
        raise QramError("work demand exceeds the N-qubit budget")
    fan = (ell - 1) * N2
    regs = [
        ("address", cfg.n),
        ("select1", N1),
        ("work1", N1),
        ("select2", N2),
        ("work2", N2),
        ("staging", ell * N2),
        ("parity", ell * N2),
    ]
    if fan > N2:
        regs.append(("fanout", fan - N2))
    regs.append(("out", ell))
    layout = QubitLayout.build(regs)
    addr = list(layout["address"])
    plan1, _ = _sub_plan(n1, addr[:n1], list(layout["select1"]), list(layout["work1"]))
    plan2, _ = _sub_plan(n2, addr[n1:], list(layout["select2"]), list(layout["work2"]))

    b = CircuitBuilder(layout)
    emit_encoding(b, [plan1, plan2], staged=True)
    encode_end = len(b)

    staging = list(layout["staging"])
    copy_start = len(b)
    for k in range(N1):
        targets = [
            staging[j * ell + t]
            for j in range(N2)
            for t in range(ell)
            if cfg.table[k * N2 + j] >> t & 1
        ]
        if targets:
            b.add(Gate.fanout(layout["select1"][k], targets))
    copy_end = len(b)

    # ell-1 extra copies of each second-level select ancilla; work2 is idle here
    spare = list(layout["work2"]) + (list(layout["fanout"]) if "fanout" in layout else [])
    setup, tof, fan_in = io_gates(
        Mode.READ, list(layout["select2"]), staging, list(layout["out"]), ell, list(layout["parity"]), spare[:fan]
    )
    b.barrier()
    setup_start = len(b)
    b.extend(setup)
    tof_start = len(b)
    _add_layered(b, tof)
    tof_end = len(b)
    b.extend(fan_in)
    compute_end = len(b)
    b.barrier()
    b.mirror(tof_start, tof_end)
    b.barrier()
    b.mirror(setup_start, tof_start)
    b.mirror(copy_start, copy_end)
    b.mirror(0, encode_end)
    return QlutSynthesis(cfg, b.build(), compute_end)


def synth_qlut(cfg: QlutConfig) -> Circuit:
    return synthesize(cfg).circuit


def table_preamble(layout: QubitLayout, cfg: QlutConfig) -> int:
    """X gates a loaded-memory variant would need; reported only, never emitted."""
    return sum(bin(w).count("1") for w in cfg.table)


def qlut_resources(n1: int, n2: int, ell: int) -> ResourceReport:
    N1, N2 = 1 << n1, 1 << n2
    count = (N1 - n1 - 1) + (N2 - n2 - 1) + ell * N2
    return ResourceReport(
        source="formula",
        toffoli_count=None,
        toffoli_compute_depth=max(stage_count(n1), stage_count(n2)) + 1,
        non_memory_qubits=None,
        extra={
            "n1": n1,
            "n2": n2,
            "ell": ell,
            "toffoli_compute_count": count,
            "ancillae": 2 * (N1 + (ell + 1) * N2),
        },
    )


def measured_ancillae(c: Circuit) -> int:
    return c.layout.size - c.layout.count("address", "out")
