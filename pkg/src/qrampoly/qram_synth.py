"""QRAM circuits built from encoding polynomials.

Each select ancilla ends up holding the encoding polynomial of its own address,
so exactly one of them is 1 for a basis address.  Construction:

1. copy each address bit x_i into the select ancilla of the single-bit monomial
   and multiply monomials pairwise with Toffolis until every monomial of weight
   >= 2 sits in its own select ancilla;
2. XOR each ancilla into all ancillae of its strict index subsets, highest
   weight first, then X the constant ancilla;
3. read, write or phase-tag through the selected ancilla;
4. undo 2 and 1.

Select ancilla ``select[j]`` belongs to address ``j`` with address bit b_1 as the
most significant bit, i.e. ``address[0]`` holds x_1.  The monomial mask of
``select[j]`` is therefore ``j`` bit-reversed over n bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .circuit_ir import Circuit, CircuitBuilder, Gate, QubitLayout, ResourceReport

MIN_BITS = 2
MAX_BITS = 12


class QramError(ValueError):
    pass


class Mode(str, Enum):
    READ = "read"
    WRITE = "write"
    PHASE = "phase"


class Variant(str, Enum):
    SEQUENTIAL = "sequential"
    PARALLEL = "parallel"


@dataclass(frozen=True)
class QramConfig:
    n: int
    ell: int = 1
    mode: Mode = Mode.READ
    variant: Variant = Variant.SEQUENTIAL
    parallel_readout: bool = False
    pad_work: bool = False  # size the work pool at the N-qubit budget instead of the demand

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "variant", Variant(self.variant))
        if not MIN_BITS <= self.n <= MAX_BITS:
            raise QramError(f"address bits must be in [{MIN_BITS}, {MAX_BITS}] for synthesis, got {self.n}")
        if self.ell < 1:
            raise QramError(f"word size must be >= 1, got {self.ell}")
        if self.mode is Mode.PHASE and self.ell != 1:
            raise QramError("phase mode tags one bit per address; word size must be 1")

    @property
    def N(self) -> int:
        return 1 << self.n


def bitrev(value: int, n: int) -> int:
    return int(format(value, f"0{n}b")[::-1], 2) if n else 0


def mask_to_address(mask: int, n: int) -> int:
    """Select-ancilla index of the monomial with this mask (x_1 at mask bit 0)."""
    return bitrev(mask, n)


# ---------------------------------------------------------------- schedule


@dataclass(frozen=True)
class Product:
    """One Toffoli: ``mask = left | right`` written into the select ancilla ``target``."""

    mask: int
    left: int
    right: int
    target: int
    copies: tuple[int, ...] = ()  # factor masks that need a work copy in this stage


@dataclass(frozen=True)
class MonomialSchedule:
    n: int
    stages: tuple[tuple[Product, ...], ...]
    work_demand: tuple[int, ...]
    deferred: tuple[int, ...] = ()

    @property
    def work_pool(self) -> int:
        return max(self.work_demand, default=0)

    @property
    def depth(self) -> int:
        return len(self.stages)


def stage_count(n: int) -> int:
    return math.ceil(math.log2(n)) if n > 1 else 0


def extra_ancilla_bound(n: int, k: int) -> int:
    """Work copies needed to build every weight in (k/2, k] from weights <= k/2 in one stage.

    Two uses per product minus one free use per stored monomial (the n weight-1
    monomials are stored twice).
    """
    half = k // 2
    uses = 2 * sum(math.comb(n, w) for w in range(half + 1, min(k, n) + 1))
    stored = sum(math.comb(n, w) for w in range(2, half + 1)) + 2 * n
    return uses - stored


def _holders(mask: int) -> int:
    return 2 if mask.bit_count() == 1 else 1


def _assign(n: int, products: Sequence[int], available: set[int], max_factor: int) -> tuple[list[Product], int]:
    """Pick a factor split for each product so as few factors as possible need copies.

    Every stored monomial can feed one Toffoli per stage for free (weight-1
    monomials twice: the address qubit and its select copy); further uses get a
    CNOT copy in the work pool.
    """
    free = {m: _holders(m) for m in available}
    chosen: list[Product] = []
    copies_total = 0
    for m in sorted(products, key=lambda v: (-v.bit_count(), v)):
        k = m.bit_count()
        best = None
        for a in _submasks(m):
            b = m ^ a
            if a == 0 or b == 0 or a > b:
                continue
            if a not in available or b not in available:
                continue
            if a.bit_count() > max_factor or b.bit_count() > max_factor:
                continue
            need = (free[a] == 0) + (free[b] == 0)
            balance = abs(a.bit_count() - b.bit_count())
            key = (need, balance, min(a, b))
            if best is None or key < best[0]:
                best = (key, a, b)
                if need == 0 and balance <= k % 2:
                    break
        if best is None:
            raise QramError(f"no available factor split for monomial mask {m:#x}")
        _, a, b = best
        copies = tuple(f for f in (a, b) if free[f] == 0)
        for f in (a, b):
            if free[f]:
                free[f] -= 1
        copies_total += len(copies)
        chosen.append(Product(m, a, b, mask_to_address(m, n), copies))
    chosen.sort(key=lambda p: p.mask)
    return chosen, copies_total


def _submasks(m: int):
    sub = m
    while sub:
        yield sub
        sub = (sub - 1) & m


def build_schedule(n: int, *, rebalance: bool = True) -> MonomialSchedule:
    """Toffoli stages for the parallel variant.

    Stage s builds every monomial of weight in (2^(s-1), 2^s] from factors of
    weight <= 2^(s-1).  When that leaves the peak work-copy demand above N
    (n >= 11), monomials of the second-to-last stage that no later product
    needs are deferred to the last stage until the two peaks balance; the
    stage count is unchanged.
    """
    if not MIN_BITS <= n <= MAX_BITS:
        raise QramError(f"address bits must be in [{MIN_BITS}, {MAX_BITS}], got {n}")
    S = stage_count(n)
    by_stage = []
    for s in range(1, S + 1):
        lo, hi = 1 << (s - 1), 1 << s
        by_stage.append([m for m in range(1 << n) if lo < m.bit_count() <= hi])

    stages, demand = _plan(n, by_stage)
    deferred: list[int] = []
    if rebalance and S >= 2 and max(demand) > (1 << n):
        half = 1 << (S - 2)
        top = 1 << (S - 1)
        P, Q = len(by_stage[-2]), len(by_stage[-1])
        x = max(0, (3 * P - 2 * Q) // 5)
        candidates = sorted(
            (m for m in by_stage[-2] if half < m.bit_count() < top),
            key=lambda m: (m.bit_count(), -m),
        )
        deferred = candidates[:x]
        moved = set(deferred)
        by_stage[-2] = [m for m in by_stage[-2] if m not in moved]
        by_stage[-1] = by_stage[-1] + deferred
        stages, demand = _plan(n, by_stage)
    return MonomialSchedule(n, tuple(tuple(s) for s in stages), tuple(demand), tuple(sorted(deferred)))


def _plan(n: int, by_stage: list[list[int]]) -> tuple[list[list[Product]], list[int]]:
    available = {1 << i for i in range(n)}
    stages, demand = [], []
    for s, products in enumerate(by_stage, 1):
        chosen, copies = _assign(n, products, available, 1 << (s - 1))
        stages.append(chosen)
        demand.append(copies)
        available |= set(products)
    return stages, demand


# ---------------------------------------------------------------- encoding network


@dataclass
class EncodingPlan:
    """Gate lists for steps 1-2 over explicit qubit ids, so two QRAMs can be interleaved."""

    prelude: list[Gate] = field(default_factory=list)
    stages: list[list[Gate]] = field(default_factory=list)
    xor_network: list[Gate] = field(default_factory=list)
    copies: int = 0

    def gates(self) -> list[Gate]:
        return self.prelude + [g for st in self.stages for g in st] + self.xor_network


def _prelude(n: int, address: Sequence[int], select: Sequence[int]) -> list[Gate]:
    return [Gate.cnot(address[i], select[mask_to_address(1 << i, n)]) for i in range(n)]


def xor_network(n: int, select: Sequence[int]) -> list[Gate]:
    """CNOT every ancilla into its strict subsets, descending weight then ascending mask; X on the constant."""
    gates = []
    for mask in sorted(range(1, 1 << n), key=lambda m: (-m.bit_count(), m)):
        src = select[mask_to_address(mask, n)]
        for sub in sorted(_strict_subsets(mask)):
            gates.append(Gate.cnot(src, select[mask_to_address(sub, n)]))
    gates.append(Gate.x(select[0]))
    return gates


def _strict_subsets(mask: int):
    sub = (mask - 1) & mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def sequential_plan(n: int, address: Sequence[int], select: Sequence[int]) -> EncodingPlan:
    """One Toffoli per monomial, ascending weight, split as first ceil(k/2) indices x rest.

    A weight-1 factor is read from whichever of its two copies (address qubit or
    select ancilla) was last touched at the lower Toffoli level, which lets
    independent products overlap.
    """
    level: dict[int, int] = {}
    toffolis = []
    for mask in sorted(range(1 << n), key=lambda m: (m.bit_count(), m)):
        k = mask.bit_count()
        if k < 2:
            continue
        idx = [i for i in range(n) if mask >> i & 1]
        a = sum(1 << i for i in idx[: (k + 1) // 2])
        b = mask ^ a
        qa, qb = (_pick_holder(n, f, address, select, level) for f in (a, b))
        t = select[mask_to_address(mask, n)]
        lvl = max(level.get(qa, 0), level.get(qb, 0), level.get(t, 0)) + 1
        for q in (qa, qb, t):
            level[q] = lvl
        toffolis.append(Gate.toffoli(qa, qb, t))
    return EncodingPlan(_prelude(n, address, select), [toffolis], xor_network(n, select))


def _pick_holder(n, mask, address, select, level) -> int:
    anc = select[mask_to_address(mask, n)]
    if mask.bit_count() != 1:
        return anc
    q = address[mask.bit_length() - 1]
    return q if level.get(q, 0) <= level.get(anc, 0) else anc


def parallel_plan(
    n: int, address: Sequence[int], select: Sequence[int], work: Sequence[int], schedule: MonomialSchedule
) -> EncodingPlan:
    """Staged Toffolis; extra factor uses are served by CNOT copies into ``work``, undone after the stage."""
    if len(work) < schedule.work_pool:
        raise QramError(f"work register has {len(work)} qubits, schedule needs {schedule.work_pool}")
    plan = EncodingPlan(_prelude(n, address, select))
    for stage in schedule.stages:
        used: dict[int, int] = {}
        copies: list[Gate] = []
        toffolis: list[Gate] = []
        w = 0
        for p in stage:
            controls = []
            for f in (p.left, p.right):
                holders = [select[mask_to_address(f, n)]]
                if f.bit_count() == 1:
                    holders.insert(0, address[f.bit_length() - 1])
                k = used.get(f, 0)
                if k < len(holders):
                    controls.append(holders[k])
                    used[f] = k + 1
                else:
                    copies.append(Gate.cnot(holders[-1], work[w]))
                    controls.append(work[w])
                    w += 1
            toffolis.append(Gate.toffoli(controls[0], controls[1], select[p.target]))
        plan.copies += len(copies)
        plan.stages.append(copies + toffolis + copies[::-1])
    plan.xor_network = xor_network(n, select)
    return plan


# ---------------------------------------------------------------- full circuits


@dataclass(frozen=True)
class QramSynthesis:
    config: QramConfig
    circuit: Circuit
    encode_end: int  # gate index just past step 2
    io_end: int  # gate index just past step 3
    schedule: MonomialSchedule | None = None
    copies: int = 0

    def encoding_circuit(self) -> Circuit:
        """Steps 1-2 only, keeping stage marks and layout."""
        c = self.circuit
        return Circuit(c.layout, c.gates[: self.encode_end], tuple(b for b in c.barriers if b <= self.encode_end))


def layout_for(cfg: QramConfig, work: int) -> QubitLayout:
    N, ell = cfg.N, cfg.ell
    regs = [("address", cfg.n), ("select", N), ("work", work), ("memory", N * ell)]
    if cfg.parallel_readout and cfg.mode is not Mode.PHASE:
        regs.append(("parity", N * ell))
        if ell > 1:
            regs.append(("fanout", (ell - 1) * N))
    regs.append(("out", ell))
    return QubitLayout.build(regs)


def io_gates(
    mode: Mode,
    select: Sequence[int],
    memory: Sequence[int],
    out: Sequence[int],
    ell: int,
    parity: Sequence[int] | None = None,
    fanout: Sequence[int] | None = None,
) -> tuple[list[Gate], list[Gate], list[Gate]]:
    """Step 3 as (setup, toffoli layer, teardown).

    Word j bit t lives at ``memory[j*ell + t]``.  With parity ancillae every
    Toffoli gets its own target (read) or its own control copy (write), and
    ``fanout`` supplies ell-1 extra copies of each select ancilla so the layer
    touches pairwise-disjoint qubits.
    """
    N = len(select)
    if mode is Mode.PHASE:
        return [], [Gate.cz(select[j], memory[j]) for j in range(N)], []
    if parity is None:
        if mode is Mode.READ:
            tof = [Gate.toffoli(select[j], memory[j * ell + t], out[t]) for j in range(N) for t in range(ell)]
        else:
            tof = [Gate.toffoli(select[j], out[t], memory[j * ell + t]) for j in range(N) for t in range(ell)]
        return [], tof, []

    def sel(j: int, t: int) -> int:
        return select[j] if t == 0 else fanout[j * (ell - 1) + t - 1]

    setup = []
    if ell > 1:
        setup += [Gate.fanout(select[j], [sel(j, t) for t in range(1, ell)]) for j in range(N)]
    if mode is Mode.READ:
        tof = [Gate.toffoli(sel(j, t), memory[j * ell + t], parity[j * ell + t]) for j in range(N) for t in range(ell)]
        fan_in = [Gate.cnot(parity[j * ell + t], out[t]) for t in range(ell) for j in range(N)]
        return setup, tof, fan_in
    bus_copy = [Gate.fanout(out[t], [parity[j * ell + t] for j in range(N)]) for t in range(ell)]
    tof = [Gate.toffoli(sel(j, t), parity[j * ell + t], memory[j * ell + t]) for j in range(N) for t in range(ell)]
    return setup + bus_copy, tof, []


def add_io(b: CircuitBuilder, setup, tof, middle, *, paired: bool) -> None:
    """Emit step 3.  Read with parity: copy into parity, fan in, uncompute the copies."""
    b.barrier()
    start = len(b)
    b.extend(setup)
    _add_layered(b, tof)
    if paired:
        b.extend(middle)
        tof_start = start + len(setup)
        tof_end = tof_start + len(tof)
        b.barrier()
        b.mirror(tof_start, tof_end)
        b.barrier()
        b.mirror(start, start + len(setup))
    else:
        b.extend(middle)
        if setup:
            b.mirror(start, start + len(setup))
    b.barrier()


def _add_layered(b: CircuitBuilder, gates: Sequence[Gate]) -> None:
    """Emit gates grouped into qubit-disjoint layers with a barrier between layers."""
    layers: list[list[Gate]] = []
    level: dict[int, int] = {}
    for g in gates:
        lvl = max((level.get(q, 0) for q in g.qubits), default=0)
        if len(layers) <= lvl:
            layers.append([])
        layers[lvl].append(g)
        for q in g.qubits:
            level[q] = lvl + 1
    for i, layer in enumerate(layers):
        if i:
            b.barrier()
        b.extend(layer)


def emit_encoding(b: CircuitBuilder, plans: Sequence[EncodingPlan], staged: bool) -> None:
    """Steps 1-2 of one or more QRAMs, sharing stage marks stage by stage."""
    for p in plans:
        b.extend(p.prelude)
    depth = max((len(p.stages) for p in plans), default=0)
    for s in range(depth):
        if staged:
            b.barrier()
        for p in plans:
            if s < len(p.stages):
                b.extend(p.stages[s])
    if staged:
        b.barrier()
    for p in plans:
        b.extend(p.xor_network)


def synthesize(cfg: QramConfig) -> QramSynthesis:
    schedule = None
    if cfg.variant is Variant.PARALLEL:
        schedule = build_schedule(cfg.n)
        work = schedule.work_pool
    else:
        work = 0
    if cfg.pad_work:
        work = max(work, cfg.N)
    layout = layout_for(cfg, work)
    address, select = list(layout["address"]), list(layout["select"])
    if schedule is not None:
        plan = parallel_plan(cfg.n, address, select, list(layout["work"]), schedule)
    else:
        plan = sequential_plan(cfg.n, address, select)

    b = CircuitBuilder(layout)
    staged = cfg.variant is Variant.PARALLEL
    emit_encoding(b, [plan], staged)
    encode_end = len(b)

    parity = list(layout["parity"]) if "parity" in layout else None
    fanout = list(layout["fanout"]) if "fanout" in layout else None
    setup, tof, middle = io_gates(
        cfg.mode, select, list(layout["memory"]), list(layout["out"]), cfg.ell, parity, fanout
    )
    if cfg.mode is Mode.PHASE:
        b.extend(tof)
    else:
        add_io(b, setup, tof, middle, paired=parity is not None and cfg.mode is Mode.READ)
    io_end = len(b)
    b.mirror(0, encode_end, stage_marks=staged)
    if not staged:
        b.barriers.clear()
    return QramSynthesis(cfg, b.build(), encode_end, io_end, schedule, plan.copies)


def synth_sequential(cfg: QramConfig) -> Circuit:
    if cfg.variant is not Variant.SEQUENTIAL:
        raise QramError("synth_sequential needs the sequential variant")
    return synthesize(cfg).circuit


def synth_parallel(cfg: QramConfig) -> Circuit:
    if cfg.variant is not Variant.PARALLEL:
        raise QramError("synth_parallel needs the parallel variant")
    return synthesize(cfg).circuit


def synth(cfg: QramConfig) -> Circuit:
    return synthesize(cfg).circuit


def synth_io_stage(cfg: QramConfig) -> Circuit:
    """Step 3 alone on the configuration's layout (select ancillae assumed prepared)."""
    synthesis = synthesize(cfg)
    c = synthesis.circuit
    lo, hi = synthesis.encode_end, synthesis.io_end
    pairs = tuple((i - lo, j - lo) for i, j in c.pairs if lo <= i and j < hi)
    return Circuit(c.layout, c.gates[lo:hi], tuple(x - lo for x in c.barriers if lo <= x <= hi), pairs)


# ---------------------------------------------------------------- closed forms


def toffoli_pairs_formula(n: int) -> int:
    return (1 << n) - n - 1


def cnot_pairs_formula(n: int) -> int:
    return n + 3**n - (1 << n)


def qram_resources(n: int, ell: int = 1, variant: Variant = Variant.PARALLEL, parallel_readout: bool = False) -> ResourceReport:
    """Closed-form logical counts for a read QRAM; valid for any n (no circuit is built).

    Parallel depth is ceil(log2 n) encode stages, the read stage and the
    mirrored decode stages.  The read stage is a single layer (plus its
    uncompute) with parity readout.  Without it the N*ell Toffolis share the
    ell output qubits, and the layered schedule puts word j bit t on layer
    j + t, giving N + ell - 1 layers.
    """
    variant = Variant(variant)
    N = 1 << n
    pairs = toffoli_pairs_formula(n)
    io = N * ell
    S = stage_count(n)
    io_layers = 1 if parallel_readout else N + ell - 1
    parallel = variant is Variant.PARALLEL
    return ResourceReport(
        source="formula",
        toffoli_count=2 * pairs + (2 * io if parallel_readout else io),
        toffoli_pair_count=pairs + (io if parallel_readout else 0),
        toffoli_depth=(2 * S + (2 if parallel_readout else io_layers)) if parallel else None,
        toffoli_compute_depth=(S + io_layers) if parallel else None,
        # parity readout with ell > 1 adds one paired select fan-out per word
        cnot_pair_count=None if parallel else cnot_pairs_formula(n) + (N if parallel_readout and ell > 1 else 0),
        non_memory_qubits=(2 * N + n) if parallel else (N + n),
        extra={"n": n, "ell": ell, "variant": variant.value, "bound": "upper" if parallel else "exact"},
    )


def bucket_brigade_reference(n: int) -> ResourceReport:
    """Published counts of the parallel bucket-brigade QRAM, read/write excluded."""
    N = 1 << n
    return ResourceReport(
        source="formula",
        toffoli_count=2 * (N - 2),
        toffoli_pair_count=N - 2,
        toffoli_depth=n,
        toffoli_compute_depth=n,
        qubit_count=2 * N + n,
        non_memory_qubits=2 * N + n,
        extra={"n": n, "architecture": "bucket-brigade"},
    )
