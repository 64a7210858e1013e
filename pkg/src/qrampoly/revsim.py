"""Exact simulation of permutation-plus-sign circuits.

Every gate in the IR maps a basis state to a basis state, with CZ the only
source of a (-1) sign.  States are simulated bit-sliced: qubit q is one Python
int whose bit k is the value of q in batch item k, so a gate is a single
big-int operation across the whole batch (typically all 2^n addresses).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .circuit_ir import Circuit, GateKind
from .qram_synth import Mode, QramConfig, synthesize


@dataclass(frozen=True)
class BasisState:
    bits: tuple[int, ...]
    phase: int = 1

    def __post_init__(self):
        if self.phase not in (1, -1):
            raise ValueError("phase must be +1 or -1")

    @classmethod
    def zeros(cls, size: int) -> "BasisState":
        return cls((0,) * size)


@dataclass
class SlicedState:
    """A batch of basis states, one int per qubit."""

    width: int
    cols: list[int]
    sign: int = 0  # bit k set: batch item k carries phase -1

    @classmethod
    def zeros(cls, qubits: int, width: int) -> "SlicedState":
        return cls(width, [0] * qubits)

    @property
    def full(self) -> int:
        return (1 << self.width) - 1

    def copy(self) -> "SlicedState":
        return SlicedState(self.width, list(self.cols), self.sign)

    def item(self, k: int) -> BasisState:
        return BasisState(tuple(c >> k & 1 for c in self.cols), -1 if self.sign >> k & 1 else 1)


def apply(state: SlicedState, c: Circuit, start: int = 0, stop: int | None = None) -> SlicedState:
    """Run gates[start:stop] in place."""
    cols, full = state.cols, state.full
    sign = state.sign
    for g in c.gates[start:stop]:
        kind = g.kind
        if kind is GateKind.X:
            cols[g.targets[0]] ^= full
        elif kind is GateKind.CNOT:
            cols[g.targets[0]] ^= cols[g.controls[0]]
        elif kind is GateKind.TOFFOLI:
            cols[g.targets[0]] ^= cols[g.controls[0]] & cols[g.controls[1]]
        elif kind is GateKind.MULTI_TARGET_CNOT:
            v = cols[g.controls[0]]
            for t in g.targets:
                cols[t] ^= v
        elif kind is GateKind.CKX:
            v = full
            for q in g.controls:
                v &= cols[q]
            cols[g.targets[0]] ^= v
        elif kind is GateKind.CZ:
            sign ^= cols[g.controls[0]] & cols[g.targets[0]]
        else:  # pragma: no cover
            raise ValueError(f"unknown gate kind {kind}")
    state.sign = sign
    return state


def run(c: Circuit, s0: BasisState) -> BasisState:
    if len(s0.bits) != c.layout.size:
        raise ValueError(f"state has {len(s0.bits)} bits, layout has {c.layout.size} qubits")
    st = SlicedState(1, list(s0.bits), 1 if s0.phase == -1 else 0)
    return apply(st, c).item(0)


def run_batch(c: Circuit, states: Sequence[BasisState]) -> list[BasisState]:
    st = SlicedState.zeros(c.layout.size, len(states))
    for k, s in enumerate(states):
        for q, bit in enumerate(s.bits):
            if bit:
                st.cols[q] |= 1 << k
        if s.phase == -1:
            st.sign |= 1 << k
    apply(st, c)
    return [st.item(k) for k in range(len(states))]


# ---------------------------------------------------------------- verification


@dataclass
class Verdict:
    check: str
    passed: bool
    checked: int = 0
    counterexample: int | None = None
    expected: int | None = None
    actual: int | None = None
    detail: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _address_batch(c: Circuit, n: int) -> SlicedState:
    """One batch item per address k, with address[i] = bit i of k read MSB-first."""
    N = 1 << n
    st = SlicedState.zeros(c.layout.size, N)
    addr = c.layout["address"]
    for i in range(n):
        shift = n - 1 - i
        st.cols[addr[i]] = sum(1 << k for k in range(N) if k >> shift & 1)
    return st


def _load_word_register(st: SlicedState, reg, words: Sequence[int], ell: int) -> None:
    full = st.full
    for j, w in enumerate(words):
        for t in range(ell):
            if w >> t & 1:
                st.cols[reg[j * ell + t]] = full


def _word_at(st: SlicedState, qubits: Sequence[int], k: int) -> int:
    return sum((st.cols[q] >> k & 1) << t for t, q in enumerate(qubits))


def _first_bad(mask: int) -> int | None:
    return (mask & -mask).bit_length() - 1 if mask else None


def _n_of(c: Circuit) -> int:
    return c.layout["address"].size


def _check_clean(st: SlicedState, before: SlicedState, keep: set[int]) -> tuple[int, int] | None:
    """First (qubit, batch item) whose value changed outside ``keep``."""
    for q, (a, b) in enumerate(zip(st.cols, before.cols)):
        if q in keep:
            continue
        diff = a ^ b
        if diff:
            return q, _first_bad(diff)
    return None


def _resolve(target: QramConfig | Circuit) -> Circuit:
    return synthesize(target).circuit if isinstance(target, QramConfig) else target


def verify_read(target: QramConfig | Circuit, memory: Sequence[int]) -> Verdict:
    """Every address must copy its word to ``out`` and leave everything else as found."""
    c = _resolve(target)
    n = _n_of(c)
    N = 1 << n
    mem, out = c.layout["memory"], c.layout["out"]
    ell = out.size
    if len(memory) != N:
        return Verdict("read", False, detail=f"memory has {len(memory)} words, expected {N}")
    st = _address_batch(c, n)
    _load_word_register(st, mem, memory, ell)
    before = st.copy()
    apply(st, c)
    for k in range(N):
        got = _word_at(st, list(out), k)
        if got != memory[k]:
            return Verdict("read", False, k, counterexample=k, expected=memory[k], actual=got, detail="wrong word on output bus")
    dirty = _check_clean(st, before, set(out))
    if dirty:
        q, k = dirty
        name, i = c.layout.locate(q)
        return Verdict("read", False, k, counterexample=k, detail=f"{name}[{i}] not restored")
    if st.sign:
        k = _first_bad(st.sign)
        return Verdict("read", False, k, counterexample=k, detail="phase -1 after read")
    return Verdict("read", True, N)


def verify_write(target: QramConfig | Circuit, memory: Sequence[int], bus: int) -> Verdict:
    """Address k must XOR ``bus`` into word k only; bus and ancillae unchanged."""
    c = _resolve(target)
    n = _n_of(c)
    N = 1 << n
    mem, out = c.layout["memory"], c.layout["out"]
    ell = out.size
    if len(memory) != N:
        return Verdict("write", False, detail=f"memory has {len(memory)} words, expected {N}")
    st = _address_batch(c, n)
    _load_word_register(st, mem, memory, ell)
    _load_word_register(st, out, [bus], ell)
    before = st.copy()
    apply(st, c)
    for j in range(N):
        for t in range(ell):
            want = (st.full if memory[j] >> t & 1 else 0) ^ ((bus >> t & 1) << j)
            diff = st.cols[mem[j * ell + t]] ^ want
            if diff:
                k = _first_bad(diff)
                return Verdict(
                    "write", False, k, counterexample=k,
                    expected=memory[j] ^ bus if j == k else memory[j],
                    actual=_word_at(st, list(mem)[j * ell:(j + 1) * ell], k),
                    detail=f"memory word {j} wrong after writing address {k}",
                )
    dirty = _check_clean(st, before, set(mem))
    if dirty:
        q, k = dirty
        name, i = c.layout.locate(q)
        return Verdict("write", False, k, counterexample=k, detail=f"{name}[{i}] not restored")
    if st.sign:
        k = _first_bad(st.sign)
        return Verdict("write", False, k, counterexample=k, detail="phase -1 after write")
    return Verdict("write", True, N)


def select_snapshot(target: QramConfig, memory: Sequence[int] | None = None) -> list[int]:
    """Per address, the select ancillae that are 1 right after the encoding step."""
    synthesis = synthesize(target)
    c = synthesis.circuit
    n = target.n
    st = _address_batch(c, n)
    apply(st, c, 0, synthesis.encode_end)
    sel = c.layout["select"]
    return [sum((st.cols[q] >> k & 1) << j for j, q in enumerate(sel)) for k in range(1 << n)]


def oracle_phases(c_phase: Circuit, memory: Sequence[int]) -> list[int]:
    """Sign picked up by each address; raises if any qubit is left changed."""
    n = _n_of(c_phase)
    st = _address_batch(c_phase, n)
    _load_word_register(st, c_phase.layout["memory"], memory, 1)
    before = st.copy()
    apply(st, c_phase)
    dirty = _check_clean(st, before, set())
    if dirty:
        q, k = dirty
        name, i = c_phase.layout.locate(q)
        raise AssertionError(f"phase oracle left {name}[{i}] changed for address {k}")
    return [-1 if st.sign >> k & 1 else 1 for k in range(1 << n)]


def oracle_phase(c_phase: Circuit, address: int, memory: Sequence[int]) -> int:
    return oracle_phases(c_phase, memory)[address]


def verify_phase(target: QramConfig | Circuit, memory: Sequence[int]) -> Verdict:
    c = _resolve(target)
    try:
        phases = oracle_phases(c, memory)
    except AssertionError as exc:
        return Verdict("phase", False, detail=str(exc))
    for k, s in enumerate(phases):
        want = -1 if memory[k] & 1 else 1
        if s != want:
            return Verdict("phase", False, k, counterexample=k, expected=want, actual=s)
    return Verdict("phase", True, len(phases))


# ---------------------------------------------------------------- Grover


def marked_memory(n: int, marked: Iterable[int]) -> list[int]:
    mem = [0] * (1 << n)
    for m in marked:
        if not 0 <= m < len(mem):
            raise ValueError(f"marked address {m} out of range for n={n}")
        mem[m] = 1
    return mem


def grover(
    n: int, marked: Iterable[int], iterations: int, variant: str = "sequential", return_history: bool = False
):
    """Amplitude amplification with the phase-tag QRAM as oracle.

    The oracle sign of every address is obtained by simulating the synthesized
    circuit; the diffusion 2|s><s| - I is applied as inversion about the mean.
    Returns the probability of each address (and the per-iteration norms if
    ``return_history``).
    """
    marked = sorted(set(marked))
    if not marked:
        raise ValueError("at least one marked address required")
    cfg = QramConfig(n, 1, Mode.PHASE, variant)
    signs = np.array(oracle_phases(synthesize(cfg).circuit, marked_memory(n, marked)), dtype=float)
    N = 1 << n
    amp = np.full(N, 1 / math.sqrt(N), dtype=complex)
    norms = []
    for _ in range(iterations):
        amp = signs * amp
        amp = 2 * amp.mean() - amp
        norms.append(float(np.linalg.norm(amp)))
    probs = np.abs(amp) ** 2
    return (probs, norms) if return_history else probs


def grover_success_exact(N: int, k: int, iterations: int) -> float:
    theta = math.asin(math.sqrt(k / N))
    return math.sin((2 * iterations + 1) * theta) ** 2


# ---------------------------------------------------------------- dense cross-check


def dense_apply(c: Circuit, psi: np.ndarray) -> np.ndarray:
    """Apply the circuit to a full 2^Q state vector (qubit q = index bit q)."""
    Q = c.layout.size
    if psi.shape != (1 << Q,):
        raise ValueError("state vector size does not match layout")
    idx = np.arange(1 << Q)
    psi = psi.copy()
    for g in c.gates:
        if g.kind is GateKind.CZ:
            a, b = g.controls[0], g.targets[0]
            psi[((idx >> a) & (idx >> b) & 1).astype(bool)] *= -1
            continue
        cond = np.ones(1 << Q, dtype=bool)
        for q in g.controls:
            cond &= ((idx >> q) & 1).astype(bool)
        flip = sum(1 << t for t in g.targets)
        perm = np.where(cond, idx ^ flip, idx)
        out = np.empty_like(psi)
        out[perm] = psi
        psi = out
    return psi
