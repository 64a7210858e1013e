"""Toffoli-count optimization of a group of multi-controlled NOTs with one shared target.

The accepted bit strings S become the XOR of their encoding polynomials, a
GF(2) polynomial that is 1 exactly on S.  That polynomial is factored into
sums of products of linear polynomials; every binary product costs one
Toffoli, linear pieces cost only CNOT and X gates.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Iterable, Sequence

from .circuit_ir import Circuit, CircuitBuilder, Gate, QubitLayout
from .polyenc import BitString, EncodingError, GF2Polynomial, xor_sum
from .revsim import SlicedState, Verdict, apply

MAX_BITS = 20
MAX_SEARCH_BITS = 16
EXHAUSTIVE_BITS = 6


class OptError(ValueError):
    pass


class NodeKind(str, Enum):
    SUM = "sum"
    PRODUCT = "product"
    LEAF = "leaf"


Masks = frozenset  # a polynomial as its set of monomial masks


@dataclass(frozen=True)
class FactorTree:
    kind: NodeKind
    n: int
    children: tuple["FactorTree", ...] = ()
    poly: GF2Polynomial | None = None  # LEAF payload, degree <= 1

    def __post_init__(self):
        if self.kind is NodeKind.LEAF:
            if self.poly is None or not self.poly.is_linear or self.children:
                raise OptError("leaf needs a linear payload and no children")
        elif self.kind is NodeKind.PRODUCT and len(self.children) != 2:
            raise OptError("product nodes are binary")

    @classmethod
    def leaf(cls, n: int, masks: Iterable[int]) -> "FactorTree":
        return cls(NodeKind.LEAF, n, poly=GF2Polynomial.from_masks(n, masks))

    @property
    def cost(self) -> int:
        """Number of binary products, i.e. compute-side Toffolis."""
        own = 1 if self.kind is NodeKind.PRODUCT else 0
        return own + sum(ch.cost for ch in self.children)

    def masks(self) -> Masks:
        if self.kind is NodeKind.LEAF:
            return frozenset(self.poly.masks)
        if self.kind is NodeKind.SUM:
            acc: set[int] = set()
            for ch in self.children:
                acc ^= ch.masks()
            return frozenset(acc)
        return _mul(self.children[0].masks(), self.children[1].masks())

    def to_poly(self) -> GF2Polynomial:
        return GF2Polynomial(self.n, tuple(sorted(self.masks())))

    def evaluate(self, point: int) -> int:
        if self.kind is NodeKind.LEAF:
            return self.poly.evaluate(point)
        vals = [ch.evaluate(point) for ch in self.children]
        if self.kind is NodeKind.SUM:
            return sum(vals) & 1
        return vals[0] & vals[1]

    def __str__(self) -> str:
        if self.kind is NodeKind.LEAF:
            return str(self.poly)
        if self.kind is NodeKind.SUM:
            return " + ".join(str(ch) for ch in self.children) if self.children else "0"
        return "·".join(f"({ch})" if _needs_parens(ch) else str(ch) for ch in self.children)


def _needs_parens(t: FactorTree) -> bool:
    return t.kind is NodeKind.SUM or (t.kind is NodeKind.LEAF and len(t.poly.masks) > 1)


def _mul(a: Masks, b: Masks) -> Masks:
    acc: set[int] = set()
    for x in a:
        for y in b:
            acc ^= {x | y}
    return frozenset(acc)


# ---------------------------------------------------------------- step 1-2


def spec_to_poly(S: Iterable[BitString | str], n: int) -> GF2Polynomial:
    strings = [s if isinstance(s, BitString) else BitString.parse(s) for s in S]
    if not 1 <= n <= MAX_BITS:
        raise OptError(f"n must be in [1, {MAX_BITS}]")
    if len({str(s) for s in strings}) != len(strings):
        raise OptError("duplicate bit strings in spec")
    try:
        return xor_sum(strings, n)
    except EncodingError as exc:
        raise OptError(str(exc)) from exc


# ---------------------------------------------------------------- step 3


def _linear(m: Masks) -> bool:
    return all(x.bit_count() <= 1 for x in m)


def _support(m: Masks) -> int:
    s = 0
    for x in m:
        s |= x
    return s


def _divide(p: Masks, i: int) -> tuple[Masks, Masks]:
    """(A, B) with p = x_i A + B and x_i absent from both."""
    bit = 1 << i
    return frozenset(x ^ bit for x in p if x & bit), frozenset(x for x in p if not x & bit)


def _group(p: Masks, i: int, A: Masks) -> int:
    """Extra variables j with x_j A fully inside p, so (x_i + sum x_j) A can be pulled out at once."""
    used = _support(A) | (1 << i)
    group = 0
    for j in range(_support(p).bit_length()):
        bit = 1 << j
        if used & bit:
            continue
        if all((x | bit) in p for x in A):
            group |= bit
    return group


def _candidates(p: Masks):
    """(linear factor masks, quotient A, remainder) triples with p = L A + remainder."""
    nonlinear = _support(frozenset(x for x in p if x.bit_count() > 1))
    for i in range(nonlinear.bit_length()):
        if not nonlinear >> i & 1:
            continue
        A, B = _divide(p, i)
        yield frozenset({1 << i}), A, B
        # (1 + x_i) A + (A + B)
        yield frozenset({0, 1 << i}), A, B ^ A
        group = _group(p, i, A)
        if group:
            L = frozenset({1 << i} | {1 << j for j in range(group.bit_length()) if group >> j & 1})
            yield L, A, p ^ _mul(L, A)


def _search(p: Masks, exhaustive: bool) -> tuple[int, tuple]:
    """Best (cost, plan) where plan is ('lin', masks) or ('sum', lin, ((L, A_plan), ...))."""
    if _linear(p):
        return 0, ("lin", p)
    best = None
    cands = list(_candidates(p))
    if not exhaustive:
        # rank by how many monomials the step removes, keep the top few
        cands.sort(key=lambda c: (len(c[2]) + len(c[1]), len(c[1])))
        cands = cands[:3]
    for L, A, rest in cands:
        if not A or A == frozenset({0}):
            continue
        ca, pa = _solve(A, exhaustive)
        cr, pr = _solve(rest, exhaustive)
        cost = 1 + ca + cr
        if best is None or cost < best[0]:
            best = (cost, _join(L, pa, pr))
    if best is None:  # pragma: no cover - nonlinear p always has a usable divisor
        raise OptError("no divisor found")
    return best


@lru_cache(maxsize=1 << 18)
def _solve(p: Masks, exhaustive: bool) -> tuple[int, tuple]:
    return _search(p, exhaustive)


def _join(L: Masks, a_plan: tuple, rest_plan: tuple) -> tuple:
    term = (L, a_plan)
    if rest_plan[0] == "lin":
        return ("sum", rest_plan[1], (term,))
    _, lin, terms = rest_plan
    return ("sum", lin, (term,) + terms)


def _plan_to_tree(n: int, plan: tuple) -> FactorTree:
    if plan[0] == "lin":
        return FactorTree.leaf(n, plan[1])
    _, lin, terms = plan
    children = []
    if lin:
        children.append(FactorTree.leaf(n, lin))
    for L, a_plan in terms:
        children.append(FactorTree(NodeKind.PRODUCT, n, (FactorTree.leaf(n, L), _plan_to_tree(n, a_plan))))
    return FactorTree(NodeKind.SUM, n, tuple(children))


def minterm_tree(n: int, accepted: Sequence[int]) -> FactorTree:
    """Sum of one chain of n linear factors per accepted point (b_1 at mask bit 0)."""
    terms = []
    for point in accepted:
        factors = [FactorTree.leaf(n, [1 << i] if point >> i & 1 else [0, 1 << i]) for i in range(n)]
        node = factors[-1]
        for f in reversed(factors[:-1]):
            node = FactorTree(NodeKind.PRODUCT, n, (f, node))
        terms.append(node)
    if len(terms) == 1:
        return terms[0]
    return FactorTree(NodeKind.SUM, n, tuple(terms))


def factor_linear(p: GF2Polynomial, exhaustive: bool | None = None) -> FactorTree:
    """Factor into sums of (linear) x (sub-tree) products with few products.

    Candidate steps pull a linear factor out of the monomials containing one
    variable: ``x_i A``, ``(1 + x_i) A`` or ``(x_i + x_j + ...) A`` where every
    ``x_j A`` is already present.  All candidates are searched for n <= 6,
    the three most reducing ones above that.  The result is never worse
    than one product chain per accepted (or, plus 1, per rejected) input.
    """
    n = p.n
    if n > MAX_SEARCH_BITS:
        raise OptError(f"factoring limited to n <= {MAX_SEARCH_BITS}")
    if exhaustive is None:
        exhaustive = n <= EXHAUSTIVE_BITS
    cost, plan = _solve(frozenset(p.masks), exhaustive)
    best = _plan_to_tree(n, plan)
    if cost > 0 and n > 1:
        ones = [pt for pt in range(1 << n) if p.evaluate(pt)]
        zeros = (1 << n) - len(ones)
        if len(ones) * (n - 1) < cost and ones:
            best = minterm_tree(n, ones)
        elif zeros * (n - 1) < min(cost, len(ones) * (n - 1)):
            rejected = [pt for pt in range(1 << n) if not p.evaluate(pt)]
            best = FactorTree(NodeKind.SUM, n, (FactorTree.leaf(n, [0]), minterm_tree(n, rejected)))
    return best


# ---------------------------------------------------------------- step 4


def opt_layout(n: int, work: int) -> QubitLayout:
    regs = [("input", n)]
    if work:
        regs.append(("work", work))
    regs.append(("out", 1))
    return QubitLayout.build(regs)


def required_work(t: FactorTree) -> int:
    """Work qubits needed by :func:`tree_to_circuit` (reused once uncomputed)."""
    if t.kind is NodeKind.LEAF:
        return 0
    if t.kind is NodeKind.SUM:
        return max((required_work(ch) for ch in t.children), default=0)
    a, b = t.children
    need = 0
    for f in (a, b):
        if f.kind is not NodeKind.LEAF:
            need = max(need, 1 + required_work(f))
    # both factors non-linear: the first one stays live while the second is built
    if a.kind is not NodeKind.LEAF and b.kind is not NodeKind.LEAF:
        need = max(need, 1 + 1 + required_work(b))
    return need


class _Emitter:
    def __init__(self, layout: QubitLayout, n: int):
        self.b = CircuitBuilder(layout)
        self.inputs = list(layout["input"])
        self.work = list(layout["work"]) if "work" in layout else []
        self.free = list(reversed(self.work))

    def take(self) -> int:
        if not self.free:
            raise OptError("insufficient work qubits")
        return self.free.pop()

    def linear_into(self, masks: Masks, target: int) -> None:
        for m in sorted(masks):
            if m == 0:
                self.b.add(Gate.x(target))
            else:
                self.b.add(Gate.cnot(self.inputs[m.bit_length() - 1], target))

    def in_place(self, masks: Masks) -> tuple[int, int]:
        """Turn one input qubit into the linear form; returns (qubit, gate start) for undo."""
        vars_ = sorted(m for m in masks if m)
        pivot = self.inputs[vars_[0].bit_length() - 1]
        start = len(self.b)
        for m in vars_[1:]:
            self.b.add(Gate.cnot(self.inputs[m.bit_length() - 1], pivot))
        if 0 in masks:
            self.b.add(Gate.x(pivot))
        return pivot, start

    def undo(self, start: int, end: int) -> None:
        self.b.extend(reversed(self.b.gates[start:end]))

    def compute(self, t: FactorTree, target: int) -> None:
        """XOR the value of ``t`` into ``target``; every other qubit is left as found."""
        if t.kind is NodeKind.LEAF:
            self.linear_into(frozenset(t.poly.masks), target)
            return
        if t.kind is NodeKind.SUM:
            for ch in t.children:
                self.compute(ch, target)
            return
        held: list[tuple[int, int, int]] = []  # (qubit, start, end) of work factors to uncompute
        controls: list[int] = []
        leaves: list[FactorTree] = []
        for f in t.children:
            if f.kind is NodeKind.LEAF:
                leaves.append(f)
                continue
            w = self.take()
            start = len(self.b)
            self.compute(f, w)
            held.append((w, start, len(self.b)))
            controls.append(w)
        edits = len(self.b)
        used_pivots = set()
        for f in leaves:
            masks = frozenset(f.poly.masks)
            if masks == frozenset({0}):
                raise OptError("constant factor in product")
            pivot, _ = self.in_place(masks)
            if pivot in used_pivots:
                raise OptError("linear factors share a pivot qubit")
            used_pivots.add(pivot)
            controls.append(pivot)
        edits_end = len(self.b)
        self.b.add(Gate.toffoli(controls[0], controls[1], target))
        self.undo(edits, edits_end)
        for w, start, end in reversed(held):
            self.b.mirror(start, end, stage_marks=False)
            self.free.append(w)


def tree_to_circuit(t: FactorTree, layout: QubitLayout | None = None) -> Circuit:
    n = t.n
    if layout is None:
        layout = opt_layout(n, required_work(t))
    if layout["input"].size != n:
        raise OptError("layout input width differs from tree")
    if ("work" in layout and layout["work"].size or 0) < required_work(t):
        raise OptError("insufficient work qubits")
    em = _Emitter(layout, n)
    em.compute(t, layout["out"][0])
    return em.b.build()


# ---------------------------------------------------------------- baselines and checks


def ckx_baseline_count(S: Sequence[BitString | str], n: int) -> int:
    """Toffolis of the per-string C^nX decomposition: n - 1 each."""
    return len(list(S)) * max(n - 1, 0)


def ckx_baseline(S: Sequence[BitString | str], n: int) -> Circuit:
    """One C^nX per accepted string, zero-controls conjugated by X."""
    layout = opt_layout(n, 0)
    b = CircuitBuilder(layout)
    inputs, out = list(layout["input"]), layout["out"][0]
    for s in S:
        s = s if isinstance(s, BitString) else BitString.parse(s)
        flips = [inputs[i] for i, bit in enumerate(s.bits) if bit == 0]
        b.extend(Gate.x(q) for q in flips)
        b.add(Gate.mcx(inputs, out))
        b.extend(Gate.x(q) for q in flips)
    return b.build()


def membership(S: Iterable[BitString | str], n: int) -> set[int]:
    """Accepted points as monomial-style masks (b_1 at bit 0)."""
    out = set()
    for s in S:
        s = s if isinstance(s, BitString) else BitString.parse(s)
        if s.n != n:
            raise OptError(f"bit string {s} has length {s.n}, expected {n}")
        out.add(s.mask)
    return out


def verify_equiv(c: Circuit, S: Iterable[BitString | str], n: int) -> Verdict:
    """All 2^n inputs: out flips exactly on S; inputs and work restored; no phase."""
    if n > MAX_SEARCH_BITS:
        raise OptError(f"equivalence check limited to n <= {MAX_SEARCH_BITS}")
    accepted = membership(S, n)
    if "input" not in c.layout or c.layout["input"].size != n:
        return Verdict("equiv", False, detail=f"circuit has no {n}-qubit input register")
    width = 1 << n
    st = SlicedState.zeros(c.layout.size, width)
    inputs = list(c.layout["input"])
    for i, q in enumerate(inputs):
        st.cols[q] = sum(1 << k for k in range(width) if k >> i & 1)
    before = st.copy()
    apply(st, c)
    out = c.layout["out"][0]
    want = sum(1 << k for k in accepted)
    diff = st.cols[out] ^ want
    if diff:
        k = (diff & -diff).bit_length() - 1
        return Verdict(
            "equiv", False, k, counterexample=k, expected=int(k in accepted), actual=st.cols[out] >> k & 1,
            detail=f"wrong output on input {format(BitString.from_int(_mask_to_int(k, n), n))}",
        )
    for q, (a, b) in enumerate(zip(st.cols, before.cols)):
        if q != out and a != b:
            k = ((a ^ b) & -(a ^ b)).bit_length() - 1
            name, i = c.layout.locate(q)
            return Verdict("equiv", False, k, counterexample=k, detail=f"{name}[{i}] not restored")
    if st.sign:
        return Verdict("equiv", False, detail="phase -1 introduced")
    return Verdict("equiv", True, width)


def _mask_to_int(mask: int, n: int) -> int:
    return int(format(mask, f"0{n}b")[::-1], 2)


@dataclass(frozen=True)
class OptResult:
    n: int
    spec: tuple[str, ...]
    poly: GF2Polynomial
    tree: FactorTree
    circuit: Circuit
    baseline: int
    verdict: Verdict

    @property
    def toffoli_count(self) -> int:
        return self.tree.cost

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "spec": list(self.spec),
            "polynomial": str(self.poly),
            "factored": str(self.tree),
            "toffoli_count": self.toffoli_count,
            "toffoli_gates_total": sum(1 for g in self.circuit.gates if g.kind.value == "ccx"),
            "baseline_toffoli_count": self.baseline,
            "work_qubits": self.circuit.layout.size - self.n - 1,
            "verdict": self.verdict.to_dict(),
        }


def optimize(S: Sequence[BitString | str], n: int) -> OptResult:
    strings = [s if isinstance(s, BitString) else BitString.parse(s) for s in S]
    p = spec_to_poly(strings, n)
    if n > MAX_SEARCH_BITS:
        raise OptError(f"factoring limited to n <= {MAX_SEARCH_BITS}")
    tree = factor_linear(p)
    c = tree_to_circuit(tree)
    return OptResult(n, tuple(str(s) for s in strings), p, tree, c, ckx_baseline_count(strings, n), verify_equiv(c, strings, n))


def parse_spec(text: str) -> list[BitString]:
    """One bit string per line; blank lines and '#' comments ignored."""
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            out.append(BitString.parse(line))
        except EncodingError as exc:
            raise OptError(f"line {lineno}: {exc}") from exc
    return out


__all__ = [
    "FactorTree",
    "NodeKind",
    "OptError",
    "OptResult",
    "ckx_baseline",
    "ckx_baseline_count",
    "factor_linear",
    "minterm_tree",
    "optimize",
    "parse_spec",
    "required_work",
    "spec_to_poly",
    "tree_to_circuit",
    "verify_equiv",
]
