"""GF(2) polynomial encoding of bit strings.

A bit string ``b = b_1 ... b_n`` is mapped to the product of linear factors
``x_i`` (when ``b_i = 1``) or ``1 + x_i`` (when ``b_i = 0``).  Reduced mod 2 the
product is 1 exactly on input ``b``, which is what lets one ancilla per address
act as a selector.

Indexing convention, used by every module in the package: variable ``x_i``
(and bit ``b_i``) lives at bit ``i - 1`` of a monomial mask.  The textual bit
string keeps ``b_1`` leftmost, so the address integer ``int("011", 2)`` has
``b_1`` as its most significant bit.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Iterator, Sequence

MAX_BITS = 30
MAX_EXPAND_BITS = 24


class EncodingError(ValueError):
    """Raised for malformed bit strings or oversized expansions."""


@dataclass(frozen=True)
class BitString:
    bits: tuple[int, ...]

    def __post_init__(self):
        if not 1 <= len(self.bits) <= MAX_BITS:
            raise EncodingError(f"bit string length must be in [1, {MAX_BITS}], got {len(self.bits)}")
        if any(b not in (0, 1) for b in self.bits):
            raise EncodingError(f"bits must be 0/1: {self.bits}")

    @classmethod
    def parse(cls, text: str) -> "BitString":
        text = text.strip()
        if not text or set(text) - {"0", "1"}:
            raise EncodingError(f"not a bit string: {text!r}")
        return cls(tuple(int(c) for c in text))

    @classmethod
    def from_int(cls, value: int, n: int) -> "BitString":
        """Bit string whose binary reading (b_1 most significant) is ``value``."""
        if not 0 <= value < (1 << n):
            raise EncodingError(f"{value} does not fit in {n} bits")
        return cls(tuple((value >> (n - 1 - i)) & 1 for i in range(n)))

    @property
    def n(self) -> int:
        return len(self.bits)

    @property
    def mask(self) -> int:
        """Index set of the 1-bits, as a monomial mask."""
        return sum(1 << i for i, b in enumerate(self.bits) if b)

    def to_int(self) -> int:
        return reduce(lambda acc, b: (acc << 1) | b, self.bits, 0)

    def __str__(self) -> str:
        return "".join(map(str, self.bits))


@dataclass(frozen=True, order=True)
class Monomial:
    mask: int
    n: int

    def __post_init__(self):
        if not 0 <= self.mask < (1 << self.n):
            raise EncodingError(f"mask {self.mask} out of range for n={self.n}")

    @property
    def weight(self) -> int:
        return self.mask.bit_count()

    @property
    def indices(self) -> tuple[int, ...]:
        """1-based variable indices present in the monomial."""
        return tuple(i + 1 for i in range(self.n) if self.mask >> i & 1)

    def __str__(self) -> str:
        return format_monomial(self.mask)


@dataclass(frozen=True)
class GF2Polynomial:
    """A polynomial over GF(2) stored as a sorted tuple of distinct monomial masks."""

    n: int
    masks: tuple[int, ...]

    def __post_init__(self):
        if len(set(self.masks)) != len(self.masks):
            raise EncodingError("duplicate monomials; polynomials are XOR-canonical")
        if list(self.masks) != sorted(self.masks):
            object.__setattr__(self, "masks", tuple(sorted(self.masks)))
        if any(not 0 <= m < (1 << self.n) for m in self.masks):
            raise EncodingError(f"monomial mask out of range for n={self.n}")

    @classmethod
    def from_masks(cls, n: int, masks: Iterable[int]) -> "GF2Polynomial":
        """Build from masks, cancelling repeated terms in pairs."""
        acc: set[int] = set()
        for m in masks:
            acc ^= {m}
        return cls(n, tuple(sorted(acc)))

    @classmethod
    def zero(cls, n: int) -> "GF2Polynomial":
        return cls(n, ())

    @property
    def monomials(self) -> tuple[Monomial, ...]:
        return tuple(Monomial(m, self.n) for m in self.masks)

    @property
    def is_zero(self) -> bool:
        return not self.masks

    @property
    def degree(self) -> int:
        return max((m.bit_count() for m in self.masks), default=-1)

    @property
    def is_linear(self) -> bool:
        return all(m.bit_count() <= 1 for m in self.masks)

    def __xor__(self, other: "GF2Polynomial") -> "GF2Polynomial":
        if other.n != self.n:
            raise EncodingError("variable counts differ")
        return GF2Polynomial(self.n, tuple(sorted(set(self.masks) ^ set(other.masks))))

    def evaluate(self, point: int) -> int:
        """Value mod 2 at the assignment whose set variables form the mask ``point``."""
        return sum(1 for m in self.masks if m & point == m) & 1

    def __str__(self) -> str:
        if not self.masks:
            return "0"
        return "+".join(format_monomial(m) for m in self.masks)


@dataclass(frozen=True)
class LinearFactor:
    index: int
    negated: bool  # True for ``1 + x_i``

    def __str__(self) -> str:
        return f"1+x{self.index}" if self.negated else f"x{self.index}"


@dataclass(frozen=True)
class EncodingProduct:
    factors: tuple[LinearFactor, ...]

    @property
    def n(self) -> int:
        return len(self.factors)

    def __str__(self) -> str:
        return "·".join(f"({f})" if f.negated else str(f) for f in self.factors)


def format_monomial(mask: int) -> str:
    if mask == 0:
        return "1"
    return "".join(f"x{i + 1}" for i in range(mask.bit_length()) if mask >> i & 1)


_TERM = re.compile(r"x_?\{?(\d+)\}?")


def parse_polynomial(text: str, n: int) -> GF2Polynomial:
    """Parse ``"1+x1+x2x3"`` (LaTeX-ish ``x_2x_3`` also accepted); empty terms are skipped."""
    masks = []
    for term in text.replace(" ", "").replace("$", "").split("+"):
        if not term:
            continue
        if term == "1":
            masks.append(0)
            continue
        idx = _TERM.findall(term)
        if not idx or _TERM.sub("", term):
            raise EncodingError(f"cannot parse monomial {term!r}")
        masks.append(sum(1 << (int(i) - 1) for i in idx))
    return GF2Polynomial.from_masks(n, masks)


def encode_bit(b: int, i: int) -> LinearFactor:
    if b not in (0, 1):
        raise EncodingError(f"bit must be 0 or 1, got {b}")
    if i < 1:
        raise EncodingError(f"variable index is 1-based, got {i}")
    return LinearFactor(i, negated=(b == 0))


def encode_string(b: BitString) -> EncodingProduct:
    return EncodingProduct(tuple(encode_bit(bit, i + 1) for i, bit in enumerate(b.bits)))


def supersets(mask: int, n: int) -> Iterator[int]:
    """All masks containing ``mask`` within n variables, ascending."""
    free = ((1 << n) - 1) & ~mask
    subs = []
    sub = free
    while True:
        subs.append(sub)
        if sub == 0:
            break
        sub = (sub - 1) & free
    for s in reversed(subs):
        yield mask | s


def subsets(mask: int) -> Iterator[int]:
    """All sub-masks of ``mask`` (including 0 and itself), descending."""
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def expand(p: EncodingProduct | BitString) -> GF2Polynomial:
    """Sum-of-monomials form: every monomial whose index set contains the 1-bits."""
    if isinstance(p, BitString):
        p = encode_string(p)
    n = p.n
    if n > MAX_EXPAND_BITS:
        raise EncodingError(f"expansion limited to n <= {MAX_EXPAND_BITS} (2^n terms), got {n}")
    ones = sum(1 << (f.index - 1) for f in p.factors if not f.negated)
    return GF2Polynomial(n, tuple(supersets(ones, n)))


def evaluate_mod2(b: BitString, b_prime: BitString) -> int:
    """p_b(b') mod 2 from the factored form; equals 1 iff ``b == b'``."""
    if b.n != b_prime.n:
        raise EncodingError(f"length mismatch: {b.n} vs {b_prime.n}")
    for bi, xi in zip(b.bits, b_prime.bits):
        # factor (1 - b_i) + x_i is 0 or 2 (even) exactly when x_i != b_i
        if ((1 - bi) + xi) % 2 == 0:
            return 0
    return 1


def min_weight_monomial(b: BitString) -> Monomial:
    return Monomial(b.mask, b.n)


def label(b: BitString) -> str:
    """Alternate label ``p_<min monomial>`` as used in the encoding tables."""
    return f"p_{format_monomial(b.mask)}"


def xor_decompose(b: BitString) -> list[Monomial]:
    """The min-weight monomial of b followed by every strict superset label.

    ``p_b`` equals that monomial XOR the encoding polynomials labelled by the
    strict supersets; see :func:`reconstruct`.
    """
    return [Monomial(m, b.n) for m in supersets(b.mask, b.n)]


def reconstruct(labels: Sequence[Monomial]) -> GF2Polynomial:
    """Rebuild ``p_b`` from :func:`xor_decompose` output by XOR accumulation."""
    head, *rest = labels
    n = head.n
    acc = {head.mask}
    for lab in rest:
        acc ^= set(supersets(lab.mask, n))
    return GF2Polynomial(n, tuple(sorted(acc)))


def xor_sum(strings: Iterable[BitString], n: int | None = None) -> GF2Polynomial:
    """Symmetric difference of the expanded encodings of all strings."""
    strings = list(strings)
    if not strings:
        if n is None:
            raise EncodingError("variable count required for an empty sum")
        return GF2Polynomial.zero(n)
    widths = {s.n for s in strings}
    if len(widths) != 1 or (n is not None and widths != {n}):
        raise EncodingError(f"mixed bit-string lengths: {sorted(widths)}")
    n = widths.pop()
    if n > MAX_EXPAND_BITS:
        raise EncodingError(f"expansion limited to n <= {MAX_EXPAND_BITS}")
    acc: set[int] = set()
    for s in strings:
        acc ^= set(supersets(s.mask, n))
    return GF2Polynomial(n, tuple(sorted(acc)))
